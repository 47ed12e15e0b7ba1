#include "qpnn/nonlinear.hpp"

#include <sstream>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace qpnn {

ComplexVector kerr_sigma(const FockBasis& basis, double phase) {
    ComplexVector d(basis.size());
    for (int i = 0; i < basis.size(); ++i) {
        int pairs = 0;
        for (int n : basis.state(i)) pairs += n * (n - 1) / 2;
        d(i) = pairs == 0 ? Complex(1.0) : std::exp(kI * (phase * pairs));
    }
    return d;
}

Complex t_coeff(double omega, const QDParams& qd) {
    const double x = omega - qd.detuning;
    const double g = 0.5 / qd.tau_qd;
    return Complex(x, -g) / Complex(x, g);
}

Complex s_coeff(double omega, const QDParams& qd) {
    const double x = omega - qd.detuning;
    const double g = 0.5 / qd.tau_qd;
    return 1.0 / (std::sqrt(qd.tau_qd) * Complex(x, g));
}

RealVector FrequencyGrid::omegas() const {
    RealVector w(points);
    for (int i = 0; i < points; ++i) w(i) = omega(i);
    return w;
}

RealVector FrequencyGrid::times() const {
    RealVector t(points);
    for (int i = 0; i < points; ++i) t(i) = time(i);
    return t;
}

void FrequencyGrid::validate() const {
    if (points < 64 || (points & (points - 1)) != 0)
        throw ValidationError("FrequencyGrid: number of points must be a power of two and at least 64");
    if (!(half_span > 0.0)) throw ValidationError("FrequencyGrid: half span must be positive");
}

FrequencyGrid FrequencyGrid::for_pulse(double sigma_p, double tau_qd, int points) {
    if (!(sigma_p > 0.0) || !(tau_qd > 0.0)) throw ValidationError("FrequencyGrid: widths must be positive");
    FrequencyGrid g{0.0, 24.0 * std::max(1.0 / sigma_p, 1.0 / tau_qd) * std::sqrt(points / 512.0), points};
    g.validate();
    return g;
}

ComplexVector gaussian_wavepacket(const FrequencyGrid& grid, double omega_p, double sigma_p) {
    grid.validate();
    if (!(sigma_p > 0.0)) throw ValidationError("gaussian_wavepacket: sigma_p must be positive");
    if (!(grid.spacing() < 1.0 / (4.0 * sigma_p)) || !(grid.half_span > 6.0 / sigma_p)) {
        std::ostringstream msg;
        msg << "gaussian_wavepacket: grid (spacing " << grid.spacing() << ", half span " << grid.half_span
            << ") does not resolve a pulse of width " << sigma_p;
        throw ValidationError(msg.str());
    }
    const double amp = std::pow(sigma_p * sigma_p / kTwoPi, 0.25);
    ComplexVector psi(grid.points);
    for (int i = 0; i < grid.points; ++i) {
        const double d = grid.omega(i) - (omega_p - grid.center);
        psi(i) = amp * std::exp(-sigma_p * sigma_p * d * d / 4.0);
    }
    return psi;
}

TwoPhotonAmplitude product_amplitude(const FrequencyGrid& grid, const ComplexVector& a, const ComplexVector& b) {
    return {grid, a * b.transpose()};
}

namespace {

ComplexVector t_vector(const FrequencyGrid& grid, const QDParams& qd) {
    ComplexVector t(grid.points);
    for (int i = 0; i < grid.points; ++i) t(i) = t_coeff(grid.omega(i), qd);
    return t;
}

ComplexVector s_vector(const FrequencyGrid& grid, const QDParams& qd) {
    ComplexVector s(grid.points);
    for (int i = 0; i < grid.points; ++i) s(i) = s_coeff(grid.omega(i), qd);
    return s;
}

void check_qd(const QDParams& qd) {
    if (!(qd.tau_qd > 0.0)) throw ValidationError("QDParams: tau_qd must be positive");
}

}  // namespace

ComplexVector scatter_one(const FrequencyGrid& grid, const ComplexVector& psi, const QDParams& qd) {
    check_qd(qd);
    if (psi.size() != grid.points) throw ValidationError("scatter_one: amplitude does not match the grid");
    return t_vector(grid, qd).cwiseProduct(psi);
}

TwoPhotonAmplitude scatter_separate(const TwoPhotonAmplitude& psi2, const QDParams& qd) {
    check_qd(qd);
    ComplexVector t = t_vector(psi2.grid, qd);
    return {psi2.grid, t.asDiagonal() * psi2.values * t.asDiagonal()};
}

TwoPhotonAmplitude scatter_two(const TwoPhotonAmplitude& psi2, const QDParams& qd) {
    check_qd(qd);
    const int m = psi2.grid.points;
    if (psi2.values.rows() != m || psi2.values.cols() != m)
        throw ValidationError("scatter_two: amplitude does not match the grid");
    if (psi2.asymmetry() > 1e-10 * std::max(1.0, psi2.values.norm()))
        throw ValidationError("scatter_two: input is not exchange symmetric");
    const double dw = psi2.grid.spacing();
    ComplexVector t = t_vector(psi2.grid, qd);
    ComplexVector s = s_vector(psi2.grid, qd);
    // Lines of constant total energy are the anti-diagonals i + j = const,
    // which sit exactly on the grid.
    ComplexVector conv = ComplexVector::Zero(2 * m - 1);
    for (int e = 0; e < 2 * m - 1; ++e) {
        const int k0 = std::max(0, e - m + 1), k1 = std::min(m - 1, e);
        Complex acc = 0.0;
        for (int k = k0; k <= k1; ++k) acc += psi2.values(e - k, k) * (s(e - k) + s(k));
        conv(e) = acc * dw;
    }
    const Complex pre = kI / (kTwoPi * std::sqrt(qd.tau_qd));
    TwoPhotonAmplitude out{psi2.grid, ComplexMatrix(m, m)};
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            out.values(i, j) = t(i) * t(j) * psi2.values(i, j) + pre * s(i) * s(j) * conv(i + j);
    return out;
}

namespace {

// Phase factors turning the centred continuous transform into a plain DFT.
ComplexVector centring(int m, double sign) {
    const double c = 0.5 * (m - 1);
    ComplexVector v(m);
    for (int k = 0; k < m; ++k) v(k) = std::exp(Complex(0, sign * kTwoPi * c * k / m));
    return v;
}

ComplexVector transform(const ComplexVector& x, double step, bool to_time) {
    const int m = static_cast<int>(x.size());
    const double c = 0.5 * (m - 1);
    const double sign = to_time ? 1.0 : -1.0;
    ComplexVector pre = centring(m, sign);
    std::vector<Complex> in(m), out;
    for (int k = 0; k < m; ++k) in[k] = x(k) * pre(k);
    Eigen::FFT<double> fft;
    if (to_time)
        fft.fwd(out, in);
    else {
        fft.inv(out, in);
        for (auto& v : out) v *= static_cast<double>(m);
    }
    const Complex global = std::exp(Complex(0, -sign * kTwoPi * c * c / m)) * (step / std::sqrt(kTwoPi));
    ComplexVector y(m);
    for (int n = 0; n < m; ++n) y(n) = out[n] * pre(n) * global;
    return y;
}

ComplexMatrix transform2(const ComplexMatrix& a, double step, bool to_time) {
    ComplexMatrix b(a.rows(), a.cols());
    for (int j = 0; j < a.cols(); ++j) b.col(j) = transform(a.col(j), step, to_time);
    for (int i = 0; i < a.rows(); ++i) b.row(i) = transform(b.row(i).transpose(), step, to_time).transpose();
    return b;
}

}  // namespace

ComplexVector to_time_domain(const FrequencyGrid& grid, const ComplexVector& psi) {
    return transform(psi, grid.spacing(), true);
}

ComplexVector to_frequency_domain(const FrequencyGrid& grid, const ComplexVector& psi_t) {
    return transform(psi_t, grid.time_spacing(), false);
}

TwoTimeAmplitude to_time_domain(const TwoPhotonAmplitude& psi2) {
    return {psi2.grid, transform2(psi2.values, psi2.grid.spacing(), true)};
}

TwoPhotonAmplitude to_frequency_domain(const TwoTimeAmplitude& psi_t) {
    return {psi_t.grid, transform2(psi_t.values, psi_t.grid.time_spacing(), false)};
}

}  // namespace qpnn
