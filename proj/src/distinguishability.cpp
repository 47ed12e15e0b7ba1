#include "qpnn/distinguishability.hpp"

#include <cmath>

#include "qpnn/random.hpp"

namespace qpnn {

void JitterModel::validate() const {
    if (!(sigma_p > 0.0)) throw ValidationError("JitterModel: sigma_p must be positive");
    if (!(sigma_j >= 0.0)) throw ValidationError("JitterModel: sigma_j must be non-negative");
    if (n_samples < 1) throw ValidationError("JitterModel: n_samples must be at least 1");
}

double JitterModel::offset_std() const {
    return width == JitterWidth::Fwhm ? sigma_j / (2.0 * std::sqrt(2.0 * std::log(2.0))) : sigma_j;
}

double hom_visibility(double delta_t, double sigma_p) {
    if (!(sigma_p > 0.0)) throw ValidationError("hom_visibility: sigma_p must be positive");
    const double x = delta_t / sigma_p;
    return std::exp(-x * x);
}

VisibilityEstimate visibility_estimate(const JitterModel& model) {
    model.validate();
    if (model.sigma_j == 0.0) return {1.0, 0.0};
    const double sd = model.offset_std();
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < model.n_samples; ++i) {
        const double v = hom_visibility(sd * counter_normal(model.seed, i), model.sigma_p);
        sum += v;
        sum2 += v * v;
    }
    const double n = model.n_samples;
    const double mean = sum / n;
    const double var = n > 1 ? std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1) : 0.0;
    return {mean, std::sqrt(var / n)};
}

double mean_visibility(const JitterModel& model) { return visibility_estimate(model).mean; }

double input_fidelity(double visibility) {
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("input_fidelity: V must lie in [0, 1]");
    return 0.5 * (1.0 + visibility);
}

SectorAmplitudes distinguishable_amplitudes(const QuantumState& psi) {
    const FockBasis& b = psi.basis;
    if (b.num_photons() != 2) throw ValidationError("distinguishable_amplitudes: two-photon state required");
    PairBasis pb(b.num_modes());
    SectorAmplitudes out{ComplexVector::Zero(b.size()), ComplexVector::Zero(pb.size())};
    const double r = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < b.size(); ++i) {
        const auto& m = b.photon_modes(i);
        if (m[0] == m[1]) {
            out.symmetric(i) = psi.amplitudes(i);
        } else {
            out.symmetric(i) = r * psi.amplitudes(i);
            out.antisymmetric(pb.index_of(m[0], m[1])) = r * psi.amplitudes(i);
        }
    }
    return out;
}

MixedInput mixed_input(const QuantumState& psi, double visibility) {
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("mixed_input: V must lie in [0, 1]");
    DensityMatrix ind = DensityMatrix::pure(psi);
    if (psi.basis.num_photons() != 2) return {ind, ind, visibility};
    auto d = distinguishable_amplitudes(psi);
    DensityMatrix dist{psi.basis, d.symmetric * d.symmetric.adjoint(), d.antisymmetric * d.antisymmetric.adjoint()};
    ind.antisymmetric = ComplexMatrix::Zero(d.antisymmetric.size(), d.antisymmetric.size());
    return {ind, dist, visibility};
}

double input_fidelity(const MixedInput& input, const ComplexVector& psi) {
    const double v = input.visibility;
    return v * pure_fidelity(psi, input.rho_ind) + (1.0 - v) * pure_fidelity(psi, input.rho_dist);
}

SectorTransfer linear_transfer(const ComplexMatrix& w, const FockBasis& basis) {
    SectorTransfer t{lift(w, basis), ComplexMatrix()};
    if (basis.num_photons() == 2) t.antisymmetric = antisymmetric_lift(w);
    return t;
}

DensityMatrix propagate_mixed(const ComplexMatrix& s_full, const SectorTransfer& s_linear, const MixedInput& input) {
    const int d = input.rho_ind.basis.size();
    if (s_full.rows() != d || s_full.cols() != d || s_linear.symmetric.rows() != d || s_linear.symmetric.cols() != d)
        throw ValidationError("propagate_mixed: dimension mismatch");
    const double v = input.visibility;
    DensityMatrix out{input.rho_ind.basis, ComplexMatrix(), ComplexMatrix()};
    out.matrix = v * s_full * input.rho_ind.matrix * s_full.adjoint() +
                 (1.0 - v) * s_linear.symmetric * input.rho_dist.matrix * s_linear.symmetric.adjoint();
    if (input.rho_dist.has_antisymmetric()) {
        const ComplexMatrix& a = s_linear.antisymmetric;
        if (a.rows() != input.rho_dist.antisymmetric.rows())
            throw ValidationError("propagate_mixed: antisymmetric sector dimension mismatch");
        out.antisymmetric = (1.0 - v) * a * input.rho_dist.antisymmetric * a.adjoint();
        if (input.rho_ind.has_antisymmetric())
            out.antisymmetric += v * a * input.rho_ind.antisymmetric * a.adjoint();
    }
    return out;
}

}  // namespace qpnn
