#ifndef QPNN_NONLINEAR_HPP
#define QPNN_NONLINEAR_HPP

#include "qpnn/fock.hpp"

namespace qpnn {

struct KerrElement {
    double phase = kPi;
};

// Diagonal of Sigma: exp(i * phase * sum_m n_m (n_m - 1) / 2).
ComplexVector kerr_sigma(const FockBasis& basis, double phase);

struct QDParams {
    double tau_qd = 1.0;
    double detuning = 0.0;
};

// Frequencies are measured from the pulse carrier (rotating frame).
Complex t_coeff(double omega, const QDParams& qd);
Complex s_coeff(double omega, const QDParams& qd);

struct FrequencyGrid {
    double center = 0.0;
    double half_span = 12.0;
    int points = 512;

    double spacing() const { return 2.0 * half_span / points; }
    double omega(int i) const { return (i - 0.5 * (points - 1)) * spacing(); }
    RealVector omegas() const;
    // Conjugate time grid of the discrete transform.
    double time_spacing() const { return kTwoPi / (points * spacing()); }
    double time(int n) const { return (n - 0.5 * (points - 1)) * time_spacing(); }
    RealVector times() const;

    void validate() const;
    bool operator==(const FrequencyGrid&) const = default;

    // Half span 24 max(1/sigma_p, 1/tau) sqrt(M/512): 12 max(...) at M = 128,
    // widening as the grid is refined.
    static FrequencyGrid for_pulse(double sigma_p, double tau_qd, int points);
};

struct TwoPhotonAmplitude {
    FrequencyGrid grid;
    ComplexMatrix values;  // values(i, j) = psi(omega_i, omega_j)

    double norm_squared() const { return values.squaredNorm() * grid.spacing() * grid.spacing(); }
    double asymmetry() const { return (values - values.transpose()).norm(); }
};

struct TwoTimeAmplitude {
    FrequencyGrid grid;  // frequency grid it was transformed from
    ComplexMatrix values;  // values(n, m) = psi(t_n, t_m)

    double norm_squared() const { return values.squaredNorm() * grid.time_spacing() * grid.time_spacing(); }
};

// (sigma_p^2 / 2 pi)^(1/4) exp(-sigma_p^2 (omega - omega_p)^2 / 4); omega_p is
// given in the same frame as the grid.
ComplexVector gaussian_wavepacket(const FrequencyGrid& grid, double omega_p, double sigma_p);

TwoPhotonAmplitude product_amplitude(const FrequencyGrid& grid, const ComplexVector& a, const ComplexVector& b);

ComplexVector scatter_one(const FrequencyGrid& grid, const ComplexVector& psi, const QDParams& qd);

// Both photons pass separately: multiplies by t(omega_1) t(omega_2).
TwoPhotonAmplitude scatter_separate(const TwoPhotonAmplitude& psi2, const QDParams& qd);

// Both photons in the same mode meet the emitter together.
TwoPhotonAmplitude scatter_two(const TwoPhotonAmplitude& psi2, const QDParams& qd);

// psi(t) = (2 pi)^(-1/2) int psi(omega) exp(-i omega t) d omega, evaluated with an FFT.
ComplexVector to_time_domain(const FrequencyGrid& grid, const ComplexVector& psi);
ComplexVector to_frequency_domain(const FrequencyGrid& grid, const ComplexVector& psi_t);
TwoTimeAmplitude to_time_domain(const TwoPhotonAmplitude& psi2);
TwoPhotonAmplitude to_frequency_domain(const TwoTimeAmplitude& psi_t);

}  // namespace qpnn

#endif
