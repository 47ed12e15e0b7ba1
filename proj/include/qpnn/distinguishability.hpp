#ifndef QPNN_DISTINGUISHABILITY_HPP
#define QPNN_DISTINGUISHABILITY_HPP

#include <cstdint>

#include "qpnn/fock.hpp"

namespace qpnn {

enum class JitterWidth { Fwhm, StandardDeviation };

struct JitterModel {
    double sigma_p = 1.0;
    double sigma_j = 0.0;
    int n_samples = 200;
    std::uint64_t seed = 0;
    JitterWidth width = JitterWidth::Fwhm;

    void validate() const;
    double offset_std() const;
};

// Squared overlap of two Gaussian wavepackets delayed by delta_t.
double hom_visibility(double delta_t, double sigma_p);

struct VisibilityEstimate {
    double mean = 1.0;
    double stderr_ = 0.0;
};

VisibilityEstimate visibility_estimate(const JitterModel& model);
double mean_visibility(const JitterModel& model);

double input_fidelity(double visibility);

struct MixedInput {
    DensityMatrix rho_ind;
    DensityMatrix rho_dist;
    double visibility = 1.0;
};

struct SectorAmplitudes {
    ComplexVector symmetric;
    ComplexVector antisymmetric;  // over mode pairs k < l
};

// Amplitudes whose outer products give the distinguishable part below.
SectorAmplitudes distinguishable_amplitudes(const QuantumState& psi);

// Splits a pure input into its indistinguishable and distinguishable parts.
// For two photons the distinguishable part is (1/2)|S><S| (+) (1/2)|A><A|:
// each singly occupied pair |1_i 1_j> (i < j) contributes equally to the
// exchange-symmetric and exchange-antisymmetric sectors, doubly occupied
// modes only to the symmetric one.
MixedInput mixed_input(const QuantumState& psi, double visibility);

// <psi| rho_in |psi> for the mixture.
double input_fidelity(const MixedInput& input, const ComplexVector& psi);

struct SectorTransfer {
    ComplexMatrix symmetric;
    ComplexMatrix antisymmetric;
};

// Linear network acting on both exchange sectors of a two-photon space.
SectorTransfer linear_transfer(const ComplexMatrix& w, const FockBasis& basis);

// rho_out = V S rho_ind S^dag + (1 - V) S_lin rho_dist S_lin^dag.
DensityMatrix propagate_mixed(const ComplexMatrix& s_full, const SectorTransfer& s_linear, const MixedInput& input);

}  // namespace qpnn

#endif
