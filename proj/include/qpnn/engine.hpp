#ifndef QPNN_ENGINE_HPP
#define QPNN_ENGINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "qpnn/distinguishability.hpp"
#include "qpnn/fock.hpp"
#include "qpnn/mesh.hpp"
#include "qpnn/nonlinear.hpp"
#include "qpnn/task.hpp"

namespace qpnn {

enum class NonlinearityKind { None, Kerr, QuantumDot };

struct Nonlinearity {
    NonlinearityKind kind = NonlinearityKind::None;
    double kerr_phase = kPi;
    double tau_qd = 1.0;
    std::vector<double> detunings;  // one per nonlinear layer (QD only)

    static Nonlinearity none() { return {}; }
    static Nonlinearity kerr(double phase = kPi) { return {NonlinearityKind::Kerr, phase, 1.0, {}}; }
    static Nonlinearity quantum_dot(double tau_qd, std::vector<double> detunings) {
        return {NonlinearityKind::QuantumDot, kPi, tau_qd, std::move(detunings)};
    }
    QDParams qd_params(int nonlinear_layer) const { return {tau_qd, detunings.at(nonlinear_layer)}; }
};

struct NetworkSpec {
    int num_modes = 0;
    std::vector<MeshPlan> layers;
    Nonlinearity nonlinearity;
    int buffer = 1;

    int num_layers() const { return static_cast<int>(layers.size()); }
    void validate() const;
};

// Wavepacket and grid used when the nonlinearity distorts wavefunctions.
struct WavepacketSettings {
    double sigma_p = 1.0;
    int grid_points = 128;

    // FrequencyGrid::for_pulse, with the half span capped so that the pulse stays resolved.
    FrequencyGrid grid(double tau_qd) const;
};

std::vector<ComplexMatrix> layer_unitaries(const NetworkSpec& spec);

// U_L ... U_1.
ComplexMatrix linear_product(const NetworkSpec& spec);

// Phi(U_L) Sigma Phi(U_{L-1}) ... Sigma Phi(U_1) on the n-photon bosonic sector.
ComplexMatrix system_function(const NetworkSpec& spec, int num_photons = 2);

// A chain is C = L_L D_{L-1} L_{L-1} ... D_1 L_1 c; a group is a set of
// chains that share the lifts L and differ in the diagonals D. The output
// density matrix is sum_{f,g} gram(g, f) C_f C_g^dag.
struct ChainGroup {
    std::vector<ComplexMatrix> lifts;
    std::vector<std::vector<ComplexVector>> diagonals;  // [path][gap]
    ComplexMatrix gram;

    int num_paths() const { return static_cast<int>(diagonals.size()); }
    int dimension() const { return lifts.empty() ? 0 : static_cast<int>(lifts.front().rows()); }
};

// Columns are the per-path output coefficients.
ComplexMatrix chain_forward(const ChainGroup& group, const ComplexVector& input);
ComplexMatrix chain_density(const ChainGroup& group, const ComplexMatrix& coefficients);

struct ChainTerm {
    ComplexVector input;
    ComplexMatrix observable;  // Hermitian Q
    double weight = 1.0;
};

// value = sum_k w_k Tr(Q_k rho_k).  d value = 2 Re sum_ij dL_l(i, j) layer[l](j, i)
// for a change of lift l, and Re sum_fg d gram(g, f) gram_sensitivity(g, f)
// for a change of the Gram matrix.
struct ChainSensitivity {
    double value = 0.0;
    std::vector<ComplexMatrix> layer;
    ComplexMatrix gram_sensitivity;
};

ChainSensitivity chain_sensitivity(const ChainGroup& group, const std::vector<ChainTerm>& terms, bool with_layers = true);

// Frequency functions of the QD paths: path bit l set means the pair met
// nonlinear layer l + 1 together (scatter_two), otherwise separately.
struct PathFunctions {
    FrequencyGrid grid;
    std::vector<ComplexMatrix> functions;
    ComplexMatrix gram;
};

PathFunctions path_functions(const Nonlinearity& nl, int num_layers, const WavepacketSettings& wp, bool keep_functions = true);

// Per-path diagonals for the bosonic two-photon sector of each nonlinearity.
std::vector<std::vector<ComplexVector>> path_diagonals(const Nonlinearity& nl, int num_layers, const FockBasis& basis);

struct NetworkModel {
    FockBasis basis;
    ChainGroup full;  // indistinguishable photons through the nonlinear network
    ChainGroup symmetric;  // distinguishable part, linear layers only
    ChainGroup antisymmetric;
    std::optional<PathFunctions> paths;
};

NetworkModel build_model(const NetworkSpec& spec, const FockBasis& basis, const WavepacketSettings& wp = {},
                         bool keep_functions = false);

// V S rho_ind S^dag + (1 - V) S_lin rho_dist S_lin^dag for a pure two-photon input.
DensityMatrix output_state(const NetworkModel& model, const QuantumState& psi, double visibility);

struct ExtendedState {
    FockBasis basis;
    FrequencyGrid grid;
    std::vector<ComplexMatrix> attachments;  // symmetric two-photon amplitudes per basis state

    double norm_squared() const;
    void validate() const;
};

ExtendedState product_input(const QuantumState& psi, const FrequencyGrid& grid, double sigma_p);
ExtendedState propagate_extended(const NetworkSpec& spec, const ExtendedState& input);
// Reassembles the extended state carried by the path coefficients.
ExtendedState expand_paths(const FockBasis& basis, const PathFunctions& paths, const ComplexMatrix& coefficients);

struct LossBudget {
    double alpha_mzi = 0.0;
    double alpha_switch = 0.0;
    double alpha_ps = 0.0;
    double alpha_chip = 0.0;
    double fiber_attenuation = 0.0;  // fractional loss per metre
    double group_velocity = 0.299792458 / 1.46;  // m/ns
    double tau_b = 10.0;  // ns

    void validate() const;
};

int mzi_traversals(int num_modes);
int switch_traversals(int num_modes);
double linear_fiber_length(int num_modes, const LossBudget& budget);
double transmissivity(int num_modes, int num_layers, int buffer, const LossBudget& budget);
double transmissivity(const NetworkSpec& spec, const LossBudget& budget);

// Component losses given in dB per traversal (fiber in dB per km).
struct LossPresetDb {
    double mzi_db = 0.02;
    double switch_db = 0.1;
    double ps_db = 0.01;
    double chip_db = 0.3;
    double fiber_db_per_km = 0.18;
};

LossBudget budget_from_db(const LossPresetDb& db, double scale, double tau_b = 10.0);

struct LossCalibration {
    double scale = 1.0;
    LossBudget budget;
    double alpha = 0.0;
};

// Scales every component of the preset so that an L-layer N-mode network has total loss alpha.
LossCalibration calibrate_loss(const LossPresetDb& preset, int num_modes, int num_layers, int buffer, double target_alpha,
                               double tau_b = 10.0);

// r = eta (1 - alpha) / (n_t tau_b); tau_b in ns, r in GHz.
double operational_rate(double eta, double alpha, int n_t, double tau_b);

// First-mode span through the composed time-bin schedule of all layers.
int network_timesteps(const NetworkSpec& spec);

struct InputReport {
    std::string label;
    double fidelity = 0.0;  // Tr(Q rho)
    double efficiency = 0.0;
    double input_fidelity = 1.0;
    double conditional_fidelity = 0.0;  // fidelity / (F_in efficiency)
    std::vector<double> logical_probabilities;  // normalised to the logical block
};

struct EvaluationReport {
    std::string task;
    double visibility = 1.0;
    double fidelity = 0.0;  // mean over inputs of the conditional fidelity
    double ensemble_fidelity = 0.0;  // (1 / (eta K)) sum_k fid_k / F_in
    double efficiency = 0.0;
    double cost = 0.0;  // unscaled
    double scaled_cost = 0.0;  // (1 - alpha) cost
    double alpha = 0.0;
    int n_t = 0;
    double tau_b = 10.0;
    double rate = 0.0;  // GHz
    std::vector<std::string> logical_labels;
    std::vector<InputReport> inputs;
};

struct EvaluationOptions {
    double alpha = 0.0;
    double tau_b = 10.0;
    std::optional<int> n_t;
    WavepacketSettings wavepacket;
};

// Tr(Q rho) for a task target, both exchange sectors.
double target_overlap(const TaskTarget& target, const DensityMatrix& rho);

EvaluationReport evaluate(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                          const EvaluationOptions& options = {});
EvaluationReport evaluate(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                          const LossBudget& budget, const EvaluationOptions& options = {});

}  // namespace qpnn

#endif
