#ifndef QPNN_TRAINER_HPP
#define QPNN_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "qpnn/engine.hpp"
#include "qpnn/task.hpp"

namespace qpnn {

// Flat layout: per layer theta[K], phi[K] (placement order) and delta[N];
// QD networks append log(tau_qd) and one detuning per nonlinear layer.
struct ParameterLayout {
    int num_modes = 0;
    int num_layers = 0;
    bool quantum_dot = false;

    int mzis() const { return num_modes * (num_modes - 1) / 2; }
    int per_layer() const { return num_modes * (num_modes - 1) + num_modes; }
    int size() const { return num_layers * per_layer() + (quantum_dot ? num_layers : 0); }
    int theta(int layer, int k) const { return layer * per_layer() + k; }
    int phi(int layer, int k) const { return layer * per_layer() + mzis() + k; }
    int delta(int layer, int m) const { return layer * per_layer() + 2 * mzis() + m; }
    int log_tau() const { return num_layers * per_layer(); }
    int detuning(int l) const { return log_tau() + 1 + l; }

    static ParameterLayout of(const NetworkSpec& spec);
};

RealVector pack_parameters(const NetworkSpec& spec);
// Copies the parameters into a network with the structure of `shape`.
NetworkSpec unpack_parameters(const NetworkSpec& shape, const RealVector& x);

struct CostValue {
    double cost = 0.0;  // (1/K) sum_k C_k, minimised by the optimiser
    double scaled = 0.0;  // (1 - alpha) cost
};

CostValue cost(const NetworkSpec& spec, const TaskDefinition& task, double visibility, double alpha = 0.0,
               const WavepacketSettings& wp = {});

struct CostGradient {
    double cost = 0.0;
    RealVector gradient;
};

// Linear parameters use the exact adjoint of the chain model; log(tau) and
// the detunings use central differences of the path Gram matrix.
CostGradient cost_gradient(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                           const WavepacketSettings& wp = {}, double gram_step = 1e-5);

RealVector finite_difference_gradient(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                                      const WavepacketSettings& wp = {}, double step = 1e-6);

struct TrainConfig {
    int num_modes = 4;
    int num_layers = 2;
    int buffer = 1;
    Nonlinearity nonlinearity = Nonlinearity::kerr();
    double visibility = 1.0;
    int epochs = 250;
    int trials = 100;
    std::uint64_t seed = 1;
    double learning_rate = 0.05;
    double learning_rate_decay = 0.1;  // multiplier reached at the last epoch
    int line_search_halvings = 5;
    bool haar_initialisation = false;
    WavepacketSettings wavepacket{1.0, 128};
    int evaluation_grid_points = 512;
    int threads = 1;

    void validate() const;
    // Range kept for log tau: the training grid resolves the emitter linewidth with at least two points.
    std::pair<double, double> log_tau_bounds() const;
};

struct TrainRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    std::vector<double> costs;  // cost at the start of every epoch
    std::vector<double> best_costs;  // running minimum
    double final_cost = 0.0;
    double fidelity = 0.0;
    double efficiency = 0.0;
    double fidelity_training_grid = 0.0;  // QD only: F on the training grid
    RealVector parameters;
    std::optional<OutcomeAssignment> assignment;
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
};

std::uint64_t trial_seed(std::uint64_t seed, int trial);

NetworkSpec network_shape(const TrainConfig& config);
RealVector initial_parameters(const TrainConfig& config, std::uint64_t seed);

// Trains one trial; BSA tasks draw a fresh outcome assignment from the trial seed.
TrainRecord train_trial(const TaskDefinition& task, const TrainConfig& config, int trial);

// Trials run in parallel; the result is independent of the thread count.
std::vector<TrainRecord> optimize(const TaskDefinition& task, const TrainConfig& config,
                                  const std::function<void(const TrainRecord&)>& on_record = {});

// Task actually used by a record (BSA records carry their own assignment).
TaskDefinition task_for_record(const TaskDefinition& task, const TrainRecord& record);
NetworkSpec spec_for_record(const TrainConfig& config, const TrainRecord& record);

const TrainRecord& best_record(const std::vector<TrainRecord>& records);

}  // namespace qpnn

#endif
