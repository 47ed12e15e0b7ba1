#ifndef QPNN_TIMEGATE_HPP
#define QPNN_TIMEGATE_HPP

#include <vector>

#include "qpnn/engine.hpp"
#include "qpnn/task.hpp"

namespace qpnn {

struct TwoTimeDistribution {
    Occupation outcome;
    FrequencyGrid grid;  // the conjugate time grid is grid.time(n)
    RealMatrix values;  // |psi(t1, t2)|^2

    double integral() const { return values.sum() * grid.time_spacing() * grid.time_spacing(); }
};

// One distribution per basis state of a two-photon extended state.
std::vector<TwoTimeDistribution> two_time_distributions(const ExtendedState& output);

// Time-domain distributions of the assigned outcomes for every Bell input.
struct GateOutputs {
    FrequencyGrid grid;
    std::vector<Occupation> outcomes;  // every assigned outcome
    std::vector<int> owner;  // input each outcome is assigned to
    std::vector<std::vector<RealMatrix>> density;  // [input][outcome]

    int num_inputs() const { return static_cast<int>(density.size()); }
    double cell() const { return grid.time_spacing() * grid.time_spacing(); }
};

GateOutputs gate_outputs(const NetworkSpec& spec, const TaskDefinition& task, const WavepacketSettings& wp);

struct FilterMask {
    int outcome = 0;
    double fraction = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> region;
};

// mask = {P >= f max P} on the distribution produced by the outcome's own input.
std::vector<FilterMask> build_masks(const GateOutputs& outputs, double fraction);

struct FilteredMetrics {
    double fidelity = 0.0;  // sum_k correct_k / sum_k any_k
    double efficiency = 0.0;  // (1/K) sum_k any_k
    double fidelity_per_input = 0.0;  // mean_k correct_k / any_k
    std::vector<double> correct;  // per input, in-mask probability of the correct outcomes
    std::vector<double> any;  // per input, in-mask probability of any assigned outcome
};

FilteredMetrics filtered_metrics(const GateOutputs& outputs, const std::vector<FilterMask>& masks);

// Largest extent of the mask along (t1 + t2)/sqrt(2), in the units of the time grid.
double window_extent(const FrequencyGrid& grid, const FilterMask& mask);

struct ScanPoint {
    double fraction = 0.0;
    FilteredMetrics metrics;
    double mean_window = 0.0;
};

std::vector<ScanPoint> filter_scan(const GateOutputs& outputs, const std::vector<double>& fractions);

}  // namespace qpnn

#endif
