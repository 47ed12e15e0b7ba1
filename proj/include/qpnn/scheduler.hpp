#ifndef QPNN_SCHEDULER_HPP
#define QPNN_SCHEDULER_HPP

#include <vector>

#include "qpnn/mesh.hpp"

namespace qpnn {

// Two fiber loops meeting at one MZI.  The bottom loop passes the S2 switch,
// which sits kS2ToMzi steps upstream of the MZI.
struct LoopGeometry {
    int num_modes = 0;
    int top_capacity = 0;
    int bottom_capacity = 0;
    bool ancilla = false;

    static LoopGeometry for_modes(int num_modes);

    int num_labels() const { return num_modes + (ancilla ? 1 : 0); }
    int ancilla_label() const { return ancilla ? num_modes + 1 : 0; }
    int s2_to_mzi() const { return 2; }
    int mzi_to_s2() const { return bottom_capacity - s2_to_mzi(); }
    // In-to-out distance of every label through one linear layer.
    int linear_span() const { return (num_modes + 1) * (num_modes + 2) / 2; }

    bool operator==(const LoopGeometry&) const = default;
};

enum class MziKind { Apply, Bar, Cross };
enum class Route { Bypass, Traverse };

struct MziControl {
    MziKind kind = MziKind::Bar;
    int layer = -1;
    int column = -1;
    int mode_i = 0;  // labels, 1-based, mode_i < mode_j
    int mode_j = 0;
    MziSetting setting;
    bool lower_in_top = true;   // mode_i enters through the top port
    bool lower_out_top = true;  // mode_i leaves through the top port

    bool operator==(const MziControl&) const = default;
    // Port-space matrix: rows/columns are (top, bottom).
    Matrix2c port_matrix() const;
};

// S2 may couple a bin in and another bin out in the same step (exchange).
struct S2Control {
    int couple_in = 0;  // label, 0 for none
    int couple_out = 0;
    int in_layer = -1;
    int out_layer = -1;

    bool closed() const { return couple_in == 0 && couple_out == 0; }
    bool operator==(const S2Control&) const = default;
};

inline bool operator==(const MziSetting& a, const MziSetting& b) { return a.theta == b.theta && a.phi == b.phi; }

struct ScheduleStep {
    int t = 0;
    MziControl mzi;
    S2Control s2;
    double ps = 0.0;
    Route route = Route::Bypass;

    bool operator==(const ScheduleStep&) const = default;
};

struct Schedule {
    LoopGeometry geometry;
    std::vector<ScheduleStep> steps;
    int n_t = 0;
    int buffer = 0;
    std::vector<MeshPlan> plans;
    std::vector<int> layer_offsets;

    int num_layers() const { return static_cast<int>(plans.size()); }
};

bool operator==(const Schedule& a, const Schedule& b);

// Time step (relative to the layer start) at which a mesh slot is applied.
int placement_time(const LoopGeometry& g, int column, int mode);

Schedule compile_schedule(const MeshPlan& plan, int buffer);
Schedule compose_layers(const std::vector<Schedule>& schedules, int buffer);

struct SimulationReport {
    ComplexMatrix unitary;  // N x N, ancilla excluded
    std::vector<std::vector<int>> exit_order;  // labels per layer in couple-out order
    std::vector<std::vector<int>> entry_order;
    int max_top_occupancy = 0;
    int max_bottom_occupancy = 0;
    int apply_count = 0;
};

// Steps every bin through both loops; throws VerificationError on a
// collision, an empty couple-out, or leakage out of the ancilla.
SimulationReport simulate_schedule_report(const Schedule& schedule);
ComplexMatrix simulate_schedule(const Schedule& schedule);

// In-to-out span of label 1 in a layer, including the following buffer
// segment when the layer is routed through the nonlinear loop.
int first_mode_span(const Schedule& schedule, int layer = 0);

}  // namespace qpnn

#endif
