#include "qpnn/timegate.hpp"

#include <cmath>

namespace qpnn {

std::vector<TwoTimeDistribution> two_time_distributions(const ExtendedState& output) {
    output.validate();
    std::vector<TwoTimeDistribution> out;
    for (int i = 0; i < output.basis.size(); ++i) {
        const TwoTimeAmplitude t = to_time_domain(TwoPhotonAmplitude{output.grid, output.attachments[i]});
        out.push_back({output.basis.state(i), output.grid, t.values.cwiseAbs2()});
    }
    return out;
}

GateOutputs gate_outputs(const NetworkSpec& spec, const TaskDefinition& task, const WavepacketSettings& wp) {
    if (spec.nonlinearity.kind != NonlinearityKind::QuantumDot)
        throw ValidationError("gate_outputs: time gating needs a QD network");
    if (task.kind != TaskKind::Bsa) throw ValidationError("gate_outputs: BSA task required");
    const NetworkModel model = build_model(spec, task.basis, wp, true);
    GateOutputs g;
    g.grid = model.paths->grid;
    std::vector<ComplexMatrix> functions;
    for (const auto& f : model.paths->functions) functions.push_back(to_time_domain(TwoPhotonAmplitude{g.grid, f}).values);
    std::vector<int> index;
    for (int k = 0; k < task.size(); ++k)
        for (const auto& o : task.targets[k].outcomes) {
            g.outcomes.push_back(o);
            g.owner.push_back(k);
            index.push_back(task.basis.index_of(o));
        }
    const int m = g.grid.points;
    for (int k = 0; k < task.size(); ++k) {
        const ComplexMatrix c = chain_forward(model.full, task.inputs[k].amplitudes);
        std::vector<RealMatrix> per;
        for (int idx : index) {
            ComplexMatrix psi = ComplexMatrix::Zero(m, m);
            for (int f = 0; f < c.cols(); ++f)
                if (c(idx, f) != 0.0) psi += c(idx, f) * functions[f];
            per.push_back(psi.cwiseAbs2());
        }
        g.density.push_back(std::move(per));
    }
    return g;
}

std::vector<FilterMask> build_masks(const GateOutputs& outputs, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("build_masks: fraction must lie in [0, 1)");
    std::vector<FilterMask> masks;
    for (std::size_t a = 0; a < outputs.outcomes.size(); ++a) {
        if (outputs.owner[a] < 0) throw ValidationError("build_masks: outcome without an assigned input");
        const RealMatrix& p = outputs.density[outputs.owner[a]][a];
        FilterMask mask{static_cast<int>(a), fraction, {}};
        mask.region = p.array() >= fraction * p.maxCoeff();
        masks.push_back(std::move(mask));
    }
    return masks;
}

FilteredMetrics filtered_metrics(const GateOutputs& outputs, const std::vector<FilterMask>& masks) {
    if (masks.size() != outputs.outcomes.size()) throw ValidationError("filtered_metrics: one mask per assigned outcome");
    const int k = outputs.num_inputs();
    FilteredMetrics r;
    r.correct.assign(k, 0.0);
    r.any.assign(k, 0.0);
    for (int i = 0; i < k; ++i)
        for (const auto& mask : masks) {
            const double p = mask.region.select(outputs.density[i][mask.outcome].array(), 0.0).sum() * outputs.cell();
            r.any[i] += p;
            if (outputs.owner[mask.outcome] == i) r.correct[i] += p;
        }
    double correct = 0.0, any = 0.0;
    for (int i = 0; i < k; ++i) {
        correct += r.correct[i];
        any += r.any[i];
        if (r.any[i] > 0.0) r.fidelity_per_input += r.correct[i] / r.any[i] / k;
    }
    if (!(any > 0.0)) throw NumericalError("filtered_metrics: no probability inside the masks");
    r.fidelity = correct / any;
    r.efficiency = any / k;
    return r;
}

double window_extent(const FrequencyGrid& grid, const FilterMask& mask) {
    double lo = INFINITY, hi = -INFINITY;
    for (int n = 0; n < mask.region.rows(); ++n)
        for (int m = 0; m < mask.region.cols(); ++m)
            if (mask.region(n, m)) {
                const double u = (grid.time(n) + grid.time(m)) / std::sqrt(2.0);
                lo = std::min(lo, u);
                hi = std::max(hi, u);
            }
    return hi >= lo ? hi - lo : 0.0;
}

std::vector<ScanPoint> filter_scan(const GateOutputs& outputs, const std::vector<double>& fractions) {
    std::vector<ScanPoint> scan;
    for (double f : fractions) {
        const auto masks = build_masks(outputs, f);
        ScanPoint p{f, filtered_metrics(outputs, masks), 0.0};
        for (const auto& m : masks) p.mean_window += window_extent(outputs.grid, m) / masks.size();
        scan.push_back(std::move(p));
    }
    return scan;
}

}  // namespace qpnn
