#include "qpnn/engine.hpp"

#include <cmath>
#include <sstream>

#include "qpnn/scheduler.hpp"

namespace qpnn {

void NetworkSpec::validate() const {
    if (num_modes < 1) throw ValidationError("NetworkSpec: num_modes must be positive");
    if (layers.empty()) throw ValidationError("NetworkSpec: at least one layer is required");
    if (buffer < 0) throw ValidationError("NetworkSpec: buffer must be non-negative");
    for (const auto& p : layers) {
        if (p.num_modes != num_modes) throw ValidationError("NetworkSpec: layer plan has the wrong number of modes");
        validate_plan(p);
    }
    if (nonlinearity.kind == NonlinearityKind::QuantumDot) {
        if (!(nonlinearity.tau_qd > 0.0)) throw ValidationError("NetworkSpec: tau_qd must be positive");
        if (static_cast<int>(nonlinearity.detunings.size()) != num_layers() - 1) {
            std::ostringstream msg;
            msg << "NetworkSpec: QD networks need one detuning per nonlinear layer (" << num_layers() - 1 << "), got "
                << nonlinearity.detunings.size();
            throw ValidationError(msg.str());
        }
        for (double d : nonlinearity.detunings)
            if (!std::isfinite(d)) throw ValidationError("NetworkSpec: detunings must be finite");
    }
}

FrequencyGrid WavepacketSettings::grid(double tau_qd) const {
    if (!(sigma_p > 0.0) || !(tau_qd > 0.0)) throw ValidationError("WavepacketSettings: widths must be positive");
    FrequencyGrid g = FrequencyGrid::for_pulse(sigma_p, tau_qd, grid_points);
    g.half_span = std::min(g.half_span, 0.1 * grid_points / sigma_p);
    return g;
}

std::vector<ComplexMatrix> layer_unitaries(const NetworkSpec& spec) {
    std::vector<ComplexMatrix> us;
    for (const auto& p : spec.layers) us.push_back(reconstruct(p));
    return us;
}

ComplexMatrix linear_product(const NetworkSpec& spec) {
    spec.validate();
    ComplexMatrix u = ComplexMatrix::Identity(spec.num_modes, spec.num_modes);
    for (const auto& l : layer_unitaries(spec)) u = l * u;
    return u;
}

ComplexMatrix system_function(const NetworkSpec& spec, int num_photons) {
    spec.validate();
    if (spec.nonlinearity.kind == NonlinearityKind::QuantumDot)
        throw ValidationError("system_function: QD networks distort wavefunctions; use propagate_extended");
    FockBasis basis(spec.num_modes, num_photons);
    ComplexVector sigma = spec.nonlinearity.kind == NonlinearityKind::Kerr
                              ? kerr_sigma(basis, spec.nonlinearity.kerr_phase)
                              : ComplexVector::Ones(basis.size());
    ComplexMatrix s;
    const auto us = layer_unitaries(spec);
    for (std::size_t l = 0; l < us.size(); ++l) {
        ComplexMatrix phi = lift(us[l], basis);
        s = l == 0 ? phi : ComplexMatrix(phi * sigma.asDiagonal() * s);
    }
    return s;
}

ComplexMatrix chain_forward(const ChainGroup& group, const ComplexVector& input) {
    const int layers = static_cast<int>(group.lifts.size());
    ComplexMatrix out(group.dimension(), group.num_paths());
    for (int f = 0; f < group.num_paths(); ++f) {
        ComplexVector x = input;
        for (int l = 0; l < layers; ++l) {
            x = group.lifts[l] * x;
            if (l + 1 < layers) x = x.cwiseProduct(group.diagonals[f][l]);
        }
        out.col(f) = x;
    }
    return out;
}

ComplexMatrix chain_density(const ChainGroup& group, const ComplexMatrix& c) {
    return c * group.gram.transpose() * c.adjoint();
}

ChainSensitivity chain_sensitivity(const ChainGroup& group, const std::vector<ChainTerm>& terms, bool with_layers) {
    const int layers = static_cast<int>(group.lifts.size());
    const int paths = group.num_paths();
    const int d = group.dimension();
    ChainSensitivity out;
    out.gram_sensitivity = ComplexMatrix::Zero(paths, paths);
    if (with_layers) out.layer.assign(layers, ComplexMatrix::Zero(d, d));
    std::vector<std::vector<ComplexVector>> xs(paths, std::vector<ComplexVector>(layers));
    for (const auto& term : terms) {
        if (term.weight == 0.0) continue;
        ComplexMatrix c(d, paths);
        for (int f = 0; f < paths; ++f) {
            ComplexVector x = term.input;
            for (int l = 0; l < layers; ++l) {
                xs[f][l] = x;
                x = group.lifts[l] * x;
                if (l + 1 < layers) x = x.cwiseProduct(group.diagonals[f][l]);
            }
            c.col(f) = x;
        }
        const ComplexMatrix qc = term.observable * c;
        const ComplexMatrix h = c.adjoint() * qc;  // h(g, f) = C_g^dag Q C_f
        out.value += term.weight * (group.gram.array() * h.array()).sum().real();
        out.gram_sensitivity += term.weight * h;
        if (!with_layers) continue;
        const ComplexMatrix lambda = qc * group.gram.transpose();
        for (int f = 0; f < paths; ++f) {
            ComplexVector mu = lambda.col(f);
            for (int l = layers - 1; l >= 0; --l) {
                out.layer[l] += term.weight * xs[f][l] * mu.adjoint();
                if (l > 0) mu = (group.lifts[l].adjoint() * mu).cwiseProduct(group.diagonals[f][l - 1].conjugate());
            }
        }
    }
    return out;
}

PathFunctions path_functions(const Nonlinearity& nl, int num_layers, const WavepacketSettings& wp, bool keep_functions) {
    if (nl.kind != NonlinearityKind::QuantumDot) throw ValidationError("path_functions: QD nonlinearity required");
    if (static_cast<int>(nl.detunings.size()) != num_layers - 1)
        throw ValidationError("path_functions: one detuning per nonlinear layer is required");
    PathFunctions out;
    out.grid = wp.grid(nl.tau_qd);
    ComplexVector g = gaussian_wavepacket(out.grid, 0.0, wp.sigma_p);
    std::vector<TwoPhotonAmplitude> fs{product_amplitude(out.grid, g, g)};
    for (int l = 0; l + 1 < num_layers; ++l) {
        const QDParams qd = nl.qd_params(l);
        std::vector<TwoPhotonAmplitude> next(fs.size() * 2);
        for (std::size_t p = 0; p < fs.size(); ++p) {
            next[p] = scatter_separate(fs[p], qd);
            next[p | (std::size_t{1} << l)] = scatter_two(fs[p], qd);
        }
        fs = std::move(next);
    }
    const int n = static_cast<int>(fs.size());
    const double w = out.grid.spacing() * out.grid.spacing();
    out.gram.resize(n, n);
    for (int f = 0; f < n; ++f)
        for (int h = f; h < n; ++h) {
            const Complex v = (fs[f].values.conjugate().array() * fs[h].values.array()).sum() * w;
            out.gram(f, h) = v;
            out.gram(h, f) = std::conj(v);
        }
    if (keep_functions)
        for (auto& f : fs) out.functions.push_back(std::move(f.values));
    return out;
}

std::vector<std::vector<ComplexVector>> path_diagonals(const Nonlinearity& nl, int num_layers, const FockBasis& basis) {
    const int gaps = num_layers - 1;
    switch (nl.kind) {
        case NonlinearityKind::None:
            return {std::vector<ComplexVector>(gaps, ComplexVector::Ones(basis.size()))};
        case NonlinearityKind::Kerr:
            return {std::vector<ComplexVector>(gaps, kerr_sigma(basis, nl.kerr_phase))};
        case NonlinearityKind::QuantumDot: {
            ComplexVector doubles(basis.size()), singles(basis.size());
            for (int i = 0; i < basis.size(); ++i) {
                doubles(i) = basis.has_multiple_occupancy(i) ? 1.0 : 0.0;
                singles(i) = 1.0 - doubles(i);
            }
            std::vector<std::vector<ComplexVector>> out(std::size_t{1} << gaps);
            for (std::size_t p = 0; p < out.size(); ++p)
                for (int l = 0; l < gaps; ++l) out[p].push_back((p >> l) & 1 ? doubles : singles);
            return out;
        }
    }
    return {};
}

NetworkModel build_model(const NetworkSpec& spec, const FockBasis& basis, const WavepacketSettings& wp,
                         bool keep_functions) {
    spec.validate();
    if (basis.num_modes() != spec.num_modes) throw ValidationError("build_model: basis and network disagree on N");
    const bool qd = spec.nonlinearity.kind == NonlinearityKind::QuantumDot;
    if (qd && basis.num_photons() != 2) throw ValidationError("build_model: QD networks support two photons only");
    NetworkModel m;
    m.basis = basis;
    const int layers = spec.num_layers();
    for (const auto& u : layer_unitaries(spec)) {
        m.full.lifts.push_back(lift(u, basis));
        if (basis.num_photons() == 2) m.antisymmetric.lifts.push_back(antisymmetric_lift(u));
    }
    m.full.diagonals = path_diagonals(spec.nonlinearity, layers, basis);
    if (qd) {
        m.paths = path_functions(spec.nonlinearity, layers, wp, keep_functions);
        m.full.gram = m.paths->gram;
    } else {
        m.full.gram = ComplexMatrix::Ones(1, 1);
    }
    m.symmetric.lifts = m.full.lifts;
    m.symmetric.diagonals = path_diagonals(Nonlinearity::none(), layers, basis);
    m.symmetric.gram = ComplexMatrix::Ones(1, 1);
    if (basis.num_photons() == 2) {
        const int pairs = PairBasis(basis.num_modes()).size();
        m.antisymmetric.diagonals = {std::vector<ComplexVector>(layers - 1, ComplexVector::Ones(pairs))};
        m.antisymmetric.gram = ComplexMatrix::Ones(1, 1);
    }
    return m;
}

DensityMatrix output_state(const NetworkModel& model, const QuantumState& psi, double visibility) {
    if (!(psi.basis == model.basis)) throw ValidationError("output_state: input basis does not match the network");
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("output_state: V must lie in [0, 1]");
    DensityMatrix out{model.basis, chain_density(model.full, chain_forward(model.full, psi.amplitudes)), ComplexMatrix()};
    if (model.basis.num_photons() != 2) return out;
    out.matrix *= visibility;
    const auto d = distinguishable_amplitudes(psi);
    const ComplexVector s = chain_forward(model.symmetric, d.symmetric).col(0);
    const ComplexVector a = chain_forward(model.antisymmetric, d.antisymmetric).col(0);
    out.matrix += (1.0 - visibility) * s * s.adjoint();
    out.antisymmetric = (1.0 - visibility) * a * a.adjoint();
    return out;
}

double ExtendedState::norm_squared() const {
    double total = 0.0;
    for (const auto& a : attachments) total += a.squaredNorm();
    return total * grid.spacing() * grid.spacing();
}

void ExtendedState::validate() const {
    grid.validate();
    if (basis.num_photons() != 2) throw ValidationError("ExtendedState: two-photon sector required");
    if (static_cast<int>(attachments.size()) != basis.size())
        throw ValidationError("ExtendedState: one attachment per basis state is required");
    for (const auto& a : attachments)
        if (a.rows() != grid.points || a.cols() != grid.points)
            throw ValidationError("ExtendedState: attachment does not match the frequency grid");
    if (norm_squared() > 1.0 + 1e-6) throw NumericalError("ExtendedState: norm exceeds one");
}

ExtendedState product_input(const QuantumState& psi, const FrequencyGrid& grid, double sigma_p) {
    if (psi.basis.num_photons() != 2) throw ValidationError("product_input: two-photon state required");
    ComplexVector g = gaussian_wavepacket(grid, 0.0, sigma_p);
    const ComplexMatrix gg = g * g.transpose();
    ExtendedState s{psi.basis, grid, {}};
    for (int i = 0; i < psi.basis.size(); ++i) s.attachments.push_back(psi.amplitudes(i) * gg);
    return s;
}

ExtendedState propagate_extended(const NetworkSpec& spec, const ExtendedState& input) {
    spec.validate();
    if (spec.nonlinearity.kind != NonlinearityKind::QuantumDot)
        throw ValidationError("propagate_extended: QD nonlinearity required");
    input.validate();
    if (input.basis.num_modes() != spec.num_modes) throw ValidationError("propagate_extended: wrong number of modes");
    const FockBasis& b = input.basis;
    const int m = input.grid.points;
    ExtendedState s = input;
    const auto us = layer_unitaries(spec);
    for (int l = 0; l < spec.num_layers(); ++l) {
        const ComplexMatrix phi = lift(us[l], b);
        std::vector<ComplexMatrix> next(b.size(), ComplexMatrix::Zero(m, m));
        for (int i = 0; i < b.size(); ++i)
            for (int j = 0; j < b.size(); ++j)
                if (phi(i, j) != 0.0) next[i] += phi(i, j) * s.attachments[j];
        if (l + 1 < spec.num_layers()) {
            const QDParams qd = spec.nonlinearity.qd_params(l);
            for (int i = 0; i < b.size(); ++i) {
                TwoPhotonAmplitude a{s.grid, std::move(next[i])};
                next[i] = (b.has_multiple_occupancy(i) ? scatter_two(a, qd) : scatter_separate(a, qd)).values;
            }
        }
        s.attachments = std::move(next);
    }
    return s;
}

ExtendedState expand_paths(const FockBasis& basis, const PathFunctions& paths, const ComplexMatrix& c) {
    if (paths.functions.size() != static_cast<std::size_t>(c.cols()) || c.rows() != basis.size())
        throw ValidationError("expand_paths: coefficients do not match the path functions");
    const int m = paths.grid.points;
    ExtendedState s{basis, paths.grid, std::vector<ComplexMatrix>(basis.size(), ComplexMatrix::Zero(m, m))};
    for (int i = 0; i < basis.size(); ++i)
        for (int f = 0; f < c.cols(); ++f)
            if (c(i, f) != 0.0) s.attachments[i] += c(i, f) * paths.functions[f];
    return s;
}

void LossBudget::validate() const {
    for (double a : {alpha_mzi, alpha_switch, alpha_ps, alpha_chip, fiber_attenuation})
        if (!(a >= 0.0 && a < 1.0)) throw ValidationError("LossBudget: fractional losses must lie in [0, 1)");
    if (!(group_velocity > 0.0)) throw ValidationError("LossBudget: group velocity must be positive");
    if (!(tau_b > 0.0)) throw ValidationError("LossBudget: tau_b must be positive");
}

int mzi_traversals(int num_modes) { return num_modes + 2 - num_modes % 2; }

int switch_traversals(int num_modes) {
    if (num_modes < 4) throw ValidationError("switch_traversals: N >= 4 is required");
    return (num_modes - 4) / 2 + 6;
}

double linear_fiber_length(int num_modes, const LossBudget& budget) {
    return 0.5 * (num_modes + 1) * (num_modes + 2) * budget.tau_b * budget.group_velocity;
}

double transmissivity(int num_modes, int num_layers, int buffer, const LossBudget& budget) {
    budget.validate();
    if (num_layers < 1 || buffer < 0) throw ValidationError("transmissivity: invalid layer count or buffer");
    const int om = mzi_traversals(num_modes), os = switch_traversals(num_modes);
    const double fiber_lin = std::pow(1.0 - budget.fiber_attenuation, linear_fiber_length(num_modes, budget));
    const double t_lin = std::pow(1.0 - budget.alpha_mzi, om) * std::pow(1.0 - budget.alpha_switch, os) *
                         (1.0 - budget.alpha_ps) * fiber_lin * std::pow(1.0 - budget.alpha_chip, 2 * (os - 1));
    const double t_nl = std::pow(1.0 - budget.fiber_attenuation, buffer * budget.tau_b * budget.group_velocity);
    return std::pow(t_lin, num_layers) * std::pow(t_nl, num_layers - 1);
}

double transmissivity(const NetworkSpec& spec, const LossBudget& budget) {
    return transmissivity(spec.num_modes, spec.num_layers(), spec.buffer, budget);
}

LossBudget budget_from_db(const LossPresetDb& db, double scale, double tau_b) {
    auto frac = [&](double d) { return 1.0 - std::pow(10.0, -scale * d / 10.0); };
    LossBudget b;
    b.alpha_mzi = frac(db.mzi_db);
    b.alpha_switch = frac(db.switch_db);
    b.alpha_ps = frac(db.ps_db);
    b.alpha_chip = frac(db.chip_db);
    b.fiber_attenuation = frac(db.fiber_db_per_km / 1000.0);
    b.tau_b = tau_b;
    return b;
}

LossCalibration calibrate_loss(const LossPresetDb& preset, int num_modes, int num_layers, int buffer, double target_alpha,
                               double tau_b) {
    if (!(target_alpha > 0.0 && target_alpha < 1.0)) throw ValidationError("calibrate_loss: alpha must lie in (0, 1)");
    auto alpha = [&](double s) { return 1.0 - transmissivity(num_modes, num_layers, buffer, budget_from_db(preset, s, tau_b)); };
    double lo = 0.0, hi = 1.0;
    while (alpha(hi) < target_alpha) {
        hi *= 2.0;
        if (hi > 1e6) throw NumericalError("calibrate_loss: preset cannot reach the requested loss");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (alpha(mid) < target_alpha ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    return {s, budget_from_db(preset, s, tau_b), alpha(s)};
}

double operational_rate(double eta, double alpha, int n_t, double tau_b) {
    if (n_t <= 0) throw ValidationError("operational_rate: n_t must be positive");
    if (!(eta >= 0.0 && eta <= 1.0 + 1e-12) || !(alpha >= 0.0 && alpha <= 1.0) || !(tau_b > 0.0))
        throw ValidationError("operational_rate: arguments out of range");
    return eta * (1.0 - alpha) / (n_t * tau_b);
}

int network_timesteps(const NetworkSpec& spec) {
    spec.validate();
    if (spec.num_layers() == 1) return first_mode_span(compile_schedule(spec.layers[0], 0), 0);
    std::vector<Schedule> parts;
    for (const auto& p : spec.layers) parts.push_back(compile_schedule(p, spec.buffer));
    const Schedule s = compose_layers(parts, spec.buffer);
    int t_in = -1, t_out = -1;
    for (const auto& st : s.steps) {
        if (st.s2.couple_in == 1 && st.s2.in_layer == 0) t_in = st.t;
        if (st.s2.couple_out == 1 && st.s2.out_layer == spec.num_layers() - 1) t_out = st.t;
    }
    if (t_in < 0 || t_out < 0) throw VerificationError("network_timesteps: first mode not found in the schedule");
    return t_out - t_in;
}

double target_overlap(const TaskTarget& target, const DensityMatrix& rho) {
    if (!target.outcome_set) return pure_fidelity(target.state, rho);
    double p = 0.0;
    for (const auto& o : target.outcomes) {
        const int i = rho.basis.index_of(o);
        if (i < 0) throw ValidationError("target_overlap: outcome outside the basis");
        p += rho.matrix(i, i).real();
    }
    return p;
}

EvaluationReport evaluate(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                          const EvaluationOptions& options) {
    task.validate();
    if (!(task.basis.num_modes() == spec.num_modes)) throw ValidationError("evaluate: task and network disagree on N");
    if (!(options.alpha >= 0.0 && options.alpha < 1.0)) throw ValidationError("evaluate: alpha must lie in [0, 1)");
    const NetworkModel model = build_model(spec, task.basis, options.wavepacket);
    EvaluationReport r;
    r.task = task.name;
    r.visibility = visibility;
    r.alpha = options.alpha;
    r.tau_b = options.tau_b;
    for (const auto& ls : task.cb.logical_states) r.logical_labels.push_back(ls.label);
    const int k = task.size();
    double cost = 0.0, ensemble = 0.0;
    for (int i = 0; i < k; ++i) {
        const QuantumState& psi = task.inputs[i];
        const DensityMatrix rho = output_state(model, psi, visibility);
        InputReport in;
        in.label = task.input_labels[i];
        in.fidelity = target_overlap(task.targets[i], rho);
        in.efficiency = efficiency(rho, task.cb);
        in.input_fidelity = input_fidelity(mixed_input(psi, visibility), psi.amplitudes);
        if (in.fidelity / in.input_fidelity > 1.0 + 1e-9)
            throw NumericalError("evaluate: output fidelity exceeds the input fidelity (ratio " + std::to_string(in.fidelity / in.input_fidelity) + ", trace " + std::to_string(rho.trace()) + ")");
        in.conditional_fidelity = in.efficiency > 0.0 ? in.fidelity / (in.input_fidelity * in.efficiency) : 0.0;
        for (const auto& ls : task.cb.logical_states)
            in.logical_probabilities.push_back(in.efficiency > 0.0 ? population(rho, ls.occupations) / in.efficiency : 0.0);
        cost += 1.0 - in.fidelity / in.input_fidelity;
        ensemble += in.fidelity / in.input_fidelity;
        r.fidelity += in.conditional_fidelity / k;
        r.efficiency += in.efficiency / k;
        r.inputs.push_back(std::move(in));
    }
    r.cost = cost / k;
    r.scaled_cost = (1.0 - options.alpha) * r.cost;
    r.ensemble_fidelity = r.efficiency > 0.0 ? ensemble / (k * r.efficiency) : 0.0;
    r.n_t = options.n_t ? *options.n_t : network_timesteps(spec);
    r.rate = operational_rate(std::min(r.efficiency, 1.0), options.alpha, r.n_t, options.tau_b);
    return r;
}

EvaluationReport evaluate(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                          const LossBudget& budget, const EvaluationOptions& options) {
    EvaluationOptions o = options;
    o.alpha = 1.0 - transmissivity(spec, budget);
    o.tau_b = budget.tau_b;
    return evaluate(spec, task, visibility, o);
}

}  // namespace qpnn
