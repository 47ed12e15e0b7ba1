#include "qpnn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "qpnn/random.hpp"

namespace qpnn {

ParameterLayout ParameterLayout::of(const NetworkSpec& spec) {
    return {spec.num_modes, spec.num_layers(), spec.nonlinearity.kind == NonlinearityKind::QuantumDot};
}

RealVector pack_parameters(const NetworkSpec& spec) {
    spec.validate();
    const auto lay = ParameterLayout::of(spec);
    RealVector x(lay.size());
    for (int l = 0; l < lay.num_layers; ++l) {
        const auto& p = spec.layers[l];
        for (int k = 0; k < lay.mzis(); ++k) {
            x(lay.theta(l, k)) = p.placements[k].setting.theta;
            x(lay.phi(l, k)) = p.placements[k].setting.phi;
        }
        for (int m = 0; m < lay.num_modes; ++m) x(lay.delta(l, m)) = p.output_phases(m);
    }
    if (lay.quantum_dot) {
        x(lay.log_tau()) = std::log(spec.nonlinearity.tau_qd);
        for (int l = 0; l + 1 < lay.num_layers; ++l) x(lay.detuning(l)) = spec.nonlinearity.detunings[l];
    }
    return x;
}

NetworkSpec unpack_parameters(const NetworkSpec& shape, const RealVector& x) {
    const auto lay = ParameterLayout::of(shape);
    if (x.size() != lay.size()) throw ValidationError("unpack_parameters: parameter vector has the wrong length");
    NetworkSpec s = shape;
    for (int l = 0; l < lay.num_layers; ++l) {
        auto& p = s.layers[l];
        for (int k = 0; k < lay.mzis(); ++k) p.placements[k].setting = {x(lay.theta(l, k)), x(lay.phi(l, k))};
        for (int m = 0; m < lay.num_modes; ++m) p.output_phases(m) = x(lay.delta(l, m));
    }
    if (lay.quantum_dot) {
        s.nonlinearity.tau_qd = std::exp(x(lay.log_tau()));
        s.nonlinearity.detunings.resize(lay.num_layers - 1);
        for (int l = 0; l + 1 < lay.num_layers; ++l) s.nonlinearity.detunings[l] = x(lay.detuning(l));
    }
    return s;
}

namespace {

ComplexMatrix observable(const TaskTarget& t, const FockBasis& basis) {
    if (!t.outcome_set) return t.state * t.state.adjoint();
    ComplexMatrix q = ComplexMatrix::Zero(basis.size(), basis.size());
    for (const auto& o : t.outcomes) {
        const int i = basis.index_of(o);
        q(i, i) = 1.0;
    }
    return q;
}

struct Terms {
    std::vector<ChainTerm> full;
    std::vector<ChainTerm> symmetric;
};

// cost = 1 + value(full) + value(symmetric).
Terms cost_terms(const TaskDefinition& task, double visibility) {
    Terms t;
    const int k = task.size();
    for (int i = 0; i < k; ++i) {
        const QuantumState& psi = task.inputs[i];
        const double f_in = input_fidelity(mixed_input(psi, visibility), psi.amplitudes);
        const ComplexMatrix q = observable(task.targets[i], task.basis);
        t.full.push_back({psi.amplitudes, q, -visibility / (k * f_in)});
        if (visibility < 1.0)
            t.symmetric.push_back({distinguishable_amplitudes(psi).symmetric, q, -(1.0 - visibility) / (k * f_in)});
    }
    return t;
}

void check_task(const NetworkSpec& spec, const TaskDefinition& task) {
    task.validate();
    if (task.basis.num_modes() != spec.num_modes) throw ValidationError("cost: task and network disagree on N");
    if (task.basis.num_photons() != 2) throw ValidationError("cost: two-photon tasks only");
}

double cost_value(const NetworkModel& model, const Terms& terms) {
    double c = 1.0 + chain_sensitivity(model.full, terms.full, false).value;
    if (!terms.symmetric.empty()) c += chain_sensitivity(model.symmetric, terms.symmetric, false).value;
    return c;
}

// d U / d theta_k and d U / d phi_k for every placement, and d U / d delta_m.
struct UnitaryDerivatives {
    std::vector<ComplexMatrix> theta, phi, delta;
};

UnitaryDerivatives unitary_derivatives(const MeshPlan& plan) {
    const int n = plan.num_modes;
    const int k = static_cast<int>(plan.placements.size());
    std::vector<ComplexMatrix> prefix(k + 1);  // prefix[i] = E_i ... E_1
    prefix[0] = ComplexMatrix::Identity(n, n);
    for (int i = 0; i < k; ++i) {
        prefix[i + 1] = prefix[i];
        apply_rows(prefix[i + 1], plan.placements[i].mode, mzi_unitary(plan.placements[i].setting));
    }
    ComplexMatrix suffix = ComplexMatrix::Identity(n, n);  // D E_K ... E_{i+1}
    for (int m = 0; m < n; ++m) suffix(m, m) = std::exp(kI * plan.output_phases(m));
    UnitaryDerivatives d;
    d.theta.resize(k);
    d.phi.resize(k);
    for (int i = k - 1; i >= 0; --i) {
        const auto& p = plan.placements[i];
        const ComplexMatrix right = prefix[i].middleRows(p.mode, 2);
        const ComplexMatrix left = suffix.middleCols(p.mode, 2);
        d.theta[i] = left * mzi_dtheta(p.setting) * right;
        d.phi[i] = left * mzi_dphi(p.setting) * right;
        apply_cols(suffix, p.mode, mzi_unitary(p.setting));
    }
    ComplexMatrix full = ComplexMatrix::Identity(n, n);
    for (int m = 0; m < n; ++m) full(m, m) = std::exp(kI * plan.output_phases(m));
    full = full * prefix[k];
    for (int m = 0; m < n; ++m) {
        ComplexMatrix dm = ComplexMatrix::Zero(n, n);
        dm.row(m) = kI * full.row(m);
        d.delta.push_back(dm);
    }
    return d;
}

double contract(const ComplexMatrix& dl, const ComplexMatrix& m) {
    return 2.0 * (dl.array() * m.transpose().array()).sum().real();
}

}  // namespace

CostValue cost(const NetworkSpec& spec, const TaskDefinition& task, double visibility, double alpha,
               const WavepacketSettings& wp) {
    check_task(spec, task);
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("cost: alpha must lie in [0, 1)");
    const NetworkModel model = build_model(spec, task.basis, wp);
    const double c = cost_value(model, cost_terms(task, visibility));
    return {c, (1.0 - alpha) * c};
}

CostGradient cost_gradient(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                           const WavepacketSettings& wp, double gram_step) {
    check_task(spec, task);
    const auto lay = ParameterLayout::of(spec);
    const NetworkModel model = build_model(spec, task.basis, wp);
    const Terms terms = cost_terms(task, visibility);
    const ChainSensitivity full = chain_sensitivity(model.full, terms.full);
    std::vector<ComplexMatrix> m = full.layer;
    double c = 1.0 + full.value;
    if (!terms.symmetric.empty()) {
        const ChainSensitivity sym = chain_sensitivity(model.symmetric, terms.symmetric);
        c += sym.value;
        for (int l = 0; l < lay.num_layers; ++l) m[l] += sym.layer[l];
    }
    CostGradient g{c, RealVector::Zero(lay.size())};
    const auto us = layer_unitaries(spec);
    for (int l = 0; l < lay.num_layers; ++l) {
        const auto d = unitary_derivatives(spec.layers[l]);
        for (int k = 0; k < lay.mzis(); ++k) {
            g.gradient(lay.theta(l, k)) = contract(lift_derivative(us[l], d.theta[k], task.basis), m[l]);
            g.gradient(lay.phi(l, k)) = contract(lift_derivative(us[l], d.phi[k], task.basis), m[l]);
        }
        for (int i = 0; i < lay.num_modes; ++i)
            g.gradient(lay.delta(l, i)) = contract(lift_derivative(us[l], d.delta[i], task.basis), m[l]);
    }
    if (lay.quantum_dot && lay.num_layers > 1) {
        const RealVector x = pack_parameters(spec);
        for (int p = lay.log_tau(); p < lay.size(); ++p) {
            RealVector xp = x, xm = x;
            xp(p) += gram_step;
            xm(p) -= gram_step;
            const NetworkSpec sp = unpack_parameters(spec, xp), sm = unpack_parameters(spec, xm);
            const ComplexMatrix dg = (path_functions(sp.nonlinearity, lay.num_layers, wp, false).gram -
                                      path_functions(sm.nonlinearity, lay.num_layers, wp, false).gram) /
                                     (2.0 * gram_step);
            g.gradient(p) = (dg.array() * full.gram_sensitivity.array()).sum().real();
        }
    }
    return g;
}

RealVector finite_difference_gradient(const NetworkSpec& spec, const TaskDefinition& task, double visibility,
                                      const WavepacketSettings& wp, double step) {
    const RealVector x = pack_parameters(spec);
    RealVector g(x.size());
    for (int p = 0; p < x.size(); ++p) {
        RealVector xp = x, xm = x;
        xp(p) += step;
        xm(p) -= step;
        g(p) = (cost(unpack_parameters(spec, xp), task, visibility, 0.0, wp).cost -
                cost(unpack_parameters(spec, xm), task, visibility, 0.0, wp).cost) /
               (2.0 * step);
    }
    return g;
}

std::pair<double, double> TrainConfig::log_tau_bounds() const {
    const double spacing = wavepacket.grid(wavepacket.sigma_p).spacing();
    const double lo = std::log(wavepacket.sigma_p / 32.0);
    return {lo, std::max(lo, std::log(0.5 / spacing))};
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("TrainConfig: epochs must be at least 1");
    if (trials < 1) throw ValidationError("TrainConfig: trials must be at least 1");
    if (num_layers < 1) throw ValidationError("TrainConfig: num_layers must be at least 1");
    if (num_modes < 2) throw ValidationError("TrainConfig: num_modes must be at least 2");
    if (!(visibility >= 0.0 && visibility <= 1.0)) throw ValidationError("TrainConfig: visibility must lie in [0, 1]");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be positive");
    if (!(learning_rate_decay > 0.0 && learning_rate_decay <= 1.0))
        throw ValidationError("TrainConfig: learning_rate_decay must lie in (0, 1]");
    if (line_search_halvings < 0) throw ValidationError("TrainConfig: line_search_halvings must be non-negative");
    if (threads < 1) throw ValidationError("TrainConfig: threads must be at least 1");
    if (nonlinearity.kind == NonlinearityKind::QuantumDot) {
        if (!(wavepacket.sigma_p > 0.0)) throw ValidationError("TrainConfig: sigma_p must be positive");
        FrequencyGrid{0.0, 1.0, wavepacket.grid_points}.validate();
        FrequencyGrid{0.0, 1.0, evaluation_grid_points}.validate();
    }
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) { return counter_hash(seed, static_cast<std::uint64_t>(trial)); }

NetworkSpec network_shape(const TrainConfig& config) {
    NetworkSpec s{config.num_modes, {}, config.nonlinearity, config.buffer};
    for (int l = 0; l < config.num_layers; ++l) s.layers.push_back(bar_plan(config.num_modes));
    if (s.nonlinearity.kind == NonlinearityKind::QuantumDot) s.nonlinearity.detunings.assign(config.num_layers - 1, 0.0);
    return s;
}

RealVector initial_parameters(const TrainConfig& config, std::uint64_t seed) {
    NetworkSpec shape = network_shape(config);
    const auto lay = ParameterLayout::of(shape);
    RealVector x(lay.size());
    std::uint64_t counter = 0;
    auto uniform = [&] { return counter_uniform(seed, counter++); };
    if (config.haar_initialisation) {
        std::mt19937_64 rng(seed);
        for (int l = 0; l < lay.num_layers; ++l) shape.layers[l] = clements_decompose(haar_unitary(lay.num_modes, rng));
        RealVector y = pack_parameters(shape);
        x.head(lay.num_layers * lay.per_layer()) = y.head(lay.num_layers * lay.per_layer());
    } else {
        for (int i = 0; i < lay.num_layers * lay.per_layer(); ++i) x(i) = kTwoPi * uniform();
    }
    if (lay.quantum_dot) {
        const double log_tau = std::log(config.wavepacket.sigma_p) + (uniform() - 0.5);
        x(lay.log_tau()) = log_tau;
        const double span = 2.0 / std::exp(log_tau);
        for (int l = 0; l + 1 < lay.num_layers; ++l) x(lay.detuning(l)) = span * (2.0 * uniform() - 1.0);
    }
    return x;
}

TaskDefinition task_for_record(const TaskDefinition& task, const TrainRecord& record) {
    if (task.kind != TaskKind::Bsa || !record.assignment) return task;
    return bsa_task(task.basis.num_modes(), *record.assignment);
}

NetworkSpec spec_for_record(const TrainConfig& config, const TrainRecord& record) {
    return unpack_parameters(network_shape(config), record.parameters);
}

TrainRecord train_trial(const TaskDefinition& base_task, const TrainConfig& config, int trial) {
    config.validate();
    TrainRecord rec;
    rec.trial = trial;
    rec.seed = trial_seed(config.seed, trial);
    TaskDefinition task = base_task;
    if (task.kind == TaskKind::Bsa) {
        rec.assignment = assign_bsa_outcomes(config.num_modes, rec.seed);
        task = bsa_task(config.num_modes, *rec.assignment);
    }
    const NetworkSpec shape = network_shape(config);
    RealVector x = initial_parameters(config, rec.seed);
    const int n = static_cast<int>(x.size());
    RealVector m1 = RealVector::Zero(n), m2 = RealVector::Zero(n);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    auto evaluate_cost = [&](const RealVector& y) {
        return cost(unpack_parameters(shape, y), task, config.visibility, 0.0, config.wavepacket).cost;
    };
    const auto lay = ParameterLayout::of(shape);
    const auto [tau_lo, tau_hi] = config.log_tau_bounds();
    auto project = [&](RealVector& y) {
        if (lay.quantum_dot) y(lay.log_tau()) = std::clamp(y(lay.log_tau()), tau_lo, tau_hi);
    };
    project(x);
    RealVector best = x;
    double best_cost = 0.0;
    for (int e = 0; e < config.epochs; ++e) {
        const CostGradient cg = cost_gradient(unpack_parameters(shape, x), task, config.visibility, config.wavepacket);
        if (!std::isfinite(cg.cost) || !cg.gradient.allFinite() || cg.cost < -1e-6) {
            std::ostringstream msg;
            msg << (cg.cost < -1e-6 ? "negative cost " : "non-finite cost or gradient ") << "at epoch " << e;
            rec.status = msg.str();
            break;
        }
        rec.costs.push_back(cg.cost);
        if (e == 0 || cg.cost < best_cost) {
            best_cost = cg.cost;
            best = x;
        }
        rec.best_costs.push_back(best_cost);
        if (e + 1 == config.epochs) break;
        const double lr = config.learning_rate * std::pow(config.learning_rate_decay, static_cast<double>(e) / config.epochs);
        m1 = b1 * m1 + (1 - b1) * cg.gradient;
        m2 = b2 * m2 + (1 - b2) * cg.gradient.cwiseAbs2();
        const RealVector mh = m1 / (1 - std::pow(b1, e + 1));
        const RealVector vh = m2 / (1 - std::pow(b2, e + 1));
        const RealVector step = lr * mh.array() / (vh.array().sqrt() + eps);
        double scale = 1.0;
        for (int h = 0; h <= config.line_search_halvings; ++h, scale *= 0.5) {
            RealVector y = x - scale * step;
            project(y);
            const double c = evaluate_cost(y);
            if (std::isfinite(c) && c <= cg.cost) {
                x = y;
                break;
            }
        }
    }
    rec.parameters = best;
    rec.final_cost = best_cost;
    if (rec.ok()) try {
        const NetworkSpec spec = unpack_parameters(shape, best);
        EvaluationOptions opt;
        opt.n_t = 1;
        opt.wavepacket = config.wavepacket;
        const bool qd = config.nonlinearity.kind == NonlinearityKind::QuantumDot;
        if (qd) {
            rec.fidelity_training_grid = evaluate(spec, task, config.visibility, opt).fidelity;
            opt.wavepacket.grid_points = config.evaluation_grid_points;
        }
        const auto report = evaluate(spec, task, config.visibility, opt);
        rec.fidelity = report.fidelity;
        rec.efficiency = report.efficiency;
        if (!qd) rec.fidelity_training_grid = rec.fidelity;
    } catch (const NumericalError& e) {
        rec.status = std::string("final evaluation failed: ") + e.what();
    }
    return rec;
}

std::vector<TrainRecord> optimize(const TaskDefinition& task, const TrainConfig& config,
                                  const std::function<void(const TrainRecord&)>& on_record) {
    config.validate();
    std::vector<TrainRecord> records(config.trials);
    std::atomic<int> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (int t = next++; t < config.trials; t = next++) {
            TrainRecord r;
            try {
                r = train_trial(task, config, t);
            } catch (const std::exception& e) {
                r.trial = t;
                r.seed = trial_seed(config.seed, t);
                r.status = std::string("trial aborted: ") + e.what();
                r.final_cost = INFINITY;
            }
            std::lock_guard<std::mutex> lock(mu);
            if (on_record) on_record(r);
            records[t] = std::move(r);
        }
    };
    const int threads = std::min(config.threads, config.trials);
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return records;
}

const TrainRecord& best_record(const std::vector<TrainRecord>& records) {
    const TrainRecord* best = nullptr;
    for (const auto& r : records)
        if (r.ok() && (!best || r.final_cost < best->final_cost)) best = &r;
    if (!best) throw NumericalError("best_record: no successful trial");
    return *best;
}

}  // namespace qpnn
