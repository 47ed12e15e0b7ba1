#include "qpnn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "qpnn/distinguishability.hpp"
#include "qpnn/io.hpp"

namespace qpnn {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.3.0";

const std::set<std::string> kTopLevel = {"task",  "N",      "L",      "buffer", "nonlinearity", "visibility",
                                         "jitter", "loss",  "grid",   "train",  "filter",       "curve",
                                         "sweep", "model", "trial",  "n_t",    "tau_b",        "assignment_seed"};

[[noreturn]] void bad(const std::string& field, const std::string& what) {
    throw ValidationError("config: field '" + field + "' " + what);
}

// Dotted-path access into a JSON config with type and range messages naming the field.
class Config {
public:
    Config(Json j, fs::path base) : j_(std::move(j)), base_(std::move(base)) {
        if (!j_.is_object()) throw ValidationError("config: top level must be a JSON object");
        for (const auto& [k, v] : j_.items())
            if (!kTopLevel.count(k)) bad(k, "is not a recognised setting");
    }

    const Json& json() const { return j_; }
    Json& json() { return j_; }

    const Json* find(const std::string& dotted) const {
        const Json* node = &j_;
        std::istringstream parts(dotted);
        for (std::string key; std::getline(parts, key, '.');) {
            if (!node->is_object() || !node->contains(key)) return nullptr;
            node = &node->at(key);
        }
        return node;
    }
    bool has(const std::string& dotted) const { return find(dotted) != nullptr; }

    template <typename T>
    T get(const std::string& dotted, T fallback) const {
        const Json* node = find(dotted);
        return node ? convert<T>(*node, dotted) : fallback;
    }
    template <typename T>
    T require(const std::string& dotted) const {
        const Json* node = find(dotted);
        if (!node) bad(dotted, "is required");
        return convert<T>(*node, dotted);
    }

    fs::path path(const std::string& dotted) const {
        fs::path p = require<std::string>(dotted);
        if (p.is_relative() && !fs::exists(p) && fs::exists(base_ / p)) p = base_ / p;
        if (!fs::exists(p)) bad(dotted, "names a file that does not exist: " + p.string());
        return p;
    }

    template <typename T>
    static T convert(const Json& v, const std::string& name) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) bad(name, "must be true or false");
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) bad(name, "must be a non-negative integer");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) bad(name, "must be an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) bad(name, "must be a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) bad(name, "must be a string");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); }))
                bad(name, "must be an array of numbers");
        }
        return v.get<T>();
    }

private:
    Json j_;
    fs::path base_;
};

int at_least(const Config& c, const std::string& name, int fallback, int lo) {
    const int v = c.get<int>(name, fallback);
    if (v < lo) bad(name, "must be at least " + std::to_string(lo) + " (got " + std::to_string(v) + ")");
    return v;
}

double in_range(const Config& c, const std::string& name, double fallback, double lo, double hi, bool open_hi = false) {
    const double v = c.get<double>(name, fallback);
    if (!(v >= lo && (open_hi ? v < hi : v <= hi)))
        bad(name, "must lie in [" + format_double(lo) + ", " + format_double(hi) + (open_hi ? ")" : "]") + " (got " +
                      format_double(v) + ")");
    return v;
}

double positive(const Config& c, const std::string& name, double fallback) {
    const double v = c.get<double>(name, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) bad(name, "must be a positive number (got " + format_double(v) + ")");
    return v;
}

std::string task_name(const Config& c) {
    const auto t = c.get<std::string>("task", "cnot");
    if (t != "cnot" && t != "linear_cnot" && t != "bsa") bad("task", "must be one of cnot, linear_cnot, bsa (got '" + t + "')");
    return t;
}

int num_modes(const Config& c) {
    const auto t = task_name(c);
    const int fallback = t == "cnot" ? 4 : t == "linear_cnot" ? 6 : 4;
    const int n = at_least(c, "N", fallback, t == "bsa" ? 4 : 3);
    if (t == "cnot" && n != 4) bad("N", "must be 4 for the cnot task");
    if (t == "linear_cnot" && n != 6) bad("N", "must be 6 for the linear_cnot task");
    return n;
}

TaskDefinition make_task(const Config& c) {
    const auto t = task_name(c);
    if (t == "cnot") return cnot_task();
    if (t == "linear_cnot") return linear_cnot_task();
    const int n = num_modes(c);
    return bsa_task(n, assign_bsa_outcomes(n, c.get<std::uint64_t>("assignment_seed", 0)));
}

Nonlinearity make_nonlinearity(const Config& c) {
    const auto t = task_name(c);
    const std::string fallback = t == "cnot" ? "kerr" : t == "linear_cnot" ? "none" : "qd";
    const auto kind = c.get<std::string>("nonlinearity.kind", fallback);
    if (kind == "none") return Nonlinearity::none();
    if (kind == "kerr") return Nonlinearity::kerr(c.get<double>("nonlinearity.phase", kPi));
    if (kind == "qd") return Nonlinearity::quantum_dot(positive(c, "nonlinearity.tau_qd", 1.0), {});
    bad("nonlinearity.kind", "must be one of none, kerr, qd (got '" + kind + "')");
}

JitterModel make_jitter(const Config& c) {
    JitterModel m;
    m.sigma_p = positive(c, "jitter.sigma_p", 1.0);
    m.sigma_j = in_range(c, "jitter.sigma_j", 0.0, 0.0, INFINITY);
    m.n_samples = at_least(c, "jitter.n_samples", 200, 1);
    m.seed = c.get<std::uint64_t>("jitter.seed", 0);
    const auto w = c.get<std::string>("jitter.width", "fwhm");
    if (w != "fwhm" && w != "std") bad("jitter.width", "must be 'fwhm' or 'std'");
    m.width = w == "fwhm" ? JitterWidth::Fwhm : JitterWidth::StandardDeviation;
    return m;
}

double make_visibility(const Config& c) {
    if (c.has("visibility") && c.has("jitter")) bad("visibility", "cannot be combined with 'jitter'");
    if (c.has("jitter")) return mean_visibility(make_jitter(c));
    return in_range(c, "visibility", 1.0, 0.0, 1.0);
}

WavepacketSettings make_wavepacket(const Config& c, bool evaluation) {
    WavepacketSettings wp;
    wp.sigma_p = positive(c, "grid.sigma_p", 1.0);
    const std::string key = evaluation ? "grid.M_eval" : "grid.M";
    wp.grid_points = at_least(c, key, evaluation ? 512 : 128, 8);
    if (wp.grid_points % 2) bad(key, "must be even");
    return wp;
}

TrainConfig make_train_config(const Config& c) {
    TrainConfig t;
    t.num_modes = num_modes(c);
    t.num_layers = at_least(c, "L", 2, 1);
    t.buffer = at_least(c, "buffer", 1, 0);
    t.nonlinearity = make_nonlinearity(c);
    if (t.nonlinearity.kind == NonlinearityKind::QuantumDot && t.num_layers < 2)
        bad("L", "must be at least 2 for a QD network");
    t.visibility = make_visibility(c);
    t.epochs = at_least(c, "train.epochs", t.epochs, 1);
    t.trials = at_least(c, "train.trials", t.trials, 1);
    t.seed = c.get<std::uint64_t>("train.seed", t.seed);
    t.learning_rate = positive(c, "train.learning_rate", t.learning_rate);
    t.learning_rate_decay = in_range(c, "train.learning_rate_decay", t.learning_rate_decay, 1e-12, 1.0);
    t.line_search_halvings = at_least(c, "train.line_search_halvings", t.line_search_halvings, 0);
    t.haar_initialisation = c.get<bool>("train.haar", false);
    t.wavepacket = make_wavepacket(c, false);
    t.evaluation_grid_points = make_wavepacket(c, true).grid_points;
    t.validate();
    return t;
}

struct Evaluation {
    EvaluationOptions options;
    std::optional<LossBudget> budget;
};

Evaluation make_evaluation(const Config& c) {
    Evaluation e;
    e.options.tau_b = positive(c, "tau_b", 10.0);
    if (c.has("n_t")) e.options.n_t = at_least(c, "n_t", 1, 1);
    e.options.wavepacket = make_wavepacket(c, true);
    const int given = c.has("loss.alpha") + c.has("loss.budget") + c.has("loss.preset_file");
    if (given > 1) bad("loss", "takes only one of alpha, budget, preset_file");
    if (c.has("loss.alpha")) e.options.alpha = in_range(c, "loss.alpha", 0.0, 0.0, 1.0, true);
    if (c.has("loss.budget")) e.budget = budget_from_json(*c.find("loss.budget"));
    if (c.has("loss.preset_file")) {
        const Json p = read_json_file(c.path("loss.preset_file"));
        if (!p.contains("budget")) bad("loss.preset_file", "does not contain a 'budget'");
        e.budget = budget_from_json(p.at("budget"));
    }
    if (e.budget) e.budget->tau_b = e.options.tau_b;
    return e;
}

EvaluationReport run_evaluation(const NetworkSpec& spec, const TaskDefinition& task, double v, const Evaluation& e) {
    return e.budget ? evaluate(spec, task, v, *e.budget, e.options) : evaluate(spec, task, v, e.options);
}

struct Model {
    NetworkSpec spec;
    TaskDefinition task;
    std::string source;
};

// Model sources: a records .jsonl (best or 'trial'), a {"spec", "assignment"} file, a bare spec,
// or the built-in linear CNOT when the task is linear_cnot and no model is given.
Model load_model(const Config& c) {
    TaskDefinition task = make_task(c);
    if (!c.has("model")) {
        if (task_name(c) != "linear_cnot") bad("model", "is required for this task");
        NetworkSpec s{6, {clements_decompose(linear_cnot_unitary())}, Nonlinearity::none(), 0};
        return {s, task, "built-in linear CNOT"};
    }
    const fs::path p = c.path("model");
    if (p.extension() == ".jsonl") {
        const TrainConfig tc = make_train_config(c);
        std::ifstream in(p);
        std::vector<TrainRecord> records;
        for (std::string line; std::getline(in, line);)
            if (!line.empty()) records.push_back(record_from_json(Json::parse(line)));
        if (records.empty()) bad("model", "contains no records");
        const TrainRecord* pick = &best_record(records);
        if (c.has("trial")) {
            const int t = c.require<int>("trial");
            auto it = std::find_if(records.begin(), records.end(), [t](const TrainRecord& r) { return r.trial == t; });
            if (it == records.end()) bad("trial", "is not present in " + p.string());
            pick = &*it;
        }
        const NetworkSpec s = spec_for_record(tc, *pick);
        return {s, task_for_record(task, *pick), p.string() + " trial " + std::to_string(pick->trial)};
    }
    const Json j = read_json_file(p);
    if (j.contains("spec")) {
        NetworkSpec s = spec_from_json(j.at("spec"));
        if (j.contains("assignment") && task.kind == TaskKind::Bsa) task = bsa_task(s.num_modes, assignment_from_json(j.at("assignment")));
        return {s, task, p.string()};
    }
    return {spec_from_json(j), task, p.string()};
}

struct Run {
    std::string command;
    fs::path out;
    std::ostream& log;
};

void write_manifest(const Run& run, const Config& c, std::uint64_t seed) {
    write_json_file(run.out / "manifest.json", {{"command", run.command},
                                                {"config_hash", hex64(fnv1a(c.json().dump()))},
                                                {"version", kVersion},
                                                {"seed", seed},
                                                {"config", c.json()}});
}

std::vector<double> visibilities(const Config& c, const std::string& key) {
    auto v = c.get<std::vector<double>>(key, {});
    for (double x : v)
        if (!(x >= 0.0 && x <= 1.0)) bad(key, "entries must lie in [0, 1]");
    return v;
}

int cmd_decompose(const Run& run, const fs::path& input) {
    Json j = read_json_file(input);
    const ComplexMatrix u = matrix_from_json(j.is_object() && j.contains("matrix") ? j.at("matrix") : j);
    if (u.rows() != u.cols()) throw ValidationError("decompose: matrix is " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) + ", expected square");
    const double residual = unitarity_residual(u);
    if (residual > 1e-9) throw ValidationError("decompose: matrix is not unitary, ||U^H U - I||_F = " + format_double(residual));
    const MeshPlan plan = clements_decompose(u);
    const double err = (reconstruct(plan) - u).norm();
    write_json_file(run.out / "plan.json", plan_to_json(plan));
    run.log << "N=" << plan.num_modes << " mzis=" << plan.placements.size() << " unitarity_residual=" << format_double(residual)
            << " roundtrip_error=" << format_double(err) << "\n";
    if (err > 1e-9) throw NumericalError("decompose: reconstruction differs from the input by " + format_double(err));
    return 0;
}

int cmd_schedule(const Run& run, const fs::path& input, int buffer) {
    if (buffer < 0) throw ValidationError("schedule: --buffer must be non-negative");
    const Json j = read_json_file(input);
    std::vector<MeshPlan> plans;
    if (j.contains("layers")) {
        for (const auto& p : j.at("layers")) plans.push_back(plan_from_json(p, false));
    } else if (j.contains("spec")) {
        for (const auto& p : j.at("spec").at("layers")) plans.push_back(plan_from_json(p, false));
    } else {
        plans.push_back(plan_from_json(j, false));
    }
    std::vector<Schedule> per_layer;
    try {
        for (const auto& p : plans) per_layer.push_back(compile_schedule(p, buffer));
    } catch (const std::exception& e) {
        throw VerificationError(std::string("FAIL ") + e.what());
    }
    const Schedule sched = per_layer.size() == 1 ? per_layer[0] : compose_layers(per_layer, buffer);
    double worst = 0.0;
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
        const double r = (simulate_schedule(per_layer[l]) - reconstruct(plans[l])).norm();
        worst = std::max(worst, r);
        run.log << "layer " << l << ": first_mode_span=" << first_mode_span(per_layer[l]) << " residual=" << format_double(r)
                << "\n";
    }
    write_text_file(run.out / "schedule.txt", schedule_table(sched));
    write_json_file(run.out / "schedule.json", schedule_to_json(sched));
    if (worst > 1e-10) throw VerificationError("FAIL schedule-simulated unitary differs from the mesh by " + format_double(worst));
    run.log << "PASS N=" << sched.geometry.num_modes << " layers=" << sched.num_layers() << " n_t=" << sched.n_t
            << " residual=" << format_double(worst) << "\n";
    return 0;
}

std::string summary_csv(const std::vector<TrainRecord>& records) {
    std::ostringstream s;
    s << "trial [index],final_cost [dimensionless],F [dimensionless],eta [dimensionless],F_training_grid [dimensionless],status\n";
    for (const auto& r : records)
        s << r.trial << ',' << format_double(r.final_cost) << ',' << format_double(r.fidelity) << ','
          << format_double(r.efficiency) << ',' << format_double(r.fidelity_training_grid) << ',' << r.status << '\n';
    return s.str();
}

Json model_file(const TrainConfig& tc, const TrainRecord& r) {
    Json j = {{"trial", r.trial}, {"spec", spec_to_json(spec_for_record(tc, r))}};
    if (r.assignment) j["assignment"] = assignment_to_json(*r.assignment);
    return j;
}

int cmd_train(const Run& run, const Config& c, int threads) {
    TrainConfig tc = make_train_config(c);
    tc.threads = threads;
    const TaskDefinition task = make_task(c);
    const auto curve = visibilities(c, "curve.visibilities");
    const bool online = c.get<bool>("curve.online", false);
    write_manifest(run, c, tc.seed);

    auto progress = [&](const TrainRecord& r) {
        run.log << "trial " << r.trial << " cost=" << format_double(r.final_cost) << " F=" << format_double(r.fidelity)
                << " eta=" << format_double(r.efficiency) << " " << r.status << "\n";
    };
    const auto records = optimize(task, tc, progress);
    std::ostringstream lines;
    for (const auto& r : records) lines << record_to_json(r).dump() << '\n';
    write_text_file(run.out / "records.jsonl", lines.str());
    write_text_file(run.out / "summary.csv", summary_csv(records));
    const TrainRecord& best = best_record(records);
    write_json_file(run.out / "best_model.json", model_file(tc, best));
    run.log << "best trial " << best.trial << " F=" << format_double(best.fidelity) << " eta=" << format_double(best.efficiency)
            << "\n";

    if (!curve.empty()) {
        const NetworkSpec spec = spec_for_record(tc, best);
        const TaskDefinition best_task = task_for_record(task, best);
        EvaluationOptions opt;
        opt.wavepacket = make_wavepacket(c, true);
        std::ostringstream csv;
        csv << "V [dimensionless],F_offline [dimensionless],eta_offline [dimensionless]";
        if (online) csv << ",F_online [dimensionless],eta_online [dimensionless],online_best_trial [index]";
        csv << '\n';
        for (double v : curve) {
            const auto rep = evaluate(spec, best_task, v, opt);
            csv << format_double(v) << ',' << format_double(rep.fidelity) << ',' << format_double(rep.efficiency);
            if (online) {
                TrainConfig tv = tc;
                tv.visibility = v;
                const auto recs = optimize(task, tv);
                const auto& b = best_record(recs);
                csv << ',' << format_double(b.fidelity) << ',' << format_double(b.efficiency) << ',' << b.trial;
                run.log << "online V=" << format_double(v) << " F=" << format_double(b.fidelity) << "\n";
            }
            csv << '\n';
        }
        write_text_file(run.out / "fidelity_vs_visibility.csv", csv.str());
    }
    return 0;
}

int cmd_evaluate(const Run& run, const Config& c) {
    const Model m = load_model(c);
    const Evaluation e = make_evaluation(c);
    const double v = make_visibility(c);
    const auto curve = visibilities(c, "curve.visibilities");
    write_manifest(run, c, 0);
    const EvaluationReport rep = run_evaluation(m.spec, m.task, v, e);
    Json j = report_to_json(rep);
    j["model"] = m.source;
    write_json_file(run.out / "report.json", j);
    write_text_file(run.out / "hinton.csv", hinton_csv(rep));
    run.log << "F=" << format_double(rep.fidelity) << " eta=" << format_double(rep.efficiency) << " n_t=" << rep.n_t
            << " alpha=" << format_double(rep.alpha) << " r=" << format_double(rep.rate * 1e6) << " kHz\n";
    if (!curve.empty()) {
        std::ostringstream csv;
        csv << "V [dimensionless],F [dimensionless],F_ensemble [dimensionless],eta [dimensionless],r [GHz]\n";
        for (double x : curve) {
            const auto r = run_evaluation(m.spec, m.task, x, e);
            csv << format_double(x) << ',' << format_double(r.fidelity) << ',' << format_double(r.ensemble_fidelity) << ','
                << format_double(r.efficiency) << ',' << format_double(r.rate) << '\n';
        }
        write_text_file(run.out / "fidelity_vs_visibility.csv", csv.str());
    }
    return 0;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string occupation_tag(const Occupation& o) {
    std::string s;
    for (int i = 0; i < static_cast<int>(o.size()); ++i)
        for (int k = 0; k < o[i]; ++k) s += (s.empty() ? "" : "_") + std::to_string(i);
    return s;
}

int cmd_filter_scan(const Run& run, const Config& c) {
    const Model m = load_model(c);
    if (m.spec.nonlinearity.kind != NonlinearityKind::QuantumDot || m.task.kind != TaskKind::Bsa)
        bad("model", "filter-scan needs a QD network trained on the bsa task");
    std::vector<double> fractions = c.get<std::vector<double>>("filter.fractions", {});
    if (fractions.empty())
        for (int i = 0; i < 20; ++i) fractions.push_back(0.05 * i);
    for (double f : fractions)
        if (!(f >= 0.0 && f < 1.0)) bad("filter.fractions", "entries must lie in [0, 1)");
    const bool grids = c.get<bool>("filter.export_grids", true);
    const auto wp = make_wavepacket(c, true);
    write_manifest(run, c, 0);

    const GateOutputs g = gate_outputs(m.spec, m.task, wp);
    const std::vector<ScanPoint> scan = filter_scan(g, fractions);
    std::ostringstream csv;
    csv << "f [fraction of peak],F [dimensionless],eta [dimensionless],F_per_input [dimensionless],window [ns]";
    for (const auto& l : m.task.input_labels) csv << ",eta_" << l << " [dimensionless]";
    csv << '\n';
    bool monotone = true;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        const auto& p = scan[i];
        csv << format_double(p.fraction) << ',' << format_double(p.metrics.fidelity) << ','
            << format_double(p.metrics.efficiency) << ',' << format_double(p.metrics.fidelity_per_input) << ','
            << format_double(p.mean_window);
        for (double a : p.metrics.any) csv << ',' << format_double(a);
        csv << '\n';
        if (i > 0 && scan[i].fraction >= scan[i - 1].fraction && p.metrics.efficiency > scan[i - 1].metrics.efficiency)
            monotone = false;
    }
    write_text_file(run.out / "filter_scan.csv", csv.str());

    auto best = std::max_element(scan.begin(), scan.end(),
                                 [](const ScanPoint& a, const ScanPoint& b) { return a.metrics.fidelity < b.metrics.fidelity; });
    std::vector<double> mask_fractions = c.get<std::vector<double>>("filter.mask_fractions", {best->fraction});
    fs::create_directories(run.out / "masks");
    for (double f : mask_fractions) {
        if (!(f >= 0.0 && f < 1.0)) bad("filter.mask_fractions", "entries must lie in [0, 1)");
        for (const auto& mask : build_masks(g, f))
            write_text_file(run.out / "masks" / ("mask_f" + short_number(f) + "_" + occupation_tag(g.outcomes[mask.outcome]) + ".csv"),
                            mask_csv(mask));
    }
    if (grids) {
        fs::create_directories(run.out / "grids");
        Json index = Json::array();
        for (std::size_t a = 0; a < g.outcomes.size(); ++a) {
            const std::string name = "outcome_" + occupation_tag(g.outcomes[a]) + ".bin";
            write_grid(run.out / "grids" / name, g.grid, g.density[g.owner[a]][a].cast<Complex>());
            index.push_back({{"file", name},
                             {"outcome", g.outcomes[a]},
                             {"input", m.task.input_labels[g.owner[a]]},
                             {"quantity", "two-time probability density |psi(t1, t2)|^2"},
                             {"M", g.grid.points},
                             {"time_spacing_ns", g.grid.time_spacing()}});
        }
        write_json_file(run.out / "grids" / "index.json", index);
    }
    run.log << "unfiltered F=" << format_double(scan.front().metrics.fidelity) << " eta=" << format_double(scan.front().metrics.efficiency)
            << "; best F=" << format_double(best->metrics.fidelity) << " at f=" << format_double(best->fraction)
            << " eta=" << format_double(best->metrics.efficiency) << "; eta monotone: " << (monotone ? "yes" : "no") << "\n";
    return 0;
}

int cmd_visibility_sweep(const Run& run, const Config& c) {
    JitterModel base = make_jitter(c);
    auto sweep = c.get<std::vector<double>>("sweep.sigma_j", {});
    if (sweep.empty())
        for (int i = 0; i <= 20; ++i) sweep.push_back(0.2 * i * base.sigma_p);
    for (double s : sweep)
        if (!(s >= 0.0)) bad("sweep.sigma_j", "entries must be non-negative");
    write_manifest(run, c, base.seed);
    std::ostringstream csv;
    csv << "sigma_j [ns],V [dimensionless],V_stderr [dimensionless],F_in [dimensionless]\n";
    for (double s : sweep) {
        JitterModel m = base;
        m.sigma_j = s;
        const auto est = visibility_estimate(m);
        csv << format_double(s) << ',' << format_double(est.mean) << ',' << format_double(est.stderr_) << ','
            << format_double(input_fidelity(est.mean)) << '\n';
    }
    write_text_file(run.out / "visibility_sweep.csv", csv.str());
    run.log << "wrote " << sweep.size() << " points\n";
    return 0;
}

int cmd_calibrate_loss(const Run& run, const Config& c) {
    LossPresetDb db;
    db.mzi_db = in_range(c, "loss.preset.mzi_db", db.mzi_db, 0.0, INFINITY);
    db.switch_db = in_range(c, "loss.preset.switch_db", db.switch_db, 0.0, INFINITY);
    db.ps_db = in_range(c, "loss.preset.ps_db", db.ps_db, 0.0, INFINITY);
    db.chip_db = in_range(c, "loss.preset.chip_db", db.chip_db, 0.0, INFINITY);
    db.fiber_db_per_km = in_range(c, "loss.preset.fiber_db_per_km", db.fiber_db_per_km, 0.0, INFINITY);
    const double target = in_range(c, "loss.target_alpha", 0.36, 0.0, 1.0, true);
    const auto name = c.get<std::string>("loss.name", "calibrated");
    const int n = at_least(c, "N", 6, 4);
    const int l = at_least(c, "L", 1, 1);
    const int b = at_least(c, "buffer", 0, 0);
    const double tau_b = positive(c, "tau_b", 10.0);
    write_manifest(run, c, 0);
    const LossCalibration cal = calibrate_loss(db, n, l, b, target, tau_b);
    write_json_file(run.out / "loss_preset.json",
                    {{"name", name},
                     {"N", n},
                     {"L", l},
                     {"buffer", b},
                     {"target_alpha", target},
                     {"alpha", cal.alpha},
                     {"scale", cal.scale},
                     {"preset_db", {{"mzi_db", db.mzi_db}, {"switch_db", db.switch_db}, {"ps_db", db.ps_db}, {"chip_db", db.chip_db}, {"fiber_db_per_km", db.fiber_db_per_km}}},
                     {"budget", budget_to_json(cal.budget)}});
    run.log << "preset '" << name << "' scale=" << format_double(cal.scale) << " alpha=" << format_double(cal.alpha) << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator and trainer for time-bin quantum photonic neural networks"};
    app.require_subcommand(1);
    std::string config_path, out_dir = ".", input;
    std::optional<std::uint64_t> seed;
    int threads = 1, buffer = 0;
    auto common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "experiment configuration (JSON)");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override train.seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* decompose = app.add_subcommand("decompose", "decompose a unitary (JSON matrix) into a mesh plan");
    common(decompose, false);
    decompose->add_option("unitary", input, "unitary JSON file")->required();
    auto* schedule = app.add_subcommand("schedule", "compile and verify the loop control schedule of a plan");
    common(schedule, false);
    schedule->add_option("plan", input, "plan or spec JSON file")->required();
    schedule->add_option("--buffer", buffer, "buffer timesteps between layers");
    std::vector<std::pair<std::string, CLI::App*>> configured;
    for (const char* name : {"train", "evaluate", "filter-scan", "visibility-sweep", "calibrate-loss"}) {
        auto* sub = app.add_subcommand(name);
        common(sub, true);
        configured.emplace_back(name, sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        fs::create_directories(out_dir);
        if (decompose->parsed()) return cmd_decompose({"decompose", out_dir, out}, input);
        if (schedule->parsed()) return cmd_schedule({"schedule", out_dir, out}, input, buffer);
        const fs::path cfg_path = config_path;
        Config c(read_json_file(cfg_path), cfg_path.parent_path());
        if (seed) {
            if (!c.json().contains("train")) c.json()["train"] = Json::object();
            c.json()["train"]["seed"] = *seed;
        }
        for (auto& [name, sub] : configured) {
            if (!sub->parsed()) continue;
            const Run run{name, out_dir, out};
            if (name == "train") return cmd_train(run, c, threads);
            if (name == "evaluate") return cmd_evaluate(run, c);
            if (name == "filter-scan") return cmd_filter_scan(run, c);
            if (name == "visibility-sweep") return cmd_visibility_sweep(run, c);
            return cmd_calibrate_loss(run, c);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const VerificationError& e) {
        err << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace qpnn
