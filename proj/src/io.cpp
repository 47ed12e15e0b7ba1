#include "qpnn/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace qpnn {

namespace {

template <typename T>
T field(const Json& j, const char* name) {
    if (!j.contains(name)) throw ValidationError(std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("field '") + name + "' has the wrong type");
    }
}

const char* kind_name(MziKind k) {
    switch (k) {
        case MziKind::Apply: return "APPLY";
        case MziKind::Bar: return "BAR";
        case MziKind::Cross: return "CROSS";
    }
    return "?";
}

MziKind kind_from(const std::string& s) {
    if (s == "APPLY") return MziKind::Apply;
    if (s == "BAR") return MziKind::Bar;
    if (s == "CROSS") return MziKind::Cross;
    throw ValidationError("unknown MZI control '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json matrix_to_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

ComplexMatrix matrix_from_json(const Json& j) {
    auto read_rows = [](const Json& rows, auto&& entry) {
        if (!rows.is_array() || rows.empty()) throw ValidationError("matrix: expected a non-empty array of rows");
        const std::size_t n = rows.size();
        const std::size_t m = rows[0].is_array() ? rows[0].size() : 0;
        ComplexMatrix out(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows[i].is_array() || rows[i].size() != m) throw ValidationError("matrix: rows have different lengths");
            for (std::size_t k = 0; k < m; ++k) out(i, k) = entry(rows[i][k]);
        }
        return out;
    };
    if (j.is_object()) {
        if (!j.contains("real")) throw ValidationError("matrix: missing 'real'");
        auto re = read_rows(j.at("real"), [](const Json& x) { return Complex(x.get<double>(), 0.0); });
        if (!j.contains("imag")) return re;
        auto im = read_rows(j.at("imag"), [](const Json& x) { return Complex(x.get<double>(), 0.0); });
        if (im.rows() != re.rows() || im.cols() != re.cols()) throw ValidationError("matrix: real/imag shape mismatch");
        return re + kI * im;
    }
    return read_rows(j, [](const Json& x) {
        if (x.is_number()) return Complex(x.get<double>(), 0.0);
        if (x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number())
            return Complex(x[0].get<double>(), x[1].get<double>());
        throw ValidationError("matrix: entries must be numbers or [re, im] pairs");
    });
}

Json plan_to_json(const MeshPlan& plan) {
    Json p = Json::array();
    for (const auto& pl : plan.placements)
        p.push_back({{"column", pl.column}, {"mode", pl.mode}, {"theta", pl.setting.theta}, {"phi", pl.setting.phi}});
    return {{"N", plan.num_modes},
            {"placements", p},
            {"delta", std::vector<double>(plan.output_phases.data(), plan.output_phases.data() + plan.output_phases.size())}};
}

MeshPlan plan_from_json(const Json& j, bool validate) {
    MeshPlan plan;
    plan.num_modes = field<int>(j, "N");
    for (const auto& p : field<Json>(j, "placements"))
        plan.placements.push_back({field<int>(p, "column"), field<int>(p, "mode"), {field<double>(p, "theta"), field<double>(p, "phi")}});
    const auto d = field<std::vector<double>>(j, "delta");
    plan.output_phases = Eigen::Map<const RealVector>(d.data(), static_cast<Eigen::Index>(d.size()));
    if (validate) validate_plan(plan);
    return plan;
}

Json nonlinearity_to_json(const Nonlinearity& nl) {
    switch (nl.kind) {
        case NonlinearityKind::None: return {{"kind", "none"}};
        case NonlinearityKind::Kerr: return {{"kind", "kerr"}, {"phase", nl.kerr_phase}};
        case NonlinearityKind::QuantumDot:
            return {{"kind", "qd"}, {"tau_qd", nl.tau_qd}, {"detunings", nl.detunings}};
    }
    return {};
}

Nonlinearity nonlinearity_from_json(const Json& j) {
    const auto kind = field<std::string>(j, "kind");
    if (kind == "none") return Nonlinearity::none();
    if (kind == "kerr") return Nonlinearity::kerr(j.value("phase", kPi));
    if (kind == "qd")
        return Nonlinearity::quantum_dot(j.value("tau_qd", 1.0), j.value("detunings", std::vector<double>{}));
    throw ValidationError("nonlinearity.kind must be one of none, kerr, qd (got '" + kind + "')");
}

Json spec_to_json(const NetworkSpec& spec) {
    Json layers = Json::array();
    for (const auto& p : spec.layers) layers.push_back(plan_to_json(p));
    return {{"N", spec.num_modes}, {"buffer", spec.buffer}, {"nonlinearity", nonlinearity_to_json(spec.nonlinearity)},
            {"layers", layers}};
}

NetworkSpec spec_from_json(const Json& j) {
    NetworkSpec s;
    s.num_modes = field<int>(j, "N");
    s.buffer = j.value("buffer", 1);
    s.nonlinearity = nonlinearity_from_json(field<Json>(j, "nonlinearity"));
    for (const auto& p : field<Json>(j, "layers")) s.layers.push_back(plan_from_json(p));
    s.validate();
    return s;
}

Json assignment_to_json(const OutcomeAssignment& a) {
    Json sets = Json::array();
    for (const auto& set : a.per_bell) {
        Json s = Json::array();
        for (auto [i, k] : set) s.push_back({i, k});
        sets.push_back(s);
    }
    return {{"N", a.num_modes}, {"seed", a.seed}, {"outcomes", sets}};
}

OutcomeAssignment assignment_from_json(const Json& j) {
    OutcomeAssignment a;
    a.num_modes = field<int>(j, "N");
    a.seed = field<std::uint64_t>(j, "seed");
    for (const auto& set : field<Json>(j, "outcomes")) {
        std::vector<std::pair<int, int>> v;
        for (const auto& p : set) v.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        a.per_bell.push_back(v);
    }
    return a;
}

Json schedule_to_json(const Schedule& s) {
    Json steps = Json::array();
    for (const auto& st : s.steps) {
        steps.push_back({{"t", st.t},
                         {"mzi", kind_name(st.mzi.kind)},
                         {"layer", st.mzi.layer},
                         {"column", st.mzi.column},
                         {"mode_i", st.mzi.mode_i},
                         {"mode_j", st.mzi.mode_j},
                         {"theta", st.mzi.setting.theta},
                         {"phi", st.mzi.setting.phi},
                         {"lower_in_top", st.mzi.lower_in_top},
                         {"lower_out_top", st.mzi.lower_out_top},
                         {"s2_in", st.s2.couple_in},
                         {"s2_out", st.s2.couple_out},
                         {"in_layer", st.s2.in_layer},
                         {"out_layer", st.s2.out_layer},
                         {"ps", st.ps},
                         {"route", st.route == Route::Traverse ? "TRAVERSE" : "BYPASS"}});
    }
    return {{"N", s.geometry.num_modes}, {"buffer", s.buffer}, {"layers", s.num_layers()},
            {"n_t", s.n_t}, {"layer_offsets", s.layer_offsets}, {"steps", steps}};
}

std::string schedule_table(const Schedule& s) {
    std::ostringstream out;
    out << "# N=" << s.geometry.num_modes << " buffer=" << s.buffer << " layers=" << s.num_layers() << " n_t=" << s.n_t
        << " offsets=";
    for (std::size_t i = 0; i < s.layer_offsets.size(); ++i) out << (i ? "," : "") << s.layer_offsets[i];
    out << "\n# t mzi layer column mode_i mode_j theta phi in_top out_top s2_in s2_out in_layer out_layer ps route\n";
    for (const auto& st : s.steps) {
        out << st.t << ' ' << kind_name(st.mzi.kind) << ' ' << st.mzi.layer << ' ' << st.mzi.column << ' '
            << st.mzi.mode_i << ' ' << st.mzi.mode_j << ' ' << format_double(st.mzi.setting.theta) << ' '
            << format_double(st.mzi.setting.phi) << ' ' << st.mzi.lower_in_top << ' ' << st.mzi.lower_out_top << ' '
            << st.s2.couple_in << ' ' << st.s2.couple_out << ' ' << st.s2.in_layer << ' ' << st.s2.out_layer << ' '
            << format_double(st.ps) << ' ' << (st.route == Route::Traverse ? "TRAVERSE" : "BYPASS") << '\n';
    }
    return out.str();
}

Schedule parse_schedule_table(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# N=", 0) != 0) throw ValidationError("schedule table: missing header");
    Schedule s;
    int n = 0, layers = 0;
    std::string offsets;
    if (std::sscanf(line.c_str(), "# N=%d buffer=%d layers=%d n_t=%d", &n, &s.buffer, &layers, &s.n_t) != 4)
        throw ValidationError("schedule table: malformed header");
    const auto pos = line.find("offsets=");
    if (pos == std::string::npos) throw ValidationError("schedule table: header lacks offsets");
    std::istringstream os(line.substr(pos + 8));
    for (std::string tok; std::getline(os, tok, ',');)
        if (!tok.empty()) s.layer_offsets.push_back(std::stoi(tok));
    s.geometry = LoopGeometry::for_modes(n);
    s.plans.assign(layers, MeshPlan{n, {}, RealVector::Zero(n)});
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        ScheduleStep st;
        std::string kind, theta, phi, ps, route;
        int in_top = 0, out_top = 0;
        ls >> st.t >> kind >> st.mzi.layer >> st.mzi.column >> st.mzi.mode_i >> st.mzi.mode_j >> theta >> phi >> in_top >>
            out_top >> st.s2.couple_in >> st.s2.couple_out >> st.s2.in_layer >> st.s2.out_layer >> ps >> route;
        if (!ls) throw ValidationError("schedule table: malformed row '" + line + "'");
        st.mzi.kind = kind_from(kind);
        st.mzi.setting = {std::stod(theta), std::stod(phi)};
        st.mzi.lower_in_top = in_top != 0;
        st.mzi.lower_out_top = out_top != 0;
        st.ps = std::stod(ps);
        if (route != "TRAVERSE" && route != "BYPASS") throw ValidationError("schedule table: unknown route " + route);
        st.route = route == "TRAVERSE" ? Route::Traverse : Route::Bypass;
        if (st.mzi.kind == MziKind::Apply) {
            if (st.mzi.layer < 0 || st.mzi.layer >= layers) throw ValidationError("schedule table: APPLY outside the layers");
            s.plans[st.mzi.layer].placements.push_back({st.mzi.column, st.mzi.mode_i - 1, st.mzi.setting});
        }
        if (st.s2.couple_out >= 1 && st.s2.couple_out <= n && st.s2.out_layer >= 0 && st.s2.out_layer < layers)
            s.plans[st.s2.out_layer].output_phases(st.s2.couple_out - 1) = st.ps;
        s.steps.push_back(st);
    }
    for (auto& p : s.plans) {
        std::sort(p.placements.begin(), p.placements.end(), [](const Placement& a, const Placement& b) {
            return std::tie(a.column, a.mode) < std::tie(b.column, b.mode);
        });
        validate_plan(p);
    }
    return s;
}

Json report_to_json(const EvaluationReport& r) {
    Json inputs = Json::array();
    for (const auto& in : r.inputs)
        inputs.push_back({{"label", in.label},
                          {"fidelity", in.fidelity},
                          {"efficiency", in.efficiency},
                          {"input_fidelity", in.input_fidelity},
                          {"conditional_fidelity", in.conditional_fidelity}});
    return {{"task", r.task},
            {"V", r.visibility},
            {"F", r.fidelity},
            {"F_ensemble", r.ensemble_fidelity},
            {"eta", r.efficiency},
            {"C_avg", r.scaled_cost},
            {"C_unscaled", r.cost},
            {"alpha", r.alpha},
            {"n_t", r.n_t},
            {"tau_b", r.tau_b},
            {"r", r.rate},
            {"r_unit", "GHz"},
            {"inputs", inputs}};
}

std::string hinton_csv(const EvaluationReport& r) {
    std::ostringstream out;
    out << "input";
    for (const auto& l : r.logical_labels) out << ",p_" << l << " [probability]";
    out << '\n';
    for (const auto& in : r.inputs) {
        out << in.label;
        for (double p : in.logical_probabilities) out << ',' << format_double(p);
        out << '\n';
    }
    return out.str();
}

Json record_to_json(const TrainRecord& r) {
    Json j = {{"trial", r.trial},
              {"seed", r.seed},
              {"status", r.status},
              {"costs", r.costs},
              {"best_costs", r.best_costs},
              {"final_cost", r.final_cost},
              {"F", r.fidelity},
              {"eta", r.efficiency},
              {"F_training_grid", r.fidelity_training_grid},
              {"parameters", std::vector<double>(r.parameters.data(), r.parameters.data() + r.parameters.size())}};
    if (r.assignment) j["assignment"] = assignment_to_json(*r.assignment);
    return j;
}

TrainRecord record_from_json(const Json& j) {
    TrainRecord r;
    r.trial = field<int>(j, "trial");
    r.seed = field<std::uint64_t>(j, "seed");
    r.status = field<std::string>(j, "status");
    r.costs = field<std::vector<double>>(j, "costs");
    r.best_costs = field<std::vector<double>>(j, "best_costs");
    // non-finite values are stored as null
    auto number = [&](const char* name) { return j.contains(name) && j.at(name).is_null() ? NAN : field<double>(j, name); };
    r.final_cost = number("final_cost");
    r.fidelity = number("F");
    r.efficiency = number("eta");
    r.fidelity_training_grid = number("F_training_grid");
    const auto p = field<std::vector<double>>(j, "parameters");
    r.parameters = Eigen::Map<const RealVector>(p.data(), static_cast<Eigen::Index>(p.size()));
    if (j.contains("assignment")) r.assignment = assignment_from_json(j.at("assignment"));
    return r;
}

Json budget_to_json(const LossBudget& b) {
    return {{"alpha_mzi", b.alpha_mzi},       {"alpha_switch", b.alpha_switch},
            {"alpha_ps", b.alpha_ps},         {"alpha_chip", b.alpha_chip},
            {"fiber_attenuation", b.fiber_attenuation}, {"group_velocity", b.group_velocity},
            {"tau_b", b.tau_b}};
}

LossBudget budget_from_json(const Json& j) {
    LossBudget b;
    b.alpha_mzi = j.value("alpha_mzi", 0.0);
    b.alpha_switch = j.value("alpha_switch", 0.0);
    b.alpha_ps = j.value("alpha_ps", 0.0);
    b.alpha_chip = j.value("alpha_chip", 0.0);
    b.fiber_attenuation = j.value("fiber_attenuation", 0.0);
    b.group_velocity = j.value("group_velocity", b.group_velocity);
    b.tau_b = j.value("tau_b", b.tau_b);
    b.validate();
    return b;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host required");
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError("grid file is truncated");
    return v;
}

}  // namespace

void write_grid(const std::filesystem::path& path, const FrequencyGrid& grid, const ComplexMatrix& values) {
    if (values.rows() != grid.points || values.cols() != grid.points)
        throw ValidationError("write_grid: values do not match the grid");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    put<std::int64_t>(out, grid.points);
    put<double>(out, grid.spacing());
    put<double>(out, grid.center);
    for (int i = 0; i < grid.points; ++i)
        for (int j = 0; j < grid.points; ++j) {
            put<double>(out, values(i, j).real());
            put<double>(out, values(i, j).imag());
        }
}

TwoPhotonAmplitude read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    const auto m = get<std::int64_t>(in);
    const double spacing = get<double>(in);
    const double center = get<double>(in);
    if (m < 1 || m > (1 << 16)) throw ValidationError("grid file: implausible size");
    TwoPhotonAmplitude a{FrequencyGrid{center, 0.5 * spacing * m, static_cast<int>(m)}, ComplexMatrix(m, m)};
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double re = get<double>(in);
            a.values(i, j) = Complex(re, get<double>(in));
        }
    return a;
}

std::string mask_csv(const FilterMask& mask) {
    std::ostringstream out;
    for (int i = 0; i < mask.region.rows(); ++i) {
        for (int j = 0; j < mask.region.cols(); ++j) out << (j ? "," : "") << (mask.region(i, j) ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace qpnn
