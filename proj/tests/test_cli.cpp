#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "qpnn/cli.hpp"
#include "qpnn/io.hpp"
#include "qpnn/random.hpp"

using namespace qpnn;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "qpnn");
    std::vector<const char*> argv;
    for (auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("qpnn_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string path_arg(const fs::path& p) { return p.string(); }

}  // namespace

TEST_CASE("cli decompose") {
    const fs::path dir = scratch("decompose");
    write_json_file(dir / "id.json", matrix_to_json(ComplexMatrix::Identity(4, 4)));
    auto r = run({"decompose", path_arg(dir / "id.json"), "--out", path_arg(dir / "a")});
    REQUIRE(r.code == 0);
    const MeshPlan plan = plan_from_json(read_json_file(dir / "a" / "plan.json"));
    const MeshPlan bars = bar_plan(4);
    for (std::size_t i = 0; i < plan.placements.size(); ++i) {
        CHECK(std::abs(wrap_angle(plan.placements[i].setting.theta - bars.placements[i].setting.theta)) < 1e-12);
        CHECK(std::abs(wrap_angle(plan.placements[i].setting.phi - bars.placements[i].setting.phi)) < 1e-12);
    }

    ComplexMatrix dft(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) dft(i, k) = std::polar(1.0 / std::sqrt(3.0), kTwoPi * i * k / 3.0);
    write_json_file(dir / "dft.json", {{"matrix", matrix_to_json(dft)}});
    r = run({"decompose", path_arg(dir / "dft.json"), "--out", path_arg(dir / "b")});
    REQUIRE(r.code == 0);
    CHECK((reconstruct(plan_from_json(read_json_file(dir / "b" / "plan.json"))) - dft).norm() < 1e-9);

    write_json_file(dir / "bad.json", Json::parse("[[1, 1], [0, 1]]"));
    r = run({"decompose", path_arg(dir / "bad.json"), "--out", path_arg(dir / "c")});
    CHECK(r.code == 1);
    CHECK(r.err.find("not unitary") != std::string::npos);
}

TEST_CASE("cli schedule") {
    const fs::path dir = scratch("schedule");
    write_json_file(dir / "cnot.json", plan_to_json(clements_decompose(linear_cnot_unitary())));
    auto r = run({"schedule", path_arg(dir / "cnot.json"), "--out", path_arg(dir / "a")});
    CHECK(r.code == 0);
    CHECK(r.out.find("first_mode_span=28") != std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
    const Schedule s = parse_schedule_table(slurp(dir / "a" / "schedule.txt"));
    CHECK((simulate_schedule(s) - linear_cnot_unitary()).norm() < 1e-10);

    std::mt19937_64 rng(8);
    write_json_file(dir / "five.json", plan_to_json(random_plan(5, rng)));
    r = run({"schedule", path_arg(dir / "five.json"), "--out", path_arg(dir / "b")});
    CHECK(r.code == 0);
    CHECK(r.out.find("first_mode_span=21") != std::string::npos);

    Json corrupt = read_json_file(dir / "cnot.json");
    corrupt["placements"][3] = corrupt["placements"][2];
    write_json_file(dir / "corrupt.json", corrupt);
    r = run({"schedule", path_arg(dir / "corrupt.json"), "--out", path_arg(dir / "c")});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("FAIL", 0) == 0);
    CHECK(r.err.find("t=") != std::string::npos);
}

TEST_CASE("cli evaluate reports the linear CNOT rate") {
    const fs::path dir = scratch("evaluate");
    write_json_file(dir / "cfg.json", {{"task", "linear_cnot"}, {"loss", {{"alpha", 0.36}}}, {"n_t", 28},
                                       {"curve", {{"visibilities", {0.0, 0.5, 1.0}}}}});
    auto r = run({"evaluate", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "a")});
    REQUIRE(r.code == 0);
    const Json rep = read_json_file(dir / "a" / "report.json");
    CHECK(rep.at("r").get<double>() * 1e6 == doctest::Approx(254.0).epsilon(1.0 / 254));
    CHECK(rep.at("F").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.at("eta").get<double>() == doctest::Approx(1.0 / 9).epsilon(1e-9));
    CHECK(rep.at("n_t").get<int>() == 28);
    const std::string csv = slurp(dir / "a" / "fidelity_vs_visibility.csv");
    CHECK(csv.find("[dimensionless]") != std::string::npos);
    CHECK(slurp(dir / "a" / "hinton.csv").rfind("input,", 0) == 0);
}

TEST_CASE("cli visibility sweep") {
    const fs::path dir = scratch("sweep");
    write_json_file(dir / "cfg.json", {{"jitter", {{"sigma_p", 1.0}, {"n_samples", 200}}}, {"sweep", {{"sigma_j", {0.0, 1.0}}}}});
    auto r = run({"visibility-sweep", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "a")});
    REQUIRE(r.code == 0);
    std::istringstream csv(slurp(dir / "a" / "visibility_sweep.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header.find("sigma_j [ns]") != std::string::npos);
    CHECK(row.rfind("0,1,", 0) == 0);
}

TEST_CASE("cli train is reproducible and finds the CNOT") {
    const fs::path dir = scratch("train");
    write_json_file(dir / "cfg.json", {{"task", "cnot"}, {"train", {{"epochs", 250}, {"trials", 3}}}});
    auto a = run({"train", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "a"), "--seed", "5"});
    auto b = run({"train", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "b"), "--seed", "5", "--threads", "2"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(slurp(dir / "a" / "records.jsonl") == slurp(dir / "b" / "records.jsonl"));
    CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
    const Json manifest = read_json_file(dir / "a" / "manifest.json");
    CHECK(manifest.at("seed").get<std::uint64_t>() == 5);
    CHECK(manifest.at("config_hash").get<std::string>().size() == 16);

    double best = 0.0;
    std::istringstream lines(slurp(dir / "a" / "records.jsonl"));
    for (std::string line; std::getline(lines, line);) best = std::max(best, record_from_json(Json::parse(line)).fidelity);
    CHECK(best > 0.999);

    auto c = run({"train", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "c"), "--seed", "6"});
    CHECK(read_json_file(dir / "c" / "manifest.json").at("config_hash") != manifest.at("config_hash"));
}

TEST_CASE("cli filter scan on a small QD model") {
    const fs::path dir = scratch("filter");
    const Json cfg = {{"task", "bsa"}, {"N", 4}, {"L", 2}, {"train", {{"epochs", 20}, {"trials", 1}}},
                      {"grid", {{"M", 64}, {"M_eval", 64}}}, {"filter", {{"fractions", {0.0, 0.3, 0.6}}}}};
    write_json_file(dir / "cfg.json", cfg);
    REQUIRE(run({"train", "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "t")}).code == 0);
    Json scan_cfg = cfg;
    scan_cfg["model"] = (dir / "t" / "records.jsonl").string();
    write_json_file(dir / "scan.json", scan_cfg);
    auto r = run({"filter-scan", "--config", path_arg(dir / "scan.json"), "--out", path_arg(dir / "f")});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eta monotone: yes") != std::string::npos);
    CHECK(fs::exists(dir / "f" / "filter_scan.csv"));
    CHECK(fs::exists(dir / "f" / "grids" / "index.json"));
    const Json index = read_json_file(dir / "f" / "grids" / "index.json");
    CHECK(index.size() == 4);
    CHECK(read_grid(dir / "f" / "grids" / index[0].at("file").get<std::string>()).grid.points == 64);
}

TEST_CASE("cli config errors name the field") {
    const fs::path dir = scratch("errors");
    auto check = [&](const Json& cfg, const std::string& command, const std::string& field) {
        write_json_file(dir / "cfg.json", cfg);
        auto r = run({command, "--config", path_arg(dir / "cfg.json"), "--out", path_arg(dir / "x")});
        CHECK(r.code == 1);
        CHECK_MESSAGE(r.err.find("'" + field + "'") != std::string::npos, r.err);
    };
    check({{"task", "cnot"}, {"train", {{"epochs", 0}}}}, "train", "train.epochs");
    check({{"task", "cnot"}, {"train", {{"trials", "many"}}}}, "train", "train.trials");
    check({{"task", "linear_cnot"}, {"loss", {{"alpha", 1.5}}}}, "evaluate", "loss.alpha");
    check({{"task", "teleport"}}, "train", "task");
    check({{"taks", "cnot"}}, "train", "taks");
    check({{"task", "bsa"}, {"N", 3}}, "train", "N");
    check({{"task", "cnot"}, {"visibility", 1.2}}, "train", "visibility");
    check({{"task", "bsa"}, {"model", "missing.json"}}, "evaluate", "model");
    check({{"jitter", {{"sigma_p", -1.0}}}}, "visibility-sweep", "jitter.sigma_p");
    CHECK(run({"train"}).code == 1);
    CHECK(run({"bogus"}).code == 1);
}
