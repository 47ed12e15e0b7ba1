#include <doctest.h>

#include <random>

#include "qpnn/timegate.hpp"

using namespace qpnn;

namespace {

struct Fixture {
    NetworkSpec spec;
    TaskDefinition task;
    WavepacketSettings wp{1.0, 128};
    GateOutputs outputs;

    Fixture() {
        std::mt19937_64 rng(12);
        spec = {4, {random_plan(4, rng), random_plan(4, rng)}, Nonlinearity::quantum_dot(1.0, {0.2}), 1};
        task = bsa_task(4, assign_bsa_outcomes(4, 5));
        outputs = gate_outputs(spec, task, wp);
    }
};

}  // namespace

TEST_CASE("two-time distributions conserve the state norm") {
    Fixture fx;
    FockBasis basis(4, 2);
    auto model = build_model(fx.spec, basis, fx.wp, true);
    auto psi = fx.task.inputs[0];
    auto ext = expand_paths(basis, *model.paths, chain_forward(model.full, psi.amplitudes));
    auto dists = two_time_distributions(ext);
    double total = 0.0;
    for (const auto& d : dists) {
        CHECK(d.values.minCoeff() >= 0.0);
        total += d.integral();
    }
    CHECK(total == doctest::Approx(ext.norm_squared()).epsilon(1e-9));
}

TEST_CASE("product Gaussian gives a single blob at the arrival time") {
    FockBasis basis(3, 2);
    auto grid = WavepacketSettings{1.0, 128}.grid(1.0);
    auto ext = product_input(fock_state(basis, {1, 1, 0}), grid, 1.0);
    auto d = two_time_distributions(ext)[basis.index_of({1, 1, 0})];
    Eigen::Index r, c;
    d.values.maxCoeff(&r, &c);
    CHECK(std::abs(grid.time(r)) <= grid.time_spacing());
    CHECK(std::abs(grid.time(c)) <= grid.time_spacing());
    CHECK(d.integral() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("unfiltered metrics reproduce outcome populations") {
    Fixture fx;
    auto model = build_model(fx.spec, fx.task.basis, fx.wp);
    auto m = filtered_metrics(fx.outputs, build_masks(fx.outputs, 0.0));
    for (int k = 0; k < 4; ++k) {
        auto rho = output_state(model, fx.task.inputs[k], 1.0);
        double any = 0.0;
        for (const auto& o : fx.outputs.outcomes) any += population(rho, {o});
        CHECK(m.any[k] == doctest::Approx(any).epsilon(1e-9));
        CHECK(m.correct[k] == doctest::Approx(target_overlap(fx.task.targets[k], rho)).epsilon(1e-9));
    }
}

TEST_CASE("masks nest and the efficiency is monotone") {
    Fixture fx;
    std::vector<double> fs;
    for (int i = 0; i < 40; ++i) fs.push_back(i / 40.0);
    auto scan = filter_scan(fx.outputs, fs);
    for (std::size_t i = 1; i < scan.size(); ++i) {
        CHECK(scan[i].metrics.efficiency <= scan[i - 1].metrics.efficiency);
        for (int k = 0; k < 4; ++k) CHECK(scan[i].metrics.any[k] <= scan[i - 1].metrics.any[k]);
    }
    auto a = build_masks(fx.outputs, 0.2), b = build_masks(fx.outputs, 0.6);
    for (std::size_t o = 0; o < a.size(); ++o) CHECK(((b[o].region && !a[o].region).count()) == 0);
    CHECK(window_extent(fx.outputs.grid, b[0]) <= window_extent(fx.outputs.grid, a[0]));
    CHECK_THROWS_AS(build_masks(fx.outputs, 1.0), ValidationError);
}

TEST_CASE("probability bookkeeping inside the masks") {
    Fixture fx;
    for (double f : {0.1, 0.5, 0.9}) {
        auto masks = build_masks(fx.outputs, f);
        auto m = filtered_metrics(fx.outputs, masks);
        double correct = 0.0, any = 0.0, wrong = 0.0;
        for (int k = 0; k < 4; ++k) {
            correct += m.correct[k];
            any += m.any[k];
            for (const auto& mask : masks)
                if (fx.outputs.owner[mask.outcome] != k)
                    wrong += mask.region.select(fx.outputs.density[k][mask.outcome].array(), 0.0).sum() * fx.outputs.cell();
        }
        CHECK(m.fidelity * any + wrong == doctest::Approx(any).epsilon(1e-9));
        CHECK(correct == doctest::Approx(m.fidelity * any).epsilon(1e-12));
    }
}

TEST_CASE("gating requires a QD BSA") {
    Fixture fx;
    NetworkSpec kerr = fx.spec;
    kerr.nonlinearity = Nonlinearity::kerr();
    CHECK_THROWS_AS(gate_outputs(kerr, fx.task, fx.wp), ValidationError);
}
