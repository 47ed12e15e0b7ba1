#include <doctest.h>

#include <random>

#include "qpnn/engine.hpp"
#include "qpnn/random.hpp"

using namespace qpnn;

namespace {

NetworkSpec random_spec(int n, int layers, Nonlinearity nl, std::mt19937_64& rng) {
    NetworkSpec s{n, {}, std::move(nl), 1};
    for (int l = 0; l < layers; ++l) s.layers.push_back(random_plan(n, rng));
    return s;
}

NetworkSpec linear_cnot_spec() { return {6, {clements_decompose(linear_cnot_unitary())}, Nonlinearity::none(), 0}; }

}  // namespace

TEST_CASE("linear cnot unitary implements the gate with success 1/9") {
    const auto task = linear_cnot_task();
    ComplexMatrix u = linear_cnot_unitary();
    CHECK(unitarity_residual(u) < 1e-14);
    ComplexMatrix phi = lift(u, task.basis);
    for (int k = 0; k < 4; ++k) {
        ComplexVector out = phi * task.inputs[k].amplitudes;
        CHECK(std::abs(out.dot(task.targets[k].state)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        for (int j = 0; j < 4; ++j) {
            ComplexVector other = fock_state(task.basis, task.cb.logical_states[j].occupations[0]).amplitudes;
            if ((other - task.targets[k].state).norm() > 0.5) CHECK(std::abs(out.dot(other)) < 1e-12);
        }
    }
}

TEST_CASE("linear cnot fidelity versus visibility") {
    const auto spec = linear_cnot_spec();
    const auto task = linear_cnot_task();
    auto r1 = evaluate(spec, task, 1.0);
    CHECK(r1.fidelity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r1.efficiency == doctest::Approx(1.0 / 9.0).epsilon(1e-9));
    CHECK(r1.n_t == 28);
    CHECK(evaluate(spec, task, 0.5).fidelity == doctest::Approx(0.75).epsilon(0.01));
    CHECK(evaluate(spec, task, 0.0).fidelity == doctest::Approx(0.67).epsilon(0.01));
    // Efficiency rises as photons become distinguishable.
    CHECK(evaluate(spec, task, 0.0).efficiency > r1.efficiency);
    // F equals the fidelity of the renormalised logical block for each input at V = 1.
    for (const auto& in : r1.inputs) CHECK(in.conditional_fidelity == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("operational rates") {
    CHECK(operational_rate(1.0 / 9.0, 0.0, 28, 10.0) * 1e6 == doctest::Approx(396.825).epsilon(1e-6));
    CHECK(operational_rate(1.0 / 9.0, 0.36, 28, 10.0) * 1e6 == doctest::Approx(253.97).epsilon(1e-4));
    CHECK(operational_rate(1.0, 0.0, 58, 10.0) * 1e3 == doctest::Approx(1.7241).epsilon(1e-4));
    CHECK_THROWS_AS(operational_rate(1.0, 0.0, 0, 10.0), ValidationError);
}

TEST_CASE("loss model") {
    CHECK(mzi_traversals(6) == 8);
    CHECK(switch_traversals(6) == 7);
    CHECK(mzi_traversals(5) == 6);
    CHECK_THROWS_AS(switch_traversals(3), ValidationError);
    CHECK(transmissivity(6, 4, 1, LossBudget{}) == 1.0);
    auto cal = calibrate_loss(LossPresetDb{}, 6, 1, 0, 0.36);
    CHECK(cal.alpha == doctest::Approx(0.36).epsilon(1e-12));
    // Monotone in each component and in N.
    LossBudget b = cal.budget;
    double base = transmissivity(6, 2, 1, b);
    for (double LossBudget::*f : {&LossBudget::alpha_mzi, &LossBudget::alpha_switch, &LossBudget::alpha_ps,
                                  &LossBudget::alpha_chip, &LossBudget::fiber_attenuation}) {
        LossBudget worse = b;
        worse.*f = std::min(0.99, worse.*f * 1.5 + 1e-6);
        CHECK(transmissivity(6, 2, 1, worse) <= base);
    }
    for (int n = 4; n < 12; ++n) CHECK(transmissivity(n + 1, 2, 1, b) <= transmissivity(n, 2, 1, b));
    auto spec = linear_cnot_spec();
    EvaluationOptions o;
    auto r = evaluate(spec, linear_cnot_task(), 1.0, cal.budget, o);
    CHECK(r.alpha == doctest::Approx(0.36).epsilon(1e-9));
    CHECK(r.rate * 1e6 == doctest::Approx(254.0).epsilon(1.0 / 254.0));
}

TEST_CASE("system function basics") {
    std::mt19937_64 rng(21);
    auto one = random_spec(4, 1, Nonlinearity::kerr(), rng);
    CHECK((system_function(one) - lift(reconstruct(one.layers[0]), FockBasis(4, 2))).norm() < 1e-12);
    auto two = random_spec(4, 3, Nonlinearity::kerr(0.0), rng);
    CHECK((system_function(two) - lift(linear_product(two), FockBasis(4, 2))).norm() < 1e-10);
    auto kerr = random_spec(5, 3, Nonlinearity::kerr(), rng);
    for (int n : {2, 3}) CHECK(unitarity_residual(system_function(kerr, n)) < 1e-9);
    auto qd = random_spec(4, 2, Nonlinearity::quantum_dot(1.0, {0.0}), rng);
    CHECK_THROWS_AS(system_function(qd), ValidationError);
    qd.nonlinearity.detunings.clear();
    CHECK_THROWS_AS(qd.validate(), ValidationError);
}

TEST_CASE("factored QD paths agree with direct extended propagation") {
    std::mt19937_64 rng(8);
    auto spec = random_spec(4, 3, Nonlinearity::quantum_dot(0.8, {0.3, -0.6}), rng);
    WavepacketSettings wp{1.0, 128};
    FockBasis basis(4, 2);
    auto model = build_model(spec, basis, wp, true);
    auto psi = fock_state(basis, {1, 0, 1, 0});
    psi.amplitudes = 0.6 * psi.amplitudes + 0.8 * fock_state(basis, {0, 2, 0, 0}).amplitudes;
    auto direct = propagate_extended(spec, product_input(psi, model.paths->grid, wp.sigma_p));
    auto factored = expand_paths(basis, *model.paths, chain_forward(model.full, psi.amplitudes));
    double diff = 0.0;
    for (int i = 0; i < basis.size(); ++i) diff += (direct.attachments[i] - factored.attachments[i]).squaredNorm();
    CHECK(std::sqrt(diff) < 1e-10);
    // Traced density matrix matches the attachment overlaps.
    auto rho = output_state(model, psi, 1.0);
    const double w = direct.grid.spacing() * direct.grid.spacing();
    for (int i = 0; i < basis.size(); ++i)
        for (int j = 0; j < basis.size(); ++j) {
            Complex expected = (direct.attachments[i].array() * direct.attachments[j].conjugate().array()).sum() * w;
            CHECK(std::abs(rho.matrix(i, j) - expected) < 1e-10);
        }
    CHECK(rho.trace() == doctest::Approx(direct.norm_squared()).epsilon(1e-10));
    CHECK(std::abs(direct.norm_squared() - 1.0) < 5e-3);
}

TEST_CASE("far-detuned emitters leave the linear network") {
    std::mt19937_64 rng(9);
    auto spec = random_spec(4, 3, Nonlinearity::quantum_dot(1.0, {1e12, -1e12}), rng);
    WavepacketSettings wp{1.0, 64};
    FockBasis basis(4, 2);
    auto psi = fock_state(basis, {0, 1, 1, 0});
    auto grid = wp.grid(1.0);
    auto out = propagate_extended(spec, product_input(psi, grid, 1.0));
    NetworkSpec lin = spec;
    lin.nonlinearity = Nonlinearity::none();
    ComplexVector expected = system_function(lin) * psi.amplitudes;
    ComplexVector g = gaussian_wavepacket(grid, 0.0, 1.0);
    ComplexMatrix gg = g * g.transpose();
    for (int i = 0; i < basis.size(); ++i) CHECK((out.attachments[i] - expected(i) * gg).norm() < 1e-8);
}

TEST_CASE("single QD layer on a doubly occupied mode applies joint scattering") {
    NetworkSpec spec{4, {bar_plan(4), bar_plan(4)}, Nonlinearity::quantum_dot(1.0, {0.0}), 1};
    FockBasis basis(4, 2);
    auto psi = fock_state(basis, {2, 0, 0, 0});
    auto grid = WavepacketSettings{1.0, 64}.grid(1.0);
    auto in = product_input(psi, grid, 1.0);
    auto out = propagate_extended(spec, in);
    const int idx = basis.index_of({2, 0, 0, 0});
    auto expected = scatter_two(TwoPhotonAmplitude{grid, in.attachments[idx]}, {1.0, 0.0});
    CHECK((out.attachments[idx] - expected.values).norm() < 1e-12);
}

TEST_CASE("extended norm through a four-layer six-mode network") {
    std::mt19937_64 rng(10);
    auto spec = random_spec(6, 4, Nonlinearity::quantum_dot(1.0, {0.1, -0.2, 0.3}), rng);
    FockBasis basis(6, 2);
    auto psi = fock_state(basis, {1, 1, 0, 0, 0, 0});
    std::vector<double> errs;
    for (int m : {256, 512}) {
        auto model = build_model(spec, basis, {1.0, m});
        errs.push_back(std::abs(output_state(model, psi, 1.0).trace() - 1.0));
    }
    CHECK(errs[1] < 1e-3);
    CHECK(errs[1] < errs[0]);
}
