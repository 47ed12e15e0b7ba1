#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "qpnn/random.hpp"
#include "qpnn/scheduler.hpp"

using namespace qpnn;

TEST_CASE("loop geometry") {
    auto g5 = LoopGeometry::for_modes(5);
    CHECK(g5.top_capacity == 3);
    CHECK(g5.bottom_capacity == 4);
    CHECK_FALSE(g5.ancilla);
    auto g6 = LoopGeometry::for_modes(6);
    CHECK(g6.top_capacity == 3);
    CHECK(g6.bottom_capacity == 4);
    CHECK(g6.ancilla);
    CHECK(g6.linear_span() == 28);
    CHECK_THROWS_AS(LoopGeometry::for_modes(2), ValidationError);
}

TEST_CASE("schedule reproduces the spatial mesh") {
    std::mt19937_64 rng(2024);
    for (int n = 3; n <= 9; ++n)
        for (int trial = 0; trial < 6; ++trial) {
            MeshPlan plan = random_plan(n, rng);
            for (int b : {0, 1}) {
                Schedule s = compile_schedule(plan, b);
                SimulationReport rep = simulate_schedule_report(s);
                CHECK((rep.unitary - reconstruct(plan)).norm() < 1e-10);
                CHECK(first_mode_span(s) == (n + 1) * (n + 2) / 2 + b);
                CHECK(rep.apply_count == mzi_count(n));
                CHECK(rep.max_top_occupancy <= s.geometry.top_capacity);
                CHECK(rep.max_bottom_occupancy <= s.geometry.bottom_capacity);
                CHECK(rep.exit_order[0] == rep.entry_order[0]);
            }
        }
}

TEST_CASE("every label spans the same number of steps") {
    std::mt19937_64 rng(5);
    for (int n : {5, 6}) {
        Schedule s = compile_schedule(random_plan(n, rng), 0);
        std::map<int, int> in, out;
        for (const auto& st : s.steps) {
            if (st.s2.couple_in) in[st.s2.couple_in] = st.t;
            if (st.s2.couple_out) out[st.s2.couple_out] = st.t;
        }
        for (auto [label, t] : in) CHECK(out[label] - t == (n + 1) * (n + 2) / 2);
        // Odd labels enter before even ones.
        std::vector<int> order;
        for (const auto& st : s.steps)
            if (st.s2.couple_in) order.push_back(st.s2.couple_in);
        CHECK(order.front() == 1);
        CHECK(order[1] == 3);
    }
}

TEST_CASE("six-mode example timing") {
    Schedule s = compile_schedule(bar_plan(6), 0);
    CHECK(first_mode_span(s) == 28);
    CHECK(s.steps[28].s2.couple_out == 1);
    CHECK(s.steps[0].s2.couple_in == 1);
    CHECK((simulate_schedule(s) - ComplexMatrix::Identity(6, 6)).norm() < 1e-14);
    CHECK(first_mode_span(compile_schedule(bar_plan(5), 0)) == 21);
}

TEST_CASE("coverage of APPLY events") {
    std::mt19937_64 rng(3);
    MeshPlan plan = random_plan(7, rng);
    Schedule s = compile_schedule(plan, 0);
    std::vector<std::pair<int, int>> applied;
    for (const auto& st : s.steps)
        if (st.mzi.kind == MziKind::Apply) {
            applied.emplace_back(st.mzi.column, st.mzi.mode_i - 1);
            auto it = std::find_if(plan.placements.begin(), plan.placements.end(), [&](const Placement& p) {
                return p.column == st.mzi.column && p.mode == st.mzi.mode_i - 1;
            });
            REQUIRE(it != plan.placements.end());
            CHECK(it->setting == st.mzi.setting);
        }
    std::sort(applied.begin(), applied.end());
    auto slots = rectangular_slots(7);
    std::sort(slots.begin(), slots.end());
    CHECK(applied == slots);
}

TEST_CASE("corrupted plans are rejected with a timestep") {
    MeshPlan plan = bar_plan(6);
    plan.placements[3] = plan.placements[2];
    try {
        compile_schedule(plan, 0);
        FAIL("expected an exception");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("t=") != std::string::npos);
    }
    MeshPlan missing = bar_plan(5);
    missing.placements.pop_back();
    CHECK_THROWS_AS(compile_schedule(missing, 0), ValidationError);
    CHECK_THROWS_AS(compile_schedule(bar_plan(5), -1), ValidationError);
}

TEST_CASE("layer composition") {
    std::mt19937_64 rng(77);
    for (int n : {4, 5, 6, 7}) {
        MeshPlan p1 = random_plan(n, rng), p2 = random_plan(n, rng), p3 = random_plan(n, rng);
        Schedule single = compile_schedule(p1, 0);
        CHECK(compose_layers({single}, 0) == single);
        for (int b : {0, 1, 2}) {
            Schedule s = compose_layers({compile_schedule(p1, b), compile_schedule(p2, b), compile_schedule(p3, b)}, b);
            SimulationReport rep = simulate_schedule_report(s);
            CHECK((rep.unitary - reconstruct(p3) * reconstruct(p2) * reconstruct(p1)).norm() < 1e-10);
            CHECK(first_mode_span(s, 0) == (n + 1) * (n + 2) / 2 + b);
            CHECK(first_mode_span(s, 1) == (n + 1) * (n + 2) / 2 + b);
            CHECK(first_mode_span(s, 2) == (n + 1) * (n + 2) / 2);
            for (int l = 0; l < 3; ++l) CHECK(rep.exit_order[l] == rep.entry_order[l]);
        }
    }
    CHECK_THROWS_AS(compose_layers({compile_schedule(bar_plan(4), 0), compile_schedule(bar_plan(5), 0)}, 0),
                    ValidationError);
}

TEST_CASE("two four-mode layers with unit buffer traverse once") {
    Schedule s = compose_layers({compile_schedule(bar_plan(4), 1), compile_schedule(bar_plan(4), 1)}, 1);
    std::map<int, int> traverse_out, layer1_in;
    for (const auto& st : s.steps) {
        if (st.s2.couple_out && st.route == Route::Traverse) {
            CHECK(st.s2.out_layer == 0);
            traverse_out[st.s2.couple_out] = st.t;
        }
        if (st.s2.couple_in && st.s2.in_layer == 1) layer1_in[st.s2.couple_in] = st.t;
    }
    CHECK(traverse_out.size() == 5);  // four modes plus the ancilla
    for (auto [label, t] : traverse_out) CHECK(layer1_in[label] - t == 1);
}
