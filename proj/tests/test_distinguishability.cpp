#include <doctest.h>

#include <random>

#include "qpnn/distinguishability.hpp"
#include "qpnn/random.hpp"

using namespace qpnn;

namespace {

// |int psi(t) psi*(t - d) dt|^2 with psi(t) ~ exp(-t^2 / sigma^2), by quadrature.
double overlap_quadrature(double d, double sigma) {
    const int n = 20001;
    const double lim = 12.0 * sigma + std::abs(d);
    const double h = 2.0 * lim / (n - 1);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = -lim + i * h;
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        num += w * std::exp(-t * t / (sigma * sigma)) * std::exp(-(t - d) * (t - d) / (sigma * sigma));
        den += w * std::exp(-2.0 * t * t / (sigma * sigma));
    }
    return (num / den) * (num / den);
}

}  // namespace

TEST_CASE("hom visibility matches quadrature of the wavepacket overlap") {
    for (double sigma : {0.5, 1.0, 2.0})
        for (double d : {0.0, 0.1, 0.7, 1.5, 3.0}) CHECK(hom_visibility(d, sigma) == doctest::Approx(overlap_quadrature(d, sigma)).epsilon(1e-9));
    CHECK_THROWS_AS(hom_visibility(0.0, 0.0), ValidationError);
}

TEST_CASE("mean visibility without jitter is exactly one") {
    JitterModel m;
    m.sigma_j = 0.0;
    CHECK(mean_visibility(m) == 1.0);
    m.width = JitterWidth::StandardDeviation;
    CHECK(mean_visibility(m) == 1.0);
}

TEST_CASE("mean visibility decreases with jitter and agrees with an independent sampler") {
    double prev = 1.0;
    for (double sj : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        JitterModel m{1.0, sj, 4000, 7, JitterWidth::StandardDeviation};
        const double v = mean_visibility(m);
        CHECK(v < prev);
        prev = v;
    }
    JitterModel m{1.0, 2.0, 20000, 11, JitterWidth::StandardDeviation};
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> dist(0.0, m.offset_std());
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += hom_visibility(dist(rng), m.sigma_p);
    CHECK(mean_visibility(m) == doctest::Approx(acc / n).epsilon(0.02));
    // Closed form for Gaussian offsets.
    CHECK(acc / n == doctest::Approx(1.0 / std::sqrt(1.0 + 2.0 * 4.0)).epsilon(0.02));
}

TEST_CASE("jitter width conventions") {
    JitterModel fwhm{1.0, 2.3548200450309493, 10, 0, JitterWidth::Fwhm};
    CHECK(fwhm.offset_std() == doctest::Approx(1.0).epsilon(1e-12));
    JitterModel bad{1.0, -1.0};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("input fidelity endpoints") {
    CHECK(input_fidelity(1.0) == 1.0);
    CHECK(input_fidelity(0.0) == 0.5);
    CHECK_THROWS_AS(input_fidelity(1.5), ValidationError);
    FockBasis b(4, 2);
    for (const auto& occ : std::vector<Occupation>{{1, 0, 1, 0}, {2, 0, 0, 0}}) {
        auto psi = fock_state(b, occ);
        for (double v : {0.0, 0.3, 1.0}) {
            auto in = mixed_input(psi, v);
            const double expected = b.has_multiple_occupancy(b.index_of(occ)) ? 1.0 : input_fidelity(v);
            CHECK(input_fidelity(in, psi.amplitudes) == doctest::Approx(expected).epsilon(1e-14));
            CHECK(v * in.rho_ind.trace() + (1 - v) * in.rho_dist.trace() == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("distinguishable part reproduces classical photon statistics") {
    std::mt19937_64 rng(3);
    const int n = 5;
    FockBasis b(n, 2);
    ComplexMatrix w = haar_unitary(n, rng);
    auto t = linear_transfer(w, b);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            auto in = mixed_input(fock_state(b, [&] { Occupation o(n, 0); o[i] = 1; o[j] = 1; return o; }()), 0.0);
            auto out = propagate_mixed(t.symmetric, t, in);
            CHECK(out.trace() == doctest::Approx(1.0).epsilon(1e-12));
            for (int k = 0; k < n; ++k)
                for (int l = k; l < n; ++l) {
                    double classical = std::norm(w(k, i) * w(l, j));
                    if (k != l) classical += std::norm(w(k, j) * w(l, i));
                    Occupation o(n, 0);
                    o[k] += 1;
                    o[l] += 1;
                    CHECK(population(out, {o}) == doctest::Approx(classical).epsilon(1e-12));
                }
        }
}

TEST_CASE("fully indistinguishable input propagates as a pure state") {
    std::mt19937_64 rng(5);
    FockBasis b(4, 2);
    ComplexMatrix w = haar_unitary(4, rng);
    auto t = linear_transfer(w, b);
    auto psi = fock_state(b, {1, 1, 0, 0});
    auto out = propagate_mixed(t.symmetric, t, mixed_input(psi, 1.0));
    ComplexVector expected = t.symmetric * psi.amplitudes;
    CHECK((out.matrix - expected * expected.adjoint()).norm() < 1e-12);
    CHECK(out.antisymmetric.norm() < 1e-15);
}

TEST_CASE("hom dip: balanced splitter") {
    FockBasis b(2, 2);
    ComplexMatrix w(2, 2);
    w << 1, 1, 1, -1;
    w /= std::sqrt(2.0);
    auto t = linear_transfer(w, b);
    auto psi = fock_state(b, {1, 1});
    for (double v : {0.0, 0.4, 1.0}) {
        auto out = propagate_mixed(t.symmetric, t, mixed_input(psi, v));
        CHECK(population(out, {{1, 1}}) == doctest::Approx(0.5 * (1 - v)).epsilon(1e-12));
    }
}
