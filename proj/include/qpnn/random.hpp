#ifndef QPNN_RANDOM_HPP
#define QPNN_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "qpnn/types.hpp"

namespace qpnn {

// Counter-based generator: every draw is a pure function of (key, counter).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) {
    return splitmix64(splitmix64(key) ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

// Uniform in (0, 1).
inline double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(counter_hash(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

inline double counter_normal(std::uint64_t key, std::uint64_t index) {
    double u1 = counter_uniform(key, 2 * index);
    double u2 = counter_uniform(key, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Haar-distributed unitary from a QR factorisation with phase fix.
template <typename Rng>
ComplexMatrix haar_unitary(int n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix z(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) z(i, j) = Complex(g(rng), g(rng)) / std::sqrt(2.0);
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        Complex d = r(j, j);
        q.col(j) *= (std::abs(d) > 0 ? d / std::abs(d) : Complex(1.0));
    }
    return q;
}

}  // namespace qpnn

#endif
