#ifndef QPNN_TEST_HELPERS_HPP
#define QPNN_TEST_HELPERS_HPP

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "qpnn/fock.hpp"
#include "qpnn/random.hpp"

namespace qpnn::test {

// Brute-force two-photon lift: act with U (x) U on symmetrised first-quantised
// states and read off the bosonic amplitudes.
inline ComplexMatrix brute_force_two_photon(const ComplexMatrix& u, const FockBasis& basis) {
    const int n = static_cast<int>(u.rows());
    ComplexMatrix uu = Eigen::kroneckerProduct(u, u);
    auto sym = [&](int idx) {
        ComplexVector v = ComplexVector::Zero(n * n);
        auto m = basis.photon_modes(idx);
        v(m[0] * n + m[1]) += 1.0;
        v(m[1] * n + m[0]) += 1.0;
        return ComplexVector(v / v.norm());
    };
    ComplexMatrix out(basis.size(), basis.size());
    for (int i = 0; i < basis.size(); ++i)
        for (int j = 0; j < basis.size(); ++j) out(i, j) = sym(i).dot(uu * sym(j));
    return out;
}

}  // namespace qpnn::test

#endif
