#ifndef QPNN_MESH_HPP
#define QPNN_MESH_HPP

#include <random>
#include <vector>

#include "qpnn/types.hpp"

namespace qpnn {

// theta is the internal phase (the shifter sets 2*theta), phi the input phase.
struct MziSetting {
    double theta = kPi / 2;
    double phi = kPi;

    MziSetting wrapped() const { return {wrap_angle(theta), wrap_angle(phi)}; }
};

template <typename Scalar>
Eigen::Matrix<std::complex<Scalar>, 2, 2> mzi_unitary(Scalar theta, Scalar phi) {
    using C = std::complex<Scalar>;
    const C pre = C(0, 1) * std::exp(C(0, theta));
    const C ephi = std::exp(C(0, phi));
    Eigen::Matrix<C, 2, 2> t;
    t << pre * ephi * std::sin(theta), pre * std::cos(theta),
         pre * ephi * std::cos(theta), -pre * std::sin(theta);
    return t;
}

inline Matrix2c mzi_unitary(const MziSetting& s) { return mzi_unitary<double>(s.theta, s.phi); }
Matrix2c mzi_dtheta(const MziSetting& s);
Matrix2c mzi_dphi(const MziSetting& s);

// The bar setting routes each input straight through with unit amplitude.
inline constexpr MziSetting kBarSetting{kPi / 2, kPi};

struct Placement {
    int column = 0;
    int mode = 0;  // upper mode of the pair (mode, mode + 1), zero-based
    MziSetting setting;
};

struct MeshPlan {
    int num_modes = 0;
    std::vector<Placement> placements;  // column-major, ascending mode within a column
    RealVector output_phases;
};

inline int mzi_count(int num_modes) { return num_modes * (num_modes - 1) / 2; }

// (column, mode) slots of the rectangular mesh in column-major order.
std::vector<std::pair<int, int>> rectangular_slots(int num_modes);

// Throws ValidationError describing the first structural defect.
void validate_plan(const MeshPlan& plan);

MeshPlan bar_plan(int num_modes);
MeshPlan clements_decompose(const ComplexMatrix& u);
ComplexMatrix reconstruct(const MeshPlan& plan);

// Apply a 2x2 block on rows (m, m+1) from the left.
template <typename Derived>
void apply_rows(Eigen::MatrixBase<Derived>& m, int mode, const Matrix2c& t) {
    auto r0 = m.row(mode).eval();
    auto r1 = m.row(mode + 1).eval();
    m.row(mode) = t(0, 0) * r0 + t(0, 1) * r1;
    m.row(mode + 1) = t(1, 0) * r0 + t(1, 1) * r1;
}

// Right-multiply columns (m, m+1) by a 2x2 block.
template <typename Derived>
void apply_cols(Eigen::MatrixBase<Derived>& m, int mode, const Matrix2c& t) {
    auto c0 = m.col(mode).eval();
    auto c1 = m.col(mode + 1).eval();
    m.col(mode) = t(0, 0) * c0 + t(1, 0) * c1;
    m.col(mode + 1) = t(0, 1) * c0 + t(1, 1) * c1;
}

template <typename Rng>
MeshPlan random_plan(int num_modes, Rng& rng) {
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    MeshPlan plan{num_modes, {}, RealVector(num_modes)};
    for (auto [c, m] : rectangular_slots(num_modes)) plan.placements.push_back({c, m, {angle(rng), angle(rng)}});
    for (int i = 0; i < num_modes; ++i) plan.output_phases(i) = angle(rng);
    return plan;
}

}  // namespace qpnn

#endif
