#ifndef QPNN_FOCK_HPP
#define QPNN_FOCK_HPP

#include <map>
#include <string>
#include <vector>

#include "qpnn/types.hpp"

namespace qpnn {

using Occupation = std::vector<int>;

class FockBasis {
public:
    FockBasis() = default;
    FockBasis(int num_modes, int num_photons);

    int num_modes() const { return num_modes_; }
    int num_photons() const { return num_photons_; }
    int size() const { return static_cast<int>(states_.size()); }

    const Occupation& state(int i) const { return states_[i]; }
    const std::vector<Occupation>& states() const { return states_; }
    // Mode index of every photon, ascending (repeated for multiple occupancy).
    const std::vector<int>& photon_modes(int i) const { return photon_modes_[i]; }
    double factorial_norm(int i) const { return factorial_norm_[i]; }
    bool has_multiple_occupancy(int i) const;

    // -1 when the occupation is not a member.
    int index_of(const Occupation& occ) const;

    bool operator==(const FockBasis& o) const {
        return num_modes_ == o.num_modes_ && num_photons_ == o.num_photons_;
    }

private:
    int num_modes_ = 0;
    int num_photons_ = 0;
    std::vector<Occupation> states_;
    std::vector<std::vector<int>> photon_modes_;
    std::vector<double> factorial_norm_;
    std::map<Occupation, int> index_;
};

FockBasis enumerate_basis(int num_modes, int num_photons);

long binomial(int n, int k);

// Glynn formula with Gray-code ordering.
template <typename Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    const int n = static_cast<int>(a.rows());
    if (n == 0) return Scalar(1);
    if (n == 1) return a(0, 0);
    if (n == 2) return a(0, 0) * a(1, 1) + a(0, 1) * a(1, 0);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sums = a.colwise().sum().transpose();
    std::vector<int> delta(n, 1);
    auto product = [&]() {
        Scalar p(1);
        for (int j = 0; j < n; ++j) p *= sums(j);
        return p;
    };
    Scalar total = product();
    int sign = 1;
    const unsigned long count = 1UL << (n - 1);
    for (unsigned long k = 1; k < count; ++k) {
        int row = __builtin_ctzl(k) + 1;
        delta[row] = -delta[row];
        sums += (2.0 * delta[row]) * a.row(row).transpose();
        sign = -sign;
        total += static_cast<double>(sign) * product();
    }
    return total / static_cast<double>(count);
}

// Multi-photon lift Phi(U) on the bosonic sector; no unitarity check, so it
// also serves non-unitary arguments such as derivatives.
ComplexMatrix lift(const ComplexMatrix& u, const FockBasis& basis);

// Checked variant: rejects U with ||U^dag U - I||_F > 1e-10.
ComplexMatrix lift_unitary(const ComplexMatrix& u, int num_photons);

// d Phi(U) for a tangent dU, using multilinearity of the permanent in rows.
ComplexMatrix lift_derivative(const ComplexMatrix& u, const ComplexMatrix& du, const FockBasis& basis);

// Exchange-antisymmetric two-photon sector, indexed by mode pairs k < l.
class PairBasis {
public:
    explicit PairBasis(int num_modes = 0);
    int num_modes() const { return num_modes_; }
    int size() const { return static_cast<int>(pairs_.size()); }
    std::pair<int, int> pair(int i) const { return pairs_[i]; }
    int index_of(int k, int l) const;

private:
    int num_modes_;
    std::vector<std::pair<int, int>> pairs_;
};

// Second exterior power: entries are 2x2 minors (determinants).
ComplexMatrix antisymmetric_lift(const ComplexMatrix& u);
ComplexMatrix antisymmetric_lift_derivative(const ComplexMatrix& u, const ComplexMatrix& du);

struct QuantumState {
    FockBasis basis;
    ComplexVector amplitudes;

    double norm_squared() const { return amplitudes.squaredNorm(); }
};

QuantumState fock_state(const FockBasis& basis, const Occupation& occ);

// Two-photon density matrices carry an optional antisymmetric block. It is
// empty (0x0) for purely bosonic states and holds the exchange-odd part of
// distinguishable photon pairs otherwise; the two blocks never mix.
struct DensityMatrix {
    FockBasis basis;
    ComplexMatrix matrix;
    ComplexMatrix antisymmetric;

    static DensityMatrix pure(const QuantumState& psi);
    static DensityMatrix pure(const FockBasis& basis, const ComplexVector& psi);

    bool has_antisymmetric() const { return antisymmetric.size() > 0; }
    double trace() const;
    void validate() const;
};

struct LogicalState {
    std::string label;
    std::vector<Occupation> occupations;
};

struct ComputationalBasisMap {
    std::vector<LogicalState> logical_states;

    void validate(const FockBasis& basis) const;
    std::vector<int> indices(const FockBasis& basis) const;
};

// Principal square root of a PSD matrix; eigenvalues in [-1e-10, 0) are clipped.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

double uhlmann_fidelity(const DensityMatrix& target, const DensityMatrix& actual);

// <psi|rho|psi> on the bosonic block.
double pure_fidelity(const ComplexVector& target, const DensityMatrix& actual);

// Population of the listed occupations, summed over both exchange sectors.
double population(const DensityMatrix& rho, const std::vector<Occupation>& occupations);

double efficiency(const DensityMatrix& rho_out, const ComputationalBasisMap& cb);

}  // namespace qpnn

#endif
