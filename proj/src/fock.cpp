#include "qpnn/fock.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace qpnn {

namespace {

void fill_states(int mode, int remaining, Occupation& current, std::vector<Occupation>& out) {
    const int n_modes = static_cast<int>(current.size());
    if (mode == n_modes - 1) {
        current[mode] = remaining;
        out.push_back(current);
        return;
    }
    for (int k = remaining; k >= 0; --k) {
        current[mode] = k;
        fill_states(mode + 1, remaining - k, current, out);
    }
    current[mode] = 0;
}

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

ComplexMatrix submatrix(const ComplexMatrix& u, const std::vector<int>& rows, const std::vector<int>& cols) {
    ComplexMatrix s(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) s(i, j) = u(rows[i], cols[j]);
    return s;
}

}  // namespace

long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

FockBasis::FockBasis(int num_modes, int num_photons) : num_modes_(num_modes), num_photons_(num_photons) {
    if (num_modes <= 0) throw ValidationError("FockBasis: number of modes must be positive");
    if (num_photons < 0) throw ValidationError("FockBasis: number of photons must be non-negative");
    Occupation current(num_modes, 0);
    fill_states(0, num_photons, current, states_);
    for (int i = 0; i < size(); ++i) {
        const Occupation& s = states_[i];
        std::vector<int> modes;
        double norm = 1.0;
        for (int m = 0; m < num_modes; ++m) {
            for (int k = 0; k < s[m]; ++k) modes.push_back(m);
            norm *= factorial(s[m]);
        }
        photon_modes_.push_back(std::move(modes));
        factorial_norm_.push_back(std::sqrt(norm));
        index_.emplace(s, i);
    }
}

bool FockBasis::has_multiple_occupancy(int i) const {
    for (int n : states_[i])
        if (n > 1) return true;
    return false;
}

int FockBasis::index_of(const Occupation& occ) const {
    auto it = index_.find(occ);
    return it == index_.end() ? -1 : it->second;
}

FockBasis enumerate_basis(int num_modes, int num_photons) { return FockBasis(num_modes, num_photons); }

ComplexMatrix lift(const ComplexMatrix& u, const FockBasis& basis) {
    if (u.rows() != basis.num_modes() || u.cols() != basis.num_modes())
        throw ValidationError("lift: matrix size does not match the number of modes");
    const int d = basis.size();
    ComplexMatrix phi(d, d);
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
            ComplexMatrix s = submatrix(u, basis.photon_modes(m), basis.photon_modes(n));
            phi(m, n) = permanent(s) / (basis.factorial_norm(m) * basis.factorial_norm(n));
        }
    return phi;
}

ComplexMatrix lift_unitary(const ComplexMatrix& u, int num_photons) {
    double residual = unitarity_residual(u);
    if (!(residual <= 1e-10)) {
        std::ostringstream msg;
        msg << "lift_unitary: input is not unitary (||U^dag U - I||_F = " << residual << ")";
        throw ValidationError(msg.str());
    }
    return lift(u, FockBasis(static_cast<int>(u.rows()), num_photons));
}

ComplexMatrix lift_derivative(const ComplexMatrix& u, const ComplexMatrix& du, const FockBasis& basis) {
    const int d = basis.size();
    ComplexMatrix dphi(d, d);
    for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
            const auto& rows = basis.photon_modes(m);
            const auto& cols = basis.photon_modes(n);
            ComplexMatrix s = submatrix(u, rows, cols);
            Complex acc = 0.0;
            for (std::size_t r = 0; r < rows.size(); ++r) {
                ComplexMatrix t = s;
                for (std::size_t c = 0; c < cols.size(); ++c) t(r, c) = du(rows[r], cols[c]);
                acc += permanent(t);
            }
            dphi(m, n) = acc / (basis.factorial_norm(m) * basis.factorial_norm(n));
        }
    return dphi;
}

PairBasis::PairBasis(int num_modes) : num_modes_(num_modes) {
    for (int k = 0; k < num_modes; ++k)
        for (int l = k + 1; l < num_modes; ++l) pairs_.emplace_back(k, l);
}

int PairBasis::index_of(int k, int l) const {
    if (k > l) std::swap(k, l);
    if (k < 0 || l >= num_modes_ || k == l) return -1;
    // Row-major position of (k, l) in the strict upper triangle.
    return k * num_modes_ - k * (k + 1) / 2 + (l - k - 1);
}

ComplexMatrix antisymmetric_lift(const ComplexMatrix& u) {
    PairBasis pb(static_cast<int>(u.rows()));
    ComplexMatrix a(pb.size(), pb.size());
    for (int p = 0; p < pb.size(); ++p) {
        auto [k, l] = pb.pair(p);
        for (int q = 0; q < pb.size(); ++q) {
            auto [i, j] = pb.pair(q);
            a(p, q) = u(k, i) * u(l, j) - u(k, j) * u(l, i);
        }
    }
    return a;
}

ComplexMatrix antisymmetric_lift_derivative(const ComplexMatrix& u, const ComplexMatrix& du) {
    PairBasis pb(static_cast<int>(u.rows()));
    ComplexMatrix a(pb.size(), pb.size());
    for (int p = 0; p < pb.size(); ++p) {
        auto [k, l] = pb.pair(p);
        for (int q = 0; q < pb.size(); ++q) {
            auto [i, j] = pb.pair(q);
            a(p, q) = du(k, i) * u(l, j) + u(k, i) * du(l, j) - du(k, j) * u(l, i) - u(k, j) * du(l, i);
        }
    }
    return a;
}

QuantumState fock_state(const FockBasis& basis, const Occupation& occ) {
    int idx = basis.index_of(occ);
    if (idx < 0) throw ValidationError("fock_state: occupation is not in the basis");
    QuantumState s{basis, ComplexVector::Zero(basis.size())};
    s.amplitudes(idx) = 1.0;
    return s;
}

DensityMatrix DensityMatrix::pure(const QuantumState& psi) { return pure(psi.basis, psi.amplitudes); }

DensityMatrix DensityMatrix::pure(const FockBasis& basis, const ComplexVector& psi) {
    if (psi.size() != basis.size()) throw ValidationError("DensityMatrix::pure: dimension mismatch");
    return DensityMatrix{basis, psi * psi.adjoint(), ComplexMatrix()};
}

double DensityMatrix::trace() const {
    double t = matrix.trace().real();
    if (has_antisymmetric()) t += antisymmetric.trace().real();
    return t;
}

void DensityMatrix::validate() const {
    auto check = [](const ComplexMatrix& m, const char* name) {
        if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm()))
            throw NumericalError(std::string("DensityMatrix: ") + name + " block is not Hermitian");
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
        if (m.size() > 0 && es.eigenvalues().minCoeff() < -1e-10)
            throw NumericalError(std::string("DensityMatrix: ") + name + " block has a negative eigenvalue");
    };
    if (matrix.rows() != basis.size() || matrix.cols() != basis.size())
        throw ValidationError("DensityMatrix: matrix does not match the basis");
    check(matrix, "bosonic");
    if (has_antisymmetric()) {
        PairBasis pb(basis.num_modes());
        if (antisymmetric.rows() != pb.size()) throw ValidationError("DensityMatrix: antisymmetric block has wrong size");
        check(antisymmetric, "antisymmetric");
    }
    if (trace() > 1.0 + 1e-12) throw NumericalError("DensityMatrix: trace exceeds one");
}

void ComputationalBasisMap::validate(const FockBasis& basis) const {
    std::set<Occupation> seen;
    for (const auto& ls : logical_states)
        for (const auto& occ : ls.occupations) {
            if (basis.index_of(occ) < 0)
                throw ValidationError("ComputationalBasisMap: state of '" + ls.label + "' is not in the basis");
            if (!seen.insert(occ).second)
                throw ValidationError("ComputationalBasisMap: occupation listed twice ('" + ls.label + "')");
        }
}

std::vector<int> ComputationalBasisMap::indices(const FockBasis& basis) const {
    validate(basis);
    std::vector<int> out;
    for (const auto& ls : logical_states)
        for (const auto& occ : ls.occupations) out.push_back(basis.index_of(occ));
    return out;
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    RealVector ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-10) throw NumericalError("psd_sqrt: matrix has a significantly negative eigenvalue");
        ev(i) = std::sqrt(std::max(ev(i), 0.0));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

double root_fidelity_block(const ComplexMatrix& target, const ComplexMatrix& actual) {
    if (target.size() == 0 || actual.size() == 0) return 0.0;
    // Work inside the support of the target so that pure targets reduce exactly
    // to <psi|rho|psi> instead of picking up square roots of round-off.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(target);
    const RealVector& ev = es.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<int> keep;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev(i) < -1e-10) throw NumericalError("uhlmann_fidelity: target has a negative eigenvalue");
        if (ev(i) > 1e-13 * scale) keep.push_back(i);
    }
    if (keep.empty()) return 0.0;
    ComplexMatrix half(target.rows(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) half.col(j) = es.eigenvectors().col(keep[j]) * std::sqrt(ev(keep[j]));
    ComplexMatrix inner = half.adjoint() * actual * half;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    if (inner.rows() == 1) return std::sqrt(std::max(inner(0, 0).real(), 0.0));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> inner_es(inner, Eigen::EigenvaluesOnly);
    const RealVector& lam = inner_es.eigenvalues();
    const double cut = 1e-14 * std::max(lam.maxCoeff(), 0.0);
    double tr = 0.0;
    for (int i = 0; i < lam.size(); ++i)
        if (lam(i) > cut) tr += std::sqrt(lam(i));
    return tr;
}

}  // namespace

double uhlmann_fidelity(const DensityMatrix& target, const DensityMatrix& actual) {
    if (target.matrix.rows() != actual.matrix.rows() || !(target.basis == actual.basis))
        throw ValidationError("uhlmann_fidelity: dimension mismatch");
    double root = root_fidelity_block(target.matrix, actual.matrix);
    if (target.has_antisymmetric() && actual.has_antisymmetric()) {
        if (target.antisymmetric.rows() != actual.antisymmetric.rows())
            throw ValidationError("uhlmann_fidelity: antisymmetric block mismatch");
        root += root_fidelity_block(target.antisymmetric, actual.antisymmetric);
    }
    return root * root;
}

double pure_fidelity(const ComplexVector& target, const DensityMatrix& actual) {
    if (target.size() != actual.matrix.rows()) throw ValidationError("pure_fidelity: dimension mismatch");
    return (target.adjoint() * actual.matrix * target)(0, 0).real();
}

double population(const DensityMatrix& rho, const std::vector<Occupation>& occupations) {
    PairBasis pb(rho.basis.num_modes());
    double p = 0.0;
    for (const auto& occ : occupations) {
        int idx = rho.basis.index_of(occ);
        if (idx < 0) throw ValidationError("population: occupation is not in the basis");
        p += rho.matrix(idx, idx).real();
        if (rho.has_antisymmetric()) {
            std::vector<int> modes = rho.basis.photon_modes(idx);
            if (modes.size() == 2 && modes[0] != modes[1]) {
                int q = pb.index_of(modes[0], modes[1]);
                p += rho.antisymmetric(q, q).real();
            }
        }
    }
    return p;
}

double efficiency(const DensityMatrix& rho_out, const ComputationalBasisMap& cb) {
    cb.validate(rho_out.basis);
    std::vector<Occupation> all;
    for (const auto& ls : cb.logical_states) all.insert(all.end(), ls.occupations.begin(), ls.occupations.end());
    return population(rho_out, all);
}

}  // namespace qpnn
