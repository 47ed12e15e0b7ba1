#include "qpnn/mesh.hpp"

#include <algorithm>
#include <sstream>

namespace qpnn {

Matrix2c mzi_dtheta(const MziSetting& s) {
    const Complex pre = kI * std::exp(kI * s.theta);
    const Complex ephi = std::exp(kI * s.phi);
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    Matrix2c d;
    d << ephi * c, -sn, -ephi * sn, -c;
    return kI * mzi_unitary(s) + pre * d;
}

Matrix2c mzi_dphi(const MziSetting& s) {
    Matrix2c t = mzi_unitary(s);
    t.col(0) *= kI;
    t.col(1).setZero();
    return t;
}

std::vector<std::pair<int, int>> rectangular_slots(int num_modes) {
    std::vector<std::pair<int, int>> slots;
    for (int c = 0; c < num_modes; ++c)
        for (int m = c % 2; m + 1 < num_modes; m += 2) slots.emplace_back(c, m);
    return slots;
}

void validate_plan(const MeshPlan& plan) {
    if (plan.num_modes < 1) throw ValidationError("MeshPlan: number of modes must be positive");
    if (plan.output_phases.size() != plan.num_modes)
        throw ValidationError("MeshPlan: expected one output phase per mode");
    auto slots = rectangular_slots(plan.num_modes);
    for (std::size_t i = 0; i < plan.placements.size(); ++i) {
        const auto& p = plan.placements[i];
        if (i >= slots.size() || p.column != slots[i].first || p.mode != slots[i].second) {
            std::ostringstream msg;
            msg << "MeshPlan: placement " << i << " (column " << p.column << ", mode " << p.mode << ") ";
            if (i >= slots.size())
                msg << "exceeds the " << slots.size() << " slots of the rectangular mesh";
            else
                msg << "does not match slot (column " << slots[i].first << ", mode " << slots[i].second << ")";
            throw ValidationError(msg.str());
        }
    }
    if (plan.placements.size() != slots.size()) {
        std::ostringstream msg;
        msg << "MeshPlan: " << plan.placements.size() << " placements, expected " << slots.size();
        throw ValidationError(msg.str());
    }
}

MeshPlan bar_plan(int num_modes) {
    MeshPlan plan{num_modes, {}, RealVector::Zero(num_modes)};
    for (auto [c, m] : rectangular_slots(num_modes)) plan.placements.push_back({c, m, kBarSetting});
    return plan;
}

ComplexMatrix reconstruct(const MeshPlan& plan) {
    validate_plan(plan);
    ComplexMatrix u = ComplexMatrix::Identity(plan.num_modes, plan.num_modes);
    for (const auto& p : plan.placements) apply_rows(u, p.mode, mzi_unitary(p.setting));
    for (int i = 0; i < plan.num_modes; ++i) u.row(i) *= std::exp(kI * plan.output_phases(i));
    return u;
}

namespace {

constexpr double kNullTolerance = 1e-15;

struct Element {
    int mode;
    MziSetting setting;
};

}  // namespace

MeshPlan clements_decompose(const ComplexMatrix& u_in) {
    const int n = static_cast<int>(u_in.rows());
    double residual = unitarity_residual(u_in);
    if (!(residual <= 1e-10)) {
        std::ostringstream msg;
        msg << "clements_decompose: input is not unitary (||U^dag U - I||_F = " << residual << ")";
        throw ValidationError(msg.str());
    }
    ComplexMatrix u = u_in;
    std::vector<Element> right, left;  // in the order they were applied
    for (int i = 0; i + 1 < n; ++i) {
        if (i % 2 == 0) {
            for (int j = 0; j <= i; ++j) {
                const int k = i - j, r = n - 1 - j;
                const Complex a = u(r, k), b = u(r, k + 1);
                MziSetting s = std::abs(a) < kNullTolerance
                                   ? kBarSetting
                                   : MziSetting{std::atan2(std::abs(b), std::abs(a)), std::arg(a) - std::arg(b) + kPi};
                apply_cols(u, k, Matrix2c(mzi_unitary(s).adjoint()));
                right.push_back({k, s});
            }
        } else {
            for (int j = 1; j <= i + 1; ++j) {
                const int k = n + j - i - 3, col = j - 1;
                const Complex a = u(k, col), b = u(k + 1, col);
                MziSetting s = std::abs(b) < kNullTolerance
                                   ? kBarSetting
                                   : MziSetting{std::atan2(std::abs(a), std::abs(b)), std::arg(b) - std::arg(a)};
                apply_rows(u, k, mzi_unitary(s));
                left.push_back({k, s});
            }
        }
    }
    // u is now diagonal: U = L_1^dag ... L_m^dag D R_p ... R_1.  Push D through
    // the left factors so that U = D' L'_1 ... L'_m R_p ... R_1.
    ComplexVector d = u.diagonal();
    std::vector<Element> moved(left.size());
    for (int idx = static_cast<int>(left.size()) - 1; idx >= 0; --idx) {
        const auto& e = left[idx];
        const Complex d1 = d(e.mode), d2 = d(e.mode + 1);
        const double th = e.setting.theta;
        const Complex g = -std::exp(Complex(0, -2.0 * th));
        MziSetting s;
        Complex e1, e2 = g * d2;
        if (std::abs(std::cos(th)) < 1e-14) {
            s = {th, kPi};
            e1 = g * std::exp(Complex(0, -e.setting.phi)) * d1 * std::exp(Complex(0, -kPi));
        } else {
            s = {th, std::arg(d1 / d2)};
            e1 = g * std::exp(Complex(0, -e.setting.phi)) * d2;
        }
        d(e.mode) = e1;
        d(e.mode + 1) = e2;
        moved[idx] = {e.mode, s};
    }
    // Application order, first to last.
    std::vector<Element> sequence(right.begin(), right.end());
    for (int idx = static_cast<int>(moved.size()) - 1; idx >= 0; --idx) sequence.push_back(moved[idx]);

    std::vector<int> last(n, -1);
    std::vector<Placement> placements;
    for (const auto& e : sequence) {
        int lo = last[e.mode];
        if (e.mode > 0) lo = std::max(lo, last[e.mode - 1]);
        if (e.mode + 1 < n) lo = std::max(lo, last[e.mode + 1]);
        int c = lo + 1;
        if (c % 2 != e.mode % 2) ++c;
        if (c >= n) throw NumericalError("clements_decompose: placement exceeded the rectangular mesh");
        last[e.mode] = c;
        placements.push_back({c, e.mode, e.setting.wrapped()});
    }
    std::sort(placements.begin(), placements.end(), [](const Placement& a, const Placement& b) {
        return a.column != b.column ? a.column < b.column : a.mode < b.mode;
    });
    MeshPlan plan{n, std::move(placements), RealVector(n)};
    for (int i = 0; i < n; ++i) plan.output_phases(i) = wrap_angle(std::arg(d(i)));
    validate_plan(plan);
    return plan;
}

}  // namespace qpnn
