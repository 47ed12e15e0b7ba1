#include "qpnn/task.hpp"

#include <numeric>

#include "qpnn/random.hpp"

namespace qpnn {

void TaskDefinition::validate() const {
    if (inputs.empty()) throw ValidationError("task: no inputs");
    if (targets.size() != inputs.size() || input_labels.size() != inputs.size())
        throw ValidationError("task: inputs, labels and targets differ in length");
    cb.validate(basis);
    for (const auto& in : inputs)
        if (!(in.basis == basis)) throw ValidationError("task: input defined on a different basis");
    for (const auto& t : targets) {
        if (t.outcome_set) {
            if (t.outcomes.empty()) throw ValidationError("task: empty outcome set");
            for (const auto& o : t.outcomes)
                if (basis.index_of(o) < 0) throw ValidationError("task: outcome outside the basis");
        } else if (t.state.size() != basis.size()) {
            throw ValidationError("task: target state has the wrong dimension");
        }
    }
}

Occupation pair_occupation(int num_modes, int i, int j) {
    Occupation occ(num_modes, 0);
    occ[i] += 1;
    occ[j] += 1;
    return occ;
}

namespace {

TaskDefinition dual_rail_cnot(int num_modes, int offset, const std::string& name) {
    TaskDefinition task;
    task.kind = TaskKind::Cnot;
    task.name = name;
    task.basis = enumerate_basis(num_modes, 2);
    auto occ = [&](int c, int t) { return pair_occupation(num_modes, offset + c, offset + 2 + t); };
    for (int c = 0; c < 2; ++c)
        for (int t = 0; t < 2; ++t) {
            const std::string label = std::to_string(c) + std::to_string(t);
            task.inputs.push_back(fock_state(task.basis, occ(c, t)));
            task.input_labels.push_back(label);
            task.targets.push_back({false, fock_state(task.basis, occ(c, t ^ c)).amplitudes, {}});
            task.cb.logical_states.push_back({label, {occ(c, t)}});
        }
    task.validate();
    return task;
}

void embed(ComplexMatrix& u, int i, int j, const Matrix2c& b) {
    ComplexMatrix e = ComplexMatrix::Identity(u.rows(), u.cols());
    e(i, i) = b(0, 0);
    e(i, j) = b(0, 1);
    e(j, i) = b(1, 0);
    e(j, j) = b(1, 1);
    u = e * u;
}

Matrix2c splitter(double eta) {
    Matrix2c b;
    b << std::sqrt(eta), std::sqrt(1 - eta), std::sqrt(1 - eta), -std::sqrt(eta);
    return b;
}

}  // namespace

TaskDefinition cnot_task() { return dual_rail_cnot(4, 0, "cnot"); }

TaskDefinition linear_cnot_task() { return dual_rail_cnot(6, 1, "linear-cnot"); }

ComplexMatrix linear_cnot_unitary() {
    // Modes: 0 vacuum, 1 c0, 2 c1, 3 t0, 4 t1, 5 vacuum.
    ComplexMatrix u = ComplexMatrix::Identity(6, 6);
    embed(u, 3, 4, splitter(0.5));
    embed(u, 0, 1, splitter(1.0 / 3.0));
    Matrix2c middle;
    middle << -std::sqrt(1.0 / 3.0), std::sqrt(2.0 / 3.0), std::sqrt(2.0 / 3.0), std::sqrt(1.0 / 3.0);
    embed(u, 2, 3, middle);
    embed(u, 4, 5, splitter(1.0 / 3.0));
    embed(u, 3, 4, splitter(0.5));
    u.row(1) *= -1.0;
    return u;
}

OutcomeAssignment assign_bsa_outcomes(int num_modes, std::uint64_t seed) {
    if (num_modes < 4) throw ValidationError("assign_bsa_outcomes: at least 4 modes are required");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < num_modes; ++i)
        for (int j = i + 1; j < num_modes; ++j) pairs.emplace_back(i, j);
    for (int i = static_cast<int>(pairs.size()) - 1; i > 0; --i) {
        const int j = static_cast<int>(counter_uniform(seed, i) * (i + 1));
        std::swap(pairs[i], pairs[std::min(j, i)]);
    }
    const int per = static_cast<int>(pairs.size()) / 4;
    OutcomeAssignment a;
    a.seed = seed;
    a.num_modes = num_modes;
    a.per_bell.resize(4);
    for (int b = 0; b < 4; ++b)
        for (int k = 0; k < per; ++k) {
            auto p = pairs[b * per + k];
            a.per_bell[b].push_back(p);
        }
    for (auto& set : a.per_bell) std::sort(set.begin(), set.end());
    return a;
}

TaskDefinition bsa_task(int num_modes, const OutcomeAssignment& assignment) {
    if (num_modes < 4) throw ValidationError("bsa_task: at least 4 modes are required");
    if (assignment.per_bell.size() != 4 || assignment.num_modes != num_modes)
        throw ValidationError("bsa_task: assignment does not match the number of modes");
    TaskDefinition task;
    task.kind = TaskKind::Bsa;
    task.name = "bsa";
    task.basis = enumerate_basis(num_modes, 2);
    task.assignment = assignment;
    const double r = 1.0 / std::sqrt(2.0);
    auto amp = [&](int i, int j) { return fock_state(task.basis, pair_occupation(num_modes, i, j)).amplitudes; };
    // |Phi+-> = (|1010> +- |0101>)/sqrt2, |Psi+-> = (|1001> +- |0110>)/sqrt2.
    const std::vector<std::string> labels{"Phi+", "Phi-", "Psi+", "Psi-"};
    const std::vector<ComplexVector> states{r * (amp(0, 2) + amp(1, 3)), r * (amp(0, 2) - amp(1, 3)),
                                            r * (amp(0, 3) + amp(1, 2)), r * (amp(0, 3) - amp(1, 2))};
    for (int b = 0; b < 4; ++b) {
        task.inputs.push_back({task.basis, states[b]});
        task.input_labels.push_back(labels[b]);
        TaskTarget target;
        target.outcome_set = true;
        LogicalState ls{labels[b], {}};
        for (auto [i, j] : assignment.per_bell[b]) {
            if (i == j || i < 0 || j >= num_modes) throw ValidationError("bsa_task: invalid outcome pair");
            target.outcomes.push_back(pair_occupation(num_modes, i, j));
            ls.occupations.push_back(pair_occupation(num_modes, i, j));
        }
        task.targets.push_back(target);
        task.cb.logical_states.push_back(ls);
    }
    task.validate();
    return task;
}

}  // namespace qpnn
