#ifndef QPNN_TASK_HPP
#define QPNN_TASK_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpnn/fock.hpp"

namespace qpnn {

enum class TaskKind { Cnot, Bsa };

// A target is either a pure state or a set of measurement outcomes.
struct TaskTarget {
    bool outcome_set = false;
    ComplexVector state;
    std::vector<Occupation> outcomes;
};

struct OutcomeAssignment {
    std::vector<std::vector<std::pair<int, int>>> per_bell;  // zero-based mode pairs, i < j
    std::uint64_t seed = 0;
    int num_modes = 0;
};

struct TaskDefinition {
    TaskKind kind = TaskKind::Cnot;
    std::string name;
    FockBasis basis;
    std::vector<QuantumState> inputs;
    std::vector<std::string> input_labels;
    std::vector<TaskTarget> targets;
    ComputationalBasisMap cb;
    std::optional<OutcomeAssignment> assignment;

    int size() const { return static_cast<int>(inputs.size()); }
    void validate() const;
};

// Dual-rail CNOT on four modes: control (0, 1), target (2, 3).
TaskDefinition cnot_task();

// Post-selected CNOT on six modes: vacuum, c0, c1, t0, t1, vacuum.
TaskDefinition linear_cnot_task();

// Six-mode unitary of the post-selected CNOT (success probability 1/9).
ComplexMatrix linear_cnot_unitary();

OutcomeAssignment assign_bsa_outcomes(int num_modes, std::uint64_t seed);

// Bell inputs on modes 0..3 (two dual-rail qubits), remaining modes vacuum.
TaskDefinition bsa_task(int num_modes, const OutcomeAssignment& assignment);

Occupation pair_occupation(int num_modes, int i, int j);

}  // namespace qpnn

#endif
