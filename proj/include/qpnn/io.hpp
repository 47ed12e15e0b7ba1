#ifndef QPNN_IO_HPP
#define QPNN_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "qpnn/engine.hpp"
#include "qpnn/scheduler.hpp"
#include "qpnn/timegate.hpp"
#include "qpnn/trainer.hpp"

namespace qpnn {

using Json = nlohmann::json;

// Complex matrices: an array of rows whose entries are numbers or [re, im]
// pairs, or an object {"real": rows, "imag": rows}.
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j);

Json plan_to_json(const MeshPlan& plan);
MeshPlan plan_from_json(const Json& j, bool validate = true);

Json nonlinearity_to_json(const Nonlinearity& nl);
Nonlinearity nonlinearity_from_json(const Json& j);

Json spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const Json& j);

Json assignment_to_json(const OutcomeAssignment& a);
OutcomeAssignment assignment_from_json(const Json& j);

Json schedule_to_json(const Schedule& s);
// Fixed-width control table, one row per timestep, %.17g numbers.
std::string schedule_table(const Schedule& s);
Schedule parse_schedule_table(const std::string& text);

Json report_to_json(const EvaluationReport& r);
std::string hinton_csv(const EvaluationReport& r);

Json record_to_json(const TrainRecord& r);
TrainRecord record_from_json(const Json& j);

Json budget_to_json(const LossBudget& b);
LossBudget budget_from_json(const Json& j);

// Header: int64 M, float64 spacing, float64 center, then M*M little-endian
// complex doubles (real, imag) in row-major order.
void write_grid(const std::filesystem::path& path, const FrequencyGrid& grid, const ComplexMatrix& values);
TwoPhotonAmplitude read_grid(const std::filesystem::path& path);

std::string mask_csv(const FilterMask& mask);

std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t v);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const Json& j);

std::string format_double(double v);

}  // namespace qpnn

#endif
