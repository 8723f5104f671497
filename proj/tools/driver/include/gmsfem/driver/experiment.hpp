#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmsfem/driver/config.hpp"

namespace gmsfem::driver {

/// Stream-function velocity (X(x) X'(y), -X'(x) X(y)), X = s^2 (1 - s)^2,
/// with pressure x - 1/2 in the assembled sign convention; zero on the boundary.
std::array<double, 2> manufactured_velocity(Point p);
std::array<double, 4> manufactured_gradient(Point p);
double manufactured_pressure(Point p);
/// Load that makes the manufactured pair solve the problem with this field.
VectorField manufactured_source(const NestedMesh& mesh, const PermeabilityField& field);

struct FineRecord {
  int velocity_dofs = 0;
  int pressure_dofs = 0;
  double momentum_residual = 0;
  double divergence_residual = 0;
  std::optional<double> velocity_l2_exact;  // manufactured source only
  std::optional<double> velocity_h1_exact;
};

struct CoarseRecord {
  std::string label;
  Selection selection;
  int dimension = 0;            // N_c: selected modes over all neighborhoods
  int effective_dimension = 0;  // rank after removing dependent rows
  double span_defect = 0;
  std::optional<double> l2_kappa;  // relative, fraction (not percent)
  std::optional<double> h1_kappa;
  double tnorm_error = 0;  // relative
  double orthogonality = 0;
  double divergence_containment = 0;
  std::optional<double> velocity_l2_exact;
  std::optional<double> velocity_h1_exact;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0;
  double tolerance = 0;
  std::string detail;
  nlohmann::json data = nlohmann::json::object();
};

struct RunReport {
  nlohmann::json config_echo;
  int snapshot_dimension = 0;
  FineRecord fine;
  std::vector<CoarseRecord> runs;
  std::vector<CheckResult> checks;
  std::vector<std::string> deviations;
  nlohmann::json timings = nlohmann::json::object();  // kept out of report.json so reports stay reproducible
  nlohmann::json offline_dump = nlohmann::json::object();
};

/// In-memory results for heatmaps and further inspection.
struct ExperimentArtifacts {
  std::unique_ptr<NestedMesh> mesh;
  PermeabilityField field;
  std::unique_ptr<OfflinePipeline> pipeline;
  MixedFunction fine;
  std::vector<MixedFunction> coarse;  // same order as RunReport::runs
};

/// Throws NumericalError or std::runtime_error tagged with the failing stage.
RunReport run_experiment(const ExperimentConfig& config, ExperimentArtifacts* artifacts = nullptr);

std::vector<std::string> standard_deviations(const ExperimentConfig& config);

nlohmann::json to_json(const RunReport& report);
nlohmann::json to_json(const CheckResult& check);
std::string runs_csv(const RunReport& report);
/// Fixed-width table with percentages to two decimals.
std::string runs_table(const RunReport& report);
std::string checks_table(const std::vector<CheckResult>& checks);

/// report.json, report.csv, timings.json and offline.json in `dir`.
void write_report(const RunReport& report, const std::filesystem::path& dir);

}  // namespace gmsfem::driver
