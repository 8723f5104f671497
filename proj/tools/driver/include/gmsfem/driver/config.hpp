#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmsfem/gmsfem.hpp"

namespace gmsfem::driver {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SourceKind { Zero, Manufactured };

struct ExperimentConfig {
  std::string profile = "desk";
  int n_coarse = 8;
  int refine = 4;

  // exactly one of preset / field_file
  std::string preset = "fig2a";
  std::string field_file;
  double contrast = 1e4;
  // explicit preset values; both or neither
  std::optional<double> background;
  std::optional<double> feature;

  std::array<double, 2> g{1.0, 0.0};
  SourceKind source = SourceKind::Zero;

  SelectionPolicy policy = SelectionPolicy::ThresholdGe;
  std::vector<double> lambda_off{1.0 / 3, 1.0 / 4, 1.0 / 7, 1.0 / 10};
  std::vector<int> m_off{2, 4, 6, 8};
  bool full_snapshot_run = true;
  SpectralVariant variant = SpectralVariant::Numerics;
  double snapshot_tol = 1e-10;

  std::filesystem::path out_dir = "gmsfem-out";
  std::uint64_t seed = 42;
  int stability_trials = 20;
  std::vector<double> sweep_contrasts{1.0, 1e2, 1e4, 1e6};
  bool skip_divergence_correction = false;  // debug: negative control for the containment check
};

/// Command-line values; set members override the file.
struct ConfigOverrides {
  std::optional<std::string> profile;
  std::optional<int> n_coarse;
  std::optional<int> refine;
  std::optional<std::string> preset;
  std::optional<std::string> field_file;
  std::optional<double> contrast;
  std::optional<std::string> policy;
  std::vector<double> lambda_off;
  std::vector<int> m_off;
  std::optional<std::string> variant;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool skip_divergence_correction = false;
};

/// Sections [mesh] [field] [bc] [source] [selection] [spectral] [output] [check];
/// see README for the keys. Unknown sections or keys throw ConfigError.
ExperimentConfig parse_config(std::string_view ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies a named profile ("desk" or "paper") and then the explicit overrides.
ExperimentConfig apply_overrides(ExperimentConfig config, const ConfigOverrides& overrides);

/// Throws ConfigError on any invariant violation.
void validate(const ExperimentConfig& config);

/// Accepts decimals and fractions such as "1/7".
double parse_number(std::string_view text);
SelectionPolicy parse_policy(std::string_view text);
std::string policy_name(SelectionPolicy policy);
SpectralVariant parse_variant(std::string_view text);
std::string variant_name(SpectralVariant variant);

nlohmann::json to_json(const ExperimentConfig& config);

NestedMesh build_mesh(const ExperimentConfig& config);
/// Field for the configured source; `contrast` replaces the configured one for sweeps.
PermeabilityField build_field(const ExperimentConfig& config, const NestedMesh& mesh,
                              std::optional<double> contrast = std::nullopt);
/// The configured selections, one per sweep item, in order.
std::vector<Selection> selections(const ExperimentConfig& config);
std::string selection_label(const Selection& selection);

}  // namespace gmsfem::driver
