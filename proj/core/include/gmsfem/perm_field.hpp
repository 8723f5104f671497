#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gmsfem/mesh.hpp"

namespace gmsfem {

/// Axis-aligned rectangle, or a straight channel of given width between two points.
struct Feature {
  enum class Shape { Rectangle, Channel };
  Shape shape = Shape::Rectangle;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width = 0;  // channels only
  double value = 1;

  bool covers(Point p) const;
};

/// Background value plus features painted in order; the last feature
/// covering a cell center wins.
struct FieldSpec {
  double background = 1.0;
  std::vector<Feature> features;

  /// Throws std::invalid_argument on non-positive values or extents outside [0,1]^2.
  void validate() const;
};

/// Inverse permeability, one positive value per fine square (shared by
/// both of its triangles). Cell (i, j) is stored at i + j n.
class PermeabilityField {
public:
  PermeabilityField() = default;
  PermeabilityField(int nx, int ny, std::vector<double> values);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  double inv_perm(int cell) const { return values_[static_cast<std::size_t>(cell)]; }
  double inv_perm(int i, int j) const { return values_[static_cast<std::size_t>(i + j * nx_)]; }
  double perm(int cell) const { return 1.0 / inv_perm(cell); }
  double inv_perm_of_triangle(int t) const { return inv_perm(t / 2); }

  double min() const { return min_; }
  double max() const { return max_; }
  double contrast() const { return max_ / min_; }
  /// max(||kappa^-1||_inf, 1)
  double M() const { return std::max(max_, 1.0); }

  /// Throws std::invalid_argument unless the field has one value per fine square of `mesh`.
  void check_matches(const NestedMesh& mesh) const;

  bool operator==(const PermeabilityField&) const = default;

private:
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> values_;
  double min_ = 0;
  double max_ = 0;
};

PermeabilityField generate_field(const FieldSpec& spec, const NestedMesh& mesh);

/// Plain-text grid: "nx ny", then ny rows of nx values, bottom row first.
PermeabilityField load_field(const std::filesystem::path& path);
PermeabilityField parse_field(std::string_view text);
void save_field(const PermeabilityField& field, const std::filesystem::path& path);
std::string format_field(const PermeabilityField& field);

/// Geometry spec text: "background v", "rect x0 y0 x1 y1 v",
/// "channel x0 y0 x1 y1 width v"; '#' starts a comment. The tokens
/// "background" and "feature" may stand in for any value.
FieldSpec parse_field_spec(std::string_view text, double background_value = 1.0, double feature_value = 1.0);
std::string format_field_spec(const FieldSpec& spec);

inline constexpr std::string_view kPresetNames[] = {"fig2a", "fig2b", "fig2c", "fig2d"};

/// Built-in scenario with explicit background and feature values.
/// The geometries are hand-drawn approximations of four flow regimes:
///   fig2a  slow Darcy background crossed by fast channels and inclusions
///   fig2b  slow inclusions in a faster Darcy background
///   fig2c  free-flow channels and inclusions in a Darcy background
///   fig2d  Darcy inclusions in a free-flow background
FieldSpec preset(std::string_view name, double background, double feature);
/// Same geometry with the (background, feature) pair derived from a contrast ratio.
FieldSpec preset_with_contrast(std::string_view name, double contrast);
bool is_preset(std::string_view name);
/// Geometry text of a preset, with "background"/"feature" placeholders.
std::string_view preset_geometry(std::string_view name);

}  // namespace gmsfem
