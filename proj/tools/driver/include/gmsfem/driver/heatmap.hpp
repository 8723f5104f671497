#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include "gmsfem/fem.hpp"

namespace gmsfem::driver {

enum class Channel { Speed, Pressure, Field };

Channel parse_channel(std::string_view text);

/// One value per fine square, row-major from the bottom row: velocity
/// magnitude at the square center, mean pressure of its two triangles, or kinv.
std::vector<double> cell_values(const NestedMesh& mesh, const MixedFunction& solution, const PermeabilityField& field,
                                Channel channel);

/// Binary PPM (top row = largest y) with a linear blue-to-red map, plus a
/// sidecar `<path>.txt` holding channel, min and max.
void write_heatmap(const std::vector<double>& values, int n, Channel channel, const std::filesystem::path& path);

void emit_heatmap(const NestedMesh& mesh, const MixedFunction& solution, const PermeabilityField& field, Channel channel,
                  const std::filesystem::path& path);

/// ||a - b|| / ||b|| over pixel values.
double pixel_relative_difference(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gmsfem::driver
