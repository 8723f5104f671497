#include "gmsfem/driver/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "gmsfem/driver/config.hpp"

namespace gmsfem::driver {

namespace {

std::array<unsigned char, 3> color(double t) {
  static constexpr double stops[5][3] = {{0.05, 0.10, 0.55}, {0.10, 0.60, 0.90}, {0.20, 0.75, 0.30},
                                         {0.95, 0.85, 0.15}, {0.80, 0.10, 0.10}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(static_cast<int>(t), 3);
  const double w = t - k;
  std::array<unsigned char, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = (1 - w) * stops[k][c] + w * stops[k + 1][c];
    out[static_cast<std::size_t>(c)] = static_cast<unsigned char>(std::lround(255 * v));
  }
  return out;
}

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Speed: return "speed";
    case Channel::Pressure: return "pressure";
    case Channel::Field: return "field";
  }
  return "?";
}

}  // namespace

Channel parse_channel(std::string_view text) {
  if (text == "speed") return Channel::Speed;
  if (text == "pressure") return Channel::Pressure;
  if (text == "field") return Channel::Field;
  throw ConfigError("unknown heatmap channel '" + std::string(text) + "' (speed, pressure, field)");
}

std::vector<double> cell_values(const NestedMesh& mesh, const MixedFunction& solution, const PermeabilityField& field,
                                Channel channel) {
  const int n = mesh.n_fine();
  const int nodes = mesh.num_nodes();
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int cell = i + j * n;
      double v = 0;
      switch (channel) {
        case Channel::Speed: {
          // the diagonal midpoint is the square center
          const int node = mesh.node_index(2 * i + 1, 2 * j + 1);
          v = std::hypot(solution.velocity(node), solution.velocity(node + nodes));
          break;
        }
        case Channel::Pressure:
          v = 0.5 * (solution.pressure(2 * cell) + solution.pressure(2 * cell + 1));
          break;
        case Channel::Field:
          v = field.inv_perm(cell);
          break;
      }
      out[static_cast<std::size_t>(cell)] = v;
    }
  }
  return out;
}

void write_heatmap(const std::vector<double>& values, int n, Channel channel, const std::filesystem::path& path) {
  if (values.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("heatmap: value count does not match the grid");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream img(path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot write " + path.string());
  img << "P6\n" << n << ' ' << n << "\n255\n";
  for (int j = n - 1; j >= 0; --j) {
    for (int i = 0; i < n; ++i) {
      const double v = values[static_cast<std::size_t>(i + j * n)];
      const auto rgb = color(hi > lo ? (v - lo) / (hi - lo) : 0.5);
      img.write(reinterpret_cast<const char*>(rgb.data()), 3);
    }
  }
  std::ofstream side(path.string() + ".txt");
  if (!side) throw std::runtime_error("cannot write " + path.string() + ".txt");
  side.precision(17);
  side << "channel = " << channel_name(channel) << "\nwidth = " << n << "\nheight = " << n << "\nmin = " << lo
       << "\nmax = " << hi << '\n';
}

void emit_heatmap(const NestedMesh& mesh, const MixedFunction& solution, const PermeabilityField& field, Channel channel,
                  const std::filesystem::path& path) {
  write_heatmap(cell_values(mesh, solution, field, channel), mesh.n_fine(), channel, path);
}

double pixel_relative_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("pixel difference: sizes differ");
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace gmsfem::driver
