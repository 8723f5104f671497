#include "gmsfem/perm_field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gmsfem {

namespace {

// Geometry of the built-in scenarios. Kept byte-identical to share/presets/*.spec.
constexpr std::string_view kFig2a = R"(# fig2a: fast channels and inclusions crossing a slow Darcy background
background background
channel 0.00 0.30 1.00 0.36 0.05 feature
channel 0.00 0.74 1.00 0.66 0.04 feature
rect 0.10 0.08 0.18 0.16 feature
rect 0.44 0.10 0.53 0.19 feature
rect 0.78 0.05 0.86 0.14 feature
rect 0.22 0.48 0.31 0.57 feature
rect 0.58 0.45 0.68 0.55 feature
rect 0.84 0.46 0.92 0.54 feature
rect 0.14 0.84 0.22 0.92 feature
rect 0.50 0.82 0.58 0.90 feature
rect 0.80 0.85 0.88 0.93 feature
)";

constexpr std::string_view kFig2b = R"(# fig2b: slow inclusions in a faster Darcy background
background background
rect 0.06 0.06 0.16 0.16 feature
rect 0.38 0.08 0.47 0.17 feature
rect 0.70 0.05 0.80 0.15 feature
rect 0.20 0.30 0.29 0.40 feature
rect 0.53 0.28 0.63 0.37 feature
rect 0.84 0.32 0.93 0.41 feature
rect 0.07 0.56 0.16 0.65 feature
rect 0.38 0.55 0.48 0.64 feature
rect 0.68 0.58 0.77 0.68 feature
rect 0.22 0.80 0.31 0.90 feature
rect 0.54 0.82 0.63 0.91 feature
rect 0.84 0.80 0.94 0.89 feature
)";

constexpr std::string_view kFig2c = R"(# fig2c: free-flow channels and inclusions in a Darcy background
background background
channel 0.00 0.22 1.00 0.28 0.05 feature
channel 0.00 0.60 1.00 0.52 0.04 feature
channel 0.35 0.00 0.42 1.00 0.04 feature
rect 0.08 0.40 0.16 0.48 feature
rect 0.62 0.06 0.70 0.14 feature
rect 0.78 0.36 0.86 0.44 feature
rect 0.12 0.78 0.20 0.86 feature
rect 0.62 0.76 0.71 0.85 feature
rect 0.85 0.85 0.93 0.93 feature
)";

constexpr std::string_view kFig2d = R"(# fig2d: Darcy inclusions inside a free-flow background
background background
rect 0.08 0.10 0.20 0.20 feature
rect 0.40 0.06 0.50 0.18 feature
rect 0.72 0.12 0.84 0.22 feature
rect 0.16 0.40 0.26 0.52 feature
rect 0.46 0.38 0.58 0.48 feature
rect 0.78 0.44 0.88 0.56 feature
rect 0.06 0.72 0.18 0.82 feature
rect 0.38 0.70 0.48 0.82 feature
rect 0.66 0.76 0.78 0.86 feature
)";

std::string_view preset_text(std::string_view name) {
  if (name == "fig2a") return kFig2a;
  if (name == "fig2b") return kFig2b;
  if (name == "fig2c") return kFig2c;
  if (name == "fig2d") return kFig2d;
  throw std::invalid_argument("unknown field preset '" + std::string(name) + "'");
}

double segment_distance(Point p, double x0, double y0, double x1, double y1) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - x0) * dx + (p.y - y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (x0 + t * dx), p.y - (y0 + t * dy));
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

bool Feature::covers(Point p) const {
  if (shape == Shape::Rectangle) {
    return p.x >= std::min(x0, x1) && p.x <= std::max(x0, x1) && p.y >= std::min(y0, y1) && p.y <= std::max(y0, y1);
  }
  return segment_distance(p, x0, y0, x1, y1) <= 0.5 * width;
}

void FieldSpec::validate() const {
  if (!(background > 0.0) || !std::isfinite(background)) {
    throw std::invalid_argument("field spec: background value must be positive and finite");
  }
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& f = features[k];
    if (!(f.value > 0.0) || !std::isfinite(f.value)) {
      throw std::invalid_argument("field spec: feature " + std::to_string(k) + " has a non-positive value");
    }
    if (!in_unit(f.x0) || !in_unit(f.x1) || !in_unit(f.y0) || !in_unit(f.y1)) {
      throw std::invalid_argument("field spec: feature " + std::to_string(k) + " extends outside the unit square");
    }
    if (f.shape == Feature::Shape::Channel && !(f.width > 0.0)) {
      throw std::invalid_argument("field spec: channel " + std::to_string(k) + " needs a positive width");
    }
  }
}

PermeabilityField::PermeabilityField(int nx, int ny, std::vector<double> values)
    : nx_(nx), ny_(ny), values_(std::move(values)) {
  if (nx_ < 1 || ny_ < 1 || values_.size() != static_cast<std::size_t>(nx_) * ny_) {
    throw std::invalid_argument("permeability field: value count does not match " + std::to_string(nx_) + "x" +
                                std::to_string(ny_));
  }
  min_ = std::numeric_limits<double>::infinity();
  max_ = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("permeability field: non-positive value at cell (" + std::to_string(k % nx_) +
                                  ", " + std::to_string(k / nx_) + ")");
    }
    min_ = std::min(min_, v);
    max_ = std::max(max_, v);
  }
}

void PermeabilityField::check_matches(const NestedMesh& mesh) const {
  if (nx_ != mesh.n_fine() || ny_ != mesh.n_fine()) {
    throw std::invalid_argument("permeability field is " + std::to_string(nx_) + "x" + std::to_string(ny_) +
                                " but the fine mesh has " + std::to_string(mesh.n_fine()) + "x" +
                                std::to_string(mesh.n_fine()) + " squares");
  }
}

PermeabilityField generate_field(const FieldSpec& spec, const NestedMesh& mesh) {
  spec.validate();
  const int n = mesh.n_fine();
  const double h = mesh.h();
  std::vector<double> values(static_cast<std::size_t>(n) * n, spec.background);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point c{(i + 0.5) * h, (j + 0.5) * h};
      for (const auto& f : spec.features) {
        if (f.covers(c)) values[static_cast<std::size_t>(i + j * n)] = f.value;
      }
    }
  }
  return PermeabilityField(n, n, std::move(values));
}

PermeabilityField parse_field(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto next_content_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_content_line(line)) throw std::invalid_argument("field file: empty input");
  int nx = 0, ny = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> nx >> ny) || (header >> extra) || nx < 1 || ny < 1) {
      throw std::invalid_argument("field file: line " + std::to_string(line_no) + ": expected header 'nx ny'");
    }
  }
  std::vector<double> values(static_cast<std::size_t>(nx) * ny);
  for (int row = 0; row < ny; ++row) {
    if (!next_content_line(line)) {
      throw std::invalid_argument("field file: expected " + std::to_string(ny) + " rows, found " + std::to_string(row));
    }
    std::istringstream ls(line);
    std::string token;
    int col = 0;
    while (ls >> token) {
      if (col >= nx) {
        throw std::invalid_argument("field file: line " + std::to_string(line_no) + " has more than " +
                                    std::to_string(nx) + " values");
      }
      double v = 0;
      const std::string where = "line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                                " (cell " + std::to_string(col) + ", " + std::to_string(row) + ")";
      if (!parse_double(token, v)) throw std::invalid_argument("field file: non-numeric value '" + token + "' at " + where);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument("field file: non-positive value " + token + " at " + where);
      }
      values[static_cast<std::size_t>(col + row * nx)] = v;
      ++col;
    }
    if (col != nx) {
      throw std::invalid_argument("field file: line " + std::to_string(line_no) + " has " + std::to_string(col) +
                                  " values, expected " + std::to_string(nx));
    }
  }
  if (next_content_line(line)) throw std::invalid_argument("field file: trailing data after " + std::to_string(ny) + " rows");
  return PermeabilityField(nx, ny, std::move(values));
}

PermeabilityField load_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open field file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_field(buf.str());
}

std::string format_field(const PermeabilityField& field) {
  std::ostringstream os;
  os.precision(17);
  os << field.nx() << ' ' << field.ny() << '\n';
  for (int j = 0; j < field.ny(); ++j) {
    for (int i = 0; i < field.nx(); ++i) {
      if (i) os << ' ';
      os << field.inv_perm(i, j);
    }
    os << '\n';
  }
  return os.str();
}

void save_field(const PermeabilityField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write field file " + path.string());
  out << format_field(field);
  if (!out) throw std::runtime_error("failed writing field file " + path.string());
}

FieldSpec parse_field_spec(std::string_view text, double background_value, double feature_value) {
  FieldSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool have_background = false;
  auto value_of = [&](const std::string& tok, double& out) {
    if (tok == "feature") {
      out = feature_value;
      return true;
    }
    if (tok == "background") {
      out = background_value;
      return true;
    }
    return parse_double(tok, out);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& msg) {
      throw std::invalid_argument("field spec line " + std::to_string(line_no) + ": " + msg);
    };
    std::vector<double> nums;
    for (std::size_t k = 1; k < tok.size(); ++k) {
      double v = 0;
      if (!value_of(tok[k], v)) fail("bad number '" + tok[k] + "'");
      nums.push_back(v);
    }
    if (tok[0] == "background") {
      if (nums.size() != 1) fail("expected 'background value'");
      spec.background = nums[0];
      have_background = true;
    } else if (tok[0] == "rect") {
      if (nums.size() != 5) fail("expected 'rect x0 y0 x1 y1 value'");
      spec.features.push_back({Feature::Shape::Rectangle, nums[0], nums[1], nums[2], nums[3], 0.0, nums[4]});
    } else if (tok[0] == "channel") {
      if (nums.size() != 6) fail("expected 'channel x0 y0 x1 y1 width value'");
      spec.features.push_back({Feature::Shape::Channel, nums[0], nums[1], nums[2], nums[3], nums[4], nums[5]});
    } else {
      fail("unknown keyword '" + tok[0] + "'");
    }
  }
  if (!have_background) throw std::invalid_argument("field spec: missing 'background' line");
  spec.validate();
  return spec;
}

std::string format_field_spec(const FieldSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "background " << spec.background << '\n';
  for (const auto& f : spec.features) {
    if (f.shape == Feature::Shape::Rectangle) {
      os << "rect " << f.x0 << ' ' << f.y0 << ' ' << f.x1 << ' ' << f.y1 << ' ' << f.value << '\n';
    } else {
      os << "channel " << f.x0 << ' ' << f.y0 << ' ' << f.x1 << ' ' << f.y1 << ' ' << f.width << ' ' << f.value << '\n';
    }
  }
  return os.str();
}

std::string_view preset_geometry(std::string_view name) { return preset_text(name); }

bool is_preset(std::string_view name) {
  return std::find(std::begin(kPresetNames), std::end(kPresetNames), name) != std::end(kPresetNames);
}

FieldSpec preset(std::string_view name, double background, double feature) {
  return parse_field_spec(preset_text(name), background, feature);
}

FieldSpec preset_with_contrast(std::string_view name, double contrast) {
  if (!(contrast >= 1.0) || !std::isfinite(contrast)) {
    throw std::invalid_argument("contrast must be a finite value >= 1");
  }
  if (name == "fig2a") return preset(name, contrast, 1.0);
  if (name == "fig2b") return preset(name, 1.0, contrast);
  if (name == "fig2c") return preset(name, 1.0, 1.0 / contrast);
  if (name == "fig2d") return preset(name, 1.0 / contrast, 1.0);
  throw std::invalid_argument("unknown field preset '" + std::string(name) + "'");
}

}  // namespace gmsfem
