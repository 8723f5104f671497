#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "gmsfem/perm_field.hpp"

using namespace gmsfem;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Independent rasterizer: rectangles by interval test, channels by sampled segment distance.
bool inside(const Feature& f, double x, double y) {
  if (f.shape == Feature::Shape::Rectangle) {
    return std::min(f.x0, f.x1) <= x && x <= std::max(f.x0, f.x1) && std::min(f.y0, f.y1) <= y && y <= std::max(f.y0, f.y1);
  }
  double best = 1e300;
  for (int k = 0; k <= 20000; ++k) {
    const double t = k / 20000.0;
    best = std::min(best, std::hypot(x - (f.x0 + t * (f.x1 - f.x0)), y - (f.y0 + t * (f.y1 - f.y0))));
  }
  return best <= 0.5 * f.width + 1e-4;
}

}  // namespace

TEST_CASE("uniform spec gives a homogeneous field") {
  const auto mesh = NestedMesh::build(2, 3);
  const auto field = generate_field(FieldSpec{1.0, {}}, mesh);
  CHECK(field.size() == 36);
  CHECK(field.contrast() == 1.0);
  CHECK(field.M() == 1.0);
}

TEST_CASE("M is max(||kinv||_inf, 1)") {
  const auto mesh = NestedMesh::build(2, 4);
  FieldSpec spec{1e-4, {{Feature::Shape::Rectangle, 0.2, 0.2, 0.6, 0.6, 0, 1.0}}};
  const auto field = generate_field(spec, mesh);
  CHECK(field.M() == 1.0);
  CHECK(field.contrast() == doctest::Approx(1e4));
  spec.background = 50.0;
  CHECK(generate_field(spec, mesh).M() == 50.0);
}

TEST_CASE("presets rasterize like a brute-force cell-center test") {
  const auto mesh = NestedMesh::build(8, 4);
  for (auto name : kPresetNames) {
    const auto spec = preset(name, 1e4, 1.0);
    const auto field = generate_field(spec, mesh);
    const double h = mesh.h();
    int features = 0, mismatches = 0;
    for (int j = 0; j < mesh.n_fine(); ++j) {
      for (int i = 0; i < mesh.n_fine(); ++i) {
        const double x = (i + 0.5) * h, y = (j + 0.5) * h;
        bool covered = false;
        for (const auto& f : spec.features) covered = covered || inside(f, x, y);
        const double expect = covered ? 1.0 : 1e4;
        if (field.inv_perm(i, j) != expect) ++mismatches;
        features += covered ? 1 : 0;
      }
    }
    CHECK_MESSAGE(mismatches <= 2, name);  // the oracle's sampled distance may differ on exact ties
    CHECK(features > 0);
    CHECK(field.contrast() == doctest::Approx(1e4));
  }
}

TEST_CASE("contrast mapping of presets") {
  CHECK(preset_with_contrast("fig2a", 100).background == 100);
  CHECK(preset_with_contrast("fig2b", 100).features.front().value == 100);
  CHECK(preset_with_contrast("fig2c", 100).features.front().value == doctest::Approx(0.01));
  CHECK(preset_with_contrast("fig2d", 100).background == doctest::Approx(0.01));
  CHECK_THROWS_AS(preset_with_contrast("fig9", 10), std::invalid_argument);
  CHECK_THROWS_AS(preset_with_contrast("fig2a", 0.5), std::invalid_argument);
}

TEST_CASE("shipped preset files match the built-in geometry") {
  for (auto name : kPresetNames) {
    const auto path = std::filesystem::path(GMSFEM_SOURCE_DIR) / "share" / "presets" / (std::string(name) + ".spec");
    CHECK(read_file(path) == std::string(preset_geometry(name)));
  }
}

TEST_CASE("field file round trip is exact") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> expo(-6, 6);
  std::vector<double> v(5 * 3);
  for (auto& x : v) x = std::pow(10.0, expo(rng));
  const PermeabilityField f(5, 3, v);
  CHECK(parse_field(format_field(f)) == f);
  const auto path = std::filesystem::temp_directory_path() / "gmsfem_field_roundtrip.txt";
  save_field(f, path);
  CHECK(load_field(path) == f);
  std::filesystem::remove(path);
}

TEST_CASE("field file indexing and validation") {
  const auto f = parse_field("2 2\n1 2\n3 4\n");
  CHECK(f.inv_perm(0, 0) == 1);
  CHECK(f.inv_perm(1, 0) == 2);
  CHECK(f.inv_perm(0, 1) == 3);
  CHECK(f.inv_perm(1, 1) == 4);

  try {
    parse_field("2 2\n1 2\n3 0\n");
    FAIL("zero accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3, column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_field("2 2\n1 x\n3 4\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("2 2\n1 2\n3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_field("2 2\n1 2\n"), std::invalid_argument);

  const auto mesh = NestedMesh::build(1, 3);
  CHECK_THROWS_AS(f.check_matches(mesh), std::invalid_argument);
}

TEST_CASE("spec text round trip and validation") {
  const auto spec = preset("fig2c", 1.0, 1e-3);
  const auto again = parse_field_spec(format_field_spec(spec));
  CHECK(again.background == spec.background);
  REQUIRE(again.features.size() == spec.features.size());
  for (std::size_t k = 0; k < spec.features.size(); ++k) CHECK(again.features[k].value == spec.features[k].value);
  CHECK_THROWS_AS(parse_field_spec("background 1\nrect 0 0 2 1 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_field_spec("background -1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_field_spec("rect 0 0 1 1 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_field_spec("background 1\nblob 0 0 1 1 3\n"), std::invalid_argument);
}

TEST_CASE("generate_field is pure") {
  const auto mesh = NestedMesh::build(4, 4);
  const auto spec = preset_with_contrast("fig2b", 1e6);
  CHECK(generate_field(spec, mesh) == generate_field(spec, mesh));
}
