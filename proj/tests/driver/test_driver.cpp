#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmsfem/driver/checks.hpp"
#include "gmsfem/driver/config.hpp"
#include "gmsfem/driver/experiment.hpp"
#include "gmsfem/driver/heatmap.hpp"

using namespace gmsfem;
using namespace gmsfem::driver;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("gmsfem-driver-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config(const std::string& out) {
  ExperimentConfig c;
  c.n_coarse = 4;
  c.refine = 3;
  c.out_dir = scratch(out);
  return c;
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto c = parse_config("");
  CHECK(c.n_coarse == 8);
  CHECK(c.refine == 4);
  CHECK(c.preset == "fig2a");
  CHECK(c.policy == SelectionPolicy::ThresholdGe);
  REQUIRE(c.lambda_off.size() == 4);
  CHECK(c.lambda_off[0] == doctest::Approx(1.0 / 3));
  CHECK(c.lambda_off[3] == doctest::Approx(0.1));
}

TEST_CASE("config keys, fractions and lists") {
  const auto c = parse_config(
      "profile = paper\n"
      "[mesh]\nrefine = 5\n"
      "[field]\npreset = fig2c\ncontrast = 1e6\n"
      "[bc]\ngx = 0.5\ngy = -1\n"
      "[selection]\npolicy = smallest\nm_off = 1, 3\nlambda_off = 1/2, 1/5\n"
      "[spectral]\nvariant = analysis\n"
      "[check]\nseed = 18446744073709551615\ncontrasts = 1, 1e3\n");
  CHECK(c.n_coarse == 10);  // from the profile
  CHECK(c.refine == 5);     // explicit key beats the profile
  CHECK(c.preset == "fig2c");
  CHECK(c.contrast == 1e6);
  CHECK(c.g == std::array<double, 2>{0.5, -1});
  CHECK(c.policy == SelectionPolicy::Smallest);
  CHECK(c.m_off == std::vector<int>{1, 3});
  CHECK(c.lambda_off == std::vector<double>{0.5, 0.2});
  CHECK(c.variant == SpectralVariant::Analysis);
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(selections(c).size() == 2);
  CHECK(selection_label(selections(c)[1]) == "m_off=3");
}

TEST_CASE("flags override the file") {
  const auto file = parse_config("[mesh]\nn_coarse = 10\n");
  ConfigOverrides o;
  o.n_coarse = 5;
  o.lambda_off = {0.5};
  const auto c = apply_overrides(file, o);
  CHECK(c.n_coarse == 5);
  CHECK(c.lambda_off == std::vector<double>{0.5});
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_config("[selection]\nlambda_off = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[selection]\nlambda_off = 1/0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nn_corse = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[meshes]\nn_coarse = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[field]\npreset = fig2a\nfile = x.txt\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[field]\npreset = fig9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[field]\nbackground = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nrefine = two\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[field]\ncontrast = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("profile = huge\n"), ConfigError);
  ConfigOverrides both;
  both.preset = "fig2a";
  both.field_file = "f.txt";
  CHECK_THROWS_AS(apply_overrides(ExperimentConfig{}, both), ConfigError);
  CHECK(parse_number(" 1/7 ") == doctest::Approx(1.0 / 7));
  CHECK_THROWS_AS(parse_number("abc"), ConfigError);
}

TEST_CASE("constant solution gives a uniform image") {
  const auto mesh = NestedMesh::build(2, 2);
  const PermeabilityField field(4, 4, std::vector<double>(16, 3.0));
  MixedFunction u;
  u.velocity = interpolate(mesh, [](Point) { return std::array<double, 2>{1.0, 0.0}; });
  u.pressure = Vector::Zero(mesh.num_triangles());
  const auto path = scratch("uniform") / "speed.ppm";
  emit_heatmap(mesh, u, field, Channel::Speed, path);
  const auto side = slurp(path.string() + ".txt");
  CHECK(side.find("min = 1\n") != std::string::npos);
  CHECK(side.find("max = 1\n") != std::string::npos);
  const auto img = slurp(path);
  CHECK(img.rfind("P6\n4 4\n255\n", 0) == 0);
  CHECK(img.size() == std::string("P6\n4 4\n255\n").size() + 48);
}

TEST_CASE("field image reproduces the preset mask") {
  const auto mesh = NestedMesh::build(4, 4);
  const auto spec = preset_with_contrast("fig2a", 1e4);
  const auto field = generate_field(spec, mesh);
  const auto values = cell_values(mesh, MixedFunction{}, field, Channel::Field);
  // rasterization oracle: the feature covering each cell center, last one wins
  const int n = mesh.n_fine();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Point c{(i + 0.5) / n, (j + 0.5) / n};
      double expect = spec.background;
      for (const auto& f : spec.features) {
        if (f.covers(c)) expect = f.value;
      }
      CHECK(values[static_cast<std::size_t>(i + j * n)] == expect);
    }
  }
}

TEST_CASE("run report: schema, policy and lifting bookkeeping, determinism") {
  const auto c = small_config("run");
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  const auto ja = to_json(a), jb = to_json(b);
  CHECK(ja == jb);
  for (const char* key : {"config_echo", "runs", "checks", "deviations"}) CHECK(ja.contains(key));
  REQUIRE(ja["runs"].size() == 6);  // fine, four thresholds, full snapshot space
  for (std::size_t k = 1; k < ja["runs"].size(); ++k) {
    CHECK(ja["runs"][k]["lifting"] == "blockwise harmonic lifting");
    CHECK(ja["runs"][k]["configured_policy"] == "threshold-ge");
  }
  CHECK(a.runs.back().selection.policy == SelectionPolicy::All);
  CHECK(check_error_trend(a).passed);
  CHECK(check_orthogonality(a).passed);
  write_report(a, c.out_dir);
  for (const char* f : {"report.json", "report.csv", "timings.json", "offline.json"}) CHECK(std::filesystem::exists(c.out_dir / f));
  CHECK(slurp(c.out_dir / "report.csv").find("lambda_off=1/3,threshold-ge,") != std::string::npos);
  CHECK(runs_table(a).find("L2_kappa (%)") != std::string::npos);
}

TEST_CASE("heatmap differences follow the error ordering") {
  const auto c = small_config("heat");
  ExperimentArtifacts art;
  const auto report = run_experiment(c, &art);
  const auto fine = cell_values(*art.mesh, art.fine, art.field, Channel::Speed);
  const auto first = cell_values(*art.mesh, art.coarse.front(), art.field, Channel::Speed);
  const auto last = cell_values(*art.mesh, art.coarse[art.coarse.size() - 2], art.field, Channel::Speed);
  CHECK(*report.runs.front().l2_kappa > *report.runs[report.runs.size() - 2].l2_kappa);
  CHECK(pixel_relative_difference(first, fine) > pixel_relative_difference(last, fine));
}

TEST_CASE("manufactured source run reports exact errors") {
  auto c = small_config("manufactured");
  c.source = SourceKind::Manufactured;
  c.preset = "fig2b";
  c.contrast = 10;
  const auto r = run_experiment(c);
  REQUIRE(r.fine.velocity_l2_exact.has_value());
  CHECK(*r.fine.velocity_l2_exact < 1e-3);
  CHECK(r.runs.back().velocity_l2_exact.has_value());
}

TEST_CASE("negative control: skipping the correction fails containment only") {
  auto c = small_config("negative");
  c.skip_divergence_correction = true;
  const auto r = run_experiment(c);
  CHECK_FALSE(check_containment(r).passed);
  CHECK(check_orthogonality(r).passed);
  c.skip_divergence_correction = false;
  CHECK(check_containment(run_experiment(c)).passed);
}

TEST_CASE("stage-tagged failures") {
  auto c = small_config("bad-file");
  c.preset.clear();
  c.field_file = "/nonexistent/field.txt";
  CHECK_THROWS_WITH_AS(run_experiment(c), doctest::Contains("field:"), std::exception);
}
