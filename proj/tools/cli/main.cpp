#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gmsfem/driver/checks.hpp"
#include "gmsfem/driver/config.hpp"
#include "gmsfem/driver/experiment.hpp"
#include "gmsfem/driver/heatmap.hpp"

namespace drv = gmsfem::driver;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;
constexpr int kCheckFailed = 3;

struct Flags {
  std::string config;
  drv::ConfigOverrides overrides;
  std::vector<std::string> lambda_off;
};

void add_common(CLI::App* app, Flags& f) {
  auto& o = f.overrides;
  app->add_option("--config", f.config, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--profile", o.profile, "desk or paper mesh sizes");
  app->add_option("--preset", o.preset, "fig2a, fig2b, fig2c or fig2d");
  app->add_option("--field-file", o.field_file, "inverse-permeability grid file");
  app->add_option("--contrast", o.contrast, "contrast of the preset");
  app->add_option("--n-coarse", o.n_coarse, "coarse blocks per side");
  app->add_option("--refine", o.refine, "fine cells per coarse block side");
  app->add_option("--policy", o.policy, "threshold-ge, smallest or all");
  app->add_option("--lambda-off", f.lambda_off, "threshold, repeatable; fractions like 1/7 allowed");
  app->add_option("--m-off", o.m_off, "modes per neighborhood, repeatable");
  app->add_option("--variant", o.variant, "numerics or analysis");
  app->add_option("--out", o.out_dir, "output directory");
  app->add_option("--seed", o.seed, "seed of the randomized checks");
  app->add_flag("--skip-divergence-correction", o.skip_divergence_correction, "debug: build raw PoU products");
}

drv::ExperimentConfig resolve(Flags& f) {
  drv::ExperimentConfig base = f.config.empty() ? drv::ExperimentConfig{} : drv::load_config(f.config);
  for (const auto& s : f.lambda_off) f.overrides.lambda_off.push_back(drv::parse_number(s));
  return drv::apply_overrides(base, f.overrides);
}

int cmd_run(Flags& f) {
  const auto config = resolve(f);
  const auto report = drv::run_experiment(config);
  drv::write_report(report, config.out_dir);
  std::cout << drv::runs_table(report) << "report written to " << config.out_dir.string() << '\n';
  return kOk;
}

int cmd_check(Flags& f) {
  const auto config = resolve(f);
  drv::RunReport report;
  report.checks = drv::check_invariants(config, &report);
  drv::write_report(report, config.out_dir);
  std::cout << drv::checks_table(report.checks);
  const bool ok = std::all_of(report.checks.begin(), report.checks.end(), [](const auto& c) { return c.passed; });
  return ok ? kOk : kCheckFailed;
}

int cmd_field(Flags& f, bool preview) {
  const auto config = resolve(f);
  const auto mesh = drv::build_mesh(config);
  const auto field = drv::build_field(config, mesh);
  std::filesystem::create_directories(config.out_dir);
  gmsfem::save_field(field, config.out_dir / "field.txt");
  if (preview) {
    drv::write_heatmap(field.values(), field.nx(), drv::Channel::Field, config.out_dir / "field.ppm");
  }
  std::cout << "field " << field.nx() << "x" << field.ny() << ", kinv in [" << field.min() << ", " << field.max()
            << "], written to " << (config.out_dir / "field.txt").string() << '\n';
  return kOk;
}

int cmd_heatmap(Flags& f, const std::vector<std::string>& channels) {
  const auto config = resolve(f);
  drv::ExperimentArtifacts art;
  const auto report = drv::run_experiment(config, &art);
  drv::write_report(report, config.out_dir);
  const auto dir = config.out_dir / "heatmaps";
  std::ofstream summary((std::filesystem::create_directories(dir), dir / "summary.txt"));
  for (const auto& name : channels) {
    const auto ch = drv::parse_channel(name);
    const auto fine = drv::cell_values(*art.mesh, art.fine, art.field, ch);
    drv::write_heatmap(fine, art.mesh->n_fine(), ch, dir / ("fine_" + name + ".ppm"));
    if (ch == drv::Channel::Field) continue;
    for (std::size_t k = 0; k < art.coarse.size(); ++k) {
      std::string label = report.runs[k].label;
      std::replace(label.begin(), label.end(), '/', '_');
      std::replace(label.begin(), label.end(), '=', '_');
      const auto values = drv::cell_values(*art.mesh, art.coarse[k], art.field, ch);
      drv::write_heatmap(values, art.mesh->n_fine(), ch, dir / ("coarse_" + label + "_" + name + ".ppm"));
      summary << name << ' ' << report.runs[k].label << " pixel_relative_difference "
              << drv::pixel_relative_difference(values, fine) << '\n';
    }
  }
  std::cout << drv::runs_table(report) << "heatmaps written to " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale Brinkman solver: fine reference, coarse spectral spaces, diagnostics"};
  app.require_subcommand(1);
  Flags run_flags, check_flags, field_flags, heat_flags;
  auto* run = app.add_subcommand("run", "fine and coarse solves over the selection sweep");
  add_common(run, run_flags);
  auto* check = app.add_subcommand("check", "invariant suite; exit code 3 when a check fails");
  add_common(check, check_flags);
  auto* field = app.add_subcommand("field", "write the permeability field (and a preview image)");
  add_common(field, field_flags);
  bool no_preview = false;
  field->add_flag("--no-preview", no_preview, "skip field.ppm");
  auto* heat = app.add_subcommand("heatmap", "run, then write speed/pressure/field images");
  add_common(heat, heat_flags);
  std::vector<std::string> channels{"speed"};
  heat->add_option("--channel", channels, "speed, pressure or field; repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*check) return cmd_check(check_flags);
    if (*field) return cmd_field(field_flags, !no_preview);
    if (*heat) return cmd_heatmap(heat_flags, channels);
  } catch (const drv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfigError;
  } catch (const gmsfem::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kOk;
}
