#include "gmsfem/driver/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gmsfem::driver {

namespace {

double X0(double s) { return s * s * (1 - s) * (1 - s); }
double X1(double s) { return 2 * s - 6 * s * s + 4 * s * s * s; }
double X2(double s) { return 2 - 12 * s + 12 * s * s; }
double X3(double s) { return -12 + 24 * s; }

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(name) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(name) + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(name) + ": " + e.what());
  }
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * *v;
  return os.str();
}

}  // namespace

std::array<double, 2> manufactured_velocity(Point p) { return {X0(p.x) * X1(p.y), -X1(p.x) * X0(p.y)}; }

std::array<double, 4> manufactured_gradient(Point p) {
  return {X1(p.x) * X1(p.y), X0(p.x) * X2(p.y), -X2(p.x) * X0(p.y), -X1(p.x) * X1(p.y)};
}

double manufactured_pressure(Point p) { return p.x - 0.5; }

VectorField manufactured_source(const NestedMesh& mesh, const PermeabilityField& field) {
  const int n = mesh.n_fine();
  return [n, &field](Point p) {
    const int i = std::clamp(static_cast<int>(p.x * n), 0, n - 1);
    const int j = std::clamp(static_cast<int>(p.y * n), 0, n - 1);
    const double kinv = field.inv_perm(i, j);
    const double lap_x = X2(p.x) * X1(p.y) + X0(p.x) * X3(p.y);
    const double lap_y = -(X3(p.x) * X0(p.y) + X1(p.x) * X2(p.y));
    const auto u = manufactured_velocity(p);
    return std::array<double, 2>{-lap_x + kinv * u[0] - 1.0, -lap_y + kinv * u[1]};
  };
}

std::vector<std::string> standard_deviations(const ExperimentConfig& c) {
  std::vector<std::string> d{
      "lifting: coarse solves use the blockwise harmonic lifting (per-block Brinkman extension of the constant "
      "boundary value taken on the whole skeleton); the fine reference uses the constant lifting",
      "selection: threshold-ge keeps the zero modes and every mode with lambda_first/lambda_k >= lambda_off "
      "(lambda_first = smallest nonzero eigenvalue of the neighborhood); the alternative reading keeps the m_off "
      "smallest eigenvalues and is available as policy 'smallest'",
      "pressure sign: the computed pressure is minus the physical pressure (b(v,p) = int div v p)",
      "coarse rows: products of partition-of-unity members and modes that are linearly dependent on the fine grid "
      "are dropped before the solve; both the selected count and the effective rank are reported",
  };
  if (!c.preset.empty()) {
    d.push_back("field: preset '" + c.preset + "' is a hand-drawn approximation of the intended flow regime");
  }
  if (c.source == SourceKind::Manufactured) {
    d.push_back("source: manufactured solution vanishes on the boundary, so the configured boundary value is replaced by 0");
  }
  if (c.skip_divergence_correction) {
    d.push_back("debug: divergence correction skipped; basis functions are raw partition-of-unity products");
  }
  return d;
}

RunReport run_experiment(const ExperimentConfig& config, ExperimentArtifacts* artifacts) {
  validate(config);
  RunReport report;
  report.config_echo = to_json(config);
  report.deviations = standard_deviations(config);
  Stopwatch clock;

  const NestedMesh mesh = stage("mesh", [&] { return build_mesh(config); });
  const PermeabilityField field = stage("field", [&] { return build_field(config, mesh); });
  const bool manufactured = config.source == SourceKind::Manufactured;
  const std::array<double, 2> g = manufactured ? std::array<double, 2>{0, 0} : config.g;
  const VectorField f = manufactured ? manufactured_source(mesh, field) : VectorField{};
  report.timings["setup"] = clock.lap();

  const AssembledSystem system = stage("assembly", [&] { return assemble(mesh, field, f, g); });
  const MixedFunction fine = stage("fine solve", [&] { return solve_mixed(system); });
  const auto fine_res = saddle_residual(system, fine);
  report.fine.velocity_dofs = static_cast<int>(system.free_dofs.size());
  report.fine.pressure_dofs = static_cast<int>(system.B.rows());
  report.fine.momentum_residual = fine_res.momentum;
  report.fine.divergence_residual = fine_res.divergence;
  if (manufactured) {
    const auto e = analytic_errors(mesh, fine, manufactured_velocity, manufactured_gradient, manufactured_pressure);
    report.fine.velocity_l2_exact = e.l2;
    report.fine.velocity_h1_exact = e.h1;
  }
  report.timings["fine"] = clock.lap();

  auto owned = stage("offline", [&] { return std::make_unique<OfflinePipeline>(mesh, field, config.variant, config.snapshot_tol); });
  const OfflinePipeline& pipeline = *owned;
  report.snapshot_dimension = pipeline.snapshot_dimension();
  const Vector lifting = stage("lifting", [&] { return pipeline.lifting(g); });
  const NormOperators ops = norm_operators(mesh, field);
  report.timings["offline"] = clock.lap();

  nlohmann::json dump;
  dump["selection_policy"] = policy_name(config.policy);
  dump["spectral_variant"] = variant_name(config.variant);
  dump["neighborhoods"] = nlohmann::json::array();
  for (int i = 0; i < pipeline.pou().size(); ++i) {
    const auto& nb = pipeline.pou().neighborhoods[static_cast<std::size_t>(i)];
    const auto& vals = pipeline.eigenpairs()[static_cast<std::size_t>(i)].values;
    dump["neighborhoods"].push_back({{"id", i},
                                     {"blocks", nb.blocks},
                                     {"snapshots", pipeline.snapshots()[static_cast<std::size_t>(i)].basis.cols()},
                                     {"eigenvalues", std::vector<double>(vals.data(), vals.data() + vals.size())}});
  }

  auto items = selections(config);
  if (config.full_snapshot_run && config.policy != SelectionPolicy::All) items.push_back(Selection{SelectionPolicy::All});
  nlohmann::json run_times = nlohmann::json::array();
  nlohmann::json spaces = nlohmann::json::array();
  for (const auto& sel : items) {
    CoarseRecord rec;
    rec.selection = sel;
    rec.label = selection_label(sel);
    const std::string tag = "coarse " + rec.label;
    const OfflineSpace offline = stage(tag.c_str(), [&] { return pipeline.build(sel, config.skip_divergence_correction); });
    const CoarseSolution sol = stage(tag.c_str(), [&] { return solve_coarse(system, offline, &lifting); });
    rec.dimension = offline.num_basis();
    rec.effective_dimension = sol.rank;
    rec.span_defect = sol.span_defect;
    const auto err = weighted_errors(ops, fine.velocity, sol.fine.velocity);
    rec.l2_kappa = err.l2_kappa;
    rec.h1_kappa = err.h1_kappa;
    const double ref = tnorm(ops, fine.velocity);
    rec.tnorm_error = ref > 0 ? tnorm(ops, fine.velocity - sol.fine.velocity) / ref : 0.0;
    rec.orthogonality = coarse_orthogonality(system, offline, sol);
    rec.divergence_containment = divergence_containment(mesh, offline);
    if (manufactured) {
      const auto e = analytic_errors(mesh, sol.fine, manufactured_velocity, manufactured_gradient, manufactured_pressure);
      rec.velocity_l2_exact = e.l2;
      rec.velocity_h1_exact = e.h1;
    }
    spaces.push_back({{"label", rec.label},
                      {"rows", offline.num_basis()},
                      {"rank", sol.rank},
                      {"fine_dofs", offline.generators.cols()},
                      {"modes_per_neighborhood", offline.modes_per_neighborhood}});
    run_times.push_back({{"label", rec.label}, {"seconds", clock.lap()}});
    report.runs.push_back(std::move(rec));
    if (artifacts) artifacts->coarse.push_back(sol.fine);
  }
  dump["spaces"] = spaces;
  report.offline_dump = std::move(dump);
  report.timings["coarse"] = run_times;

  if (artifacts) {
    artifacts->mesh = std::make_unique<NestedMesh>(mesh);
    artifacts->field = field;
    artifacts->fine = fine;
    artifacts->pipeline = std::move(owned);
  }
  return report;
}

nlohmann::json to_json(const CheckResult& c) {
  return {{"name", c.name},
          {"status", c.passed ? "pass" : "fail"},
          {"value", c.value},
          {"tolerance", c.tolerance},
          {"detail", c.detail},
          {"data", c.data}};
}

nlohmann::json to_json(const RunReport& r) {
  nlohmann::json j;
  j["config_echo"] = r.config_echo;
  j["runs"] = nlohmann::json::array();
  j["runs"].push_back({{"label", "fine"},
                       {"velocity_dofs", r.fine.velocity_dofs},
                       {"pressure_dofs", r.fine.pressure_dofs},
                       {"momentum_residual", r.fine.momentum_residual},
                       {"divergence_residual", r.fine.divergence_residual},
                       {"velocity_l2_exact", optional_json(r.fine.velocity_l2_exact)},
                       {"velocity_h1_exact", optional_json(r.fine.velocity_h1_exact)},
                       {"lifting", "constant"}});
  const auto policy = r.config_echo.value("selection", nlohmann::json::object()).value("policy", std::string("?"));
  for (const auto& c : r.runs) {
    auto pct = [](const std::optional<double>& v) { return v ? nlohmann::json(100.0 * *v) : nlohmann::json(nullptr); };
    j["runs"].push_back({{"label", c.label},
                         {"policy", policy_name(c.selection.policy)},
                         {"configured_policy", policy},
                         {"lifting", "blockwise harmonic lifting"},
                         {"dimension", c.dimension},
                         {"effective_dimension", c.effective_dimension},
                         {"snapshot_dimension", r.snapshot_dimension},
                         {"span_defect", c.span_defect},
                         {"l2_kappa_percent", pct(c.l2_kappa)},
                         {"h1_kappa_percent", pct(c.h1_kappa)},
                         {"tnorm_error", c.tnorm_error},
                         {"orthogonality", c.orthogonality},
                         {"divergence_containment", c.divergence_containment},
                         {"velocity_l2_exact", optional_json(c.velocity_l2_exact)},
                         {"velocity_h1_exact", optional_json(c.velocity_h1_exact)}});
  }
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  j["deviations"] = r.deviations;
  return j;
}

std::string runs_csv(const RunReport& r) {
  std::ostringstream os;
  os << "label,policy,dimension,effective_dimension,snapshot_dimension,l2_kappa_percent,h1_kappa_percent,"
        "tnorm_error,orthogonality,divergence_containment\n";
  for (const auto& c : r.runs) {
    os << c.label << ',' << policy_name(c.selection.policy) << ',' << c.dimension << ',' << c.effective_dimension << ','
       << r.snapshot_dimension << ',' << percent(c.l2_kappa) << ',' << percent(c.h1_kappa) << ',' << std::setprecision(6)
       << c.tnorm_error << ',' << c.orthogonality << ',' << c.divergence_containment << '\n';
  }
  return os.str();
}

std::string runs_table(const RunReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "selection" << std::right << std::setw(10) << "dim" << std::setw(10) << "rank"
     << std::setw(14) << "L2_kappa (%)" << std::setw(14) << "H1_kappa (%)" << '\n';
  for (const auto& c : r.runs) {
    os << std::left << std::setw(18) << c.label << std::right << std::setw(10) << c.dimension << std::setw(10)
       << c.effective_dimension << std::setw(14) << percent(c.l2_kappa) << std::setw(14) << percent(c.h1_kappa) << '\n';
  }
  os << "snapshot dimension " << r.snapshot_dimension << ", fine velocity dofs " << r.fine.velocity_dofs << '\n';
  return os.str();
}

std::string checks_table(const std::vector<CheckResult>& checks) {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(26) << c.name << std::right << std::scientific
       << std::setprecision(3) << c.value << " (tol " << c.tolerance << ")" << std::defaultfloat;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  return os.str();
}

void write_report(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  write("report.json", to_json(report).dump(2) + "\n");
  write("report.csv", runs_csv(report));
  write("timings.json", report.timings.dump(2) + "\n");
  if (!report.offline_dump.empty()) write("offline.json", report.offline_dump.dump(1) + "\n");
}

}  // namespace gmsfem::driver
