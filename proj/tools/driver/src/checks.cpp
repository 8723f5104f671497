#include "gmsfem/driver/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gmsfem::driver {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

CheckResult check_pou(const OfflinePipeline& pipeline, double tol) {
  CheckResult r;
  r.name = "pou_identity";
  r.tolerance = tol;
  r.value = pou_identity_error(pipeline.mesh(), pipeline.pou());
  r.passed = r.value <= tol;
  const auto deficit = skeleton_partition_deficit(pipeline.mesh(), pipeline.pou().functions);
  r.data = {{"members", pipeline.pou().size()},
            {"checked_nodes", interior_skeleton_nodes(pipeline.mesh()).size()},
            {"deficit_nodes", deficit.nodes.size()},
            {"max_deficit", deficit.max_deficit}};
  r.detail = "max |sum chi - 1| over " + std::to_string(interior_skeleton_nodes(pipeline.mesh()).size()) +
             " interior skeleton nodes";
  return r;
}

CheckResult check_containment(const RunReport& report, double tol) {
  CheckResult r;
  r.name = "divergence_containment";
  r.tolerance = tol;
  for (const auto& run : report.runs) {
    r.value = std::max(r.value, run.divergence_containment);
    r.data[run.label] = run.divergence_containment;
  }
  r.passed = !report.runs.empty() && r.value <= tol;
  r.detail = "triangle means of div phi vs block constant, " + std::to_string(report.runs.size()) + " spaces";
  return r;
}

CheckResult check_extension_stability(const NestedMesh& mesh, const FieldForContrast& field,
                                      const std::vector<double>& contrasts, int trials, std::uint64_t seed,
                                      double max_ratio, double spread) {
  CheckResult r;
  r.name = "extension_stability";
  r.tolerance = max_ratio;
  double lo = 1e300, hi = 0, hi_projected = 0;
  nlohmann::json per = nlohmann::json::array();
  for (double c : contrasts) {
    const auto f = field(c);
    double worst = 0, worst_projected = 0, best = 1e300;
    for (int b = 0; b < mesh.num_blocks(); ++b) {
      const auto s = extension_stability(mesh, f, b, trials, seed + static_cast<std::uint64_t>(b));
      const auto p = extension_stability(mesh, f, b, trials, seed + static_cast<std::uint64_t>(b), DivergenceMeasure::Projected);
      worst = std::max(worst, s.max_ratio);
      best = std::min(best, s.min_ratio);
      worst_projected = std::max(worst_projected, p.max_ratio);
    }
    per.push_back({{"contrast", c}, {"max_ratio", worst}, {"min_ratio", best}, {"max_ratio_projected_div", worst_projected}});
    lo = std::min(lo, worst);
    hi = std::max(hi, worst);
    hi_projected = std::max(hi_projected, worst_projected);
  }
  r.value = hi;
  const double variation = lo > 0 ? hi / lo : INFINITY;
  r.passed = hi <= max_ratio && variation <= spread;
  r.data = {{"per_contrast", per}, {"variation", variation}, {"spread_tolerance", spread},
            {"max_ratio_projected_div", hi_projected}, {"trials_per_block", trials}, {"blocks", mesh.num_blocks()}};
  std::ostringstream os;
  os << "max ratio " << sci(hi) << ", variation x" << sci(variation) << " (tol x" << spread << "); projected div: max "
     << sci(hi_projected);
  r.detail = os.str();
  return r;
}

CheckResult check_inf_sup(const NestedMesh& mesh, const FieldForContrast& field, const std::vector<double>& contrasts,
                          const Selection& selection, SpectralVariant variant, double max_ratio) {
  CheckResult r;
  r.name = "inf_sup_witness";
  r.tolerance = max_ratio;
  double lo = 1e300, hi = 0, lo_p = 1e300, hi_p = 0;
  nlohmann::json per = nlohmann::json::array();
  for (double c : contrasts) {
    const auto f = field(c);
    const OfflinePipeline pipe(mesh, f, variant);
    const auto off = pipe.build(selection);
    const double beta = inf_sup_witness(mesh, f, off);
    const double beta_p = inf_sup_witness(mesh, f, off, DivergenceMeasure::Projected);
    per.push_back({{"contrast", c}, {"witness", beta}, {"witness_projected_div", beta_p}});
    lo = std::min(lo, beta);
    hi = std::max(hi, beta);
    lo_p = std::min(lo_p, beta_p);
    hi_p = std::max(hi_p, beta_p);
  }
  r.value = lo > 0 ? hi / lo : INFINITY;
  r.passed = lo > 0 && r.value <= max_ratio;
  r.data = {{"per_contrast", per}, {"selection", selection_label(selection)}, {"min", lo},
            {"ratio_projected_div", lo_p > 0 ? hi_p / lo_p : INFINITY}};
  r.detail = "max/min witness, min " + sci(lo) + "; projected div ratio " + sci(lo_p > 0 ? hi_p / lo_p : INFINITY);
  return r;
}

CheckResult check_orthogonality(const RunReport& report, double tol) {
  CheckResult r;
  r.name = "galerkin_orthogonality";
  r.tolerance = tol;
  r.value = report.fine.momentum_residual;
  r.data["fine"] = report.fine.momentum_residual;
  for (const auto& run : report.runs) {
    r.value = std::max(r.value, run.orthogonality);
    r.data[run.label] = run.orthogonality;
  }
  r.passed = r.value <= tol;
  r.detail = "fine and " + std::to_string(report.runs.size()) + " coarse solves, relative";
  return r;
}

CheckResult check_convergence_rates(double min_l2_rate, double min_h1_rate) {
  CheckResult r;
  r.name = "manufactured_rates";
  std::vector<double> l2, h1;
  for (int n : {8, 16, 32}) {
    const auto mesh = NestedMesh::build(n / 4, 4);
    const PermeabilityField field(n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 1.0));
    const auto sol = solve_mixed(assemble(mesh, field, manufactured_source(mesh, field), {0, 0}));
    const auto e = analytic_errors(mesh, sol, manufactured_velocity, manufactured_gradient, manufactured_pressure);
    l2.push_back(e.l2);
    h1.push_back(e.h1);
  }
  double rl2 = 1e300, rh1 = 1e300;
  for (std::size_t k = 1; k < l2.size(); ++k) {
    rl2 = std::min(rl2, std::log2(l2[k - 1] / l2[k]));
    rh1 = std::min(rh1, std::log2(h1[k - 1] / h1[k]));
  }
  r.value = rl2;
  r.tolerance = min_l2_rate;
  r.passed = rl2 >= min_l2_rate && rh1 >= min_h1_rate;
  r.data = {{"l2_errors", l2}, {"h1_errors", h1}, {"l2_rate", rl2}, {"h1_rate", rh1}, {"min_h1_rate", min_h1_rate}};
  std::ostringstream os;
  os.precision(3);
  os << "L2 rate " << rl2 << " (>= " << min_l2_rate << "), H1 rate " << rh1 << " (>= " << min_h1_rate << ")";
  r.detail = os.str();
  return r;
}

CheckResult check_constant_exactness(const NestedMesh& mesh, double kinv, const Selection& selection, double tol) {
  CheckResult r;
  r.name = "constant_exactness";
  r.tolerance = tol;
  const PermeabilityField field(mesh.n_fine(), mesh.n_fine(), std::vector<double>(static_cast<std::size_t>(mesh.num_cells()), kinv));
  const OfflinePipeline pipe(mesh, field);
  const auto off = pipe.build(selection);
  const auto ops = norm_operators(mesh, field);

  const auto sys = assemble(mesh, field, nullptr, {1, 0});
  const Vector lift = pipe.lifting({1, 0});
  const auto sol = solve_coarse(sys, off, &lift);
  const double unit = tnorm(ops, sys.lifting);
  r.value = tnorm(ops, sol.fine.velocity - sys.lifting) / unit;
  const auto fine = solve_mixed(sys);
  const double fine_dev = tnorm(ops, fine.velocity - sys.lifting) / unit;

  const auto balanced = assemble(mesh, field, [kinv](Point) { return std::array<double, 2>{kinv, 0.0}; }, {1, 0});
  const auto bsol = solve_coarse(balanced, off);
  const double balanced_dev = tnorm(ops, bsol.fine.velocity - balanced.lifting) / unit;

  r.passed = r.value <= tol;
  r.data = {{"kinv", kinv}, {"fine_deviation", fine_dev}, {"balanced_load_deviation", balanced_dev}};
  r.detail = "f = 0: fine solution itself deviates by " + sci(fine_dev) + " (P0 cannot hold the drag pressure); f = kinv g: " +
             sci(balanced_dev);
  return r;
}

CheckResult check_debug_identity(const NestedMesh& mesh, const PermeabilityField& field, std::array<double, 2> g,
                                 double tol) {
  CheckResult r;
  r.name = "debug_identity";
  r.tolerance = tol;
  const auto sys = assemble(mesh, field, nullptr, g);
  const SparseMatrix Q0 = coarse_pressure_map(mesh);
  const auto fine = solve_mixed(sys, &Q0);
  const auto sol = solve_coarse(sys, identity_offline_space(mesh, sys));
  const double vscale = std::max(fine.velocity.cwiseAbs().maxCoeff(), 1e-300);
  const double pscale = std::max(fine.pressure.cwiseAbs().maxCoeff(), 1e-300);
  const double dv = (sol.fine.velocity - fine.velocity).cwiseAbs().maxCoeff() / vscale;
  const double dp = (sol.fine.pressure - fine.pressure).cwiseAbs().maxCoeff() / pscale;
  r.value = std::max(dv, dp);
  r.passed = r.value <= tol;
  r.data = {{"velocity", dv}, {"pressure", dp}};
  r.detail = "relative max difference, velocity " + sci(dv) + ", pressure " + sci(dp);
  return r;
}

CheckResult check_error_trend(const RunReport& report, double ratio) {
  CheckResult r;
  r.name = "error_trend";
  r.tolerance = ratio;
  std::vector<double> sweep;
  std::optional<double> full;
  for (const auto& run : report.runs) {
    const double e = run.h1_kappa.value_or(0.0);
    if (run.selection.policy == SelectionPolicy::All) full = e;
    else sweep.push_back(e);
  }
  if (sweep.size() < 2) {
    r.detail = "needs at least two sweep items";
    return r;
  }
  bool monotone = true;
  for (std::size_t k = 1; k < sweep.size(); ++k) monotone = monotone && sweep[k] <= sweep[k - 1] * (1 + 1e-10);
  r.value = sweep.front() > 0 ? sweep.back() / sweep.front() : 0.0;
  bool full_ok = true;
  if (full) {
    for (double e : sweep) full_ok = full_ok && *full <= e * (1 + 1e-10) + 1e-14;
  }
  r.passed = monotone && r.value <= ratio && full_ok;
  r.data = {{"h1_kappa", sweep}, {"full", full ? nlohmann::json(*full) : nlohmann::json(nullptr)}, {"monotone", monotone}};
  std::ostringstream os;
  os.precision(4);
  os << "h1_kappa";
  for (double e : sweep) os << ' ' << 100 * e << '%';
  if (full) os << ", full " << 100 * *full << '%';
  os << (monotone ? "" : ", NOT monotone");
  r.detail = os.str();
  return r;
}

std::vector<CheckResult> check_invariants(const ExperimentConfig& config, RunReport* report_out) {
  ExperimentArtifacts art;
  RunReport report = run_experiment(config, &art);
  const NestedMesh& mesh = *art.mesh;
  std::vector<CheckResult> out;
  out.push_back(check_pou(*art.pipeline));
  out.push_back(check_containment(report));
  FieldForContrast sweep_field = [&](double c) { return build_field(config, mesh, c); };
  std::vector<double> contrasts = config.sweep_contrasts;
  if (!config.field_file.empty()) {
    // a file field has no contrast parameter: the sweep degenerates to the one field
    sweep_field = [&](double) { return art.field; };
    contrasts = {config.contrast};
  }
  out.push_back(check_extension_stability(mesh, sweep_field, contrasts, config.stability_trials, config.seed));
  out.push_back(check_inf_sup(mesh, sweep_field, contrasts, selections(config).front(), config.variant));
  out.push_back(check_orthogonality(report));
  out.push_back(check_convergence_rates());
  if (report_out) {
    report.checks = out;
    *report_out = std::move(report);
  }
  return out;
}

}  // namespace gmsfem::driver
