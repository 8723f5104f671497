#pragma once

#include <functional>
#include <vector>

#include "gmsfem/diagnostics.hpp"
#include "gmsfem/driver/experiment.hpp"

namespace gmsfem::driver {

using FieldForContrast = std::function<PermeabilityField(double contrast)>;

CheckResult check_pou(const OfflinePipeline& pipeline, double tol = 1e-10);

/// Worst containment over the coarse runs of a report.
CheckResult check_containment(const RunReport& report, double tol = 1e-9);

/// All blocks, `trials` random fields per block and contrast. Passes when the
/// largest ratio is at most `max_ratio` and the per-contrast maxima differ by
/// at most `spread`. The projected-divergence ratios are reported in `data`.
CheckResult check_extension_stability(const NestedMesh& mesh, const FieldForContrast& field,
                                      const std::vector<double>& contrasts, int trials, std::uint64_t seed,
                                      double max_ratio = 10, double spread = 2);

/// Inf-sup witness of the offline space built with `selection`, per contrast.
CheckResult check_inf_sup(const NestedMesh& mesh, const FieldForContrast& field, const std::vector<double>& contrasts,
                          const Selection& selection, SpectralVariant variant, double max_ratio = 10);

/// Fine momentum residuals and coarse Galerkin residuals of a run.
CheckResult check_orthogonality(const RunReport& report, double tol = 1e-8);

/// Manufactured solution with kinv = 1 on h = 1/8, 1/16, 1/32.
CheckResult check_convergence_rates(double min_l2_rate = 1.8, double min_h1_rate = 0.9);

/// Uniform kinv, g = (1,0), f = 0: relative tnorm distance of the coarse
/// solution from (1,0). The balanced load f = kinv g is reported alongside.
CheckResult check_constant_exactness(const NestedMesh& mesh, double kinv, const Selection& selection, double tol = 1e-8);

/// Identity offline space against the fine solve with coarse pressures.
CheckResult check_debug_identity(const NestedMesh& mesh, const PermeabilityField& field, std::array<double, 2> g,
                                 double tol = 1e-8);

/// Errors non-increasing across the threshold sweep, final <= ratio * first,
/// and the full snapshot space no worse than any threshold run.
CheckResult check_error_trend(const RunReport& report, double ratio = 0.5);

/// The suite for a configuration, in a fixed order. The underlying run is
/// stored in `report` when given.
std::vector<CheckResult> check_invariants(const ExperimentConfig& config, RunReport* report = nullptr);

}  // namespace gmsfem::driver
