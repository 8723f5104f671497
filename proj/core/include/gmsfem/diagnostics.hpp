#pragma once

#include <cstdint>
#include <vector>

#include "gmsfem/gmsfem.hpp"

namespace gmsfem {

/// How the divergence term of the T-norm is measured. Exact integrates the
/// pointwise (P1) divergence; Projected uses its triangle means only,
/// sum_K (int_K div u)^2 / |K|, which is all the P0 pressures can see.
enum class DivergenceMeasure { Exact, Projected };

/// Ratios tnorm(H(w|dD)) / tnorm(w) on one block for random velocity
/// fields w: even trials draw every nodal value, odd trials draw a random
/// quadratic polynomial field.
struct ExtensionStability {
  std::vector<double> ratios;
  double max_ratio = 0;
  double min_ratio = 0;
};
ExtensionStability extension_stability(const NestedMesh& mesh, const PermeabilityField& field, int block, int trials,
                                       std::uint64_t seed, DivergenceMeasure measure = DivergenceMeasure::Exact);

/// Discrete inf-sup constant of the coarse pair in the T-norm (velocity) and
/// S-norm (pressure), over zero-mean coarse pressures.
double inf_sup_witness(const NestedMesh& mesh, const PermeabilityField& field, const OfflineSpace& offline,
                       DivergenceMeasure measure = DivergenceMeasure::Exact);

}  // namespace gmsfem
