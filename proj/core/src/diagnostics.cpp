#include "gmsfem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace gmsfem {

namespace {

SparseMatrix tnorm_matrix(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch,
                          const NormOperators& ops, DivergenceMeasure measure) {
  if (measure == DivergenceMeasure::Exact) return ops.brinkman + ops.M * ops.divdiv;
  const auto base = assemble_patch(mesh, field, patch);
  const Vector inv_area = base.areas.cwiseInverse();
  const SparseMatrix projected = base.divergence.transpose() * inv_area.asDiagonal() * base.divergence;
  return ops.brinkman + ops.M * projected;
}

double energy(const SparseMatrix& T, const Vector& u) { return std::sqrt(std::max(u.dot(T * u), 0.0)); }

}  // namespace

ExtensionStability extension_stability(const NestedMesh& mesh, const PermeabilityField& field, int block, int trials,
                                       std::uint64_t seed, DivergenceMeasure measure) {
  if (trials < 1) throw std::invalid_argument("extension stability needs at least one trial");
  const BlockSolver solver = make_block_solver(mesh, field, block);
  const auto ops = norm_operators(mesh, field, solver.patch());
  const SparseMatrix T = tnorm_matrix(mesh, field, solver.patch(), ops, measure);
  const auto& idx = solver.index();
  const int n = idx.num_nodes();
  const Patch& p = solver.patch();
  const double x0 = p.bx0 * mesh.H(), y0 = p.by0 * mesh.H();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ExtensionStability out;
  for (int t = 0; t < trials; ++t) {
    Vector w(2 * n);
    if (t % 2 == 0) {
      for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = unit(rng);
    } else {
      std::array<double, 12> c{};
      for (auto& v : c) v = unit(rng);
      for (int l = 0; l < n; ++l) {
        const Point q = mesh.node_point(idx.global_node(l));
        const double x = (q.x - x0) / mesh.H(), y = (q.y - y0) / mesh.H();
        const double basis[6] = {1, x, y, x * x, x * y, y * y};
        double ux = 0, uy = 0;
        for (int k = 0; k < 6; ++k) {
          ux += c[static_cast<std::size_t>(k)] * basis[k];
          uy += c[static_cast<std::size_t>(k + 6)] * basis[k];
        }
        w(l) = ux;
        w(l + n) = uy;
      }
    }
    const Vector hw = solver.extend(solver.trace_of(w)).velocity;
    const double denom = energy(T, w);
    if (denom > 0) out.ratios.push_back(energy(T, hw) / denom);
  }
  out.max_ratio = *std::max_element(out.ratios.begin(), out.ratios.end());
  out.min_ratio = *std::min_element(out.ratios.begin(), out.ratios.end());
  return out;
}

double inf_sup_witness(const NestedMesh& mesh, const PermeabilityField& field, const OfflineSpace& offline,
                       DivergenceMeasure measure) {
  const RowBasis basis = offline.rows_independent ? RowBasis{offline.coefficients, static_cast<int>(offline.coefficients.rows()), 0.0}
                                                  : independent_row_basis(offline.coefficients);
  const SparseMatrix V = basis.W * offline.generators;  // coarse velocity basis as fine rows
  const auto ops = norm_operators(mesh, field);
  const SparseMatrix T = tnorm_matrix(mesh, field, mesh.whole(), ops, measure);
  const SparseMatrix Vt = V.transpose();
  const SparseMatrix Tm = V * SparseMatrix(T * Vt);
  const auto base = assemble_patch(mesh, field, mesh.whole());
  const Matrix Cd = Matrix(SparseMatrix(offline.Q0 * SparseMatrix(base.divergence * Vt)));  // pressures x velocities
  const Vector block_area = offline.Q0 * base.areas;
  const int np = static_cast<int>(block_area.size());
  if (np < 2) throw std::invalid_argument("inf-sup witness needs at least two coarse pressures");

  // zero-mean pressures: e_i - (|D_i| / |D_last|) e_last
  Matrix Z = Matrix::Zero(np, np - 1);
  for (int i = 0; i < np - 1; ++i) {
    Z(i, i) = 1.0;
    Z(np - 1, i) = -block_area(i) / block_area(np - 1);
  }
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(Tm);
  if (ldlt.info() != Eigen::Success) throw NumericalError("inf-sup witness: coarse T-norm Gram is singular");
  const Matrix CZ = Cd.transpose() * Z;  // velocities x (np-1)
  const Matrix X = ldlt.solve(CZ);
  Matrix lhs = CZ.transpose() * X;
  lhs = 0.5 * (lhs + lhs.transpose()).eval();
  const Matrix rhs = Z.transpose() * (block_area / ops.M).asDiagonal() * Z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(lhs, rhs);
  if (eig.info() != Eigen::Success) throw NumericalError("inf-sup witness: eigen solve failed");
  return std::sqrt(std::max(eig.eigenvalues().minCoeff(), 0.0));
}

}  // namespace gmsfem
