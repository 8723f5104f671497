#include "gmsfem/gmsfem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "gmsfem/element.hpp"
#include "gmsfem/quadrature.hpp"

namespace gmsfem {

namespace {

constexpr double kZeroMode = 1e-8;     // lambda H^2 below this counts as a constant mode
constexpr double kSingularS = 1e-14;   // relative floor on the eigenvalues of S
constexpr int kAnalysisRulePoints = 4;  // conical rule exact to degree 6
constexpr double kFullRankPivot = 1e-8;

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix free_selector(const AssembledSystem& system) {
  std::vector<Triplet> trip;
  for (std::size_t k = 0; k < system.free_dofs.size(); ++k) trip.emplace_back(static_cast<int>(k), system.free_dofs[k], 1.0);
  return from_triplets(static_cast<int>(system.free_dofs.size()), static_cast<int>(system.A.rows()), trip);
}

// W M W^T, dense when W is effectively dense.
SparseMatrix congruence(const SparseMatrix& W, const SparseMatrix& M) {
  const double density = W.nonZeros() / std::max(1.0, static_cast<double>(W.rows()) * W.cols());
  if (density > 0.2) {
    const Matrix Wd(W);
    const Matrix MWt = M * Wd.transpose();
    const Matrix out = Wd * MWt;
    return out.sparseView(0.0, 0.0);
  }
  return SparseMatrix(W * SparseMatrix(M * SparseMatrix(W.transpose())));
}

Vector row_norms(const SparseMatrix& m) {
  Vector out = Vector::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) out(it.row()) += it.value() * it.value();
  }
  return out.cwiseSqrt();
}

// Analysis-variant forms on a patch, blocked vector layout.
std::pair<SparseMatrix, SparseMatrix> analysis_forms(const NestedMesh& mesh, const PermeabilityField& field,
                                                     const Patch& patch, const Vector& chi) {
  const PatchIndex idx(mesh, patch);
  const auto kinv = patch_inv_perm(mesh, field, patch);
  const double M = field.M();
  const double h = mesh.h();
  const std::array<P2Triangle, 2> ref{P2Triangle({0, 0}, {h, 0}, {h, h}), P2Triangle({0, 0}, {h, h}, {0, h})};
  const auto rule = conical_rule(kAnalysisRulePoints);
  const int n = idx.num_nodes();
  std::vector<Triplet> a_trip, s_trip;
  for (int t = 0; t < idx.num_triangles(); ++t) {
    const auto& tri = ref[static_cast<std::size_t>(t % 2)];
    const auto nodes = idx.triangle_nodes(t);
    Local6Vec c;
    for (int i = 0; i < 6; ++i) c(i) = chi(nodes[i]);
    Local6 grad = Local6::Zero(), mass = Local6::Zero(), dxx = Local6::Zero(), dxy = Local6::Zero(), dyy = Local6::Zero();
    const double k2 = kinv[static_cast<std::size_t>(t)] * kinv[static_cast<std::size_t>(t)];
    for (const auto& q : rule) {
      const double w = q.weight * 2.0 * tri.area();
      const Local6Vec phi = P2Triangle::values(q.xi, q.eta);
      const Grad6 g = tri.gradients(q.xi, q.eta);
      Local6Vec gx, gy;
      for (int i = 0; i < 6; ++i) {
        gx(i) = g[i][0];
        gy(i) = g[i][1];
      }
      const double cv = c.dot(phi);
      const double cgx = c.dot(gx), cgy = c.dot(gy);
      grad += w * cv * cv * (gx * gx.transpose() + gy * gy.transpose());
      mass += w * (k2 + M * (cgx * cgx + cgy * cgy)) * phi * phi.transpose();
      dxx += w * M * cv * cv * gx * gx.transpose();
      dxy += w * M * cv * cv * gx * gy.transpose();
      dyy += w * M * cv * cv * gy * gy.transpose();
    }
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        const int a = nodes[i], b = nodes[j];
        a_trip.emplace_back(a, b, grad(i, j));
        a_trip.emplace_back(a + n, b + n, grad(i, j));
        s_trip.emplace_back(a, b, mass(i, j) + dxx(i, j));
        s_trip.emplace_back(a, b + n, dxy(i, j));
        s_trip.emplace_back(a + n, b, dxy(j, i));
        s_trip.emplace_back(a + n, b + n, mass(i, j) + dyy(i, j));
      }
    }
  }
  return {from_triplets(2 * n, 2 * n, a_trip), from_triplets(2 * n, 2 * n, s_trip)};
}

}  // namespace

MultiscalePoU build_pou(const NestedMesh& mesh, std::span<const BlockSolver> blocks) {
  MultiscalePoU pou;
  pou.functions = skeleton_shape_functions(mesh);
  const int n = mesh.num_nodes();
  for (int i = 0; i < pou.size(); ++i) {
    const auto& fn = pou.functions[static_cast<std::size_t>(i)];
    auto nb = coarse_neighborhood(mesh, fn, i);
    const PatchIndex idx(mesh, nb.patch);
    for (int comp = 0; comp < 2; ++comp) {
      Vector data = Vector::Zero(mesh.num_velocity_dofs());
      for (const auto& [node, v] : fn.trace) data(node + comp * n) = v;
      const Vector ext = extend_on_neighborhood(mesh, blocks, nb.blocks, data);
      Vector member(idx.num_nodes());
      for (int l = 0; l < idx.num_nodes(); ++l) member(l) = 0.5 * ext(idx.global_node(l) + comp * n);
      (comp == 0 ? pou.chi_x : pou.chi_y).push_back(std::move(member));
    }
    pou.neighborhoods.push_back(std::move(nb));
  }
  return pou;
}

Vector pou_sum(const NestedMesh& mesh, const MultiscalePoU& pou) {
  Vector sum = Vector::Zero(mesh.num_nodes());
  for (int i = 0; i < pou.size(); ++i) {
    const PatchIndex idx(mesh, pou.neighborhoods[static_cast<std::size_t>(i)].patch);
    for (int l = 0; l < idx.num_nodes(); ++l) {
      sum(idx.global_node(l)) += pou.chi_x[static_cast<std::size_t>(i)](l) + pou.chi_y[static_cast<std::size_t>(i)](l);
    }
  }
  return sum;
}

double pou_identity_error(const NestedMesh& mesh, const MultiscalePoU& pou) {
  const Vector sum = pou_sum(mesh, pou);
  double err = 0;
  for (int node : interior_skeleton_nodes(mesh)) err = std::max(err, std::abs(sum(node) - 1.0));
  return err;
}

Matrix build_raw_snapshots(const CoarseNeighborhood& nb, const PatchSolver& solver) {
  const Patch& p = solver.patch();
  const auto bd = solver.boundary_dofs();
  const int nloc = p.num_nodes();
  auto position = [&](int local_dof) {
    const auto it = std::lower_bound(bd.begin(), bd.end(), local_dof);
    return (it != bd.end() && *it == local_dof) ? static_cast<int>(it - bd.begin()) : -1;
  };
  const auto& idx = solver.index();
  std::vector<std::pair<int, int>> to_local;
  to_local.reserve(static_cast<std::size_t>(nloc));
  for (int l = 0; l < nloc; ++l) to_local.emplace_back(idx.global_node(l), l);
  std::sort(to_local.begin(), to_local.end());
  const int m = static_cast<int>(nb.boundary_fine_nodes.size());
  Matrix traces = Matrix::Zero(solver.num_boundary_dofs(), 2 * m);
  for (int k = 0; k < m; ++k) {
    const int g = nb.boundary_fine_nodes[static_cast<std::size_t>(k)];
    const auto it = std::lower_bound(to_local.begin(), to_local.end(), std::pair<int, int>{g, -1});
    if (it == to_local.end() || it->first != g) throw std::logic_error("snapshot hat outside its neighborhood");
    const int local = it->second;
    const int li = local % p.nodes_x();
    const int lj = local / p.nodes_x();
    std::vector<std::pair<int, double>> hat{{local, 1.0}};
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      const int a = li + di[d], b = lj + dj[d];
      if (a < 0 || b < 0 || a >= p.nodes_x() || b >= p.nodes_y()) continue;
      const int nl = a + b * p.nodes_x();
      if (p.on_patch_boundary(nl)) hat.emplace_back(nl, 0.5);
    }
    for (const auto& [node, v] : hat) {
      traces(position(node), k) = v;
      traces(position(node + nloc), m + k) = v;
    }
  }
  Matrix raw(2 * nloc, 2 * m + 2);
  raw.leftCols(2 * m) = solver.extend_velocity(traces);
  raw.col(2 * m).setZero();
  raw.col(2 * m).head(nloc).setOnes();
  raw.col(2 * m + 1).setZero();
  raw.col(2 * m + 1).tail(nloc).setOnes();
  return raw;
}

SnapshotSpace filter_snapshots(const Matrix& raw, double tau) {
  if (!(tau > 0 && tau < 1)) throw std::invalid_argument("snapshot filter tolerance must lie in (0, 1)");
  const Matrix gram = raw.transpose() * raw;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("snapshot Gram eigendecomposition failed");
  const Vector values = eig.eigenvalues().reverse();
  const double top = values.size() ? values(0) : 0.0;
  if (!(top > 0)) throw std::invalid_argument("snapshot filter: all snapshots vanish");
  SnapshotSpace s;
  s.raw_count = static_cast<int>(raw.cols());
  s.gram_eigenvalues = values;
  int keep = 0;
  while (keep < values.size() && values(keep) > tau * top) ++keep;
  const Matrix vecs = eig.eigenvectors().rowwise().reverse();
  s.basis = raw * vecs.leftCols(keep);
  for (int c = 0; c < keep; ++c) s.basis.col(c).normalize();
  return s;
}

LocalEigenpairs generalized_eigenpairs(const Matrix& A, const Matrix& S) {
  const Matrix As = 0.5 * (A + A.transpose());
  const Matrix Ss = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(Ss);
  if (es.info() != Eigen::Success) throw NumericalError("local eigenproblem: S eigendecomposition failed");
  const double smax = es.eigenvalues().maxCoeff();
  const double smin = es.eigenvalues().minCoeff();
  if (!(smax > 0) || smin <= kSingularS * smax) {
    throw NumericalError("local eigenproblem: S is numerically singular (eigenvalue ratio " +
                         std::to_string(smin / smax) + "); the snapshot filter tolerance is too loose");
  }
  const Matrix W = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
  Matrix C = W.transpose() * As * W;
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> ec(C);
  if (ec.info() != Eigen::Success) throw NumericalError("local eigenproblem: reduced eigendecomposition failed");
  return {ec.eigenvalues(), W * ec.eigenvectors()};
}

LocalEigenpairs local_eigenproblem(const NestedMesh& mesh, const PermeabilityField& field, const CoarseNeighborhood& nb,
                                   const SnapshotSpace& snapshots, SpectralVariant variant, const MultiscalePoU* pou,
                                   int member) {
  const Matrix& psi = snapshots.basis;
  if (variant == SpectralVariant::Numerics) {
    auto kappa = patch_inv_perm(mesh, field, nb.patch);
    for (auto& v : kappa) v = 1.0 / v;
    const SparseMatrix K = vectorize(weighted_stiffness(mesh, nb.patch, kappa));
    const SparseMatrix Mk = vectorize(weighted_mass(mesh, nb.patch, kappa));
    return generalized_eigenpairs(psi.transpose() * (K * psi), psi.transpose() * (Mk * psi));
  }
  if (!pou || member < 0 || member >= pou->size()) {
    throw std::invalid_argument("analysis eigenproblem needs the partition of unity member of the neighborhood");
  }
  const Vector chi = pou->chi_x[static_cast<std::size_t>(member)] + pou->chi_y[static_cast<std::size_t>(member)];
  const auto [A, S] = analysis_forms(mesh, field, nb.patch, chi);
  return generalized_eigenpairs(psi.transpose() * (A * psi), psi.transpose() * (S * psi));
}

std::vector<int> select_offline_modes(const LocalEigenpairs& pairs, const Selection& selection, double H) {
  const int n = static_cast<int>(pairs.values.size());
  std::vector<int> keep;
  switch (selection.policy) {
    case SelectionPolicy::ThresholdGe: {
      if (!(selection.lambda_off > 0)) throw std::invalid_argument("lambda_off must be positive");
      // ratio to the first nonzero eigenvalue of the neighborhood
      double first = 0;
      for (int k = 0; k < n && first == 0; ++k) {
        if (pairs.values(k) * H * H > kZeroMode) first = pairs.values(k);
      }
      for (int k = 0; k < n; ++k) {
        const bool zero = pairs.values(k) * H * H <= kZeroMode;
        if (zero || first / pairs.values(k) >= selection.lambda_off) keep.push_back(k);
      }
      break;
    }
    case SelectionPolicy::Smallest: {
      if (selection.m_off < 1) throw std::invalid_argument("m_off must be at least 1");
      for (int k = 0; k < std::min(n, selection.m_off); ++k) keep.push_back(k);
      break;
    }
    case SelectionPolicy::All:
      for (int k = 0; k < n; ++k) keep.push_back(k);
      break;
  }
  return keep;
}

SparseMatrix coarse_pressure_map(const NestedMesh& mesh) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_triangles()));
  for (int t = 0; t < mesh.num_triangles(); ++t) trip.emplace_back(mesh.block_of_triangle(t), t, 1.0);
  return from_triplets(mesh.num_blocks(), mesh.num_triangles(), trip);
}

OfflineSpace build_global_offline(const NestedMesh& mesh, const MultiscalePoU& pou, const LocalModes& modes,
                                  const SkeletonExtension& extension, bool skip_divergence_correction) {
  if (modes.modes.size() != static_cast<std::size_t>(pou.size())) {
    throw std::invalid_argument("offline assembly: one mode set per neighborhood expected");
  }
  const int n = mesh.num_nodes();
  const int nv = mesh.num_velocity_dofs();
  OfflineSpace off;
  off.divergence_corrected = !skip_divergence_correction;
  off.Q0 = coarse_pressure_map(mesh);

  // free dof numbering for the uncorrected products
  std::vector<int> free_col(static_cast<std::size_t>(nv), -1);
  std::vector<int> free_dofs;
  for (int d = 0; d < nv; ++d) {
    if (!mesh.is_boundary_node(d % n)) {
      free_col[static_cast<std::size_t>(d)] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(d);
    }
  }

  std::vector<Triplet> trip;
  int row = 0;
  for (int i = 0; i < pou.size(); ++i) {
    const auto& nb = pou.neighborhoods[static_cast<std::size_t>(i)];
    const PatchIndex idx(mesh, nb.patch);
    const Matrix& Z = modes.modes[static_cast<std::size_t>(i)];
    const Vector& cx = pou.chi_x[static_cast<std::size_t>(i)];
    const Vector& cy = pou.chi_y[static_cast<std::size_t>(i)];
    const int nloc = idx.num_nodes();
    off.modes_per_neighborhood.push_back(static_cast<int>(Z.cols()));
    for (Eigen::Index k = 0; k < Z.cols(); ++k, ++row) {
      off.neighborhood_of_row.push_back(i);
      for (int l = 0; l < nloc; ++l) {
        const int g = idx.global_node(l);
        const double vx = cx(l) * Z(l, k);
        const double vy = cy(l) * Z(l + nloc, k);
        if (skip_divergence_correction) {
          const int cxcol = free_col[static_cast<std::size_t>(g)];
          const int cycol = free_col[static_cast<std::size_t>(g + n)];
          if (cxcol >= 0 && vx != 0.0) trip.emplace_back(row, cxcol, vx);
          if (cycol >= 0 && vy != 0.0) trip.emplace_back(row, cycol, vy);
        } else {
          const int cxcol = extension.column[static_cast<std::size_t>(g)];
          const int cycol = extension.column[static_cast<std::size_t>(g + n)];
          if (cxcol >= 0 && vx != 0.0) trip.emplace_back(row, cxcol, vx);
          if (cycol >= 0 && vy != 0.0) trip.emplace_back(row, cycol, vy);
        }
      }
    }
  }
  if (skip_divergence_correction) {
    off.coefficients = from_triplets(row, static_cast<int>(free_dofs.size()), trip);
    std::vector<Triplet> sel;
    for (std::size_t k = 0; k < free_dofs.size(); ++k) sel.emplace_back(static_cast<int>(k), free_dofs[k], 1.0);
    off.generators = from_triplets(static_cast<int>(free_dofs.size()), nv, sel);
  } else {
    off.coefficients = from_triplets(row, static_cast<int>(extension.dofs.size()), trip);
    off.generators = SparseMatrix(extension.E.transpose());
  }
  return off;
}

OfflineSpace identity_offline_space(const NestedMesh& mesh, const AssembledSystem& system) {
  OfflineSpace off;
  const int nf = static_cast<int>(system.free_dofs.size());
  off.coefficients = sparse_identity(nf);
  off.generators = free_selector(system);
  off.Q0 = coarse_pressure_map(mesh);
  off.rows_independent = true;
  return off;
}

RowBasis independent_row_basis(const SparseMatrix& coefficients, double tol) {
  const Vector norms = row_norms(coefficients);
  std::vector<Triplet> scale;
  for (int r = 0; r < coefficients.rows(); ++r) {
    if (norms(r) > 0) scale.emplace_back(static_cast<int>(scale.size()), r, 1.0 / norms(r));
  }
  const int nrows = static_cast<int>(scale.size());
  const SparseMatrix Cn = from_triplets(nrows, static_cast<int>(coefficients.rows()), scale) * coefficients;
  const int g = static_cast<int>(coefficients.cols());
  RowBasis out;
  if (nrows == 0) {
    out.W.resize(0, g);
    return out;
  }

  if (nrows <= g) {
    // pivoted Cholesky of the Gram matrix of normalized rows
    const Matrix gram = Matrix(SparseMatrix(Cn * SparseMatrix(Cn.transpose())));
    Vector d = gram.diagonal();
    Matrix L = Matrix::Zero(nrows, nrows);
    std::vector<int> picked;
    std::vector<char> used(static_cast<std::size_t>(nrows), 0);
    for (int k = 0; k < nrows; ++k) {
      int p = -1;
      double best = tol;
      for (int r = 0; r < nrows; ++r) {
        if (!used[static_cast<std::size_t>(r)] && d(r) > best) {
          best = d(r);
          p = r;
        }
      }
      if (p < 0) break;
      used[static_cast<std::size_t>(p)] = 1;
      picked.push_back(p);
      Vector col = gram.col(p);
      if (k > 0) col -= L.leftCols(k) * L.row(p).head(k).transpose();
      col /= std::sqrt(d(p));
      L.col(k) = col;
      d -= col.cwiseAbs2();
    }
    for (int r = 0; r < nrows; ++r) {
      if (!used[static_cast<std::size_t>(r)]) out.span_defect = std::max(out.span_defect, std::sqrt(std::max(d(r), 0.0)));
    }
    std::sort(picked.begin(), picked.end());
    std::vector<Triplet> sel;
    for (std::size_t k = 0; k < picked.size(); ++k) sel.emplace_back(static_cast<int>(k), picked[k], 1.0);
    out.W = from_triplets(static_cast<int>(picked.size()), nrows, sel) * Cn;
    out.rank = static_cast<int>(picked.size());
    return out;
  }

  const SparseMatrix sparse_gram = SparseMatrix(Cn.transpose()) * Cn;
  {
    // cheap full-rank test before the dense eigensolve
    Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(sparse_gram);
    if (ldlt.info() == Eigen::Success) {
      const Vector pivots = ldlt.vectorD();
      if (pivots.minCoeff() > kFullRankPivot * pivots.maxCoeff()) {
        out.W = sparse_identity(g);
        out.rank = g;
        return out;
      }
    }
  }
  const Matrix gram(sparse_gram);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("coarse basis: Gram eigendecomposition failed");
  const double top = eig.eigenvalues().maxCoeff();
  int rank = 0;
  for (int k = 0; k < g; ++k) rank += eig.eigenvalues()(k) > tol * top ? 1 : 0;
  out.rank = rank;
  if (rank < g) out.span_defect = std::sqrt(std::max(eig.eigenvalues()(g - rank - 1), 0.0));
  if (rank == g) {
    out.W = sparse_identity(g);
  } else {
    const Matrix V = eig.eigenvectors().rightCols(rank).transpose();
    out.W = V.sparseView(0.0, 0.0);
  }
  return out;
}

CoarseSolution solve_coarse(const AssembledSystem& system, const OfflineSpace& offline, const Vector* lifting) {
  const SparseMatrix& G = offline.generators;
  const int nv = static_cast<int>(system.A.rows());
  if (G.cols() != nv) throw std::invalid_argument("solve_coarse: offline space does not match the fine system");
  RowBasis basis;
  if (offline.rows_independent) {
    basis.W = offline.coefficients;
    basis.rank = static_cast<int>(offline.coefficients.rows());
  } else {
    basis = independent_row_basis(offline.coefficients);
  }
  const Vector& lift = lifting ? *lifting : system.lifting;
  if (lift.size() != nv) throw std::invalid_argument("solve_coarse: lifting does not match the fine system");
  const SparseMatrix Gt = G.transpose();
  const SparseMatrix At = G * SparseMatrix(system.A * Gt);
  const SparseMatrix Ac = congruence(basis.W, At);
  const SparseMatrix Bt = offline.Q0 * SparseMatrix(system.B * Gt);
  const SparseMatrix Bc = Bt * SparseMatrix(basis.W.transpose());
  const Vector Fc = basis.W * (G * (system.F - system.A * lift));
  const Vector gc = -(offline.Q0 * (system.B * lift));
  const Vector m = offline.Q0 * system.areas;

  const SaddleSolver saddle(Ac, Bc, m);
  Matrix u0, p0;
  const double residual = saddle.solve(Fc, gc, u0, p0);

  CoarseSolution sol;
  sol.rank = basis.rank;
  sol.span_defect = basis.span_defect;
  sol.u0 = u0.col(0);
  sol.p0 = p0.col(0);
  sol.residual = residual;
  sol.fine.velocity = lift + Gt * (SparseMatrix(basis.W.transpose()) * sol.u0);
  sol.fine.pressure = offline.Q0.transpose() * sol.p0;
  sol.basis = std::move(basis.W);
  return sol;
}

double coarse_orthogonality(const AssembledSystem& system, const OfflineSpace& offline, const CoarseSolution& solution) {
  const Vector norms = row_norms(solution.basis);
  Vector inv = Vector::Zero(norms.size());
  for (Eigen::Index r = 0; r < norms.size(); ++r) inv(r) = norms(r) > 0 ? 1.0 / norms(r) : 0.0;
  const SparseMatrix C = inv.asDiagonal() * solution.basis;
  auto test = [&](const Vector& fine) { return Vector(C * (offline.generators * fine)); };
  const Vector au = test(system.A * solution.fine.velocity);
  const Vector bp = test(system.B.transpose() * solution.fine.pressure);
  const Vector f = test(system.F);
  const double scale = au.norm() + bp.norm() + f.norm();
  return scale > 0 ? (au + bp - f).norm() / scale : 0.0;
}

double divergence_containment(const NestedMesh& mesh, const OfflineSpace& offline) {
  const SparseMatrix Rt = SparseMatrix(offline.R0().transpose());  // columns are basis functions
  const SparseMatrix D = SparseMatrix(assemble_patch(mesh, PermeabilityField(mesh.n_fine(), mesh.n_fine(),
                                                                             std::vector<double>(static_cast<std::size_t>(mesh.num_cells()), 1.0)),
                                                     mesh.whole())
                                          .divergence) *
                         Rt;
  const double area = 0.5 * mesh.h() * mesh.h();
  const int nb = mesh.num_blocks();
  const int per_block = 2 * mesh.refine() * mesh.refine();
  double worst = 0;
  Vector block_sum(nb);
  std::vector<std::vector<double>> block_values(static_cast<std::size_t>(nb));
  for (int c = 0; c < Rt.cols(); ++c) {
    double amp = 0;
    for (SparseMatrix::InnerIterator it(Rt, c); it; ++it) amp = std::max(amp, std::abs(it.value()));
    if (amp == 0) continue;
    const double scale = mesh.h() / amp;
    for (auto& v : block_values) v.clear();
    for (SparseMatrix::InnerIterator it(D, c); it; ++it) {
      block_values[static_cast<std::size_t>(mesh.block_of_triangle(static_cast<int>(it.row())))].push_back(it.value() / area * scale);
    }
    for (const auto& vals : block_values) {
      if (vals.empty()) continue;
      double sum = 0;
      for (double v : vals) sum += v;
      const double mean = sum / per_block;
      double dev = vals.size() < static_cast<std::size_t>(per_block) ? std::abs(mean) : 0.0;  // implicit zeros
      for (double v : vals) dev = std::max(dev, std::abs(v - mean));
      worst = std::max(worst, dev);
    }
  }
  return worst;
}

OfflinePipeline::OfflinePipeline(NestedMesh mesh, PermeabilityField field, SpectralVariant variant, double tau)
    : mesh_(std::move(mesh)), field_(std::move(field)), variant_(variant) {
  field_.check_matches(mesh_);
  blocks_ = make_block_solvers(mesh_, field_);
  pou_ = build_pou(mesh_, blocks_);
  extension_ = skeleton_extension(mesh_, blocks_);
  snapshots_.reserve(static_cast<std::size_t>(pou_.size()));
  eigenpairs_.reserve(static_cast<std::size_t>(pou_.size()));
  for (int i = 0; i < pou_.size(); ++i) {
    const auto& nb = pou_.neighborhoods[static_cast<std::size_t>(i)];
    const PatchSolver solver(mesh_, field_, nb.patch);
    snapshots_.push_back(filter_snapshots(build_raw_snapshots(nb, solver), tau));
    eigenpairs_.push_back(local_eigenproblem(mesh_, field_, nb, snapshots_.back(), variant_, &pou_, i));
  }
}

int OfflinePipeline::snapshot_dimension() const {
  int total = 0;
  for (const auto& s : snapshots_) total += static_cast<int>(s.basis.cols());
  return total;
}

LocalModes OfflinePipeline::select(const Selection& selection) const {
  LocalModes out;
  out.modes.reserve(snapshots_.size());
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    const auto keep = select_offline_modes(eigenpairs_[i], selection, mesh_.H());
    Matrix coords(eigenpairs_[i].coords.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) coords.col(static_cast<Eigen::Index>(k)) = eigenpairs_[i].coords.col(keep[k]);
    out.modes.push_back(snapshots_[i].basis * coords);
  }
  return out;
}

OfflineSpace OfflinePipeline::build(const Selection& selection, bool skip_divergence_correction) const {
  return build_global_offline(mesh_, pou_, select(selection), extension_, skip_divergence_correction);
}

}  // namespace gmsfem
