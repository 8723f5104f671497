#include "gmsfem/extension.hpp"

#include <stdexcept>

namespace gmsfem {

namespace {

SparseMatrix select_block(const SparseMatrix& m, std::span<const int> rows, std::span<const int> cols, int nrows_all) {
  std::vector<int> row_pos(static_cast<std::size_t>(nrows_all), -1);
  for (std::size_t k = 0; k < rows.size(); ++k) row_pos[static_cast<std::size_t>(rows[k])] = static_cast<int>(k);
  std::vector<Triplet> trip;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (SparseMatrix::InnerIterator it(m, cols[c]); it; ++it) {
      const int r = row_pos[static_cast<std::size_t>(it.row())];
      if (r >= 0) trip.emplace_back(r, static_cast<int>(c), it.value());
    }
  }
  SparseMatrix out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

std::vector<int> iota_vector(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = k;
  return v;
}

}  // namespace

PatchSolver::PatchSolver(const NestedMesh& mesh, const PermeabilityField& field, Patch patch)
    : index_(mesh, patch),
      ops_(assemble_patch(mesh, field, patch)),
      boundary_(index_.boundary_dofs()),
      interior_(index_.interior_dofs()) {
  const int nv = index_.num_velocity_dofs();
  const int nt = index_.num_triangles();
  measure_ = ops_.areas.sum();

  A_ib_ = select_block(ops_.brinkman, interior_, boundary_, nv);
  const SparseMatrix A_ii = select_block(ops_.brinkman, interior_, interior_, nv);
  const SparseMatrix Bt = ops_.divergence.transpose();
  B_b_ = SparseMatrix(select_block(Bt, boundary_, iota_vector(nt), nv).transpose());
  const SparseMatrix B_i = SparseMatrix(select_block(Bt, interior_, iota_vector(nt), nv).transpose());

  saddle_ = std::make_unique<SaddleSolver>(A_ii, B_i, ops_.areas);
}

PatchSolver::~PatchSolver() = default;
PatchSolver::PatchSolver(PatchSolver&&) noexcept = default;
PatchSolver& PatchSolver::operator=(PatchSolver&&) noexcept = default;

double PatchSolver::flux(const Vector& trace) const { return (B_b_ * trace).sum(); }

Matrix PatchSolver::solve_interior(const Matrix& traces, Matrix* pressure) const {
  if (traces.rows() != num_boundary_dofs()) {
    throw std::invalid_argument("brinkman extension: trace has " + std::to_string(traces.rows()) +
                                " values, the patch boundary has " + std::to_string(num_boundary_dofs()));
  }
  const Matrix f = -(A_ib_ * traces);
  Matrix g = B_b_ * traces;
  for (Eigen::Index c = 0; c < traces.cols(); ++c) {
    const double rate = g.col(c).sum() / measure_;
    g.col(c) = rate * ops_.areas - g.col(c);
  }
  Matrix u, p;
  saddle_->solve(f, g, u, p);
  if (pressure) *pressure = std::move(p);
  return u;
}

MixedFunction PatchSolver::extend(const Vector& trace) const {
  Matrix p;
  const Matrix inner = solve_interior(trace, &p);
  MixedFunction out;
  out.velocity = Vector::Zero(index_.num_velocity_dofs());
  for (std::size_t k = 0; k < boundary_.size(); ++k) out.velocity(boundary_[k]) = trace(static_cast<Eigen::Index>(k));
  for (std::size_t k = 0; k < interior_.size(); ++k) out.velocity(interior_[k]) = inner(static_cast<Eigen::Index>(k), 0);
  out.pressure = p.col(0);
  return out;
}

Matrix PatchSolver::extend_velocity(const Matrix& traces) const {
  const Matrix inner = solve_interior(traces, nullptr);
  Matrix out(index_.num_velocity_dofs(), traces.cols());
  for (std::size_t k = 0; k < boundary_.size(); ++k) out.row(boundary_[k]) = traces.row(static_cast<Eigen::Index>(k));
  for (std::size_t k = 0; k < interior_.size(); ++k) out.row(interior_[k]) = inner.row(static_cast<Eigen::Index>(k));
  return out;
}

Vector PatchSolver::trace_of(const Vector& local_velocity) const {
  Vector t(num_boundary_dofs());
  for (std::size_t k = 0; k < boundary_.size(); ++k) t(static_cast<Eigen::Index>(k)) = local_velocity(boundary_[k]);
  return t;
}

BlockSolver make_block_solver(const NestedMesh& mesh, const PermeabilityField& field, int block) {
  if (block < 0 || block >= mesh.num_blocks()) throw std::invalid_argument("block index out of range");
  return BlockSolver(mesh, field, mesh.block_patch(block));
}

std::vector<BlockSolver> make_block_solvers(const NestedMesh& mesh, const PermeabilityField& field) {
  std::vector<BlockSolver> out;
  out.reserve(static_cast<std::size_t>(mesh.num_blocks()));
  for (int b = 0; b < mesh.num_blocks(); ++b) out.push_back(make_block_solver(mesh, field, b));
  return out;
}

MixedFunction brinkman_extend(const PatchSolver& solver, const Vector& trace) { return solver.extend(trace); }

Vector extend_on_neighborhood(const NestedMesh& mesh, std::span<const BlockSolver> blocks,
                              std::span<const int> neighborhood_blocks, const Vector& global) {
  Vector out = Vector::Zero(mesh.num_velocity_dofs());
  for (int b : neighborhood_blocks) {
    const auto& solver = blocks[static_cast<std::size_t>(b)];
    const auto& idx = solver.index();
    Vector trace(solver.num_boundary_dofs());
    const auto bd = solver.boundary_dofs();
    for (std::size_t k = 0; k < bd.size(); ++k) trace(static_cast<Eigen::Index>(k)) = global(idx.global_dof(bd[k]));
    const Vector local = solver.extend(trace).velocity;
    for (int d = 0; d < idx.num_velocity_dofs(); ++d) out(idx.global_dof(d)) = local(d);
  }
  return out;
}

Vector blockwise_lifting(const NestedMesh& mesh, std::span<const BlockSolver> blocks, std::array<double, 2> g) {
  if (blocks.size() != static_cast<std::size_t>(mesh.num_blocks())) {
    throw std::invalid_argument("blockwise lifting needs one solver per coarse block");
  }
  const int n = mesh.num_nodes();
  Vector data(mesh.num_velocity_dofs());
  data.head(n).setConstant(g[0]);
  data.tail(n).setConstant(g[1]);
  std::vector<int> all(static_cast<std::size_t>(mesh.num_blocks()));
  for (int b = 0; b < mesh.num_blocks(); ++b) all[static_cast<std::size_t>(b)] = b;
  return extend_on_neighborhood(mesh, blocks, all, data);
}

SkeletonExtension skeleton_extension(const NestedMesh& mesh, std::span<const BlockSolver> blocks) {
  SkeletonExtension ext;
  const int nv = mesh.num_velocity_dofs();
  const int n = mesh.num_nodes();
  ext.column.assign(static_cast<std::size_t>(nv), -1);
  for (int d = 0; d < nv; ++d) {
    const int node = d % n;
    if (mesh.is_skeleton_node(node) && !mesh.is_boundary_node(node)) {
      ext.column[static_cast<std::size_t>(d)] = static_cast<int>(ext.dofs.size());
      ext.dofs.push_back(d);
    }
  }
  std::vector<Triplet> trip;
  for (std::size_t c = 0; c < ext.dofs.size(); ++c) trip.emplace_back(ext.dofs[c], static_cast<int>(c), 1.0);
  for (const auto& solver : blocks) {
    const auto& idx = solver.index();
    const auto bd = solver.boundary_dofs();
    const auto in = solver.interior_dofs();
    std::vector<int> cols;
    std::vector<int> trace_pos;
    for (std::size_t k = 0; k < bd.size(); ++k) {
      const int c = ext.column[static_cast<std::size_t>(idx.global_dof(bd[k]))];
      if (c >= 0) {
        cols.push_back(c);
        trace_pos.push_back(static_cast<int>(k));
      }
    }
    Matrix traces = Matrix::Zero(solver.num_boundary_dofs(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) traces(trace_pos[j], static_cast<Eigen::Index>(j)) = 1.0;
    const Matrix local = solver.extend_velocity(traces);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (int d : in) {
        const double v = local(d, static_cast<Eigen::Index>(j));
        if (v != 0.0) trip.emplace_back(idx.global_dof(d), cols[j], v);
      }
    }
  }
  ext.E.resize(nv, static_cast<int>(ext.dofs.size()));
  ext.E.setFromTriplets(trip.begin(), trip.end());
  return ext;
}

}  // namespace gmsfem
