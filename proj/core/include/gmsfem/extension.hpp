#pragma once

#include <memory>
#include <span>
#include <vector>

#include "gmsfem/fem.hpp"

namespace gmsfem {

/// Homogeneous Brinkman problem on a patch with prescribed boundary velocity
/// and a constant divergence that balances the boundary flux. The local
/// saddle operator is factored once; every call is a back-substitution.
class PatchSolver {
public:
  PatchSolver(const NestedMesh& mesh, const PermeabilityField& field, Patch patch);
  ~PatchSolver();
  PatchSolver(PatchSolver&&) noexcept;
  PatchSolver& operator=(PatchSolver&&) noexcept;

  const PatchIndex& index() const { return index_; }
  const Patch& patch() const { return index_.patch(); }
  /// Local velocity dofs on the patch boundary; traces are given in this order.
  std::span<const int> boundary_dofs() const { return boundary_; }
  std::span<const int> interior_dofs() const { return interior_; }
  int num_boundary_dofs() const { return static_cast<int>(boundary_.size()); }
  double measure() const { return measure_; }
  const PatchOperators& operators() const { return ops_; }

  /// Discrete boundary flux: sum over triangles of int_K div of the zero-interior lift.
  double flux(const Vector& trace) const;

  /// Full local velocity (trace on the boundary, extension inside) and the
  /// zero-mean local pressure.
  MixedFunction extend(const Vector& trace) const;
  /// One column per trace; returns local velocities only.
  Matrix extend_velocity(const Matrix& traces) const;

  /// Trace of a local velocity vector.
  Vector trace_of(const Vector& local_velocity) const;

private:
  Matrix solve_interior(const Matrix& traces, Matrix* pressure) const;

  PatchIndex index_;
  PatchOperators ops_;
  std::vector<int> boundary_;
  std::vector<int> interior_;
  SparseMatrix A_ib_;  // interior rows, boundary columns
  SparseMatrix B_b_;   // divergence of boundary dofs
  double measure_ = 0;
  std::unique_ptr<SaddleSolver> saddle_;
};

using BlockSolver = PatchSolver;

BlockSolver make_block_solver(const NestedMesh& mesh, const PermeabilityField& field, int block);
std::vector<BlockSolver> make_block_solvers(const NestedMesh& mesh, const PermeabilityField& field);

/// Throws std::invalid_argument when the trace length does not match the solver.
MixedFunction brinkman_extend(const PatchSolver& solver, const Vector& trace);

/// Blockwise extension over a neighborhood. `global` supplies the values on
/// the skeleton inside and on the boundary of the neighborhood; the result
/// holds those values, the block extensions inside, and zero elsewhere.
Vector extend_on_neighborhood(const NestedMesh& mesh, std::span<const BlockSolver> blocks,
                              std::span<const int> neighborhood_blocks, const Vector& global);

/// Blockwise extension of the constant trace g taken on the whole skeleton.
/// Used as the lifting of the coarse problem: it solves the homogeneous
/// block problems, so the coarse right-hand side carries no block-interior load.
Vector blockwise_lifting(const NestedMesh& mesh, std::span<const BlockSolver> blocks, std::array<double, 2> g);

/// Linear map from velocity values at interior skeleton nodes to the
/// blockwise extension on the whole mesh (boundary of the domain held at 0).
struct SkeletonExtension {
  std::vector<int> dofs;         // global velocity dofs of interior skeleton nodes, ascending
  std::vector<int> column;       // global velocity dof -> column, or -1
  SparseMatrix E;                // num_velocity_dofs x dofs.size()
};

SkeletonExtension skeleton_extension(const NestedMesh& mesh, std::span<const BlockSolver> blocks);

}  // namespace gmsfem
