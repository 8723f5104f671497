#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmsfem/linalg.hpp"
#include "gmsfem/mesh.hpp"
#include "gmsfem/perm_field.hpp"

namespace gmsfem {

using VectorField = std::function<std::array<double, 2>(Point)>;

/// Local numbering of the P2 nodes and fine triangles covered by a patch.
/// Velocity dofs are blocked: x components of all nodes, then y components.
/// Triangles are ordered like the global ones (row-major cells, lower then upper).
class PatchIndex {
public:
  PatchIndex(const NestedMesh& mesh, Patch patch);

  const Patch& patch() const { return patch_; }
  int num_nodes() const { return patch_.num_nodes(); }
  int num_velocity_dofs() const { return 2 * num_nodes(); }
  int num_triangles() const { return patch_.num_triangles(); }

  int global_node(int local) const;
  int global_triangle(int local) const;
  /// Local velocity dof -> global velocity dof.
  int global_dof(int local) const;
  std::array<int, 6> triangle_nodes(int local_triangle) const;
  /// Local velocity dofs on the patch boundary, ordered by local dof index.
  std::vector<int> boundary_dofs() const;
  std::vector<int> interior_dofs() const;

private:
  Patch patch_;
  int mesh_nodes_ = 0;
  int mesh_stride_ = 0;
  int mesh_cells_ = 0;
};

/// Sparse operators of the fine discretization restricted to a patch.
struct PatchOperators {
  SparseMatrix brinkman;    // <grad u, grad v> + <kinv u, v>
  SparseMatrix divergence;  // row K: int_K div u
  Vector areas;             // |K| per local triangle
};

PatchOperators assemble_patch(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch);

/// Scalar P2 stiffness and mass with one weight per local triangle of the patch.
SparseMatrix weighted_stiffness(const NestedMesh& mesh, const Patch& patch, std::span<const double> weight);
SparseMatrix weighted_mass(const NestedMesh& mesh, const Patch& patch, std::span<const double> weight);
/// <div u, div v> on the patch (blocked vector layout).
SparseMatrix divdiv_matrix(const NestedMesh& mesh, const Patch& patch);
/// kappa^{-1} of every local triangle of a patch.
std::vector<double> patch_inv_perm(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch);

/// Velocity (blocked P2 layout) and P0 pressure on the fine mesh.
struct MixedFunction {
  Vector velocity;
  Vector pressure;
};

struct AssembledSystem {
  SparseMatrix A;  // full, Dirichlet rows included
  SparseMatrix B;
  Vector F;
  Vector lifting;  // constant boundary velocity at every node
  std::array<double, 2> g{0, 0};
  std::vector<int> dirichlet_dofs;
  std::vector<int> free_dofs;
  Vector areas;
};

/// Fine system for -div grad u + kinv u + (pressure term) = f, u = g on the
/// boundary with constant g. The load uses a degree-10 rule.
AssembledSystem assemble(const NestedMesh& mesh, const PermeabilityField& field, const VectorField& f,
                         std::array<double, 2> g);

/// Load vector <f, v> over the whole mesh.
Vector load_vector(const NestedMesh& mesh, const VectorField& f);

/// Solves the saddle system with a zero-mean pressure multiplier. With
/// `pressure_map` (rows = coarse pressure functions over fine triangles) the
/// pressure is sought in its range; the returned pressure is mapped back to
/// fine triangles.
MixedFunction solve_mixed(const AssembledSystem& system, const SparseMatrix* pressure_map = nullptr);

struct SaddleResidual {
  double momentum = 0;    // relative, over free velocity dofs
  double divergence = 0;  // max |int_K div u|
};
SaddleResidual saddle_residual(const AssembledSystem& system, const MixedFunction& solution);

/// Quadratic forms behind the diagnostic norms.
struct NormOperators {
  SparseMatrix brinkman;
  SparseMatrix divdiv;
  SparseMatrix weighted_mass;       // kinv-weighted vector mass
  SparseMatrix weighted_stiffness;  // kinv-weighted vector stiffness
  Vector areas;
  double M = 1;
};

NormOperators norm_operators(const NestedMesh& mesh, const PermeabilityField& field);
NormOperators norm_operators(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch);

/// sqrt(a(u,u) + M <div u, div u>)
double tnorm(const NormOperators& ops, const Vector& u);
/// M^{-1/2} ||p||
double snorm(const NormOperators& ops, const Vector& p);

/// Relative kinv-weighted L2 and H1-seminorm errors; empty when the reference vanishes.
struct WeightedErrors {
  std::optional<double> l2_kappa;
  std::optional<double> h1_kappa;
};
WeightedErrors weighted_errors(const NormOperators& ops, const Vector& u_ref, const Vector& u_approx);

/// Absolute L2 and H1-seminorm velocity errors against a closed-form field.
struct AnalyticErrors {
  double l2 = 0;
  double h1 = 0;
  double pressure_l2 = 0;
};
using GradientField = std::function<std::array<double, 4>(Point)>;  // dux/dx, dux/dy, duy/dx, duy/dy
AnalyticErrors analytic_errors(const NestedMesh& mesh, const MixedFunction& u, const VectorField& exact,
                               const GradientField& exact_grad, const std::function<double(Point)>& exact_pressure);

/// Evaluates a vector field at every P2 node (blocked layout).
Vector interpolate(const NestedMesh& mesh, const VectorField& field);

}  // namespace gmsfem
