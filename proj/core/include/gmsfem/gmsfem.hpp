#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmsfem/extension.hpp"
#include "gmsfem/fem.hpp"
#include "gmsfem/mesh.hpp"
#include "gmsfem/perm_field.hpp"

namespace gmsfem {

/// Two scalar partition-of-unity members per skeleton function: half the
/// x (resp. y) component of the blockwise extension of (chi, 0) (resp. (0, chi)).
/// Values are stored on the P2 nodes of the neighborhood patch.
struct MultiscalePoU {
  std::vector<SkeletonFunction> functions;
  std::vector<CoarseNeighborhood> neighborhoods;
  std::vector<Vector> chi_x;
  std::vector<Vector> chi_y;

  int size() const { return static_cast<int>(functions.size()); }
};

MultiscalePoU build_pou(const NestedMesh& mesh, std::span<const BlockSolver> blocks);

/// Sum of all members at every fine node (global scalar P2 vector).
Vector pou_sum(const NestedMesh& mesh, const MultiscalePoU& pou);
/// max |sum - 1| over interior_skeleton_nodes().
double pou_identity_error(const NestedMesh& mesh, const MultiscalePoU& pou);

/// Extensions of the boundary hat functions of a neighborhood, solved on
/// the neighborhood as one domain, followed by the two constants. Columns
/// are local velocities: all x hats, all y hats, (1,0), (0,1).
Matrix build_raw_snapshots(const CoarseNeighborhood& nb, const PatchSolver& solver);

struct SnapshotSpace {
  int raw_count = 0;
  Matrix basis;             // unit-norm columns, local velocity on the patch
  Vector gram_eigenvalues;  // all eigenvalues of U^T U, descending
};

/// Keeps the eigenvectors of U^T U above tau * largest; throws on an all-zero input.
SnapshotSpace filter_snapshots(const Matrix& raw, double tau = 1e-10);

enum class SpectralVariant { Numerics, Analysis };

/// Ascending eigenvalues; coordinates (in the snapshot basis) are S-orthonormal.
struct LocalEigenpairs {
  Vector values;
  Matrix coords;
};

/// Generalized symmetric eigenproblem A x = lambda S x with S positive definite.
LocalEigenpairs generalized_eigenpairs(const Matrix& A, const Matrix& S);

/// Numerics: int kappa grad.grad and int kappa u.v. Analysis: chi^2 grad.grad
/// against (kinv^2 + M |grad chi|^2) u.v + M chi^2 div div, chi = chi_x + chi_y.
LocalEigenpairs local_eigenproblem(const NestedMesh& mesh, const PermeabilityField& field,
                                   const CoarseNeighborhood& nb, const SnapshotSpace& snapshots,
                                   SpectralVariant variant, const MultiscalePoU* pou = nullptr, int member = -1);

enum class SelectionPolicy { ThresholdGe, Smallest, All };

/// ThresholdGe keeps the zero modes and every mode with
/// lambda_first / lambda >= lambda_off, lambda_first being the smallest
/// nonzero eigenvalue of the neighborhood. Eigenvalues with
/// lambda H^2 <= 1e-8 count as zero. Smallest keeps the m_off smallest.
struct Selection {
  SelectionPolicy policy = SelectionPolicy::ThresholdGe;
  double lambda_off = 1.0 / 3.0;
  int m_off = 2;
};

std::vector<int> select_offline_modes(const LocalEigenpairs& pairs, const Selection& selection, double H);

/// Coarse velocity space, stored as coefficient rows over generator rows:
/// basis function i is sum_j coefficients(i, j) generators(j, :).
struct OfflineSpace {
  SparseMatrix coefficients;
  SparseMatrix generators;  // rows are fine velocity vectors
  SparseMatrix Q0;          // coarse block indicators over fine triangles
  bool rows_independent = false;
  bool divergence_corrected = true;
  std::vector<int> modes_per_neighborhood;
  std::vector<int> neighborhood_of_row;

  int num_basis() const { return static_cast<int>(coefficients.rows()); }
  int num_pressure() const { return static_cast<int>(Q0.rows()); }
  /// Rows are the basis functions as fine velocity vectors.
  SparseMatrix R0() const { return coefficients * generators; }
};

/// Indicator of each coarse block over the fine triangles.
SparseMatrix coarse_pressure_map(const NestedMesh& mesh);

/// Selected local modes (local velocity columns on each neighborhood patch).
struct LocalModes {
  std::vector<Matrix> modes;
};

OfflineSpace build_global_offline(const NestedMesh& mesh, const MultiscalePoU& pou, const LocalModes& modes,
                                  const SkeletonExtension& extension, bool skip_divergence_correction = false);

/// Offline space spanned by every interior fine dof, with coarse pressures.
OfflineSpace identity_offline_space(const NestedMesh& mesh, const AssembledSystem& system);

/// Independent rows spanning the row space of the coefficient matrix.
struct RowBasis {
  SparseMatrix W;  // rank x generators
  int rank = 0;
  double span_defect = 0;  // largest distance of a dropped unit row from span(W)
};
RowBasis independent_row_basis(const SparseMatrix& coefficients, double tol = 1e-8);

struct CoarseSolution {
  Vector u0;  // coefficients over the independent row basis
  Vector p0;  // one value per coarse block
  MixedFunction fine;
  SparseMatrix basis;  // rows of the coefficient space actually solved in
  int rank = 0;
  double span_defect = 0;
  double residual = 0;
};

/// `lifting` defaults to the constant lifting of the system; any fine field
/// with the boundary values of the system works.
CoarseSolution solve_coarse(const AssembledSystem& system, const OfflineSpace& offline, const Vector* lifting = nullptr);

/// Relative residual of the fine equations tested against the coarse basis
/// the solution was computed in.
double coarse_orthogonality(const AssembledSystem& system, const OfflineSpace& offline, const CoarseSolution& solution);

/// Largest deviation, over basis functions and coarse blocks, of the
/// triangle means of div phi from their block average; each phi is scaled
/// by h / max|phi| so the measure is dimensionless.
double divergence_containment(const NestedMesh& mesh, const OfflineSpace& offline);

/// Snapshots, eigenpairs and block extensions shared by every selection.
class OfflinePipeline {
public:
  OfflinePipeline(NestedMesh mesh, PermeabilityField field, SpectralVariant variant = SpectralVariant::Numerics,
                  double tau = 1e-10);

  const NestedMesh& mesh() const { return mesh_; }
  const PermeabilityField& field() const { return field_; }
  SpectralVariant variant() const { return variant_; }
  const MultiscalePoU& pou() const { return pou_; }
  std::span<const BlockSolver> block_solvers() const { return blocks_; }
  const SkeletonExtension& extension() const { return extension_; }
  const std::vector<SnapshotSpace>& snapshots() const { return snapshots_; }
  const std::vector<LocalEigenpairs>& eigenpairs() const { return eigenpairs_; }
  int snapshot_dimension() const;

  LocalModes select(const Selection& selection) const;
  OfflineSpace build(const Selection& selection, bool skip_divergence_correction = false) const;
  Vector lifting(std::array<double, 2> g) const { return blockwise_lifting(mesh_, blocks_, g); }

private:
  NestedMesh mesh_;
  PermeabilityField field_;
  SpectralVariant variant_;
  std::vector<BlockSolver> blocks_;
  MultiscalePoU pou_;
  SkeletonExtension extension_;
  std::vector<SnapshotSpace> snapshots_;
  std::vector<LocalEigenpairs> eigenpairs_;
};

}  // namespace gmsfem
