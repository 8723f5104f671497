#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace gmsfem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// A factorization or eigen solve failed, or produced non-finite output.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// [S 0; 0 S] for the blocked (all x, then all y) velocity layout.
SparseMatrix vectorize(const SparseMatrix& scalar);

SparseMatrix sparse_identity(int n);

/// Saddle system [A B^T; B 0] with A symmetric positive definite and a
/// pressure determined up to a constant, normalized by weights^T p = 0.
///
/// The factored operator carries a small negative diagonal in the pressure
/// block (quasi-definite, so LDL^T with a fill-reducing ordering is stable);
/// iterative refinement against the exact operator removes the perturbation.
/// Throws NumericalError when refinement stalls above a normwise backward error of 1e-9.
class SaddleSolver {
public:
  SaddleSolver(const SparseMatrix& A, const SparseMatrix& B, Vector weights);
  ~SaddleSolver();
  SaddleSolver(SaddleSolver&&) noexcept;
  SaddleSolver& operator=(SaddleSolver&&) noexcept;

  int velocity_size() const { return nu_; }
  int pressure_size() const { return np_; }

  /// One right-hand side per column; returns the largest normwise backward error.
  /// When constants lie in the kernel of B^T the pressure data must sum to zero.
  double solve(const Matrix& f, const Matrix& g, Matrix& u, Matrix& p) const;

private:
  struct Factor;
  SparseMatrix K_;
  Vector weights_;
  int nu_ = 0;
  int np_ = 0;
  double knorm_ = 0;
  bool constant_kernel_ = false;
  std::unique_ptr<Factor> factor_;
};

}  // namespace gmsfem
