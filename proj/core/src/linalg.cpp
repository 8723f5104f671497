#include "gmsfem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/SparseCholesky>

namespace gmsfem {

SparseMatrix vectorize(const SparseMatrix& scalar) {
  const auto n = scalar.rows();
  const auto m = scalar.cols();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(2 * scalar.nonZeros()));
  for (int k = 0; k < scalar.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(scalar, k); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
      trip.emplace_back(it.row() + n, it.col() + m, it.value());
    }
  }
  SparseMatrix out(2 * n, 2 * m);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SparseMatrix sparse_identity(int n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

struct SaddleSolver::Factor {
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

namespace {
constexpr double kShift = 1e-8;         // pressure-block perturbation relative to diag(B diag(A)^-1 B^T)
constexpr double kTarget = 1e-15;
constexpr double kAccept = 1e-9;
constexpr int kMaxRefinements = 100;
}  // namespace

SaddleSolver::SaddleSolver(const SparseMatrix& A, const SparseMatrix& B, Vector weights)
    : weights_(std::move(weights)), nu_(static_cast<int>(A.rows())), np_(static_cast<int>(B.rows())) {
  if (A.cols() != nu_ || B.cols() != nu_ || weights_.size() != np_) {
    throw std::invalid_argument("saddle solver: inconsistent block sizes");
  }
  const Vector adiag = A.diagonal();
  if ((adiag.array() <= 0).any()) throw NumericalError("saddle solver: velocity block is not positive definite");
  Vector schur = Vector::Zero(np_);
  for (int k = 0; k < B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) schur(it.row()) += it.value() * it.value() / adiag(it.col());
  }
  const double fallback = np_ > 0 ? std::max(schur.mean(), 1e-300) : 1.0;

  const Vector bt_one = B.transpose() * Vector::Ones(np_);
  double bscale = 0;
  for (int k = 0; k < B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) bscale = std::max(bscale, std::abs(it.value()));
  }
  constant_kernel_ = np_ > 0 && bt_one.cwiseAbs().maxCoeff() <= 1e-10 * bscale;

  std::vector<Triplet> trip, shifted;
  trip.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * B.nonZeros()));
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (int k = 0; k < B.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
      trip.emplace_back(nu_ + it.row(), it.col(), it.value());
      trip.emplace_back(it.col(), nu_ + it.row(), it.value());
    }
  }
  shifted = trip;
  for (int q = 0; q < np_; ++q) {
    shifted.emplace_back(nu_ + q, nu_ + q, -kShift * (schur(q) > 0 ? schur(q) : fallback));
  }
  const int n = nu_ + np_;
  K_.resize(n, n);
  K_.setFromTriplets(trip.begin(), trip.end());
  Vector rowsum = Vector::Zero(n);
  for (int k = 0; k < K_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(K_, k); it; ++it) rowsum(it.row()) += std::abs(it.value());
  }
  knorm_ = n > 0 ? rowsum.maxCoeff() : 0.0;
  SparseMatrix Ks(n, n);
  Ks.setFromTriplets(shifted.begin(), shifted.end());
  factor_ = std::make_unique<Factor>();
  factor_->ldlt.compute(Ks);
  if (factor_->ldlt.info() != Eigen::Success) throw NumericalError("saddle solver: LDL^T factorization failed");
}

SaddleSolver::~SaddleSolver() = default;
SaddleSolver::SaddleSolver(SaddleSolver&&) noexcept = default;
SaddleSolver& SaddleSolver::operator=(SaddleSolver&&) noexcept = default;

double SaddleSolver::solve(const Matrix& f, const Matrix& g, Matrix& u, Matrix& p) const {
  if (f.rows() != nu_ || g.rows() != np_ || f.cols() != g.cols()) {
    throw std::invalid_argument("saddle solver: right-hand side has the wrong shape");
  }
  const Eigen::Index cols = f.cols();
  Matrix b(nu_ + np_, cols);
  b.topRows(nu_) = f;
  b.bottomRows(np_) = g;
  // normwise backward error per column
  auto relative = [&](const Matrix& r, const Matrix& x) {
    double worst = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double scale = knorm_ * x.col(c).cwiseAbs().maxCoeff() + b.col(c).cwiseAbs().maxCoeff();
      if (scale > 0) worst = std::max(worst, r.col(c).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
  };
  Matrix x = Matrix::Zero(nu_ + np_, cols);
  Matrix r = b;
  double res = relative(r, x);
  for (int it = 0; it < kMaxRefinements && res > kTarget; ++it) {
    x += factor_->ldlt.solve(r);
    r = b - K_ * x;
    const double next = relative(r, x);
    const bool stalled = next > 0.9 * res;
    res = next;
    if (stalled && it > 0) break;
  }
  if (!x.allFinite() || !(res <= kAccept)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", res);
    throw NumericalError(std::string("saddle solver: iterative refinement stalled at backward error ") + buf +
                         "; the system is singular or too badly conditioned");
  }
  u = x.topRows(nu_);
  p = x.bottomRows(np_);
  if (constant_kernel_) {
    const double wsum = weights_.sum();
    if (wsum != 0) p.rowwise() -= (weights_.transpose() * p) / wsum;
  }
  return res;
}

}  // namespace gmsfem
