#include "gmsfem/quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gmsfem {

LineRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  LineRule rule;
  for (int k = 0; k < n; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes.push_back(0.5 * (eig.eigenvalues()(k) + 1.0));
    rule.weights.push_back(v0 * v0);  // 2 v0^2 on [-1, 1], halved for [0, 1]
  }
  return rule;
}

TriangleRule dunavant_degree4() {
  constexpr double a1 = 0.445948490915965, b1 = 0.108103018168070, w1 = 0.223381589678011;
  constexpr double a2 = 0.091576213509771, b2 = 0.816847572980459, w2 = 0.109951743655322;
  TriangleRule rule;
  auto orbit = [&rule](double a, double b, double w) {
    // barycentric (a, a, b) and its rotations; xi = l1, eta = l2
    rule.push_back({a, b, 0.5 * w});
    rule.push_back({b, a, 0.5 * w});
    rule.push_back({a, a, 0.5 * w});
  };
  orbit(a1, b1, w1);
  orbit(a2, b2, w2);
  return rule;
}

TriangleRule conical_rule(int n) {
  const LineRule g = gauss_legendre(n);
  TriangleRule rule;
  rule.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double u = g.nodes[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      const double v = g.nodes[static_cast<std::size_t>(j)];
      rule.push_back({u, v * (1.0 - u),
                      g.weights[static_cast<std::size_t>(i)] * g.weights[static_cast<std::size_t>(j)] * (1.0 - u)});
    }
  }
  return rule;
}

}  // namespace gmsfem
