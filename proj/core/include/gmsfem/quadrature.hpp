#pragma once

#include <vector>

namespace gmsfem {

/// Point of a rule on the reference triangle (0,0), (1,0), (0,1).
/// Weights of a rule sum to 1/2, the reference area.
struct QuadraturePoint {
  double xi = 0;
  double eta = 0;
  double weight = 0;
};

using TriangleRule = std::vector<QuadraturePoint>;

/// Gauss-Legendre nodes and weights on [0, 1] (Golub-Welsch).
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
LineRule gauss_legendre(int n);

/// Symmetric six-point rule, exact for polynomials of degree 4.
TriangleRule dunavant_degree4();

/// Collapsed tensor Gauss rule with n^2 points, exact to degree 2n - 2.
TriangleRule conical_rule(int n);

}  // namespace gmsfem
