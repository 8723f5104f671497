#include <doctest.h>

#include <cmath>

#include "gmsfem/element.hpp"
#include "gmsfem/quadrature.hpp"

using namespace gmsfem;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// int over the reference triangle of xi^a eta^b
double monomial_exact(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

double apply(const TriangleRule& rule, int a, int b) {
  double s = 0;
  for (const auto& q : rule) s += q.weight * std::pow(q.xi, a) * std::pow(q.eta, b);
  return s;
}

}  // namespace

TEST_CASE("Gauss-Legendre integrates degree 2n-1 exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto g = gauss_legendre(n);
    for (int d = 0; d <= 2 * n - 1; ++d) {
      double s = 0;
      for (int k = 0; k < n; ++k) s += g.weights[k] * std::pow(g.nodes[k], d);
      CHECK(s == doctest::Approx(1.0 / (d + 1)).epsilon(1e-13));
    }
  }
}

TEST_CASE("degree-4 rule integrates all monomials up to degree 4") {
  const auto rule = dunavant_degree4();
  CHECK(rule.size() == 6);
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) CHECK(apply(rule, a, b) == doctest::Approx(monomial_exact(a, b)).epsilon(1e-12));
  }
  CHECK(apply(rule, 6, 0) != doctest::Approx(monomial_exact(6, 0)).epsilon(1e-12));
}

TEST_CASE("conical rule integrates degree 2n-2") {
  for (int n = 2; n <= 7; ++n) {
    const auto rule = conical_rule(n);
    for (int a = 0; a <= 2 * n - 2; ++a) {
      for (int b = 0; a + b <= 2 * n - 2; ++b) {
        CHECK(apply(rule, a, b) == doctest::Approx(monomial_exact(a, b)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("P2 mass matrix matches the closed form") {
  // Closed-form P2 mass on a triangle of area T: vertex-vertex diagonal T/30,
  // off-diagonal -T/180; edge-edge diagonal 8T/45, off-diagonal 4T/45;
  // vertex against opposite edge -T/45, against adjacent edges 0.
  const P2Triangle tri({0.3, 0.1}, {1.2, 0.4}, {0.5, 0.9});
  const auto t = element_templates(tri, dunavant_degree4());
  const double T = tri.area();
  CHECK(T == doctest::Approx(0.5 * std::abs(0.9 * 0.8 - 0.2 * 0.3)));
  const int opposite[3] = {4, 5, 3};
  for (int i = 0; i < 3; ++i) {
    CHECK(t.mass(i, i) == doctest::Approx(T / 30));
    for (int j = 0; j < 3; ++j) {
      if (j != i) CHECK(t.mass(i, j) == doctest::Approx(-T / 180));
    }
    for (int e = 3; e < 6; ++e) {
      CHECK(t.mass(i, e) == doctest::Approx(e == opposite[i] ? -T / 45 : 0.0).epsilon(1e-12));
    }
  }
  for (int e = 3; e < 6; ++e) {
    for (int f = 3; f < 6; ++f) CHECK(t.mass(e, f) == doctest::Approx(e == f ? 8 * T / 45 : 4 * T / 45));
  }
  CHECK(t.mass.sum() == doctest::Approx(T));
}

TEST_CASE("P2 gradients: partition of unity, symmetry, integrals") {
  const P2Triangle tri({0, 0}, {0.25, 0}, {0.25, 0.25});
  const auto t = element_templates(tri, dunavant_degree4());
  CHECK((t.stiffness() - t.stiffness().transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.stiffness().rowwise().sum().cwiseAbs().maxCoeff() < 1e-13);
  CHECK(t.int_dx.sum() == doctest::Approx(0.0));
  // int grad phi for a vertex function is T/3 grad lambda; lambda_0 = 1 - x/0.25 here
  CHECK(t.int_dx(0) == doctest::Approx(tri.area() / 3 * (-4.0)));
  CHECK(t.int_dy(0) == doctest::Approx(0.0).epsilon(1e-14));
  for (int k = 0; k < 6; ++k) {
    const auto v = P2Triangle::values(0.2, 0.3);
    CHECK(v.sum() == doctest::Approx(1.0));
  }
}
