#pragma once

#include <array>

#include <Eigen/Dense>

#include "gmsfem/mesh.hpp"
#include "gmsfem/quadrature.hpp"

namespace gmsfem {

using Local6 = Eigen::Matrix<double, 6, 6>;
using Local6Vec = Eigen::Matrix<double, 6, 1>;
using Grad6 = std::array<std::array<double, 2>, 6>;

/// Quadratic Lagrange triangle. Local nodes: v0, v1, v2, then the
/// midpoints of (v0,v1), (v1,v2), (v2,v0).
class P2Triangle {
public:
  P2Triangle(Point a, Point b, Point c);

  double area() const { return area_; }
  Point map(double xi, double eta) const;
  static Local6Vec values(double xi, double eta);
  Grad6 gradients(double xi, double eta) const;

private:
  std::array<Point, 3> v_;
  double area_ = 0;
  std::array<std::array<double, 2>, 3> grad_bary_{};
};

/// Integrals of products of P2 shape functions over one triangle with unit weight.
struct ElementTemplates {
  Local6 dxdx;  // int dphi_i/dx dphi_j/dx
  Local6 dxdy;  // int dphi_i/dx dphi_j/dy
  Local6 dydy;
  Local6 mass;
  Local6Vec int_dx;  // int dphi_i/dx
  Local6Vec int_dy;
  double area = 0;

  Local6 stiffness() const { return dxdx + dydy; }
};

ElementTemplates element_templates(const P2Triangle& tri, const TriangleRule& rule);

/// Templates of the lower (type 0) and upper (type 1) triangle of a fine square of side h.
std::array<ElementTemplates, 2> structured_templates(double h);

/// Geometry of triangle t of the mesh.
P2Triangle triangle_geometry(const NestedMesh& mesh, int t);

}  // namespace gmsfem
