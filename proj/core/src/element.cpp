#include "gmsfem/element.hpp"

#include <cmath>
#include <stdexcept>

namespace gmsfem {

P2Triangle::P2Triangle(Point a, Point b, Point c) : v_{a, b, c} {
  const double j11 = b.x - a.x, j12 = c.x - a.x;
  const double j21 = b.y - a.y, j22 = c.y - a.y;
  const double det = j11 * j22 - j12 * j21;
  if (!(std::abs(det) > 0)) throw std::invalid_argument("P2Triangle: degenerate triangle");
  area_ = 0.5 * std::abs(det);
  // grad l1 and grad l2 are the rows of J^{-1}; grad l0 = -(grad l1 + grad l2)
  grad_bary_[1] = {j22 / det, -j12 / det};
  grad_bary_[2] = {-j21 / det, j11 / det};
  grad_bary_[0] = {-grad_bary_[1][0] - grad_bary_[2][0], -grad_bary_[1][1] - grad_bary_[2][1]};
}

Point P2Triangle::map(double xi, double eta) const {
  return {v_[0].x + xi * (v_[1].x - v_[0].x) + eta * (v_[2].x - v_[0].x),
          v_[0].y + xi * (v_[1].y - v_[0].y) + eta * (v_[2].y - v_[0].y)};
}

Local6Vec P2Triangle::values(double xi, double eta) {
  const double l0 = 1.0 - xi - eta, l1 = xi, l2 = eta;
  Local6Vec v;
  v << l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0;
  return v;
}

Grad6 P2Triangle::gradients(double xi, double eta) const {
  const std::array<double, 3> l{1.0 - xi - eta, xi, eta};
  const auto& g = grad_bary_;
  Grad6 out{};
  for (int d = 0; d < 2; ++d) {
    for (int k = 0; k < 3; ++k) out[k][d] = (4 * l[k] - 1) * g[k][d];
    out[3][d] = 4 * (l[0] * g[1][d] + l[1] * g[0][d]);
    out[4][d] = 4 * (l[1] * g[2][d] + l[2] * g[1][d]);
    out[5][d] = 4 * (l[2] * g[0][d] + l[0] * g[2][d]);
  }
  return out;
}

ElementTemplates element_templates(const P2Triangle& tri, const TriangleRule& rule) {
  ElementTemplates t;
  t.dxdx.setZero();
  t.dxdy.setZero();
  t.dydy.setZero();
  t.mass.setZero();
  t.int_dx.setZero();
  t.int_dy.setZero();
  t.area = tri.area();
  const double scale = 2.0 * tri.area();
  for (const auto& q : rule) {
    const double w = q.weight * scale;
    const Local6Vec phi = P2Triangle::values(q.xi, q.eta);
    const Grad6 g = tri.gradients(q.xi, q.eta);
    Local6Vec gx, gy;
    for (int i = 0; i < 6; ++i) {
      gx(i) = g[i][0];
      gy(i) = g[i][1];
    }
    t.dxdx += w * gx * gx.transpose();
    t.dxdy += w * gx * gy.transpose();
    t.dydy += w * gy * gy.transpose();
    t.mass += w * phi * phi.transpose();
    t.int_dx += w * gx;
    t.int_dy += w * gy;
  }
  // exact symmetry, so assembled operators satisfy A == A^T bitwise
  t.dxdx = 0.5 * (t.dxdx + t.dxdx.transpose()).eval();
  t.dydy = 0.5 * (t.dydy + t.dydy.transpose()).eval();
  t.mass = 0.5 * (t.mass + t.mass.transpose()).eval();
  return t;
}

std::array<ElementTemplates, 2> structured_templates(double h) {
  const auto rule = dunavant_degree4();
  return {element_templates(P2Triangle({0, 0}, {h, 0}, {h, h}), rule),
          element_templates(P2Triangle({0, 0}, {h, h}, {0, h}), rule)};
}

P2Triangle triangle_geometry(const NestedMesh& mesh, int t) {
  const auto nodes = mesh.triangle_nodes(t);
  return P2Triangle(mesh.node_point(nodes[0]), mesh.node_point(nodes[1]), mesh.node_point(nodes[2]));
}

}  // namespace gmsfem
