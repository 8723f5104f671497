#include "gmsfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>


#include "gmsfem/element.hpp"
#include "gmsfem/quadrature.hpp"

namespace gmsfem {

namespace {

constexpr std::array<std::array<std::array<int, 2>, 6>, 2> kOffsets{{
    {{{0, 0}, {2, 0}, {2, 2}, {1, 0}, {2, 1}, {1, 1}}},
    {{{0, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 2}, {0, 1}}},
}};

constexpr int kLoadRulePoints = 6;

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& trip) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Rows of a 0/1 matrix picking `dofs` out of n.
SparseMatrix selector(std::span<const int> dofs, int n) {
  std::vector<Triplet> trip;
  trip.reserve(dofs.size());
  for (std::size_t k = 0; k < dofs.size(); ++k) trip.emplace_back(static_cast<int>(k), dofs[k], 1.0);
  return from_triplets(static_cast<int>(dofs.size()), n, trip);
}

template <class Fn>
SparseMatrix scalar_form(const NestedMesh& mesh, const Patch& patch, std::span<const double> weight, Fn&& local) {
  const PatchIndex idx(mesh, patch);
  if (weight.size() != static_cast<std::size_t>(idx.num_triangles())) {
    throw std::invalid_argument("patch form: expected one weight per triangle");
  }
  const auto templates = structured_templates(mesh.h());
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(idx.num_triangles()) * 36);
  for (int t = 0; t < idx.num_triangles(); ++t) {
    const Local6 m = weight[static_cast<std::size_t>(t)] * local(templates[static_cast<std::size_t>(t % 2)]);
    const auto nodes = idx.triangle_nodes(t);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) trip.emplace_back(nodes[i], nodes[j], m(i, j));
    }
  }
  return from_triplets(idx.num_nodes(), idx.num_nodes(), trip);
}

}  // namespace

PatchIndex::PatchIndex(const NestedMesh& mesh, Patch patch)
    : patch_(patch), mesh_nodes_(mesh.num_nodes()), mesh_stride_(mesh.node_stride()), mesh_cells_(mesh.n_fine()) {
  if (patch.refine != mesh.refine() || patch.bx0 < 0 || patch.by0 < 0 || patch.bx1 > mesh.n_coarse() ||
      patch.by1 > mesh.n_coarse() || patch.bx0 >= patch.bx1 || patch.by0 >= patch.by1) {
    throw std::invalid_argument("patch does not fit the mesh");
  }
}

int PatchIndex::global_node(int local) const {
  const int nx = patch_.nodes_x();
  return (patch_.node_i0() + local % nx) + (patch_.node_j0() + local / nx) * mesh_stride_;
}

int PatchIndex::global_triangle(int local) const {
  const int cell = local / 2;
  const int cx = patch_.cells_x();
  const int i = patch_.refine * patch_.bx0 + cell % cx;
  const int j = patch_.refine * patch_.by0 + cell / cx;
  return 2 * (i + j * mesh_cells_) + local % 2;
}

int PatchIndex::global_dof(int local) const {
  const int n = num_nodes();
  return local < n ? global_node(local) : global_node(local - n) + mesh_nodes_;
}

std::array<int, 6> PatchIndex::triangle_nodes(int local_triangle) const {
  const int cell = local_triangle / 2;
  const int cx = patch_.cells_x();
  const int nx = patch_.nodes_x();
  const int I = 2 * (cell % cx);
  const int J = 2 * (cell / cx);
  const auto& off = kOffsets[static_cast<std::size_t>(local_triangle % 2)];
  std::array<int, 6> out{};
  for (std::size_t k = 0; k < 6; ++k) out[k] = (I + off[k][0]) + (J + off[k][1]) * nx;
  return out;
}

std::vector<int> PatchIndex::boundary_dofs() const {
  std::vector<int> out;
  for (int c = 0; c < 2; ++c) {
    for (int l = 0; l < num_nodes(); ++l) {
      if (patch_.on_patch_boundary(l)) out.push_back(l + c * num_nodes());
    }
  }
  return out;
}

std::vector<int> PatchIndex::interior_dofs() const {
  std::vector<int> out;
  for (int c = 0; c < 2; ++c) {
    for (int l = 0; l < num_nodes(); ++l) {
      if (!patch_.on_patch_boundary(l)) out.push_back(l + c * num_nodes());
    }
  }
  return out;
}

std::vector<double> patch_inv_perm(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch) {
  field.check_matches(mesh);
  const PatchIndex idx(mesh, patch);
  std::vector<double> w(static_cast<std::size_t>(idx.num_triangles()));
  for (int t = 0; t < idx.num_triangles(); ++t) {
    w[static_cast<std::size_t>(t)] = field.inv_perm_of_triangle(idx.global_triangle(t));
  }
  return w;
}

PatchOperators assemble_patch(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch) {
  const PatchIndex idx(mesh, patch);
  const auto kinv = patch_inv_perm(mesh, field, patch);
  const auto templates = structured_templates(mesh.h());
  const int n = idx.num_nodes();
  std::vector<Triplet> a_trip, b_trip;
  a_trip.reserve(static_cast<std::size_t>(idx.num_triangles()) * 72);
  b_trip.reserve(static_cast<std::size_t>(idx.num_triangles()) * 12);
  PatchOperators ops;
  ops.areas.resize(idx.num_triangles());
  for (int t = 0; t < idx.num_triangles(); ++t) {
    const auto& tpl = templates[static_cast<std::size_t>(t % 2)];
    const Local6 local = tpl.stiffness() + kinv[static_cast<std::size_t>(t)] * tpl.mass;
    const auto nodes = idx.triangle_nodes(t);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        a_trip.emplace_back(nodes[i], nodes[j], local(i, j));
        a_trip.emplace_back(nodes[i] + n, nodes[j] + n, local(i, j));
      }
      b_trip.emplace_back(t, nodes[i], tpl.int_dx(i));
      b_trip.emplace_back(t, nodes[i] + n, tpl.int_dy(i));
    }
    ops.areas(t) = tpl.area;
  }
  ops.brinkman = from_triplets(2 * n, 2 * n, a_trip);
  ops.divergence = from_triplets(idx.num_triangles(), 2 * n, b_trip);
  return ops;
}

SparseMatrix weighted_stiffness(const NestedMesh& mesh, const Patch& patch, std::span<const double> weight) {
  return scalar_form(mesh, patch, weight, [](const ElementTemplates& t) { return t.stiffness(); });
}

SparseMatrix weighted_mass(const NestedMesh& mesh, const Patch& patch, std::span<const double> weight) {
  return scalar_form(mesh, patch, weight, [](const ElementTemplates& t) { return t.mass; });
}

SparseMatrix divdiv_matrix(const NestedMesh& mesh, const Patch& patch) {
  const PatchIndex idx(mesh, patch);
  const auto templates = structured_templates(mesh.h());
  const int n = idx.num_nodes();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(idx.num_triangles()) * 144);
  for (int t = 0; t < idx.num_triangles(); ++t) {
    const auto& tpl = templates[static_cast<std::size_t>(t % 2)];
    const auto nodes = idx.triangle_nodes(t);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        trip.emplace_back(nodes[i], nodes[j], tpl.dxdx(i, j));
        trip.emplace_back(nodes[i], nodes[j] + n, tpl.dxdy(i, j));
        trip.emplace_back(nodes[i] + n, nodes[j], tpl.dxdy(j, i));
        trip.emplace_back(nodes[i] + n, nodes[j] + n, tpl.dydy(i, j));
      }
    }
  }
  return from_triplets(2 * n, 2 * n, trip);
}

Vector load_vector(const NestedMesh& mesh, const VectorField& f) {
  const int n = mesh.num_nodes();
  Vector F = Vector::Zero(2 * n);
  if (!f) return F;
  const auto rule = conical_rule(kLoadRulePoints);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto tri = triangle_geometry(mesh, t);
    const auto nodes = mesh.triangle_nodes(t);
    const double scale = 2.0 * tri.area();
    for (const auto& q : rule) {
      const auto fv = f(tri.map(q.xi, q.eta));
      const Local6Vec phi = P2Triangle::values(q.xi, q.eta);
      for (int i = 0; i < 6; ++i) {
        F(nodes[i]) += q.weight * scale * fv[0] * phi(i);
        F(nodes[i] + n) += q.weight * scale * fv[1] * phi(i);
      }
    }
  }
  return F;
}

AssembledSystem assemble(const NestedMesh& mesh, const PermeabilityField& field, const VectorField& f,
                         std::array<double, 2> g) {
  field.check_matches(mesh);
  AssembledSystem sys;
  auto ops = assemble_patch(mesh, field, mesh.whole());
  sys.A = std::move(ops.brinkman);
  sys.B = std::move(ops.divergence);
  sys.areas = std::move(ops.areas);
  sys.F = load_vector(mesh, f);
  sys.g = g;
  const int n = mesh.num_nodes();
  sys.lifting.resize(2 * n);
  sys.lifting.head(n).setConstant(g[0]);
  sys.lifting.tail(n).setConstant(g[1]);
  for (int c = 0; c < 2; ++c) {
    for (int node = 0; node < n; ++node) {
      (mesh.is_boundary_node(node) ? sys.dirichlet_dofs : sys.free_dofs).push_back(node + c * n);
    }
  }
  return sys;
}

MixedFunction solve_mixed(const AssembledSystem& system, const SparseMatrix* pressure_map) {
  const int nv = static_cast<int>(system.A.rows());
  const int nt = static_cast<int>(system.B.rows());
  const SparseMatrix S = selector(system.free_dofs, nv);
  const SparseMatrix P = pressure_map ? *pressure_map : sparse_identity(nt);
  if (P.cols() != nt) throw std::invalid_argument("solve_mixed: pressure map does not match the triangle count");

  const SparseMatrix Aff = S * system.A * S.transpose();
  const SparseMatrix Bp = P * system.B;
  const SparseMatrix Bf = Bp * S.transpose();
  const SaddleSolver solver(Aff, Bf, P * system.areas);
  Matrix u, p;
  solver.solve(S * (system.F - system.A * system.lifting), -(Bp * system.lifting), u, p);

  MixedFunction out;
  out.velocity = system.lifting + S.transpose() * u.col(0);
  out.pressure = P.transpose() * p.col(0);
  return out;
}

SaddleResidual saddle_residual(const AssembledSystem& system, const MixedFunction& solution) {
  const SparseMatrix S = selector(system.free_dofs, static_cast<int>(system.A.rows()));
  const Vector au = S * (system.A * solution.velocity);
  const Vector bp = S * (system.B.transpose() * solution.pressure);
  const Vector f = S * system.F;
  const double scale = au.norm() + bp.norm() + f.norm();
  SaddleResidual r;
  r.momentum = scale > 0 ? (au + bp - f).norm() / scale : 0.0;
  r.divergence = (system.B * solution.velocity).cwiseAbs().maxCoeff();
  return r;
}

NormOperators norm_operators(const NestedMesh& mesh, const PermeabilityField& field, const Patch& patch) {
  NormOperators ops;
  auto base = assemble_patch(mesh, field, patch);
  const auto kinv = patch_inv_perm(mesh, field, patch);
  ops.brinkman = std::move(base.brinkman);
  ops.areas = std::move(base.areas);
  ops.divdiv = divdiv_matrix(mesh, patch);
  ops.weighted_mass = vectorize(weighted_mass(mesh, patch, kinv));
  ops.weighted_stiffness = vectorize(weighted_stiffness(mesh, patch, kinv));
  ops.M = field.M();
  return ops;
}

NormOperators norm_operators(const NestedMesh& mesh, const PermeabilityField& field) {
  return norm_operators(mesh, field, mesh.whole());
}

double tnorm(const NormOperators& ops, const Vector& u) {
  const double sq = u.dot(ops.brinkman * u) + ops.M * u.dot(ops.divdiv * u);
  return std::sqrt(std::max(sq, 0.0));
}

double snorm(const NormOperators& ops, const Vector& p) {
  return std::sqrt(p.cwiseProduct(p).dot(ops.areas) / ops.M);
}

WeightedErrors weighted_errors(const NormOperators& ops, const Vector& u_ref, const Vector& u_approx) {
  const Vector e = u_ref - u_approx;
  auto ratio = [&](const SparseMatrix& Q) -> std::optional<double> {
    const double den = u_ref.dot(Q * u_ref);
    if (!(den > 0)) return std::nullopt;
    return std::sqrt(std::max(e.dot(Q * e), 0.0) / den);
  };
  return {ratio(ops.weighted_mass), ratio(ops.weighted_stiffness)};
}

AnalyticErrors analytic_errors(const NestedMesh& mesh, const MixedFunction& u, const VectorField& exact,
                               const GradientField& exact_grad, const std::function<double(Point)>& exact_pressure) {
  const auto rule = conical_rule(kLoadRulePoints);
  const int n = mesh.num_nodes();
  double l2 = 0, h1 = 0, p2 = 0;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto tri = triangle_geometry(mesh, t);
    const auto nodes = mesh.triangle_nodes(t);
    const double scale = 2.0 * tri.area();
    Local6Vec ux, uy;
    for (int i = 0; i < 6; ++i) {
      ux(i) = u.velocity(nodes[i]);
      uy(i) = u.velocity(nodes[i] + n);
    }
    for (const auto& q : rule) {
      const Point x = tri.map(q.xi, q.eta);
      const Local6Vec phi = P2Triangle::values(q.xi, q.eta);
      const Grad6 g = tri.gradients(q.xi, q.eta);
      const auto ue = exact(x);
      const auto ge = exact_grad(x);
      std::array<double, 4> gh{0, 0, 0, 0};
      for (int i = 0; i < 6; ++i) {
        gh[0] += ux(i) * g[i][0];
        gh[1] += ux(i) * g[i][1];
        gh[2] += uy(i) * g[i][0];
        gh[3] += uy(i) * g[i][1];
      }
      const double w = q.weight * scale;
      l2 += w * (std::pow(ux.dot(phi) - ue[0], 2) + std::pow(uy.dot(phi) - ue[1], 2));
      for (int d = 0; d < 4; ++d) h1 += w * std::pow(gh[d] - ge[d], 2);
      if (exact_pressure) p2 += w * std::pow(u.pressure(t) - exact_pressure(x), 2);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1), std::sqrt(p2)};
}

Vector interpolate(const NestedMesh& mesh, const VectorField& field) {
  const int n = mesh.num_nodes();
  Vector v(2 * n);
  for (int node = 0; node < n; ++node) {
    const auto val = field(mesh.node_point(node));
    v(node) = val[0];
    v(node + n) = val[1];
  }
  return v;
}

}  // namespace gmsfem
