#include <doctest.h>

#include <cmath>

#include "gmsfem/fem.hpp"

using namespace gmsfem;

namespace {

// Stream function X(x) X(y) with X = x^2 (1 - x)^2, velocity (X Y', -X' Y), weak pressure x - 1/2.
double X0(double s) { return s * s * (1 - s) * (1 - s); }
double X1(double s) { return 2 * s - 6 * s * s + 4 * s * s * s; }
double X2(double s) { return 2 - 12 * s + 12 * s * s; }
double X3(double s) { return -12 + 24 * s; }

std::array<double, 2> exact_u(Point p) { return {X0(p.x) * X1(p.y), -X1(p.x) * X0(p.y)}; }
std::array<double, 4> exact_grad(Point p) {
  return {X1(p.x) * X1(p.y), X0(p.x) * X2(p.y), -X2(p.x) * X0(p.y), -X1(p.x) * X1(p.y)};
}
// f = -lap u + u - grad p, matching a(u,v) + <div v, p> = <f, v>
std::array<double, 2> source(Point p) {
  const double x = p.x, y = p.y;
  const double lap_x = X2(x) * X1(y) + X0(x) * X3(y);
  const double lap_y = -(X3(x) * X0(y) + X1(x) * X2(y));
  const auto u = exact_u(p);
  return {-lap_x + u[0] - 1.0, -lap_y + u[1]};
}

PermeabilityField stripes(const NestedMesh& mesh, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(mesh.num_cells()));
  for (int j = 0; j < mesh.n_fine(); ++j) {
    for (int i = 0; i < mesh.n_fine(); ++i) v[static_cast<std::size_t>(i + j * mesh.n_fine())] = ((i / 2 + j) % 3 == 0) ? hi : lo;
  }
  return PermeabilityField(mesh.n_fine(), mesh.n_fine(), v);
}

}  // namespace

TEST_CASE("assembled operators: symmetry, constant divergence, cellwise integrals") {
  const auto mesh = NestedMesh::build(2, 3);
  const auto field = stripes(mesh, 1.0, 1e4);
  const auto sys = assemble(mesh, field, nullptr, {1, 0});
  const SparseMatrix diff = sys.A - SparseMatrix(sys.A.transpose());
  CHECK(Matrix(diff).cwiseAbs().maxCoeff() == 0.0);
  const Vector c = interpolate(mesh, [](Point) { return std::array<double, 2>{1.0, 0.0}; });
  CHECK((sys.B * c).cwiseAbs().maxCoeff() < 1e-14);
  // u = (x, 0): div = 1, so row K integrates to |K|
  const Vector lin = interpolate(mesh, [](Point p) { return std::array<double, 2>{p.x, 0.0}; });
  CHECK(((sys.B * lin) - sys.areas).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sys.areas.sum() == doctest::Approx(1.0));
  // a((1,0),(1,0)) = int kinv
  double kinv_int = 0;
  for (int cell = 0; cell < mesh.num_cells(); ++cell) kinv_int += field.inv_perm(cell) * mesh.h() * mesh.h();
  CHECK(c.dot(sys.A * c) == doctest::Approx(kinv_int));
}

TEST_CASE("zero data gives the zero solution") {
  const auto mesh = NestedMesh::build(2, 2);
  const auto field = stripes(mesh, 1e-3, 10.0);
  const auto sol = solve_mixed(assemble(mesh, field, nullptr, {0, 0}));
  CHECK(sol.velocity.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.pressure.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant velocity is reproduced with f = kinv (1,0)") {
  const auto mesh = NestedMesh::build(3, 3);
  const auto field = stripes(mesh, 1e-2, 1e4);
  const auto f = [&](Point p) {
    const int i = std::min(static_cast<int>(p.x / mesh.h()), mesh.n_fine() - 1);
    const int j = std::min(static_cast<int>(p.y / mesh.h()), mesh.n_fine() - 1);
    return std::array<double, 2>{field.inv_perm(i, j), 0.0};
  };
  const auto sys = assemble(mesh, field, f, {1, 0});
  const auto sol = solve_mixed(sys);
  CHECK((sol.velocity - sys.lifting).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(sol.pressure.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fine solution: orthogonality, divergence, zero mean, energy identity") {
  const auto mesh = NestedMesh::build(4, 4);
  const auto field = generate_field(preset_with_contrast("fig2a", 1e4), mesh);
  const auto sys = assemble(mesh, field, nullptr, {1, 0});
  const auto sol = solve_mixed(sys);
  const auto res = saddle_residual(sys, sol);
  CHECK(res.momentum < 1e-9);
  CHECK(res.divergence < 1e-9);
  CHECK(std::abs(sol.pressure.dot(sys.areas)) < 1e-10 * (1 + sol.pressure.norm()));
  const double energy = sol.velocity.dot(sys.A * sol.velocity);
  const double work = sol.velocity.dot(sys.A * sys.lifting);
  CHECK(energy == doctest::Approx(work).epsilon(1e-9));
}

TEST_CASE("manufactured solution converges at the expected rates") {
  std::vector<double> l2, h1;
  for (int n : {8, 16, 32}) {
    const auto mesh = NestedMesh::build(n / 4, 4);
    const PermeabilityField field(n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 1.0));
    const auto sol = solve_mixed(assemble(mesh, field, source, {0, 0}));
    const auto err = analytic_errors(mesh, sol, exact_u, exact_grad, [](Point p) { return p.x - 0.5; });
    l2.push_back(err.l2);
    h1.push_back(err.h1);
  }
  for (std::size_t k = 1; k < l2.size(); ++k) {
    const double rl2 = std::log2(l2[k - 1] / l2[k]);
    const double rh1 = std::log2(h1[k - 1] / h1[k]);
    MESSAGE("L2 rate " << rl2 << ", H1 rate " << rh1);
    CHECK(rl2 >= 1.8);
    CHECK(rh1 >= 0.9);
  }
}

TEST_CASE("tnorm and snorm") {
  const auto mesh = NestedMesh::build(2, 2);
  const PermeabilityField field(4, 4, std::vector<double>(16, 5.0));
  const auto ops = norm_operators(mesh, field);
  const Vector c = interpolate(mesh, [](Point) { return std::array<double, 2>{1.0, 0.0}; });
  CHECK(tnorm(ops, Vector::Zero(c.size())) == 0.0);
  CHECK(ops.M == 5.0);
  CHECK(tnorm(ops, c) * tnorm(ops, c) == doctest::Approx(5.0));
  const Vector u = interpolate(mesh, [](Point p) { return std::array<double, 2>{p.x * p.y, p.x - p.y * p.y}; });
  CHECK(tnorm(ops, -3.0 * u) == doctest::Approx(3.0 * tnorm(ops, u)));
  CHECK(snorm(ops, Vector::Ones(32)) == doctest::Approx(1.0 / std::sqrt(5.0)));
}

TEST_CASE("weighted errors") {
  const auto mesh = NestedMesh::build(2, 2);
  const auto field = stripes(mesh, 1.0, 100.0);
  const auto ops = norm_operators(mesh, field);
  const Vector u = interpolate(mesh, [](Point p) { return std::array<double, 2>{std::sin(3 * p.x), p.x * p.y}; });
  auto e = weighted_errors(ops, u, u);
  CHECK(*e.l2_kappa == 0.0);
  CHECK(*e.h1_kappa == 0.0);
  e = weighted_errors(ops, u, Vector::Zero(u.size()));
  CHECK(*e.l2_kappa == doctest::Approx(1.0));
  CHECK(*e.h1_kappa == doctest::Approx(1.0));
  e = weighted_errors(ops, u, 2.0 * u);
  CHECK(*e.l2_kappa == doctest::Approx(1.0));
  e = weighted_errors(ops, Vector::Zero(u.size()), u);
  CHECK(!e.l2_kappa.has_value());
  CHECK(!e.h1_kappa.has_value());
}

TEST_CASE("patch operators agree with the global ones") {
  const auto mesh = NestedMesh::build(3, 2);
  const auto field = stripes(mesh, 1.0, 7.0);
  const auto whole = assemble_patch(mesh, field, mesh.whole());
  const Patch p{1, 0, 3, 2, 2};
  const PatchIndex idx(mesh, p);
  const auto local = assemble_patch(mesh, field, p);
  // a patch-local function extended by zero has the same energy globally
  Vector loc = Vector::Zero(idx.num_velocity_dofs());
  for (int d : idx.interior_dofs()) loc(d) = std::cos(d);
  Vector glob = Vector::Zero(mesh.num_velocity_dofs());
  for (int d = 0; d < idx.num_velocity_dofs(); ++d) glob(idx.global_dof(d)) = loc(d);
  CHECK(loc.dot(local.brinkman * loc) == doctest::Approx(glob.dot(whole.brinkman * glob)));
  for (int t = 0; t < idx.num_triangles(); ++t) {
    CHECK((local.divergence * loc)(t) == doctest::Approx((whole.divergence * glob)(idx.global_triangle(t))));
  }
}
