#include <doctest.h>

#include <cmath>
#include <random>

#include "gmsfem/extension.hpp"

using namespace gmsfem;

namespace {

PermeabilityField checker(const NestedMesh& mesh, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(mesh.num_cells()));
  for (int j = 0; j < mesh.n_fine(); ++j) {
    for (int i = 0; i < mesh.n_fine(); ++i) v[static_cast<std::size_t>(i + j * mesh.n_fine())] = ((i + 2 * j) % 5 == 0) ? hi : lo;
  }
  return PermeabilityField(mesh.n_fine(), mesh.n_fine(), v);
}

Vector random_trace(const PatchSolver& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector t(s.num_boundary_dofs());
  for (Eigen::Index k = 0; k < t.size(); ++k) t(k) = u(rng);
  return t;
}

// triangle means of div on the patch, divided by |K|
Vector divergence_density(const PatchSolver& s, const Vector& local) {
  return (s.operators().divergence * local).cwiseQuotient(s.operators().areas);
}

}  // namespace

TEST_CASE("block solver sizes") {
  const auto mesh = NestedMesh::build(3, 4);
  const auto field = checker(mesh, 1.0, 1e3);
  const auto s = make_block_solver(mesh, field, 4);
  const int nodes = (2 * 4 + 1) * (2 * 4 + 1);
  CHECK(s.index().num_velocity_dofs() == 2 * nodes);
  CHECK(s.num_boundary_dofs() == 2 * 4 * (2 * 4));
  CHECK(s.interior_dofs().size() == static_cast<std::size_t>(2 * (2 * 4 - 1) * (2 * 4 - 1)));
  CHECK(s.measure() == doctest::Approx(mesh.H() * mesh.H()));
  CHECK_THROWS_AS(make_block_solver(mesh, field, 9), std::invalid_argument);
  CHECK_THROWS_AS(s.extend(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("identical sub-fields give identical local operators") {
  const auto mesh = NestedMesh::build(2, 3);
  const PermeabilityField field(mesh.n_fine(), mesh.n_fine(), std::vector<double>(static_cast<std::size_t>(mesh.num_cells()), 7.0));
  const auto a = make_block_solver(mesh, field, 0);
  const auto b = make_block_solver(mesh, field, 3);
  CHECK(Matrix(a.operators().brinkman - b.operators().brinkman).cwiseAbs().maxCoeff() == 0.0);
  const Vector t = random_trace(a, 3);
  CHECK((a.extend(t).velocity - b.extend(t).velocity).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("extension keeps the trace and reproduces constants") {
  const auto mesh = NestedMesh::build(2, 4);
  const auto field = checker(mesh, 1e-2, 1e4);
  const auto s = make_block_solver(mesh, field, 1);
  const int n = s.index().num_nodes();

  const Vector t = random_trace(s, 11);
  const auto ext = s.extend(t);
  CHECK((s.trace_of(ext.velocity) - t).cwiseAbs().maxCoeff() == 0.0);

  // zero flux, so the extension is discretely divergence free
  Vector c(2 * n);
  c.head(n).setConstant(1.0);
  c.tail(n).setConstant(-2.0);
  const Vector hc = s.extend(s.trace_of(c)).velocity;
  CHECK(s.flux(s.trace_of(c)) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(divergence_density(s, hc).cwiseAbs().maxCoeff() < 1e-9);

  CHECK(s.extend(Vector::Zero(s.num_boundary_dofs())).velocity.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant fields are reproduced up to the drag-driven pressure") {
  // (1, 0) needs the pressure gradient -kinv (1, 0), which P0 cannot hold, so the
  // defect is linear in a uniform kinv and vanishes in the Stokes limit.
  const auto mesh = NestedMesh::build(2, 3);
  auto defect = [&](double kinv) {
    const PermeabilityField field(mesh.n_fine(), mesh.n_fine(), std::vector<double>(static_cast<std::size_t>(mesh.num_cells()), kinv));
    const auto s = make_block_solver(mesh, field, 2);
    const int n = s.index().num_nodes();
    Vector c = Vector::Zero(2 * n);
    c.head(n).setOnes();
    const auto ext = s.extend(s.trace_of(c));
    CHECK(ext.pressure.dot(s.operators().areas) == doctest::Approx(0.0).scale(1.0));
    return (ext.velocity - c).cwiseAbs().maxCoeff();
  };
  const double small = defect(1e-6), large = defect(1e-3);
  CHECK(small < 1e-8);
  CHECK(small / large == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("extension is linear") {
  const auto mesh = NestedMesh::build(2, 3);
  const auto field = checker(mesh, 1.0, 1e6);
  const auto s = make_block_solver(mesh, field, 0);
  const Vector a = random_trace(s, 1), b = random_trace(s, 2);
  const Vector lhs = s.extend(2.0 * a - 3.0 * b).velocity;
  const Vector rhs = 2.0 * s.extend(a).velocity - 3.0 * s.extend(b).velocity;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9 * rhs.cwiseAbs().maxCoeff());

  Matrix both(a.size(), 2);
  both << a, b;
  const Matrix cols = s.extend_velocity(both);
  CHECK((cols.col(0) - s.extend(a).velocity).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("divergence of the extension is the balancing constant") {
  const auto mesh = NestedMesh::build(2, 4);
  const auto field = checker(mesh, 1e-3, 1e3);
  const auto s = make_block_solver(mesh, field, 3);
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    const Vector t = random_trace(s, seed);
    const Vector d = divergence_density(s, s.extend(t).velocity);
    const double rate = s.flux(t) / s.measure();
    CHECK((d.array() - rate).abs().maxCoeff() < 1e-9 * std::max(1.0, std::abs(rate)));
  }
}

TEST_CASE("extension is the energy minimizer among fields with the same trace and divergence") {
  // Brinkman harmonicity: a(H, v) = 0 for every interior v with B v = 0.
  const auto mesh = NestedMesh::build(2, 3);
  const auto field = checker(mesh, 1.0, 1e2);
  const auto s = make_block_solver(mesh, field, 1);
  const Vector hw = s.extend(random_trace(s, 9)).velocity;
  const Vector r = s.operators().brinkman * hw;
  // r is in range(B^T) on interior dofs: remove the least-squares B^T component
  const auto in = s.interior_dofs();
  const Matrix Bd = Matrix(s.operators().divergence);
  Matrix Bi(Bd.rows(), static_cast<Eigen::Index>(in.size()));
  Vector ri(static_cast<Eigen::Index>(in.size()));
  for (std::size_t k = 0; k < in.size(); ++k) {
    Bi.col(static_cast<Eigen::Index>(k)) = Bd.col(in[k]);
    ri(static_cast<Eigen::Index>(k)) = r(in[k]);
  }
  const Vector p = Bi.transpose().colPivHouseholderQr().solve(ri);
  CHECK((ri - Bi.transpose() * p).norm() < 1e-8 * r.norm());
}

TEST_CASE("neighborhood extension glues block extensions") {
  const auto mesh = NestedMesh::build(3, 3);
  const auto field = checker(mesh, 1.0, 1e4);
  const auto blocks = make_block_solvers(mesh, field);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector global = Vector::Zero(mesh.num_velocity_dofs());
  const int n = mesh.num_nodes();
  for (int node = 0; node < n; ++node) {
    if (mesh.is_skeleton_node(node)) {
      global(node) = u(rng);
      global(node + n) = u(rng);
    }
  }
  const std::vector<int> nb{0, 1, 3, 4};
  const Vector glued = extend_on_neighborhood(mesh, blocks, nb, global);
  for (int b : nb) {
    const auto& s = blocks[static_cast<std::size_t>(b)];
    Vector t(s.num_boundary_dofs());
    const auto bd = s.boundary_dofs();
    for (std::size_t k = 0; k < bd.size(); ++k) t(static_cast<Eigen::Index>(k)) = global(s.index().global_dof(bd[k]));
    const Vector local = s.extend(t).velocity;
    double diff = 0;
    for (int d = 0; d < s.index().num_velocity_dofs(); ++d) diff = std::max(diff, std::abs(local(d) - glued(s.index().global_dof(d))));
    CHECK(diff < 1e-13);
  }
  // outside the neighborhood everything is zero
  const auto far = blocks[8].index();
  for (int d : blocks[8].interior_dofs()) CHECK(glued(far.global_dof(d)) == 0.0);
}

TEST_CASE("skeleton extension matrix matches direct extension") {
  const auto mesh = NestedMesh::build(2, 2);
  const auto field = checker(mesh, 1.0, 1e2);
  const auto blocks = make_block_solvers(mesh, field);
  const auto ext = skeleton_extension(mesh, blocks);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector values(static_cast<Eigen::Index>(ext.dofs.size()));
  for (Eigen::Index k = 0; k < values.size(); ++k) values(k) = u(rng);
  const Vector via_matrix = ext.E * values;
  Vector data = Vector::Zero(mesh.num_velocity_dofs());
  for (std::size_t k = 0; k < ext.dofs.size(); ++k) data(ext.dofs[k]) = values(static_cast<Eigen::Index>(k));
  std::vector<int> all{0, 1, 2, 3};
  const Vector direct = extend_on_neighborhood(mesh, blocks, all, data);
  CHECK((via_matrix - direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("blockwise lifting holds the constant on the skeleton and is reproducible") {
  const auto mesh = NestedMesh::build(2, 3);
  const auto field = checker(mesh, 1.0, 1e4);
  const auto blocks = make_block_solvers(mesh, field);
  const Vector lift = blockwise_lifting(mesh, blocks, {1.0, 0.5});
  const int n = mesh.num_nodes();
  for (int node = 0; node < n; ++node) {
    if (!mesh.is_skeleton_node(node)) continue;
    CHECK(lift(node) == 1.0);
    CHECK(lift(node + n) == 0.5);
  }
  const auto again = make_block_solvers(mesh, field);
  CHECK((blockwise_lifting(mesh, again, {1.0, 0.5}) - lift).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(blockwise_lifting(mesh, std::span<const BlockSolver>(blocks).first(2), {1, 0}), std::invalid_argument);
}
