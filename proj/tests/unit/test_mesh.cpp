#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gmsfem/mesh.hpp"

using namespace gmsfem;

namespace {

// Brute-force count of distinct triangle edges from the vertex triples.
int count_edges(const NestedMesh& mesh) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return static_cast<int>(edges.size());
}

}  // namespace

TEST_CASE("mesh sizes match hand enumeration") {
  const auto m11 = NestedMesh::build(1, 1);
  CHECK(m11.num_triangles() == 2);
  CHECK(m11.vertices().size() == 4);
  CHECK(m11.edges().size() == 5);
  CHECK(m11.num_nodes() == 9);
  CHECK(m11.num_velocity_dofs() == 18);

  const auto m22 = NestedMesh::build(2, 2);
  CHECK(m22.num_blocks() == 4);
  CHECK(m22.num_triangles() == 32);
  int interior_edges = 0;
  for (const auto& e : m22.skeleton_edges()) interior_edges += e.on_boundary ? 0 : 1;
  CHECK(interior_edges == 4);

  const auto m1010 = NestedMesh::build(10, 10);
  CHECK(m1010.n_fine() == 100);
  CHECK(m1010.num_velocity_dofs() == 80802);
}

TEST_CASE("entity counts satisfy Euler and the dof formula") {
  for (auto [nc, r] : {std::pair{1, 1}, {2, 3}, {3, 2}, {4, 4}}) {
    const auto mesh = NestedMesh::build(nc, r);
    const int n = mesh.n_fine();
    const int V = static_cast<int>(mesh.vertices().size());
    const int E = static_cast<int>(mesh.edges().size());
    const int F = mesh.num_triangles();
    CHECK(E == count_edges(mesh));
    CHECK(V - E + F == 1);
    CHECK(V + E == (n + 1) * (n + 1) + 2 * n * (n + 1) + n * n);
    CHECK(mesh.num_nodes() == V + E);
  }
}

TEST_CASE("blocks hold 2r^2 triangles and partition the mesh") {
  const auto mesh = NestedMesh::build(3, 4);
  std::vector<int> seen(static_cast<std::size_t>(mesh.num_triangles()), 0);
  for (int b = 0; b < mesh.num_blocks(); ++b) {
    const auto tris = mesh.block_triangles(b);
    CHECK(tris.size() == 2u * 4 * 4);
    for (int t : tris) {
      CHECK(mesh.block_of_triangle(t) == b);
      ++seen[static_cast<std::size_t>(t)];
    }
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

TEST_CASE("triangle nodes are consistent with vertex triples and edge midpoints") {
  const auto mesh = NestedMesh::build(2, 3);
  std::map<std::pair<int, int>, int> mid;
  for (const auto& e : mesh.edges()) mid[{std::min(e.a, e.b), std::max(e.a, e.b)}] = e.node;
  auto vnode = [&](int v) {
    const auto p = mesh.vertices()[static_cast<std::size_t>(v)];
    return mesh.node_index(static_cast<int>(std::lround(2 * p.x / mesh.h())), static_cast<int>(std::lround(2 * p.y / mesh.h())));
  };
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto tv = mesh.triangles()[static_cast<std::size_t>(t)];
    const auto nodes = mesh.triangle_nodes(t);
    for (int k = 0; k < 3; ++k) CHECK(nodes[k] == vnode(tv[k]));
    for (int k = 0; k < 3; ++k) {
      const int a = tv[k], b = tv[(k + 1) % 3];
      CHECK(nodes[3 + k] == mid.at({std::min(a, b), std::max(a, b)}));
    }
    // counter-clockwise orientation
    const auto p0 = mesh.node_point(nodes[0]), p1 = mesh.node_point(nodes[1]), p2 = mesh.node_point(nodes[2]);
    CHECK((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y) > 0);
  }
}

TEST_CASE("every fine skeleton edge belongs to exactly one coarse edge") {
  const auto mesh = NestedMesh::build(3, 3);
  std::map<int, int> owner_count;
  for (const auto& e : mesh.skeleton_edges()) {
    for (std::size_t k = 1; k < e.nodes.size(); k += 2) ++owner_count[e.nodes[k]];
  }
  int on_skeleton = 0;
  for (const auto& e : mesh.edges()) {
    const int I = mesh.node_I(e.node), J = mesh.node_J(e.node);
    const bool diagonal = I % 2 == 1 && J % 2 == 1;
    if (!diagonal && mesh.is_skeleton_node(e.node) &&
        ((I % 2 == 1 && J % (2 * mesh.refine()) == 0) || (J % 2 == 1 && I % (2 * mesh.refine()) == 0))) {
      ++on_skeleton;
      CHECK(owner_count[e.node] == 1);
    }
  }
  CHECK(on_skeleton == static_cast<int>(owner_count.size()));
}

TEST_CASE("skeleton function counts") {
  CHECK(skeleton_shape_functions(NestedMesh::build(2, 2)).size() == 5);
  CHECK(skeleton_shape_functions(NestedMesh::build(10, 2)).size() == 261);
  CHECK(skeleton_shape_functions(NestedMesh::build(1, 3)).empty());
}

TEST_CASE("skeleton functions are nodal on the M_H nodes") {
  const auto mesh = NestedMesh::build(4, 3);
  const auto fns = skeleton_shape_functions(mesh);
  // M_H nodes: coarse vertices and coarse edge midpoints, boundary ones included
  std::set<int> mh;
  for (const auto& e : mesh.skeleton_edges()) {
    mh.insert(e.nodes.front());
    mh.insert(e.nodes[e.nodes.size() / 2]);
    mh.insert(e.nodes.back());
  }
  for (const auto& fn : fns) {
    for (int node : mh) CHECK(fn.value_at(node) == doctest::Approx(node == fn.anchor_node ? 1.0 : 0.0));
    for (const auto& [node, v] : fn.trace) CHECK(mesh.is_skeleton_node(node));
  }
}

TEST_CASE("partition of unity on the skeleton away from the boundary") {
  const auto mesh = NestedMesh::build(5, 4);
  const auto fns = skeleton_shape_functions(mesh);
  const auto deficit = skeleton_partition_deficit(mesh, fns);
  CHECK(!deficit.nodes.empty());
  CHECK(deficit.max_deficit > 0.1);
  // every deficit node lies strictly inside a coarse edge that touches the boundary
  const int period = 2 * mesh.refine();
  const int last = mesh.node_stride() - 1;
  for (int node : deficit.nodes) {
    const int I = mesh.node_I(node), J = mesh.node_J(node);
    const bool on_vertical_line = I % period == 0;
    const int along = on_vertical_line ? J : I;
    CHECK(along % period != 0);
    const int lo = along / period * period;
    CHECK((lo == 0 || lo + period == last));
  }
  // the sum is exactly one elsewhere on the interior skeleton
  std::map<int, double> sums;
  for (const auto& fn : fns) {
    for (const auto& [node, v] : fn.trace) sums[node] += v;
  }
  for (const auto& [node, s] : sums) {
    if (std::find(deficit.nodes.begin(), deficit.nodes.end(), node) == deficit.nodes.end()) {
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("coarse neighborhoods") {
  const auto mesh = NestedMesh::build(2, 2);
  const auto fns = skeleton_shape_functions(mesh);
  int vertex_count = 0;
  for (const auto& fn : fns) {
    const auto nb = coarse_neighborhood(mesh, fn);
    if (fn.kind == SkeletonKind::CoarseVertex) {
      ++vertex_count;
      CHECK(nb.blocks.size() == 4);
      CHECK(nb.boundary_fine_nodes.size() == 16);
      CHECK(nb.boundary_fine_nodes.front() == mesh.node_index(0, 0));
      CHECK(nb.boundary_fine_nodes[1] == mesh.node_index(2, 0));
    } else {
      CHECK(nb.blocks.size() == 2);
      if (fn.kind == SkeletonKind::HorizontalEdgeMidpoint) {
        CHECK(nb.blocks[1] - nb.blocks[0] == mesh.n_coarse());
      } else {
        CHECK(nb.blocks[1] - nb.blocks[0] == 1);
      }
    }
    // trace vanishes on the neighborhood boundary and support lies in the closure
    for (int node : nb.boundary_fine_nodes) CHECK(fn.value_at(node) == 0.0);
    for (const auto& [node, v] : fn.trace) CHECK(nb.patch.contains_half(mesh.node_I(node), mesh.node_J(node)));
  }
  CHECK(vertex_count == 1);
}

TEST_CASE("invalid sizes are rejected and builds are deterministic") {
  CHECK_THROWS_AS(NestedMesh::build(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(NestedMesh::build(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(NestedMesh::build(100000, 100000), std::invalid_argument);
  const auto a = NestedMesh::build(3, 2);
  const auto b = NestedMesh::build(3, 2);
  CHECK(a.triangles().size() == b.triangles().size());
  CHECK(std::equal(a.triangles().begin(), a.triangles().end(), b.triangles().begin()));
  CHECK(a.summary() == b.summary());
}
