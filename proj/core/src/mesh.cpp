#include "gmsfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gmsfem {

namespace {

// Half-grid offsets of the six P2 nodes for the lower and upper triangle of a fine square.
constexpr std::array<std::array<std::array<int, 2>, 6>, 2> kTriangleOffsets{{
    {{{0, 0}, {2, 0}, {2, 2}, {1, 0}, {2, 1}, {1, 1}}},
    {{{0, 0}, {2, 2}, {0, 2}, {1, 1}, {1, 2}, {0, 1}}},
}};

// Quadratic Lagrange basis on [0, 1] with nodes 0, 1/2, 1.
double lagrange_end(double t) { return (1.0 - t) * (1.0 - 2.0 * t); }
double lagrange_mid(double t) { return 4.0 * t * (1.0 - t); }

}  // namespace

NestedMesh NestedMesh::build(int n_coarse, int refine) {
  if (n_coarse < 1 || refine < 1) {
    throw std::invalid_argument("mesh: n_coarse and refine must be at least 1");
  }
  const std::int64_t n = static_cast<std::int64_t>(n_coarse) * refine;
  if (n > kMaxFineCells) {
    throw std::invalid_argument("mesh: fine grid of " + std::to_string(n) + " cells per side exceeds the supported maximum of " +
                                std::to_string(kMaxFineCells));
  }

  NestedMesh mesh;
  mesh.n_coarse_ = n_coarse;
  mesh.refine_ = refine;
  const int nf = static_cast<int>(n);
  const double h = 1.0 / nf;

  mesh.vertices_.reserve(static_cast<std::size_t>(nf + 1) * (nf + 1));
  for (int j = 0; j <= nf; ++j) {
    for (int i = 0; i <= nf; ++i) mesh.vertices_.push_back({i * h, j * h});
  }
  auto vid = [nf](int i, int j) { return i + j * (nf + 1); };

  mesh.triangles_.reserve(static_cast<std::size_t>(2) * nf * nf);
  for (int j = 0; j < nf; ++j) {
    for (int i = 0; i < nf; ++i) {
      mesh.triangles_.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles_.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }

  // Edges are listed in increasing midpoint node index, i.e. lexicographically by (y, x).
  const int stride = mesh.node_stride();
  for (int J = 0; J < stride; ++J) {
    for (int I = 0; I < stride; ++I) {
      const bool odd_i = I % 2 == 1;
      const bool odd_j = J % 2 == 1;
      if (!odd_i && !odd_j) continue;
      FineEdge e;
      if (odd_i && !odd_j) {
        e.a = vid(I / 2, J / 2);
        e.b = vid(I / 2 + 1, J / 2);
      } else if (!odd_i && odd_j) {
        e.a = vid(I / 2, J / 2);
        e.b = vid(I / 2, J / 2 + 1);
      } else {
        e.a = vid(I / 2, J / 2);
        e.b = vid(I / 2 + 1, J / 2 + 1);
      }
      e.node = mesh.node_index(I, J);
      e.mid = mesh.node_point(e.node);
      mesh.edges_.push_back(e);
    }
  }

  const int r = refine;
  const int nc = n_coarse;
  std::vector<std::pair<int, SkeletonEdge>> keyed;
  for (int cj = 0; cj <= nc; ++cj) {
    for (int ci = 0; ci < nc; ++ci) {
      SkeletonEdge e;
      e.horizontal = true;
      e.v0 = mesh.coarse_vertex_index(ci, cj);
      e.v1 = mesh.coarse_vertex_index(ci + 1, cj);
      e.on_boundary = (cj == 0 || cj == nc);
      for (int k = 0; k <= 2 * r; ++k) e.nodes.push_back(mesh.node_index(2 * r * ci + k, 2 * r * cj));
      keyed.emplace_back(e.nodes[static_cast<std::size_t>(r)], std::move(e));
    }
  }
  for (int cj = 0; cj < nc; ++cj) {
    for (int ci = 0; ci <= nc; ++ci) {
      SkeletonEdge e;
      e.horizontal = false;
      e.v0 = mesh.coarse_vertex_index(ci, cj);
      e.v1 = mesh.coarse_vertex_index(ci, cj + 1);
      e.on_boundary = (ci == 0 || ci == nc);
      for (int k = 0; k <= 2 * r; ++k) e.nodes.push_back(mesh.node_index(2 * r * ci, 2 * r * cj + k));
      keyed.emplace_back(e.nodes[static_cast<std::size_t>(r)], std::move(e));
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [key, e] : keyed) mesh.skeleton_edges_.push_back(std::move(e));

  return mesh;
}

Point NestedMesh::node_point(int node) const {
  const double hh = 0.5 * h();
  return {node_I(node) * hh, node_J(node) * hh};
}

bool NestedMesh::is_boundary_node(int node) const {
  const int I = node_I(node);
  const int J = node_J(node);
  const int last = node_stride() - 1;
  return I == 0 || J == 0 || I == last || J == last;
}

bool NestedMesh::is_skeleton_node(int node) const {
  const int period = 2 * refine_;
  return node_I(node) % period == 0 || node_J(node) % period == 0;
}

std::array<int, 6> NestedMesh::triangle_nodes(int t) const {
  const int cell = t / 2;
  const int i = cell % n_fine();
  const int j = cell / n_fine();
  const auto& offsets = kTriangleOffsets[static_cast<std::size_t>(t % 2)];
  std::array<int, 6> nodes{};
  for (std::size_t k = 0; k < 6; ++k) nodes[k] = node_index(2 * i + offsets[k][0], 2 * j + offsets[k][1]);
  return nodes;
}

int NestedMesh::block_of_triangle(int t) const {
  const int cell = t / 2;
  return block_of_cell(cell % n_fine(), cell / n_fine());
}

std::vector<int> NestedMesh::block_triangles(int block) const {
  const int bi = block % n_coarse_;
  const int bj = block / n_coarse_;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(2) * refine_ * refine_);
  for (int j = bj * refine_; j < (bj + 1) * refine_; ++j) {
    for (int i = bi * refine_; i < (bi + 1) * refine_; ++i) {
      const int cell = i + j * n_fine();
      out.push_back(2 * cell);
      out.push_back(2 * cell + 1);
    }
  }
  return out;
}

Patch NestedMesh::block_patch(int block) const {
  const int bi = block % n_coarse_;
  const int bj = block / n_coarse_;
  return Patch{bi, bj, bi + 1, bj + 1, refine_};
}

std::string NestedMesh::summary() const {
  std::ostringstream os;
  os.precision(17);
  os << "n_coarse = " << n_coarse_ << '\n'
     << "refine = " << refine_ << '\n'
     << "n_fine = " << n_fine() << '\n'
     << "H = " << H() << '\n'
     << "h = " << h() << '\n'
     << "fine_vertices = " << vertices_.size() << '\n'
     << "fine_edges = " << edges_.size() << '\n'
     << "fine_triangles = " << triangles_.size() << '\n'
     << "p2_nodes = " << num_nodes() << '\n'
     << "velocity_dofs = " << num_velocity_dofs() << '\n'
     << "pressure_dofs = " << num_triangles() << '\n'
     << "coarse_blocks = " << num_blocks() << '\n'
     << "skeleton_edges = " << skeleton_edges_.size() << '\n';
  return os.str();
}

double SkeletonFunction::value_at(int node) const {
  auto it = std::lower_bound(trace.begin(), trace.end(), node,
                             [](const std::pair<int, double>& p, int n) { return p.first < n; });
  return (it != trace.end() && it->first == node) ? it->second : 0.0;
}

std::vector<SkeletonFunction> skeleton_shape_functions(const NestedMesh& mesh) {
  const int nc = mesh.n_coarse();
  const int r = mesh.refine();
  const auto edges = mesh.skeleton_edges();
  std::vector<SkeletonFunction> out;

  for (int cj = 1; cj < nc; ++cj) {
    for (int ci = 1; ci < nc; ++ci) {
      SkeletonFunction fn;
      fn.kind = SkeletonKind::CoarseVertex;
      fn.anchor = mesh.coarse_vertex_index(ci, cj);
      fn.anchor_node = mesh.node_index(2 * r * ci, 2 * r * cj);
      std::map<int, double> values;
      values[fn.anchor_node] = 1.0;
      for (const auto& e : edges) {
        if (e.v0 != fn.anchor && e.v1 != fn.anchor) continue;
        const int len = static_cast<int>(e.nodes.size()) - 1;
        for (int k = 1; k < len; ++k) {
          // t is the distance from the anchor in units of the coarse edge.
          const double t = (e.v0 == fn.anchor ? k : len - k) / static_cast<double>(len);
          const double v = lagrange_end(t);
          if (v != 0.0) values[e.nodes[static_cast<std::size_t>(k)]] = v;
        }
      }
      fn.trace.assign(values.begin(), values.end());
      out.push_back(std::move(fn));
    }
  }

  for (int e_idx = 0; e_idx < static_cast<int>(edges.size()); ++e_idx) {
    const auto& e = edges[static_cast<std::size_t>(e_idx)];
    if (e.on_boundary) continue;
    SkeletonFunction fn;
    fn.kind = e.horizontal ? SkeletonKind::HorizontalEdgeMidpoint : SkeletonKind::VerticalEdgeMidpoint;
    fn.anchor = e_idx;
    fn.anchor_node = e.nodes[static_cast<std::size_t>(r)];
    const int len = static_cast<int>(e.nodes.size()) - 1;
    for (int k = 1; k < len; ++k) {
      fn.trace.emplace_back(e.nodes[static_cast<std::size_t>(k)], lagrange_mid(k / static_cast<double>(len)));
    }
    std::sort(fn.trace.begin(), fn.trace.end());
    out.push_back(std::move(fn));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const SkeletonFunction& a, const SkeletonFunction& b) { return a.anchor_node < b.anchor_node; });
  return out;
}

PartitionDeficit skeleton_partition_deficit(const NestedMesh& mesh, std::span<const SkeletonFunction> functions) {
  std::map<int, double> sums;
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    if (mesh.is_skeleton_node(node) && !mesh.is_boundary_node(node)) sums[node] = 0.0;
  }
  for (const auto& fn : functions) {
    for (const auto& [node, v] : fn.trace) {
      auto it = sums.find(node);
      if (it != sums.end()) it->second += v;
    }
  }
  PartitionDeficit out;
  for (const auto& [node, s] : sums) {
    const double d = std::abs(1.0 - s);
    if (d > 1e-12) {
      out.nodes.push_back(node);
      out.max_deficit = std::max(out.max_deficit, d);
    }
  }
  return out;
}

std::vector<int> interior_skeleton_nodes(const NestedMesh& mesh) {
  const int period = 2 * mesh.refine();
  const int last = mesh.node_stride() - 1;
  auto touches_boundary = [&](int along) {
    const int lo = along / period * period;
    return lo == 0 || lo + period == last;
  };
  std::vector<int> out;
  for (int node = 0; node < mesh.num_nodes(); ++node) {
    if (!mesh.is_skeleton_node(node) || mesh.is_boundary_node(node)) continue;
    const int I = mesh.node_I(node);
    const int J = mesh.node_J(node);
    if (I % period == 0 && J % period == 0) {
      out.push_back(node);
    } else if (I % period == 0 ? !touches_boundary(J) : !touches_boundary(I)) {
      out.push_back(node);
    }
  }
  return out;
}

CoarseNeighborhood coarse_neighborhood(const NestedMesh& mesh, const SkeletonFunction& fn, int id) {
  const int nc = mesh.n_coarse();
  const int r = mesh.refine();
  CoarseNeighborhood nb;
  nb.id = id;
  nb.kind = fn.kind;
  Patch p{0, 0, 0, 0, r};
  if (fn.kind == SkeletonKind::CoarseVertex) {
    const int ci = fn.anchor % (nc + 1);
    const int cj = fn.anchor / (nc + 1);
    p = Patch{ci - 1, cj - 1, ci + 1, cj + 1, r};
  } else {
    const auto& e = mesh.skeleton_edges()[static_cast<std::size_t>(fn.anchor)];
    const int ci = e.v0 % (nc + 1);
    const int cj = e.v0 / (nc + 1);
    p = e.horizontal ? Patch{ci, cj - 1, ci + 1, cj + 1, r} : Patch{ci - 1, cj, ci + 1, cj + 1, r};
  }
  p.bx0 = std::max(p.bx0, 0);
  p.by0 = std::max(p.by0, 0);
  p.bx1 = std::min(p.bx1, nc);
  p.by1 = std::min(p.by1, nc);
  nb.patch = p;
  for (int bj = p.by0; bj < p.by1; ++bj) {
    for (int bi = p.bx0; bi < p.bx1; ++bi) nb.blocks.push_back(bi + bj * nc);
  }

  const int i0 = r * p.bx0, i1 = r * p.bx1, j0 = r * p.by0, j1 = r * p.by1;
  auto vnode = [&](int i, int j) { return mesh.node_index(2 * i, 2 * j); };
  for (int i = i0; i < i1; ++i) nb.boundary_fine_nodes.push_back(vnode(i, j0));
  for (int j = j0; j < j1; ++j) nb.boundary_fine_nodes.push_back(vnode(i1, j));
  for (int i = i1; i > i0; --i) nb.boundary_fine_nodes.push_back(vnode(i, j1));
  for (int j = j1; j > j0; --j) nb.boundary_fine_nodes.push_back(vnode(i0, j));
  return nb;
}

}  // namespace gmsfem
