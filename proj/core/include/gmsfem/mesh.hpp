#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

namespace gmsfem {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Fine edge of the triangulation. `node` is the P2 node sitting at its midpoint.
struct FineEdge {
  int a = 0;
  int b = 0;
  Point mid;
  int node = 0;
};

/// Coarse edge of the skeleton E_H together with the P2 nodes along it
/// (2r+1 nodes ordered from `v0` to `v1`).
struct SkeletonEdge {
  bool horizontal = true;
  int v0 = 0;  // coarse vertex index
  int v1 = 0;
  bool on_boundary = false;
  std::vector<int> nodes;
};

/// Rectangular union of coarse blocks [bx0, bx1) x [by0, by1).
///
/// A patch owns a local numbering of the P2 nodes and fine triangles it
/// covers. The whole-domain patch reproduces the global numbering, so the
/// same assembly code serves global systems, block solvers and
/// neighborhood solvers.
struct Patch {
  int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;
  int refine = 0;

  int node_i0() const { return 2 * refine * bx0; }
  int node_j0() const { return 2 * refine * by0; }
  int nodes_x() const { return 2 * refine * (bx1 - bx0) + 1; }
  int nodes_y() const { return 2 * refine * (by1 - by0) + 1; }
  int num_nodes() const { return nodes_x() * nodes_y(); }
  int cells_x() const { return refine * (bx1 - bx0); }
  int cells_y() const { return refine * (by1 - by0); }
  int num_triangles() const { return 2 * cells_x() * cells_y(); }
  int num_blocks() const { return (bx1 - bx0) * (by1 - by0); }

  bool contains_half(int I, int J) const {
    return I >= node_i0() && I < node_i0() + nodes_x() && J >= node_j0() && J < node_j0() + nodes_y();
  }
  int local_node(int I, int J) const { return (I - node_i0()) + (J - node_j0()) * nodes_x(); }
  bool on_patch_boundary(int local) const {
    const int li = local % nodes_x();
    const int lj = local / nodes_x();
    return li == 0 || lj == 0 || li == nodes_x() - 1 || lj == nodes_y() - 1;
  }
  bool operator==(const Patch&) const = default;
};

/// Nested coarse/fine structured triangulation of the unit square.
///
/// The fine grid has n = n_coarse * refine squares per side, each split
/// along its lower-left to upper-right diagonal. Every point of the
/// (2n+1)^2 half-step grid is a P2 node (vertices, edge midpoints and
/// diagonal midpoints), numbered row-major from the bottom row: node
/// (I, J) has index I + J (2n+1). Fine square (i, j) holds triangles
/// 2(i + j n) (lower) and 2(i + j n) + 1 (upper).
class NestedMesh {
public:
  static constexpr int kMaxFineCells = 1 << 13;

  /// Throws std::invalid_argument for sizes below 1 or beyond kMaxFineCells per side.
  static NestedMesh build(int n_coarse, int refine);

  int n_coarse() const { return n_coarse_; }
  int refine() const { return refine_; }
  int n_fine() const { return n_coarse_ * refine_; }
  double h() const { return 1.0 / n_fine(); }
  double H() const { return 1.0 / n_coarse_; }

  int node_stride() const { return 2 * n_fine() + 1; }
  int num_nodes() const { return node_stride() * node_stride(); }
  int num_velocity_dofs() const { return 2 * num_nodes(); }
  int num_triangles() const { return 2 * n_fine() * n_fine(); }
  int num_cells() const { return n_fine() * n_fine(); }
  int num_blocks() const { return n_coarse_ * n_coarse_; }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const std::array<int, 3>> triangles() const { return triangles_; }
  std::span<const FineEdge> edges() const { return edges_; }
  std::span<const SkeletonEdge> skeleton_edges() const { return skeleton_edges_; }

  int node_index(int I, int J) const { return I + J * node_stride(); }
  int node_I(int node) const { return node % node_stride(); }
  int node_J(int node) const { return node / node_stride(); }
  Point node_point(int node) const;
  bool is_vertex_node(int node) const { return node_I(node) % 2 == 0 && node_J(node) % 2 == 0; }
  bool is_boundary_node(int node) const;
  /// True when the node lies on a coarse grid line (the skeleton E_H).
  bool is_skeleton_node(int node) const;

  /// P2 nodes of a triangle: three vertices counter-clockwise, then the
  /// midpoints of edges (v0,v1), (v1,v2), (v2,v0).
  std::array<int, 6> triangle_nodes(int t) const;
  int cell_of_triangle(int t) const { return t / 2; }
  int block_of_triangle(int t) const;
  int block_of_cell(int i, int j) const { return (i / refine_) + (j / refine_) * n_coarse_; }
  /// Fine triangles inside a coarse block, in increasing index order (2 r^2 of them).
  std::vector<int> block_triangles(int block) const;

  Patch whole() const { return Patch{0, 0, n_coarse_, n_coarse_, refine_}; }
  Patch block_patch(int block) const;

  int coarse_vertex_index(int ci, int cj) const { return ci + cj * (n_coarse_ + 1); }

  /// Counts, h and H as key = value lines.
  std::string summary() const;

private:
  NestedMesh() = default;

  int n_coarse_ = 0;
  int refine_ = 0;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<FineEdge> edges_;
  std::vector<SkeletonEdge> skeleton_edges_;
};

enum class SkeletonKind { CoarseVertex, HorizontalEdgeMidpoint, VerticalEdgeMidpoint };

/// Nodal shape function of the skeleton space M_H (continuous, quadratic on
/// every coarse edge). `trace` lists (node, value) pairs for the fine
/// skeleton nodes where the function does not vanish.
struct SkeletonFunction {
  SkeletonKind kind = SkeletonKind::CoarseVertex;
  int anchor = 0;     // coarse vertex index, or index into skeleton_edges()
  int anchor_node = 0;
  std::vector<std::pair<int, double>> trace;

  double value_at(int node) const;
};

/// Shape functions anchored at interior coarse vertices and interior coarse
/// edge midpoints. Boundary-anchored functions are omitted: homogeneous data
/// on the boundary is restored by lifting.
std::vector<SkeletonFunction> skeleton_shape_functions(const NestedMesh& mesh);

/// Interior fine skeleton nodes where the retained shape functions do not
/// sum to one (they lie on coarse edges touching the boundary), together
/// with the largest deficit found.
struct PartitionDeficit {
  std::vector<int> nodes;
  double max_deficit = 0.0;
};
PartitionDeficit skeleton_partition_deficit(const NestedMesh& mesh,
                                            std::span<const SkeletonFunction> functions);

/// Skeleton nodes where the retained shape functions sum to one: off the
/// boundary and not strictly inside a coarse edge that touches it.
std::vector<int> interior_skeleton_nodes(const NestedMesh& mesh);

/// Support of a skeleton function.
struct CoarseNeighborhood {
  int id = 0;
  SkeletonKind kind = SkeletonKind::CoarseVertex;
  std::vector<int> blocks;
  Patch patch;
  /// Fine vertices on the boundary of the neighborhood, counter-clockwise
  /// starting from the bottom-left corner.
  std::vector<int> boundary_fine_nodes;
};

CoarseNeighborhood coarse_neighborhood(const NestedMesh& mesh, const SkeletonFunction& fn, int id = 0);

}  // namespace gmsfem
