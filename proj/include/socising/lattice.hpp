#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace socising {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
inline constexpr EdgeId kNoEdge = static_cast<EdgeId>(-1);

struct Site {
  int x = 0;
  int y = 0;
  friend bool operator==(const Site&, const Site&) = default;
};

/// Nearest-neighbour edge {u, v} with u < v in vertex order.
struct Edge {
  VertexId u = 0;
  VertexId v = 0;
};

enum class Direction : std::uint8_t { east = 0, north = 1, west = 2, south = 3 };
inline constexpr std::array<Direction, 4> kDirections = {Direction::east, Direction::north,
                                                         Direction::west, Direction::south};
Site step(Site s, Direction d);

/// An edge of Z^2 leaving the box: the inside endpoint and the direction.
struct HalfEdge {
  VertexId inside = 0;
  Direction direction = Direction::east;
  friend bool operator==(const HalfEdge&, const HalfEdge&) = default;
};

/// Edge set of the form ∂^e V: edges with both ends in the box are listed
/// by id, edges leaving the box are kept as tagged half-edges.
struct EdgeBoundary {
  std::vector<EdgeId> internal;
  std::vector<HalfEdge> external;
  std::size_t size() const { return internal.size() + external.size(); }
};

/// The square box Λ(n) = [-n/2, n/2)^2 ∩ Z^2 with its nearest-neighbour edges.
///
/// Vertices are indexed row-major over lexicographic (x, y) order, edges by
/// lexicographic order of their (u, v) endpoint pair. Both orders are part
/// of every serialized artifact and never change.
class BoxGeometry {
 public:
  explicit BoxGeometry(int n);

  int side() const { return n_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + n_ - 1; }

  std::size_t vertex_count() const { return static_cast<std::size_t>(n_) * n_; }
  std::size_t edge_count() const { return edges_.size(); }

  Site site(VertexId v) const { return {lo_ + static_cast<int>(v) / n_, lo_ + static_cast<int>(v) % n_}; }
  bool contains(Site s) const { return s.x >= lo_ && s.x <= hi() && s.y >= lo_ && s.y <= hi(); }
  std::optional<VertexId> vertex_at(Site s) const;
  VertexId vertex_unchecked(Site s) const { return static_cast<VertexId>((s.x - lo_) * n_ + (s.y - lo_)); }

  const Edge& edge(EdgeId e) const { return edges_[e]; }
  std::span<const Edge> edges() const { return edges_; }
  /// Edge id in direction d from v, or kNoEdge if that edge leaves the box.
  EdgeId incident(VertexId v, Direction d) const { return incidence_[v][static_cast<int>(d)]; }
  std::optional<EdgeId> edge_between(VertexId u, VertexId v) const;
  VertexId other_end(EdgeId e, VertexId v) const { return edges_[e].u == v ? edges_[e].v : edges_[e].u; }

  std::span<const VertexId> boundary() const { return boundary_; }
  bool is_boundary(VertexId v) const { return on_boundary_[v] != 0; }
  std::span<const VertexId> interior_vertices() const { return interior_vertices_; }

  /// E_n^int: edges not contained in ∂Λ(n) × ∂Λ(n).
  std::span<const EdgeId> interior_edges() const { return interior_edges_; }
  bool is_interior_edge(EdgeId e) const { return !is_boundary(edges_[e].u) || !is_boundary(edges_[e].v); }

  /// Vertices of the centred sub-box Λ(j), 1 <= j <= n.
  std::vector<VertexId> sub_box(int j) const;
  bool in_sub_box(VertexId v, int j) const;
  /// E_j = ∂^e Λ(j).
  EdgeBoundary annulus(int j) const;

 private:
  int n_;
  int lo_;
  std::vector<Edge> edges_;
  std::vector<std::array<EdgeId, 4>> incidence_;
  std::vector<VertexId> boundary_;
  std::vector<char> on_boundary_;
  std::vector<VertexId> interior_vertices_;
  std::vector<EdgeId> interior_edges_;
};

using GeometryPtr = std::shared_ptr<const BoxGeometry>;

/// Builds Λ(n); rejects n < 1.
GeometryPtr build_box(int n);

/// ∂^e V for V ⊆ Λ(n). Duplicates in V are ignored.
EdgeBoundary exterior_boundary_edges(std::span<const VertexId> vertices, const BoxGeometry& g);

/// max ℓ∞ distance between two vertices of V; rejects empty V.
int diameter(std::span<const VertexId> vertices, const BoxGeometry& g);

/// Planar dual of Λ(n), n >= 2, identified with Λ(n-1).
///
/// The dual vertex x + (-1)^{n+1}(1/2, 1/2) is stored as x ∈ Λ(n-1), so all
/// coordinates stay integral. Under this identification the dual of the
/// dual of an edge of Λ(n-2) is the same edge of Λ(n).
class DualGeometry {
 public:
  explicit DualGeometry(GeometryPtr primal);

  const GeometryPtr& primal() const { return primal_; }
  const GeometryPtr& dual_box() const { return dual_; }
  /// e ↦ e★ for interior edges, kNoEdge for edges inside ∂Λ(n).
  EdgeId dual_edge(EdgeId e) const { return to_dual_[e]; }
  EdgeId primal_edge(EdgeId dual_e) const { return to_primal_[dual_e]; }

 private:
  GeometryPtr primal_;
  GeometryPtr dual_;
  std::vector<EdgeId> to_dual_;
  std::vector<EdgeId> to_primal_;
};

}  // namespace socising
