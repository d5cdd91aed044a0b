#include "socising/lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace socising {

Site step(Site s, Direction d) {
  switch (d) {
    case Direction::east: return {s.x + 1, s.y};
    case Direction::north: return {s.x, s.y + 1};
    case Direction::west: return {s.x - 1, s.y};
    case Direction::south: return {s.x, s.y - 1};
  }
  return s;
}

namespace {

int sub_box_lo(int j) { return -(j / 2); }

}  // namespace

BoxGeometry::BoxGeometry(int n) : n_(n), lo_(-(n / 2)) {
  if (n < 1) throw std::invalid_argument("build_box: side must be >= 1, got " + std::to_string(n));
  const std::size_t nv = vertex_count();
  incidence_.assign(nv, {kNoEdge, kNoEdge, kNoEdge, kNoEdge});
  on_boundary_.assign(nv, 0);
  edges_.reserve(nv * 2);
  // (u, u+1) is the north neighbour and (u, u+n) the east one, so emitting
  // them in this order per u yields lexicographic (u, v) order.
  for (VertexId u = 0; u < nv; ++u) {
    const Site s = site(u);
    if (s.y < hi()) {
      const auto id = static_cast<EdgeId>(edges_.size());
      edges_.push_back({u, u + 1});
      incidence_[u][static_cast<int>(Direction::north)] = id;
      incidence_[u + 1][static_cast<int>(Direction::south)] = id;
    }
    if (s.x < hi()) {
      const auto id = static_cast<EdgeId>(edges_.size());
      const auto v = static_cast<VertexId>(u + n_);
      edges_.push_back({u, v});
      incidence_[u][static_cast<int>(Direction::east)] = id;
      incidence_[v][static_cast<int>(Direction::west)] = id;
    }
  }
  for (VertexId v = 0; v < nv; ++v) {
    const Site s = site(v);
    if (s.x == lo_ || s.x == hi() || s.y == lo_ || s.y == hi()) {
      on_boundary_[v] = 1;
      boundary_.push_back(v);
    } else {
      interior_vertices_.push_back(v);
    }
  }
  for (EdgeId e = 0; e < edges_.size(); ++e)
    if (is_interior_edge(e)) interior_edges_.push_back(e);
}

std::optional<VertexId> BoxGeometry::vertex_at(Site s) const {
  if (!contains(s)) return std::nullopt;
  return vertex_unchecked(s);
}

std::optional<EdgeId> BoxGeometry::edge_between(VertexId u, VertexId v) const {
  for (EdgeId e : incidence_[u])
    if (e != kNoEdge && other_end(e, u) == v) return e;
  return std::nullopt;
}

bool BoxGeometry::in_sub_box(VertexId v, int j) const {
  const Site s = site(v);
  const int l = sub_box_lo(j);
  const int h = l + j - 1;
  return s.x >= l && s.x <= h && s.y >= l && s.y <= h;
}

std::vector<VertexId> BoxGeometry::sub_box(int j) const {
  if (j < 1 || j > n_)
    throw std::invalid_argument("sub_box: need 1 <= j <= n, got j=" + std::to_string(j));
  std::vector<VertexId> out;
  out.reserve(static_cast<std::size_t>(j) * j);
  const int l = sub_box_lo(j);
  for (int x = l; x < l + j; ++x)
    for (int y = l; y < l + j; ++y) out.push_back(vertex_unchecked({x, y}));
  return out;
}

EdgeBoundary BoxGeometry::annulus(int j) const {
  const auto vertices = sub_box(j);
  return exterior_boundary_edges(vertices, *this);
}

GeometryPtr build_box(int n) { return std::make_shared<const BoxGeometry>(n); }

EdgeBoundary exterior_boundary_edges(std::span<const VertexId> vertices, const BoxGeometry& g) {
  std::vector<char> in_set(g.vertex_count(), 0);
  for (VertexId v : vertices) {
    if (v >= g.vertex_count()) throw std::out_of_range("exterior_boundary_edges: vertex outside box");
    in_set[v] = 1;
  }
  EdgeBoundary out;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!in_set[v]) continue;
    for (Direction d : kDirections) {
      const EdgeId e = g.incident(v, d);
      if (e == kNoEdge)
        out.external.push_back({v, d});
      else if (!in_set[g.other_end(e, v)])
        out.internal.push_back(e);
    }
  }
  std::sort(out.internal.begin(), out.internal.end());
  return out;
}

int diameter(std::span<const VertexId> vertices, const BoxGeometry& g) {
  if (vertices.empty()) throw std::invalid_argument("diameter: empty vertex set");
  // ℓ∞ diameter is the larger side of the bounding box.
  int min_x = g.hi(), max_x = g.lo(), min_y = g.hi(), max_y = g.lo();
  for (VertexId v : vertices) {
    const Site s = g.site(v);
    min_x = std::min(min_x, s.x);
    max_x = std::max(max_x, s.x);
    min_y = std::min(min_y, s.y);
    max_y = std::max(max_y, s.y);
  }
  return std::max(max_x - min_x, max_y - min_y);
}

DualGeometry::DualGeometry(GeometryPtr primal) : primal_(std::move(primal)) {
  const int n = primal_->side();
  if (n < 2) throw std::invalid_argument("DualGeometry: primal side must be >= 2");
  dual_ = build_box(n - 1);
  to_dual_.assign(primal_->edge_count(), kNoEdge);
  to_primal_.assign(dual_->edge_count(), kNoEdge);

  // Work in doubled coordinates: a dual vertex sits at 2x' + shift with
  // shift = (-1)^{n+1} on both axes.
  const int shift = (n % 2 == 1) ? 1 : -1;
  auto dual_vertex = [&](int dx, int dy) {
    const Site s{(dx - shift) / 2, (dy - shift) / 2};
    const auto v = dual_->vertex_at(s);
    if (!v) throw std::logic_error("DualGeometry: dual vertex outside identified box");
    return *v;
  };
  for (EdgeId e : primal_->interior_edges()) {
    const Edge& pe = primal_->edge(e);
    const Site a = primal_->site(pe.u);
    const Site b = primal_->site(pe.v);
    const int mx = a.x + b.x;  // doubled midpoint
    const int my = a.y + b.y;
    VertexId p, q;
    if (a.x != b.x) {  // horizontal primal edge, vertical dual edge
      p = dual_vertex(mx, my - 1);
      q = dual_vertex(mx, my + 1);
    } else {
      p = dual_vertex(mx - 1, my);
      q = dual_vertex(mx + 1, my);
    }
    const auto d = dual_->edge_between(p, q);
    if (!d) throw std::logic_error("DualGeometry: dual endpoints are not neighbours");
    to_dual_[e] = *d;
    to_primal_[*d] = e;
  }
  for (EdgeId d = 0; d < to_primal_.size(); ++d)
    if (to_primal_[d] == kNoEdge) throw std::logic_error("DualGeometry: edge map is not onto");
}

}  // namespace socising
