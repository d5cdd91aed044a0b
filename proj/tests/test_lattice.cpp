#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "socising/lattice.hpp"

using namespace socising;

namespace {

std::vector<VertexId> sites_to_ids(const BoxGeometry& g, std::initializer_list<Site> sites) {
  std::vector<VertexId> out;
  for (Site s : sites) out.push_back(*g.vertex_at(s));
  return out;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("small boxes") {
    auto g1 = build_box(1);
    CHECK(g1->vertex_count() == 1);
    CHECK(g1->edge_count() == 0);
    REQUIRE(g1->boundary().size() == 1);
    CHECK(g1->site(g1->boundary()[0]) == Site{0, 0});

    auto g2 = build_box(2);
    CHECK(g2->vertex_count() == 4);
    CHECK(g2->edge_count() == 4);
    CHECK(g2->boundary().size() == 4);
    CHECK(g2->interior_vertices().empty());

    auto g3 = build_box(3);
    CHECK(g3->vertex_count() == 9);
    CHECK(g3->edge_count() == 12);
    CHECK(g3->boundary().size() == 8);
    REQUIRE(g3->interior_vertices().size() == 1);
    CHECK(g3->site(g3->interior_vertices()[0]) == Site{0, 0});

    CHECK_THROWS_AS(build_box(0), std::invalid_argument);
  }

  TEST_CASE("counts, orderings and boundary match the coordinate oracle") {
    for (int n = 1; n <= 13; ++n) {
      CAPTURE(n);
      auto g = build_box(n);
      const auto sites = oracle::box_sites(n);
      REQUIRE(g->vertex_count() == sites.size());
      for (VertexId v = 0; v < g->vertex_count(); ++v) {
        CHECK(g->site(v) == Site{sites[v].x, sites[v].y});
        CHECK(g->is_boundary(v) == oracle::on_boundary(n, sites[v]));
      }
      const auto edges = oracle::box_edges(n);
      REQUIRE(g->edge_count() == edges.size());
      for (EdgeId e = 0; e < g->edge_count(); ++e) {
        CHECK(static_cast<int>(g->edge(e).u) == edges[e].first);
        CHECK(static_cast<int>(g->edge(e).v) == edges[e].second);
      }
      if (n >= 2) {
        CHECK(g->edge_count() == static_cast<std::size_t>(2 * n * (n - 1)));
        CHECK(g->boundary().size() == static_cast<std::size_t>(4 * (n - 1)));
      }
      // Every boundary vertex has a lattice neighbour outside the box.
      for (VertexId v : g->boundary()) {
        bool leaves = false;
        for (Direction d : kDirections) leaves = leaves || g->incident(v, d) == kNoEdge;
        CHECK(leaves);
      }
      // Interior edges: not both endpoints on the boundary.
      std::set<EdgeId> interior(g->interior_edges().begin(), g->interior_edges().end());
      for (EdgeId e = 0; e < g->edge_count(); ++e) {
        const bool expect = !(oracle::on_boundary(n, sites[edges[e].first]) &&
                              oracle::on_boundary(n, sites[edges[e].second]));
        CHECK((interior.count(e) == 1) == expect);
        CHECK(g->is_interior_edge(e) == expect);
      }
    }
  }

  TEST_CASE("annuli two or more apart are disjoint") {
    auto g = build_box(14);
    for (int j = 1; j <= 14; ++j)
      for (int k = j + 2; k <= 14; ++k) {
        const auto a = g->annulus(j), b = g->annulus(k);
        for (EdgeId e : a.internal) CHECK(std::find(b.internal.begin(), b.internal.end(), e) == b.internal.end());
        for (const HalfEdge& h : a.external)
          CHECK(std::find(b.external.begin(), b.external.end(), h) == b.external.end());
      }
  }

  TEST_CASE("removing E_j separates the sub-box from the boundary") {
    for (int n : {8, 9, 12}) {
      auto g = build_box(n);
      for (int j = 1; j < n - 1; ++j) {
        CAPTURE(n);
        CAPTURE(j);
        const auto cut = g->annulus(j);
        std::vector<std::uint8_t> open(g->edge_count(), 1);
        for (EdgeId e : cut.internal) open[e] = 0;
        const auto comps = oracle::bfs_components(n * n, oracle::box_edges(n), open);
        const auto inner = g->sub_box(j);
        for (VertexId v : inner)
          for (VertexId b : g->boundary()) CHECK(comps.label[v] != comps.label[b]);
      }
    }
  }

  TEST_CASE("exterior boundary edges") {
    auto g5 = build_box(5);
    CHECK(exterior_boundary_edges(std::vector<VertexId>{}, *g5).size() == 0);
    const auto centre = sites_to_ids(*g5, {{0, 0}});
    const auto eb = exterior_boundary_edges(centre, *g5);
    CHECK(eb.internal.size() == 4);
    CHECK(eb.external.empty());

    // Λ(3) inside Λ(7): count lattice neighbours outside the set directly.
    auto g7 = build_box(7);
    const auto inner = g7->sub_box(3);
    std::set<VertexId> in(inner.begin(), inner.end());
    std::size_t expected = 0;
    for (VertexId v : inner)
      for (Direction d : kDirections) {
        const auto w = g7->vertex_at(step(g7->site(v), d));
        if (!w || !in.count(*w)) ++expected;
      }
    CHECK(expected == 12);
    CHECK(exterior_boundary_edges(inner, *g7).size() == expected);

    // Sets touching the box edge keep their leaving edges as half-edges.
    const auto corner = sites_to_ids(*g5, {{-2, -2}});
    const auto ce = exterior_boundary_edges(corner, *g5);
    CHECK(ce.internal.size() == 2);
    CHECK(ce.external.size() == 2);
  }

  TEST_CASE("diameter") {
    auto g = build_box(8);
    CHECK(diameter(sites_to_ids(*g, {{1, 1}}), *g) == 0);
    CHECK(diameter(sites_to_ids(*g, {{-2, 0}, {-1, 0}, {0, 0}, {1, 0}, {2, 0}}), *g) == 4);
    std::vector<VertexId> square;
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) square.push_back(*g->vertex_at({x - 2, y - 2}));
    CHECK(diameter(square, *g) == 3);
    CHECK_THROWS_AS(diameter(std::vector<VertexId>{}, *g), std::invalid_argument);
  }

  TEST_CASE("dual edges cross their primal edges") {
    for (int n = 2; n <= 9; ++n) {
      CAPTURE(n);
      auto g = build_box(n);
      DualGeometry dual(g);
      const auto& dg = *dual.dual_box();
      REQUIRE(dg.side() == n - 1);
      REQUIRE(dg.edge_count() == g->interior_edges().size());
      // Real dual coordinates are the stored ones shifted by (-1)^{n+1}/2.
      const double shift = (n % 2 == 1) ? 0.5 : -0.5;
      std::set<EdgeId> hit;
      for (EdgeId e = 0; e < g->edge_count(); ++e) {
        const EdgeId d = dual.dual_edge(e);
        if (!g->is_interior_edge(e)) {
          CHECK(d == kNoEdge);
          continue;
        }
        REQUIRE(d != kNoEdge);
        CHECK(dual.primal_edge(d) == e);
        hit.insert(d);
        const Site a = g->site(g->edge(e).u), b = g->site(g->edge(e).v);
        const Site c = dg.site(dg.edge(d).u), f = dg.site(dg.edge(d).v);
        CHECK((a.x + b.x) / 2.0 == doctest::Approx((c.x + f.x) / 2.0 + shift));
        CHECK((a.y + b.y) / 2.0 == doctest::Approx((c.y + f.y) / 2.0 + shift));
        CHECK((a.x == b.x) == (c.y == f.y));  // perpendicular
      }
      CHECK(hit.size() == dg.edge_count());
    }
  }

  TEST_CASE("dual of the dual is the same edge of the big box") {
    for (int n = 3; n <= 9; ++n) {
      CAPTURE(n);
      auto g = build_box(n);
      DualGeometry d1(g);
      DualGeometry d2(d1.dual_box());
      const auto& g2 = *d2.dual_box();
      REQUIRE(g2.side() == n - 2);
      for (EdgeId f = 0; f < g2.edge_count(); ++f) {
        const EdgeId mid = d2.primal_edge(f);
        const EdgeId back = d1.primal_edge(mid);
        CHECK(g->site(g->edge(back).u) == g2.site(g2.edge(f).u));
        CHECK(g->site(g->edge(back).v) == g2.site(g2.edge(f).v));
      }
    }
  }
}
