#include "socising/fk.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "socising/parallel.hpp"

namespace socising {

void FKParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("FKParams: p must lie in [0, 1]");
  if (!(q >= 1.0) || std::isinf(q)) throw std::invalid_argument("FKParams: q must be finite and >= 1");
  if (bc != BoundaryCondition::free && bc != BoundaryCondition::wired)
    throw std::invalid_argument("FKParams: unknown boundary condition");
}

BondConfig::BondConfig(GeometryPtr geometry)
    : geometry_(std::move(geometry)), bonds_(geometry_->edge_count(), 0) {}

BondConfig BondConfig::all_open(GeometryPtr geometry) {
  BondConfig b(std::move(geometry));
  std::fill(b.bonds_.begin(), b.bonds_.end(), std::uint8_t{1});
  return b;
}

BondConfig BondConfig::from_mask(GeometryPtr geometry, std::uint64_t mask) {
  if (geometry->edge_count() > 64) throw std::invalid_argument("BondConfig::from_mask: more than 64 edges");
  if (geometry->edge_count() < 64 && (mask >> geometry->edge_count()) != 0)
    throw std::invalid_argument("BondConfig::from_mask: mask has bits beyond the edge count");
  BondConfig b(std::move(geometry));
  for (std::size_t e = 0; e < b.bonds_.size(); ++e) b.bonds_[e] = (mask >> e) & 1u;
  return b;
}

std::size_t BondConfig::open_count() const {
  return static_cast<std::size_t>(std::count(bonds_.begin(), bonds_.end(), std::uint8_t{1}));
}

std::uint64_t BondConfig::mask() const {
  if (bonds_.size() > 64) throw std::logic_error("BondConfig::mask: more than 64 edges");
  std::uint64_t m = 0;
  for (std::size_t e = 0; e < bonds_.size(); ++e)
    if (bonds_[e]) m |= std::uint64_t{1} << e;
  return m;
}

bool BondConfig::dominated_by(const BondConfig& other) const {
  if (bonds_.size() != other.bonds_.size()) throw std::invalid_argument("dominated_by: different boxes");
  for (std::size_t e = 0; e < bonds_.size(); ++e)
    if (bonds_[e] > other.bonds_[e]) return false;
  return true;
}

DisjointSets::DisjointSets(std::size_t count) : parent_(count), size_(count, 1) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t DisjointSets::find(std::uint32_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool DisjointSets::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

std::size_t ClusterDecomposition::unit_interior_count() const {
  auto it = by_size.find(1);
  return it == by_size.end() ? 0 : it->second.size();
}

std::vector<VertexId> ClusterDecomposition::members(std::uint32_t cluster) const {
  if (cluster >= size.size()) throw std::out_of_range("ClusterDecomposition::members: no such cluster");
  std::vector<VertexId> out;
  out.reserve(size[cluster]);
  for (VertexId v = 0; v < label.size(); ++v)
    if (label[v] == cluster) out.push_back(v);
  return out;
}

std::size_t ClusterDecomposition::boundary_connected_in_sub_box(int j) const {
  if (j < 1 || j > geometry->side()) throw std::invalid_argument("boundary_connected_in_sub_box: bad j");
  std::size_t count = 0;
  for (VertexId v : boundary_connected)
    if (geometry->in_sub_box(v, j)) ++count;
  return count;
}

ClusterDecomposition decompose(const BondConfig& omega) {
  const auto& g = omega.geometry();
  const std::size_t nv = g.vertex_count();
  DisjointSets ds(nv);
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    if (omega.is_open(e)) ds.unite(g.edge(e).u, g.edge(e).v);

  ClusterDecomposition d;
  d.geometry = omega.geometry_ptr();
  d.label.assign(nv, 0);
  std::vector<std::uint32_t> root_to_id(nv, static_cast<std::uint32_t>(-1));
  for (VertexId v = 0; v < nv; ++v) {
    const auto r = ds.find(v);
    if (root_to_id[r] == static_cast<std::uint32_t>(-1)) {
      root_to_id[r] = static_cast<std::uint32_t>(d.size.size());
      d.size.push_back(0);
      d.touches_boundary.push_back(0);
    }
    const auto id = root_to_id[r];
    d.label[v] = id;
    ++d.size[id];
    if (g.is_boundary(v)) d.touches_boundary[id] = 1;
  }
  for (VertexId v = 0; v < nv; ++v)
    if (d.touches_boundary[d.label[v]]) d.boundary_connected.push_back(v);

  for (std::uint32_t c = 0; c < d.size.size(); ++c) {
    if (d.touches_boundary[c]) continue;
    d.interior_clusters.push_back(c);
    d.by_size[d.size[c]].push_back(c);
    d.sum_sq_interior += std::uint64_t{d.size[c]} * d.size[c];
    d.max_interior = std::max(d.max_interior, d.size[c]);
  }
  d.k0 = d.size.size();
  d.k1 = d.interior_clusters.size() + 1;  // boundary contracted to one vertex

  for (VertexId v : g.interior_vertices()) {
    const Site s = g.site(v);
    if ((std::abs(s.x) + std::abs(s.y)) % 2 == 0 && d.size[d.label[v]] == 1) ++d.unit_count_halfgrid;
  }
  return d;
}

BondConfig close_edges(const BondConfig& omega, std::span<const EdgeId> edges) {
  BondConfig out = omega;
  for (EdgeId e : edges) {
    if (e >= omega.geometry().edge_count()) throw std::out_of_range("close_edges: edge id outside the box");
    out.set(e, false);
  }
  return out;
}

std::size_t cluster_count(const ClusterDecomposition& d, BoundaryCondition bc) {
  return bc == BoundaryCondition::wired ? d.k1 : d.k0;
}

double fk_weight(const BondConfig& omega, const FKParams& params) {
  params.validate();
  const auto d = decompose(omega);
  const auto open = static_cast<double>(omega.open_count());
  const auto closed = static_cast<double>(omega.geometry().edge_count()) - open;
  return std::pow(params.q, static_cast<double>(cluster_count(d, params.bc))) *
         (std::pow(params.p, open) * std::pow(1.0 - params.p, closed));
}

std::vector<double> FKDistribution::edge_marginals() const {
  std::vector<double> out(geometry->edge_count(), 0.0);
  for (std::uint64_t mask = 0; mask < probability.size(); ++mask)
    for (std::size_t e = 0; e < out.size(); ++e)
      if (mask >> e & 1u) out[e] += probability[mask];
  return out;
}

FKDistribution exact_fk_distribution(GeometryPtr geometry, const FKParams& params) {
  params.validate();
  if (geometry->edge_count() > kMaxEnumerationEdges)
    throw std::invalid_argument("exact_fk_distribution: " + std::to_string(geometry->edge_count()) +
                                " edges exceed the enumeration limit of " + std::to_string(kMaxEnumerationEdges));
  FKDistribution d;
  d.geometry = geometry;
  d.params = params;
  d.probability = parallel::fk_weights(geometry, params, parallel::Mode::openmp);
  d.partition = parallel::ordered_sum(d.probability, parallel::Mode::openmp);
  for (double& w : d.probability) w /= d.partition;
  return d;
}

void swendsen_wang_step(BondConfig& omega, const FKParams& params, RngStream& rng) {
  params.validate();
  if (params.q != 2.0) throw std::invalid_argument("swendsen_wang_step: requires q = 2");
  const auto d = decompose(omega);
  std::vector<std::int8_t> cluster_spin(d.cluster_count());
  for (std::uint32_t c = 0; c < d.cluster_count(); ++c) {
    if (params.bc == BoundaryCondition::wired && d.touches_boundary[c])
      cluster_spin[c] = 1;
    else
      cluster_spin[c] = rng.bernoulli(0.5) ? 1 : -1;
  }
  const auto& g = omega.geometry();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    const bool agree = cluster_spin[d.label[ed.u]] == cluster_spin[d.label[ed.v]];
    omega.set(e, agree && rng.bernoulli(params.p));
  }
}

namespace {

// Scratch for the two-sided search, reused across calls on a thread.
struct SearchScratch {
  std::vector<std::uint32_t> stamp;
  std::vector<std::uint8_t> side;
  std::vector<VertexId> queue[2];
  std::uint32_t generation = 0;

  void reset(std::size_t nv) {
    if (stamp.size() != nv) {
      stamp.assign(nv, 0);
      side.assign(nv, 0);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0u);
      generation = 1;
    }
    queue[0].clear();
    queue[1].clear();
  }
};

}  // namespace

bool endpoints_connected_without(const BondConfig& omega, EdgeId e, BoundaryCondition bc) {
  const auto& g = omega.geometry();
  if (e >= g.edge_count()) throw std::out_of_range("endpoints_connected_without: edge id outside the box");
  const bool wired = bc == BoundaryCondition::wired;
  const VertexId ends[2] = {g.edge(e).u, g.edge(e).v};
  bool reached_boundary[2] = {wired && g.is_boundary(ends[0]), wired && g.is_boundary(ends[1])};
  if (reached_boundary[0] && reached_boundary[1]) return true;

  thread_local SearchScratch s;
  s.reset(g.vertex_count());
  std::size_t head[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    s.stamp[ends[k]] = s.generation;
    s.side[ends[k]] = static_cast<std::uint8_t>(k);
    s.queue[k].push_back(ends[k]);
  }

  // Expands one vertex on side k: 1 = joined, -1 = side exhausted, 0 = continue.
  auto expand = [&](int k) -> int {
    if (head[k] == s.queue[k].size()) return -1;
    const VertexId x = s.queue[k][head[k]++];
    for (Direction dir : kDirections) {
      const EdgeId f = g.incident(x, dir);
      if (f == kNoEdge || f == e || !omega.is_open(f)) continue;
      const VertexId y = g.other_end(f, x);
      if (s.stamp[y] == s.generation) {
        if (s.side[y] != k) return 1;
        continue;
      }
      s.stamp[y] = s.generation;
      s.side[y] = static_cast<std::uint8_t>(k);
      s.queue[k].push_back(y);
      if (wired && g.is_boundary(y)) {
        reached_boundary[k] = true;
        if (reached_boundary[1 - k]) return 1;
      }
    }
    return 0;
  };

  while (true) {
    for (int k = 0; k < 2; ++k) {
      const int r = expand(k);
      if (r == 1) return true;
      if (r == -1) {
        // Side k's component is finished and does not contain the other end.
        if (!reached_boundary[k]) return false;
        const int other = 1 - k;
        while (true) {
          const int r2 = expand(other);
          if (r2 == 1 || reached_boundary[other]) return true;
          if (r2 == -1) return false;
        }
      }
    }
  }
}

double single_bond_open_probability(const BondConfig& omega, EdgeId e, const FKParams& params) {
  params.validate();
  const double p = params.p;
  if (params.q == 1.0) return p;
  if (endpoints_connected_without(omega, e, params.bc)) return p;
  return p / (p + params.q * (1.0 - p));
}

void single_bond_heat_bath_sweep(BondConfig& omega, const FKParams& params, RngStream& rng) {
  params.validate();
  for (EdgeId e = 0; e < omega.geometry().edge_count(); ++e)
    omega.set(e, rng.uniform() < single_bond_open_probability(omega, e, params));
}

namespace {

struct LineFit {
  double slope = 0.0;
  bool ok = false;
};

// Least-squares slope of -ln tail[k-1] against k over k = 1..k_max.
LineFit fit_decay(const std::vector<double>& tail, std::size_t k_max) {
  LineFit out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t k = 1; k <= k_max && k <= tail.size(); ++k) {
    if (!(tail[k - 1] > 0.0)) break;
    const double x = static_cast<double>(k);
    const double y = -std::log(tail[k - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) return out;
  const double c = static_cast<double>(count);
  const double denom = c * sxx - sx * sx;
  out.slope = (c * sxy - sx * sy) / denom;
  out.ok = true;
  return out;
}

std::vector<double> empirical_tail(std::span<const std::uint32_t> sizes, std::size_t max_k) {
  std::vector<double> counts(max_k + 1, 0.0);
  for (auto s : sizes) counts[std::min<std::size_t>(s, max_k)] += 1.0;
  std::vector<double> tail(max_k, 0.0);
  double above = 0.0;
  for (std::size_t k = max_k; k >= 1; --k) {
    above += counts[k];
    tail[k - 1] = above / static_cast<double>(sizes.size());
  }
  return tail;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TailStatistics tail_statistics_from_sizes(std::span<const std::uint32_t> sizes, std::size_t max_k,
                                          std::uint64_t bootstrap_seed) {
  if (max_k == 0) throw std::invalid_argument("tail_statistics: max_k must be positive");
  TailStatistics t;
  t.samples = sizes.size();
  if (sizes.empty()) {
    t.tail.assign(max_k, 0.0);
    t.degenerate = true;
    t.note = "no samples";
    return t;
  }
  for (auto s : sizes)
    if (s == 0 || s > max_k) throw std::invalid_argument("tail_statistics: cluster size outside 1..max_k");
  t.tail = empirical_tail(sizes, max_k);

  // Window: the largest k with at least kMinHits samples reaching it.
  const double n = static_cast<double>(sizes.size());
  for (std::size_t k = 1; k <= max_k; ++k)
    if (t.tail[k - 1] * n + 0.5 >= static_cast<double>(TailStatistics::kMinHits)) t.fit_k_max = k;

  if (t.samples < TailStatistics::kMinSamples) {
    t.degenerate = true;
    t.note = "fewer than " + std::to_string(TailStatistics::kMinSamples) + " samples";
    return t;
  }
  const auto fit = fit_decay(t.tail, t.fit_k_max);
  if (!fit.ok) {
    t.degenerate = true;
    t.note = "fewer than two tail points with at least " + std::to_string(TailStatistics::kMinHits) + " hits";
    return t;
  }
  t.psi = fit.slope;

  RngStream rng(bootstrap_seed, 0);
  std::vector<std::uint32_t> resample(sizes.size());
  std::vector<double> slopes;
  slopes.reserve(TailStatistics::kBootstrapResamples);
  for (std::size_t b = 0; b < TailStatistics::kBootstrapResamples; ++b) {
    for (auto& s : resample) s = sizes[rng.below(sizes.size())];
    const auto f = fit_decay(empirical_tail(resample, max_k), t.fit_k_max);
    if (f.ok) slopes.push_back(f.slope);
  }
  if (slopes.size() < 2) {
    t.ci_low = t.ci_high = t.psi;
    t.note = "bootstrap produced no usable fits";
  } else {
    t.ci_low = percentile(slopes, 0.025);
    t.ci_high = percentile(slopes, 0.975);
  }
  return t;
}

TailStatistics tail_statistics(std::span<const ClusterDecomposition> samples, VertexId v,
                               std::uint64_t bootstrap_seed) {
  if (samples.empty()) return tail_statistics_from_sizes({}, 1, bootstrap_seed);
  const auto& g = *samples.front().geometry;
  if (v >= g.vertex_count()) throw std::out_of_range("tail_statistics: vertex outside the box");
  std::vector<std::uint32_t> sizes;
  sizes.reserve(samples.size());
  for (const auto& d : samples) {
    if (d.geometry->side() != g.side()) throw std::invalid_argument("tail_statistics: samples from different boxes");
    sizes.push_back(d.cluster_size_at(v));
  }
  return tail_statistics_from_sizes(sizes, g.vertex_count(), bootstrap_seed);
}

bool event_D_n(const ClusterDecomposition& d, double A, double b, double c) {
  const double n = d.geometry->side();
  const double min_size = std::pow(n, b);
  double total = 0.0;
  for (std::uint32_t c_id = 0; c_id < d.cluster_count(); ++c_id)
    if (static_cast<double>(d.size[c_id]) >= min_size) total += d.size[c_id];
  return total >= A * std::pow(n, c);
}

bool event_Q_N(const ClusterDecomposition& d, std::span<const VertexId> vertices,
               std::span<const std::uint32_t> thresholds) {
  if (vertices.size() != thresholds.size())
    throw std::invalid_argument("event_Q_N: vertices and thresholds differ in length");
  std::vector<VertexId> sorted(vertices.begin(), vertices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("event_Q_N: vertices must be distinct");
  std::vector<std::uint32_t> seen;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i] >= d.label.size()) throw std::out_of_range("event_Q_N: vertex outside the box");
    if (d.cluster_size_at(vertices[i]) < thresholds[i]) return false;
    seen.push_back(d.label[vertices[i]]);
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

std::vector<EdgeId> external_cluster_boundary(std::span<const VertexId> cluster, const BoxGeometry& g) {
  if (cluster.empty()) throw std::invalid_argument("external_cluster_boundary: empty cluster");
  int min_x = g.hi(), max_x = g.lo(), min_y = g.hi(), max_y = g.lo();
  for (VertexId v : cluster) {
    if (v >= g.vertex_count()) throw std::out_of_range("external_cluster_boundary: vertex outside the box");
    if (g.is_boundary(v)) throw std::invalid_argument("external_cluster_boundary: cluster touches the box boundary");
    const Site s = g.site(v);
    min_x = std::min(min_x, s.x);
    max_x = std::max(max_x, s.x);
    min_y = std::min(min_y, s.y);
    max_y = std::max(max_y, s.y);
  }
  // Flood the complement inside the bounding box grown by one; its frame is
  // connected and lies in the unbounded component of Z^2 \ C.
  const int x0 = min_x - 1, y0 = min_y - 1;
  const int w = max_x - min_x + 3, h = max_y - min_y + 3;
  auto cell = [&](int x, int y) { return static_cast<std::size_t>(x - x0) * h + static_cast<std::size_t>(y - y0); };
  std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, 0);  // 1 = in C, 2 = outside
  for (VertexId v : cluster) {
    const Site s = g.site(v);
    state[cell(s.x, s.y)] = 1;
  }
  std::deque<Site> queue{{x0, y0}};
  state[cell(x0, y0)] = 2;
  while (!queue.empty()) {
    const Site s = queue.front();
    queue.pop_front();
    for (Direction d : kDirections) {
      const Site t = step(s, d);
      if (t.x < x0 || t.x >= x0 + w || t.y < y0 || t.y >= y0 + h) continue;
      auto& st = state[cell(t.x, t.y)];
      if (st != 0) continue;
      st = 2;
      queue.push_back(t);
    }
  }
  std::vector<EdgeId> out;
  for (VertexId v : cluster) {
    const Site s = g.site(v);
    for (Direction d : kDirections) {
      const Site t = step(s, d);
      if (state[cell(t.x, t.y)] == 2) out.push_back(g.incident(v, d));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace socising
