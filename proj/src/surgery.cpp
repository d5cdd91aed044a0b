#include "socising/surgery.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "socising/soc.hpp"

namespace socising {

namespace mp = boost::multiprecision;

double EventParams::cluster_cap() const { return std::pow(static_cast<double>(n), 33.0 / 2.0 - 8.0 * a); }
double EventParams::n_pow_a() const { return std::pow(static_cast<double>(n), a); }

int inner_side(int n) { return 5 * n / 6; }

int annulus_count(int n) {
  const int n1 = inner_side(n);
  return (n - 2) / 2 - (n1 + 1) / 2 + 1;
}

EventParams make_event_params(int n, double a, double K, double delta, long b, double p_n) {
  if (n < 1) throw std::invalid_argument("make_event_params: n must be >= 1");
  if (!(a > 0.0 && a < 2.0)) throw std::invalid_argument("make_event_params: a must lie in (0, 2)");
  EventParams p;
  p.n = n;
  p.a = a;
  p.s = 16.0 - 8.0 * a;
  p.n1 = inner_side(n);
  p.delta = delta;
  p.N = static_cast<std::size_t>(std::floor(p.cluster_cap()));
  p.K = K;
  p.b = b;
  p.p_n = p_n;
  return p;
}

std::vector<EdgeId> induced_edges(std::span<const VertexId> vertices, const BoxGeometry& g) {
  std::vector<char> in_set(g.vertex_count(), 0);
  for (VertexId v : vertices) {
    if (v >= g.vertex_count()) throw std::out_of_range("induced_edges: vertex outside the box");
    in_set[v] = 1;
  }
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < g.edge_count(); ++e)
    if (in_set[g.edge(e).u] && in_set[g.edge(e).v]) out.push_back(e);
  return out;
}

namespace {

// Marks M_n for the given bonds; returns its size.
std::size_t mark_boundary_connected(const BoxGeometry& g, std::span<const std::uint8_t> bonds,
                                    std::vector<char>& reached) {
  reached.assign(g.vertex_count(), 0);
  std::vector<VertexId> stack(g.boundary().begin(), g.boundary().end());
  for (VertexId v : stack) reached[v] = 1;
  std::size_t count = stack.size();
  while (!stack.empty()) {
    const VertexId x = stack.back();
    stack.pop_back();
    for (Direction d : kDirections) {
      const EdgeId e = g.incident(x, d);
      if (e == kNoEdge || !bonds[e]) continue;
      const VertexId y = g.other_end(e, x);
      if (reached[y]) continue;
      reached[y] = 1;
      ++count;
      stack.push_back(y);
    }
  }
  return count;
}

}  // namespace

std::size_t boundary_connected_count(const BoxGeometry& g, std::span<const std::uint8_t> bonds) {
  if (bonds.size() != g.edge_count()) throw std::invalid_argument("boundary_connected_count: wrong bond count");
  std::vector<char> reached;
  return mark_boundary_connected(g, bonds, reached);
}

AnnulusCut annulus_cut_H0(const BondConfig& omega, const ClusterDecomposition& d) {
  const auto& g = omega.geometry();
  const int n = g.side();
  if (n < 12) throw std::invalid_argument("annulus_cut_H0: needs n >= 12, got " + std::to_string(n));
  std::vector<char> in_m(g.vertex_count(), 0);
  for (VertexId v : d.boundary_connected) in_m[v] = 1;
  AnnulusCut cut;
  cut.induced_count = induced_edges(d.boundary_connected, g).size();
  cut.L_n = annulus_count(n);
  const int n1 = inner_side(n);
  bool found = false;
  for (int j = (n1 + 1) / 2; 2 * j <= n - 2; ++j) {
    std::vector<EdgeId> hits;
    for (EdgeId e : g.annulus(2 * j).internal)
      if (in_m[g.edge(e).u] && in_m[g.edge(e).v]) hits.push_back(e);
    if (!found || hits.size() < cut.H0.size()) {
      cut.j_star = j;
      cut.H0 = std::move(hits);
      found = true;
    }
  }
  return cut;
}

AnnulusCut annulus_cut_H0(const BondConfig& omega) { return annulus_cut_H0(omega, decompose(omega)); }

MaximalSubset maximal_subset_H1(const BondConfig& omega, std::span<const EdgeId> H0, std::size_t target) {
  const auto& g = omega.geometry();
  std::vector<std::uint8_t> bonds(omega.bonds().begin(), omega.bonds().end());
  const std::size_t m_full = boundary_connected_count(g, bonds);
  {
    auto closed = bonds;
    for (EdgeId e : H0) closed.at(e) = 0;
    const std::size_t m_h0 = boundary_connected_count(g, closed);
    if (!(m_h0 < target && target <= m_full))
      throw SurgeryPreconditionError("maximal_subset_H1: need |M(w_H0)| < target <= |M(w)|, got " +
                                     std::to_string(m_h0) + ", " + std::to_string(target) + ", " +
                                     std::to_string(m_full));
  }
  // Closing more edges only shrinks M_n, so one pass already gives a
  // maximal subset: an edge rejected early stays rejected.
  MaximalSubset out;
  out.m_after_h1 = m_full;
  for (EdgeId e : H0) {
    const std::uint8_t saved = bonds[e];
    bonds[e] = 0;
    const std::size_t m = boundary_connected_count(g, bonds);
    if (m >= target) {
      out.H1.push_back(e);
      out.m_after_h1 = m;
    } else {
      bonds[e] = saved;
      if (out.witness == kNoEdge) out.witness = e;
    }
  }
  bonds[out.witness] = 0;
  out.m_after_witness = boundary_connected_count(g, bonds);
  return out;
}

ExactCut exact_cut_H2(std::span<const VertexId> C, std::span<const EdgeId> E, VertexId v, std::size_t m,
                      const BoxGeometry& g) {
  if (m < 1 || m > C.size())
    throw std::invalid_argument("exact_cut_H2: m = " + std::to_string(m) + " outside [1, " + std::to_string(C.size()) +
                                "]");
  std::vector<char> in_c(g.vertex_count(), 0);
  for (VertexId x : C) {
    if (x >= g.vertex_count()) throw std::out_of_range("exact_cut_H2: vertex outside the box");
    in_c[x] = 1;
  }
  if (v >= g.vertex_count() || !in_c[v]) throw std::invalid_argument("exact_cut_H2: v is not in C");
  std::vector<char> usable(g.edge_count(), 0);
  for (EdgeId e : E) {
    if (e >= g.edge_count() || !in_c[g.edge(e).u] || !in_c[g.edge(e).v])
      throw std::invalid_argument("exact_cut_H2: edge not inside C");
    usable[e] = 1;
  }

  std::vector<VertexId> order{v};
  std::vector<char> seen(g.vertex_count(), 0);
  seen[v] = 1;
  for (std::size_t head = 0; head < order.size(); ++head) {
    const VertexId x = order[head];
    for (Direction d : kDirections) {
      const EdgeId e = g.incident(x, d);
      if (e == kNoEdge || !usable[e]) continue;
      const VertexId y = g.other_end(e, x);
      if (seen[y]) continue;
      seen[y] = 1;
      order.push_back(y);
    }
  }
  std::vector<VertexId> unique_c(C.begin(), C.end());
  std::sort(unique_c.begin(), unique_c.end());
  unique_c.erase(std::unique(unique_c.begin(), unique_c.end()), unique_c.end());
  if (order.size() != unique_c.size()) throw std::invalid_argument("exact_cut_H2: (C, E) is not connected");

  ExactCut cut;
  cut.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<char> kept(g.vertex_count(), 0);
  for (VertexId x : cut.kept) kept[x] = 1;
  for (EdgeId e : E)
    if (kept[g.edge(e).u] != kept[g.edge(e).v]) cut.H2.push_back(e);
  std::sort(cut.H2.begin(), cut.H2.end());
  cut.H2.erase(std::unique(cut.H2.begin(), cut.H2.end()), cut.H2.end());
  return cut;
}

namespace {

void fill_s_flags(SurgeryResult& r, const ClusterDecomposition& after, const EventParams& params) {
  long removed = 0;
  for (const auto& c : r.disconnected) removed += c.size;
  r.s_sum_matches = static_cast<long>(after.boundary_connected.size()) - removed == r.b;
  const double cap = params.cluster_cap();
  std::uint32_t max_rest = 0;
  std::size_t units = 0;
  for (auto s : r.remaining_interior_sizes) {
    max_rest = std::max(max_rest, s);
    if (s == 1) ++units;
  }
  r.s_max_ok = static_cast<double>(max_rest) <= cap;
  r.s_units_ok = cap <= static_cast<double>(units);
  r.s_count_ok = static_cast<double>(r.disconnected.size()) <= 2.0 * params.K * std::sqrt(params.n_pow_a());
}

}  // namespace

SurgeryResult surgery(const BondConfig& omega, long b, const EventParams& params) {
  const auto& g = omega.geometry();
  SurgeryResult r;
  r.n = g.side();
  r.b = b;
  const auto d = decompose(omega);
  r.m_before = d.boundary_connected.size();
  auto fail = [&](const char* stage, std::string detail) {
    r.success = false;
    r.failed_stage = stage;
    r.failure_detail = std::move(detail);
    return r;
  };
  if (b < 0) return fail("target", "b must be >= 0");
  const long sum = static_cast<long>(r.m_before) + b;
  r.target = static_cast<std::size_t>((sum + 1) / 2);
  if (r.target > r.m_before) return fail("target", "target exceeds |M_n(w)|; closing edges cannot grow M_n");

  std::vector<EdgeId> raw_h;
  if (r.target < r.m_before) {
    AnnulusCut cut;
    try {
      cut = annulus_cut_H0(omega, d);
    } catch (const std::invalid_argument& e) {
      return fail("H0", e.what());
    }
    r.j_star = cut.j_star;
    r.induced_count = cut.induced_count;
    r.H0 = cut.H0;

    MaximalSubset h1;
    try {
      h1 = maximal_subset_H1(omega, r.H0, r.target);
    } catch (const SurgeryPreconditionError& e) {
      return fail("H1", e.what());
    }
    r.H1 = h1.H1;
    r.witness = h1.witness;

    // C_v is what closing e severs from the boundary in ω_{H1}.
    BondConfig w1 = close_edges(omega, r.H1);
    std::vector<char> in_m1, in_m2;
    mark_boundary_connected(g, w1.bonds(), in_m1);
    BondConfig w2 = w1;
    w2.set(r.witness, false);
    mark_boundary_connected(g, w2.bonds(), in_m2);
    std::vector<VertexId> c_v;
    for (VertexId x = 0; x < g.vertex_count(); ++x)
      if (in_m1[x] && !in_m2[x]) c_v.push_back(x);
    const Edge& we = g.edge(r.witness);
    r.v = in_m2[we.u] ? we.v : we.u;
    r.c_v_size = c_v.size();
    r.m_cut = r.target - h1.m_after_witness;
    std::vector<EdgeId> e_v;
    for (EdgeId e : induced_edges(c_v, g))
      if (w2.is_open(e)) e_v.push_back(e);
    try {
      r.H2 = exact_cut_H2(c_v, e_v, r.v, r.m_cut, g).H2;
    } catch (const std::invalid_argument& e) {
      return fail("H2", e.what());
    }
    raw_h = r.H1;
    raw_h.insert(raw_h.end(), r.H2.begin(), r.H2.end());
  }
  for (EdgeId e : raw_h)
    if (omega.is_open(e)) r.H.push_back(e);
  std::sort(r.H.begin(), r.H.end());
  r.H.erase(std::unique(r.H.begin(), r.H.end()), r.H.end());

  const BondConfig after = close_edges(omega, r.H);
  const auto da = decompose(after);
  r.m_after = da.boundary_connected.size();
  if (r.m_after != r.target)
    return fail("verify", "|M_n(w_H)| = " + std::to_string(r.m_after) + " != target " + std::to_string(r.target));

  // 𝒞₀: interior clusters of ω_H lying in M_n(ω).
  std::vector<char> c0(da.cluster_count(), 0);
  for (std::uint32_t c : da.interior_clusters) {
    const VertexId rep = da.members(c).front();
    if (d.in_boundary_cluster(rep)) {
      c0[c] = 1;
      r.disconnected.push_back({rep, da.size[c]});
    }
  }
  if (sum % 2 != 0) {
    const auto units = d.by_size.find(1);
    if (units == d.by_size.end() || units->second.empty())
      return fail("parity", "|M_n|+b is odd and there is no interior unit cluster");
    const VertexId rep = d.members(units->second.front()).front();
    c0[da.label[rep]] = 1;
    r.disconnected.push_back({rep, 1});
    r.parity_unit_added = true;
  }
  for (std::uint32_t c : da.interior_clusters)
    if (!c0[c]) r.remaining_interior_sizes.push_back(da.size[c]);
  fill_s_flags(r, da, params);
  r.success = true;
  return r;
}

BondConfig apply_surgery(const BondConfig& omega, const SurgeryResult& result) { return close_edges(omega, result.H); }

std::string to_json(const SurgeryResult& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["b"] = r.b;
  j["success"] = r.success;
  j["failed_stage"] = r.failed_stage;
  j["failure_detail"] = r.failure_detail;
  j["m_before"] = r.m_before;
  j["target"] = r.target;
  j["m_after"] = r.m_after;
  j["j_star"] = r.j_star;
  j["induced_edge_count"] = r.induced_count;
  j["H0"] = r.H0;
  j["H1"] = r.H1;
  j["H2"] = r.H2;
  j["H"] = r.H;
  j["witness_edge"] = r.witness == kNoEdge ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.witness);
  j["v"] = r.v;
  j["c_v_size"] = r.c_v_size;
  j["m_cut"] = r.m_cut;
  auto clusters = nlohmann::ordered_json::array();
  for (const auto& c : r.disconnected) clusters.push_back({{"representative", c.representative}, {"size", c.size}});
  j["disconnected"] = clusters;
  j["parity_unit_added"] = r.parity_unit_added;
  j["cardinalities"] = {{"H0", r.H0.size()}, {"H1", r.H1.size()}, {"H2", r.H2.size()},
                        {"H", r.H.size()},   {"C0", r.disconnected.size()}};
  j["S_n"] = {{"sum_matches", r.s_sum_matches},
              {"max_ok", r.s_max_ok},
              {"units_ok", r.s_units_ok},
              {"count_ok", r.s_count_ok},
              {"holds", r.s_holds()}};
  return j.dump();
}

bool event_G_n(const ClusterDecomposition& d, const EventParams& params) {
  const double na = params.n_pow_a();
  const double cap = params.cluster_cap();
  const double m = static_cast<double>(d.boundary_connected.size());
  const double m_inner = static_cast<double>(d.boundary_connected_in_sub_box(params.n1));
  return m <= params.lambda * na && m_inner >= params.nu * na && static_cast<double>(d.max_interior) <= cap &&
         cap <= static_cast<double>(d.unit_interior_count()) - 1.0;
}

bool event_R_n(const BondConfig& omega, const EventParams& params, SurgeryResult* witness) {
  const auto d = decompose(omega);
  const double cap = params.cluster_cap();
  const bool clusters_ok =
      static_cast<double>(d.max_interior) <= cap && cap <= static_cast<double>(d.unit_interior_count()) - 1.0;
  auto r = surgery(omega, params.b, params);
  const bool ok = clusters_ok && r.success &&
                  static_cast<double>(r.H.size()) <= params.K * std::sqrt(params.n_pow_a());
  if (witness) *witness = std::move(r);
  return ok;
}

bool event_S_n(const ClusterDecomposition& d, std::span<const VertexId> reps, const EventParams& params) {
  std::vector<char> chosen(d.cluster_count(), 0);
  long removed = 0;
  for (VertexId v : reps) {
    if (v >= d.label.size()) throw std::out_of_range("event_S_n: vertex outside the box");
    const auto c = d.label[v];
    if (d.touches_boundary[c]) return false;  // not in 𝒞⁻
    if (chosen[c]) throw std::invalid_argument("event_S_n: two representatives of one cluster");
    chosen[c] = 1;
    removed += d.size[c];
  }
  const double cap = params.cluster_cap();
  std::uint32_t max_rest = 0;
  std::size_t units = 0;
  for (std::uint32_t c : d.interior_clusters) {
    if (chosen[c]) continue;
    max_rest = std::max(max_rest, d.size[c]);
    if (d.size[c] == 1) ++units;
  }
  return static_cast<double>(reps.size()) <= 2.0 * params.K * std::sqrt(params.n_pow_a()) &&
         static_cast<long>(d.boundary_connected.size()) - removed == params.b &&
         static_cast<double>(max_rest) <= cap && cap <= static_cast<double>(units);
}

bool condition_1(const ClusterDecomposition& d, const EventParams& params) {
  const double n2 = static_cast<double>(params.n) * params.n;
  return static_cast<double>(d.boundary_connected.size()) <=
         (1.0 + params.delta) * theta_asymptotic(params.p_n) * n2;
}

bool condition_2(const ClusterDecomposition& d, const EventParams& params) {
  return static_cast<double>(d.max_interior) <= std::pow(static_cast<double>(params.n), params.s + 0.5);
}

bool condition_3(const ClusterDecomposition& d, const EventParams& params) {
  const double n1sq = static_cast<double>(params.n1) * params.n1;
  return static_cast<double>(d.boundary_connected_in_sub_box(params.n1)) >=
         (1.0 - params.delta) * theta_asymptotic(params.p_n) * n1sq;
}

bool event_F_n(const ClusterDecomposition& d, const EventParams& params) {
  return condition_1(d, params) && condition_2(d, params) && condition_3(d, params);
}

SignCompensation sign_compensation_probability(std::span<const std::uint32_t> sizes) {
  std::uint64_t total = 0;
  for (auto s : sizes) {
    if (s == 0) throw std::invalid_argument("sign_compensation_probability: sizes must be positive");
    total += s;
  }
  const std::uint64_t width = 2 * total + 1;
  if (!sizes.empty() && sizes.size() > kCompensationBudget / width)
    throw std::length_error("sign_compensation_probability: k(2S+1) = " + std::to_string(sizes.size() * width) +
                            " exceeds the budget " + std::to_string(kCompensationBudget));
  SignCompensation out;
  if (total % 2 != 0) {  // the signed sum has the parity of Σ sizes
    out.exact = true;
    out.exact_value = 0;
    return out;
  }
  const auto offset = static_cast<std::ptrdiff_t>(total);
  if (total <= kExactRationalLimit) {
    // Count sign vectors per partial sum; the answer is count(0) / 2^k.
    std::vector<mp::cpp_int> count(width, 0), next(width, 0);
    count[offset] = 1;
    for (auto s : sizes) {
      std::fill(next.begin(), next.end(), 0);
      for (std::size_t i = 0; i < width; ++i) {
        if (count[i] == 0) continue;
        next[i + s] += count[i];
        next[i - s] += count[i];
      }
      std::swap(count, next);
    }
    out.exact = true;
    out.exact_value = mp::cpp_rational(count[offset], mp::cpp_int(1) << sizes.size());
    out.probability = out.exact_value.convert_to<double>();
    return out;
  }
  std::vector<double> prob(width, 0.0), next(width, 0.0);
  prob[offset] = 1.0;
  for (auto s : sizes) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < width; ++i) {
      if (prob[i] == 0.0) continue;
      next[i + s] += 0.5 * prob[i];
      next[i - s] += 0.5 * prob[i];
    }
    std::swap(prob, next);
  }
  out.probability = prob[offset];
  return out;
}

double stirling_constant(std::size_t k_max) {
  if (k_max < 1) throw std::invalid_argument("stirling_constant: k_max must be >= 1");
  // c_k = C(2k,k)/4^k via c_k = c_{k-1}(2k-1)/(2k).
  double c = 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= k_max; ++k) {
    c *= (2.0 * static_cast<double>(k) - 1.0) / (2.0 * static_cast<double>(k));
    best = std::min(best, c * std::sqrt(2.0 * static_cast<double>(k)));
  }
  return best;
}

int eta_sign(long x) { return x <= 0 ? 1 : -1; }

namespace {

// P(Σ ε_i = 0) for `count` fair signs: C(count, count/2)/2^count.
double balanced_probability(std::size_t count) {
  if (count % 2 != 0) return 0.0;
  return std::exp(std::lgamma(static_cast<double>(count) + 1.0) -
                  2.0 * std::lgamma(static_cast<double>(count / 2) + 1.0) - static_cast<double>(count) * std::log(2.0));
}

}  // namespace

WalkBoundReport compensation_walk_bound_check(const std::map<std::uint32_t, std::size_t>& groups, std::size_t N,
                                              int n) {
  if (n < 1) throw std::invalid_argument("compensation_walk_bound_check: n must be >= 1");
  const std::size_t n2 = static_cast<std::size_t>(n) * n;
  std::uint64_t total = 0;
  std::size_t clusters = 0;
  for (const auto& [size, count] : groups) {
    if (size < 1 || size > N) throw std::invalid_argument("compensation_walk_bound_check: size outside [1, N]");
    if (count > n2) throw std::invalid_argument("compensation_walk_bound_check: |B_j| exceeds n^2");
    total += static_cast<std::uint64_t>(size) * count;
    clusters += count;
  }
  const std::uint64_t width = 2 * total + 1;
  if (clusters > 0 && clusters > kCompensationBudget / width)
    throw std::length_error("compensation_walk_bound_check: DP budget exceeded");

  WalkBoundReport r;
  r.n = n;
  r.N = N;
  r.k2 = stirling_constant();
  const auto offset = static_cast<std::ptrdiff_t>(total);
  std::vector<double> prob(width, 0.0), next(width, 0.0);
  prob[offset] = 1.0;
  double constructive = 1.0;
  auto within = [&] {
    double p = 0.0;
    for (std::ptrdiff_t s = -static_cast<std::ptrdiff_t>(std::min<std::uint64_t>(N, total));
         s <= static_cast<std::ptrdiff_t>(std::min<std::uint64_t>(N, total)); ++s)
      p += prob[offset + s];
    return p;
  };
  r.exact.push_back(within());
  r.constructive.push_back(1.0);
  r.bound.push_back(1.0);
  r.holds = true;
  const double tol = 1e-12;
  for (std::size_t j = 1; j <= N; ++j) {
    const auto it = groups.find(static_cast<std::uint32_t>(j));
    const std::size_t bj = it == groups.end() ? 0 : it->second;
    for (std::size_t c = 0; c < bj; ++c) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t i = 0; i < width; ++i) {
        if (prob[i] == 0.0) continue;
        next[i + j] += 0.5 * prob[i];
        next[i - j] += 0.5 * prob[i];
      }
      std::swap(prob, next);
    }
    if (bj > 0) constructive *= bj % 2 == 0 ? balanced_probability(bj) : 0.5 * balanced_probability(bj - 1);
    r.exact.push_back(within());
    r.constructive.push_back(constructive);
    r.bound.push_back(std::pow(r.k2 / (2.0 * n), static_cast<double>(j)));
    if (r.exact.back() < r.constructive.back() * (1.0 - tol) || r.constructive.back() < r.bound.back() * (1.0 - tol))
      r.holds = false;
  }
  return r;
}

ParityCheck compensation_parity_check(std::span<const std::uint32_t> remaining_sizes, std::size_t N) {
  ParityCheck p;
  p.N = N;
  long sum = 0;
  for (auto s : remaining_sizes) {
    if (s == 1) ++p.units_available;
    sum += s;
  }
  p.units_ok = p.units_available >= N;
  p.s_n_residual = sum - static_cast<long>(std::min(N, p.units_available));
  p.holds = p.units_ok && (static_cast<long>(N) - p.s_n_residual) % 2 == 0;
  return p;
}

}  // namespace socising
