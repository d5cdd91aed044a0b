#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socising/lattice.hpp"
#include "socising/rng.hpp"

namespace socising {

enum class BoundaryCondition : int { free = 0, wired = 1 };

/// Random-cluster parameters: p ∈ [0,1], q >= 1, ξ ∈ {free, wired}.
struct FKParams {
  double p = 0.5;
  double q = 2.0;
  BoundaryCondition bc = BoundaryCondition::wired;

  void validate() const;
};

/// Open/closed assignment ω on the edges of Λ(n), in edge order.
class BondConfig {
 public:
  /// All-closed configuration.
  explicit BondConfig(GeometryPtr geometry);
  static BondConfig all_open(GeometryPtr geometry);
  /// Bit e of mask is ω(e); only for boxes with at most 64 edges.
  static BondConfig from_mask(GeometryPtr geometry, std::uint64_t mask);

  const BoxGeometry& geometry() const { return *geometry_; }
  const GeometryPtr& geometry_ptr() const { return geometry_; }

  bool is_open(EdgeId e) const { return bonds_[e] != 0; }
  void set(EdgeId e, bool open) { bonds_[e] = open ? 1 : 0; }
  std::span<const std::uint8_t> bonds() const { return bonds_; }
  std::size_t open_count() const;
  std::uint64_t mask() const;

  /// ω1 <= ω2 edgewise.
  bool dominated_by(const BondConfig& other) const;

  friend bool operator==(const BondConfig& a, const BondConfig& b) { return a.bonds_ == b.bonds_; }

 private:
  GeometryPtr geometry_;
  std::vector<std::uint8_t> bonds_;
};

/// Disjoint-set forest with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t count);
  std::uint32_t find(std::uint32_t x);
  bool unite(std::uint32_t a, std::uint32_t b);
  std::uint32_t set_size(std::uint32_t x) { return size_[find(x)]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

/// Open clusters of ω and the observables built on them.
///
/// Cluster ids are assigned in order of each cluster's smallest vertex.
struct ClusterDecomposition {
  GeometryPtr geometry;
  std::vector<std::uint32_t> label;            // cluster id per vertex
  std::vector<std::uint32_t> size;             // per cluster
  std::vector<char> touches_boundary;          // per cluster
  std::vector<VertexId> boundary_connected;    // M_n, sorted
  std::vector<std::uint32_t> interior_clusters;  // C_n^-, ids ascending
  std::map<std::uint32_t, std::vector<std::uint32_t>> by_size;  // k ↦ C_n^-(k)
  std::size_t k0 = 0;
  std::size_t k1 = 0;
  std::uint64_t sum_sq_interior = 0;
  std::uint32_t max_interior = 0;
  std::size_t unit_count_halfgrid = 0;  // U_n

  std::size_t cluster_count() const { return size.size(); }
  std::uint32_t cluster_size_at(VertexId v) const { return size[label[v]]; }
  bool connected(VertexId a, VertexId b) const { return label[a] == label[b]; }
  bool in_boundary_cluster(VertexId v) const { return touches_boundary[label[v]] != 0; }
  std::size_t unit_interior_count() const;
  std::vector<VertexId> members(std::uint32_t cluster) const;
  /// |M_n ∩ Λ(j)|.
  std::size_t boundary_connected_in_sub_box(int j) const;
};

ClusterDecomposition decompose(const BondConfig& omega);

/// ω_H: ω with every edge of H closed. Rejects ids outside the box.
BondConfig close_edges(const BondConfig& omega, std::span<const EdgeId> edges);

/// k^ξ(ω): k0 for free, k1 for wired.
std::size_t cluster_count(const ClusterDecomposition& d, BoundaryCondition bc);

/// Unnormalized q^{k^ξ} p^{|ω|} (1-p)^{|E|-|ω|}.
double fk_weight(const BondConfig& omega, const FKParams& params);

inline constexpr std::size_t kMaxEnumerationEdges = 24;

/// Exact φ^ξ_{n,p,q} over all 2^{|E_n|} configurations (mask = bit per edge).
struct FKDistribution {
  GeometryPtr geometry;
  FKParams params;
  std::vector<double> probability;
  double partition = 0.0;

  BondConfig config(std::uint64_t mask) const { return BondConfig::from_mask(geometry, mask); }
  std::vector<double> edge_marginals() const;
};

/// Rejects |E_n| > kMaxEnumerationEdges. Weights are computed by the
/// parallel enumeration kernel; see parallel.hpp for the serial reference.
FKDistribution exact_fk_distribution(GeometryPtr geometry, const FKParams& params);

/// One Swendsen–Wang update for q = 2. With wired boundary every
/// boundary-touching cluster is one cluster with spin +.
void swendsen_wang_step(BondConfig& omega, const FKParams& params, RngStream& rng);

/// Whether the endpoints of e are joined without using e (with wired
/// boundary, two boundary-connected vertices count as joined).
bool endpoints_connected_without(const BondConfig& omega, EdgeId e, BoundaryCondition bc);

/// Conditional probability that e is open given the rest of ω.
double single_bond_open_probability(const BondConfig& omega, EdgeId e, const FKParams& params);

/// One pass over the edges in edge order, each redrawn from its conditional.
void single_bond_heat_bath_sweep(BondConfig& omega, const FKParams& params, RngStream& rng);

/// Empirical tail of |C(v)| and a least-squares decay rate.
struct TailStatistics {
  static constexpr std::size_t kMinHits = 50;
  static constexpr std::size_t kBootstrapResamples = 400;
  static constexpr std::size_t kMinSamples = 100;

  std::size_t samples = 0;
  std::vector<double> tail;  // tail[k-1] = P(|C(v)| >= k), k = 1..n²
  std::size_t fit_k_max = 0;  // fit window is k = 1..fit_k_max
  double psi = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool degenerate = false;
  std::string note;
};

TailStatistics tail_statistics(std::span<const ClusterDecomposition> samples, VertexId v,
                               std::uint64_t bootstrap_seed = 0);
/// Same, from the cluster sizes |C(v)| observed in each sample.
TailStatistics tail_statistics_from_sizes(std::span<const std::uint32_t> sizes, std::size_t max_k,
                                          std::uint64_t bootstrap_seed = 0);

/// D_n(A,b,c) = {Σ_{C ∈ C_n : |C| >= n^b} |C| >= A n^c}.
bool event_D_n(const ClusterDecomposition& d, double A, double b, double c);

/// Q_N: |C(v_i)| >= k_i for all i and the v_i in pairwise distinct clusters.
bool event_Q_N(const ClusterDecomposition& d, std::span<const VertexId> vertices,
               std::span<const std::uint32_t> thresholds);

/// ∂^ext C: edges of ∂^e C reaching the infinite component of Z^2 \ C.
/// C must be a cluster not touching ∂Λ(n).
std::vector<EdgeId> external_cluster_boundary(std::span<const VertexId> cluster, const BoxGeometry& g);

}  // namespace socising
