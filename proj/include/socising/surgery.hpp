#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "socising/fk.hpp"
#include "socising/lattice.hpp"

namespace socising {

/// Parameters of the events G_n, R_n, S_n, F_n for one box size.
struct EventParams {
  int n = 0;
  double a = 1.99;
  double s = 0.0;       // 16 - 8a
  int n1 = 0;           // ⌊5n/6⌋
  double lambda = 4.0;  // |M_n| <= λ n^a
  double mu = 3.0;
  double nu = 2.0;      // |M_n ∩ Λ(n1)| >= ν n^a
  double delta = 0.1;
  std::size_t N = 0;    // ⌊n^{33/2-8a}⌋
  double K = 1.0;       // surgery budget |H| <= K n^{a/2}
  long b = 0;
  double p_n = 0.5;

  /// n^{33/2-8a}, the interior cluster size cap.
  double cluster_cap() const;
  double n_pow_a() const;
};

EventParams make_event_params(int n, double a, double K, double delta, long b, double p_n);

/// ⌊5n/6⌋.
int inner_side(int n);
/// L_n = ⌊(n-2)/2⌋ - ⌈n1/2⌉ + 1.
int annulus_count(int n);

/// 𝔼(V): edges with both endpoints in V, open or not.
std::vector<EdgeId> induced_edges(std::span<const VertexId> vertices, const BoxGeometry& g);

/// |M_n(ω)| without building a full decomposition.
std::size_t boundary_connected_count(const BoxGeometry& g, std::span<const std::uint8_t> bonds);

struct AnnulusCut {
  int j_star = 0;                // the annulus is E_{2 j_star}
  std::vector<EdgeId> H0;        // E_{2j} ∩ 𝔼(M_n(ω))
  std::size_t induced_count = 0; // |𝔼(M_n(ω))|
  int L_n = 0;
};

/// Rejects n < 12. Ties go to the smallest j.
AnnulusCut annulus_cut_H0(const BondConfig& omega, const ClusterDecomposition& d);
AnnulusCut annulus_cut_H0(const BondConfig& omega);

class SurgeryPreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MaximalSubset {
  std::vector<EdgeId> H1;
  EdgeId witness = kNoEdge;         // e ∈ H0 \ H1 with |M_n(ω_{H1 ∪ e})| < target
  std::size_t m_after_h1 = 0;       // |M_n(ω_{H1})|
  std::size_t m_after_witness = 0;  // |M_n(ω_{H1 ∪ e})|
};

/// Greedy over H0 in edge order. Throws SurgeryPreconditionError unless
/// |M_n(ω_{H0})| < target <= |M_n(ω)|.
MaximalSubset maximal_subset_H1(const BondConfig& omega, std::span<const EdgeId> H0, std::size_t target);

struct ExactCut {
  std::vector<EdgeId> H2;
  std::vector<VertexId> kept;  // component of v after the cut, in BFS order
};

/// Keeps the first m vertices of a breadth-first search from v in (C, E)
/// and cuts every edge of E leaving them. Rejects m outside [1, |C|],
/// v ∉ C, edges not inside C and disconnected (C, E).
ExactCut exact_cut_H2(std::span<const VertexId> C, std::span<const EdgeId> E, VertexId v, std::size_t m,
                      const BoxGeometry& g);

/// One cluster of 𝒞₀, by its smallest vertex and size.
struct ClusterRef {
  VertexId representative = 0;
  std::uint32_t size = 0;
};

struct SurgeryResult {
  int n = 0;
  long b = 0;
  std::size_t m_before = 0;  // |M_n(ω)|
  std::size_t target = 0;    // ⌈(|M_n(ω)| + b)/2⌉
  int j_star = 0;
  std::size_t induced_count = 0;
  std::vector<EdgeId> H0, H1, H2;
  std::vector<EdgeId> H;  // (H1 ∪ H2) minus edges already closed in ω
  EdgeId witness = kNoEdge;
  VertexId v = 0;
  std::size_t c_v_size = 0;
  std::size_t m_cut = 0;  // the m handed to exact_cut_H2
  std::size_t m_after = 0;  // |M_n(ω_H)|
  std::vector<ClusterRef> disconnected;  // 𝒞₀, including the parity unit cluster
  bool parity_unit_added = false;
  std::vector<std::uint32_t> remaining_interior_sizes;  // 𝒞_n⁻(ω_H) \ 𝒞₀
  bool success = false;
  std::string failed_stage;  // empty on success
  std::string failure_detail;

  // S_n clauses on ω_H with the witness 𝒞₀.
  bool s_sum_matches = false;       // |M_n| - Σ_{𝒞₀}|C| = b
  bool s_max_ok = false;            // max over 𝒞⁻ \ 𝒞₀ <= n^{33/2-8a}
  bool s_units_ok = false;          // n^{33/2-8a} <= |𝒞⁻(1) \ 𝒞₀|
  bool s_count_ok = false;          // |𝒞₀| <= 2K n^{a/2}
  bool s_holds() const { return s_sum_matches && s_max_ok && s_units_ok && s_count_ok; }
};

/// annulus_cut_H0 → maximal_subset_H1 → exact_cut_H2, then 𝒞₀ and the
/// parity unit cluster. Never throws on a failing stage; the stage is named
/// in the result instead.
SurgeryResult surgery(const BondConfig& omega, long b, const EventParams& params);

/// Applies the result's H to ω.
BondConfig apply_surgery(const BondConfig& omega, const SurgeryResult& result);

std::string to_json(const SurgeryResult& result);

/// G_n: |M_n| <= λn^a, |M_n ∩ Λ(n1)| >= νn^a, max interior <= n^{33/2-8a} <= |𝒞⁻(1)| - 1.
bool event_G_n(const ClusterDecomposition& d, const EventParams& params);
/// R_n certified by the surgery witness; the witness is stored if requested.
bool event_R_n(const BondConfig& omega, const EventParams& params, SurgeryResult* witness = nullptr);
/// S_n on ω_H given a candidate 𝒞₀ (cluster representatives).
bool event_S_n(const ClusterDecomposition& d_after, std::span<const VertexId> c0_representatives,
               const EventParams& params);
/// |M_n| <= (1+δ)θ(p_n)n², with θ replaced by theta_asymptotic.
bool condition_1(const ClusterDecomposition& d, const EventParams& params);
/// max interior cluster <= n^{s+1/2}.
bool condition_2(const ClusterDecomposition& d, const EventParams& params);
/// |M_n ∩ Λ(n1)| >= (1-δ)θ(p_n)n1².
bool condition_3(const ClusterDecomposition& d, const EventParams& params);
bool event_F_n(const ClusterDecomposition& d, const EventParams& params);

inline constexpr std::size_t kCompensationBudget = 1'000'000;  // k · (2Σ+1)
inline constexpr std::uint64_t kExactRationalLimit = 64;       // Σ sizes

struct SignCompensation {
  double probability = 0.0;
  bool exact = false;
  boost::multiprecision::cpp_rational exact_value;  // set when exact
};

/// P(Σ |C_i| ε_i = 0) for independent fair signs, by a DP over partial sums.
/// Throws std::length_error beyond kCompensationBudget.
SignCompensation sign_compensation_probability(std::span<const std::uint32_t> sizes);

/// min over 1 <= k <= k_max of C(2k,k) 4^{-k} √(2k).
double stirling_constant(std::size_t k_max = 1'000'000);

/// η(x): +1 if x <= 0, -1 otherwise.
int eta_sign(long x);

struct WalkBoundReport {
  int n = 0;
  std::size_t N = 0;
  double k2 = 0.0;
  std::vector<double> exact;         // P(|S_j| <= N), j = 0..N
  std::vector<double> constructive;  // product of the per-size factors
  std::vector<double> bound;         // (K₂/(2n))^j
  bool holds = false;
};

/// groups maps a cluster size j in [1, N] to |B_j| (at most n²).
WalkBoundReport compensation_walk_bound_check(const std::map<std::uint32_t, std::size_t>& groups, std::size_t N,
                                              int n);

struct ParityCheck {
  std::size_t N = 0;
  std::size_t units_available = 0;
  long s_n_residual = 0;  // Σ over 𝒞⁻ \ (𝒞₀ ∪ 𝒞₁) of |C|, the parity of S_N
  bool units_ok = false;
  bool holds = false;     // N - S_N even
};

/// Sets aside N unit clusters from the remaining interior clusters and
/// checks that N - S_N is even.
ParityCheck compensation_parity_check(std::span<const std::uint32_t> remaining_sizes, std::size_t N);

}  // namespace socising
