#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "socising/ising.hpp"
#include "socising/lattice.hpp"
#include "socising/rng.hpp"

namespace socising {

using BigInt = boost::multiprecision::cpp_int;
using BigReal = boost::multiprecision::cpp_bin_float_100;

/// Feedback exponent a and the quantities derived from it.
struct FeedbackParams {
  double a = 1.99;

  bool in_theorem_range() const { return a > 81.0 / 41.0 && a < 2.0; }
  bool in_conditional_range() const { return a > 31.0 / 16.0 && a < 2.0; }
  double rho() const;
  /// s = 16 - 8a.
  double fss_exponent() const { return 16.0 - 8.0 * a; }
};

/// Exact μ_n on a small box: μ_n(σ) ∝ μ⁺_{n,T_n(σ)}(σ).
struct MuNDistribution {
  PlusConfigTable table;
  double a = 0.0;
  std::vector<double> temperature;  // T_n per mask
  std::vector<double> probability;  // μ_n per mask
  double z_direct = 0.0;            // Σ_σ μ⁺_{n,T_n(σ)}(σ)
  double z_via_b = 0.0;             // Σ_b μ⁺_{n,b²/n^{2a}}(m = b)
  std::map<long, double> b_terms;   // b ↦ μ⁺_{n,b²/n^{2a}}(m = b)

  double probability_of(const SpinConfig& sigma) const;
};

inline constexpr int kMaxMuNSide = 4;

/// Rejects n > kMaxMuNSide.
MuNDistribution exact_mu_n(GeometryPtr geometry, double a);

/// One side of the deviation inequality: lhs = μ_n(T_n on the far side of
/// T_c ± ε), rhs = (n²+1)/Z_n · sup_T μ⁺_{n,T}(|m| beyond n^a √(T_c ± ε)).
struct DeviationSide {
  double lhs = 0.0;
  double rhs = 0.0;
  double sup_value = 0.0;
  double argmax_temperature = 0.0;
  bool empty_range = false;  // no admissible T (e.g. T_c - ε < 0)
  bool holds() const { return lhs <= rhs; }
};

struct DeviationReport {
  int n = 0;
  double a = 0.0;
  double epsilon = 0.0;
  double z_n = 0.0;
  DeviationSide supercritical;  // T_n >= T_c + ε
  DeviationSide subcritical;    // T_n <= T_c - ε
  bool holds() const { return supercritical.holds() && subcritical.holds(); }
};

/// Grid used for the sup over T, on top of every T = b²/n^{2a} in range:
/// (T_c+ε)·2^{k/8} for k < kDeviationGrid above, (T_c-ε)·k/(kDeviationGrid-1) below.
inline constexpr int kDeviationGrid = 65;

DeviationReport deviation_bound_check(GeometryPtr geometry, double a, double epsilon);

enum class RefreshRule { instantaneous, block_average };

/// Substitute temperature when a refresh yields T = 0.
inline constexpr double kTemperatureFloor = 1e-6;

struct SocRecord {
  std::size_t step = 0;  // sweeps completed
  double temperature = 0.0;
  long magnetization = 0;
  std::size_t flips = 0;  // spins changed since the previous record
  bool floor_used = false;
};

struct SocTrajectory {
  std::string variant;
  std::size_t tau = 1;
  std::size_t burn_in = 0;
  std::vector<SocRecord> records;
};

using SweepHook = std::function<void(std::size_t sweep, const SpinConfig& sigma, double temperature)>;

struct TwoTimescaleOptions {
  std::size_t tau = 32;
  std::size_t total = 1000;
  std::size_t burn_in = 0;
  RefreshRule refresh = RefreshRule::instantaneous;
  SweepHook on_sweep;  // called after every sweep
};

/// From all-plus at T = T_n(σ): τ heat-bath sweeps at fixed T, then
/// T ← m²/n^{2a} (or the block mean of m² / n^{2a}), recorded at each refresh.
/// The first record is the initial state at step 0.
SocTrajectory two_timescale_dynamics(GeometryPtr geometry, double a, const TwoTimescaleOptions& options,
                                     RngStream& rng);

/// Random-site Metropolis chain for μ′_n(σ) ∝ exp(-H(σ)/T_n(σ)), m = 0
/// having weight 0. With account_for_T_change = false the move uses ΔH/T_n
/// at the current state instead. One record per sweep of |interior| moves.
SocTrajectory naive_mu_prime_dynamics(GeometryPtr geometry, double a, std::size_t total_sweeps,
                                      bool account_for_T_change, RngStream& rng, const SweepHook& on_sweep = {});

/// min(1, e^{-ΔE}).
double metropolis_acceptance(double delta_energy);

/// Exact μ′_n per PlusConfigTable mask (m = 0 has probability 0).
std::vector<double> exact_mu_prime_n(const PlusConfigTable& table, double a);

struct TrajectorySummary {
  std::size_t count = 0;  // records with step > burn_in
  double mean_temperature = 0.0;
  double std_temperature = 0.0;
  double mean_magnetization = 0.0;
  std::size_t floor_count = 0;
};

TrajectorySummary summarize(const SocTrajectory& trajectory);

/// b'_n, b_n, p_n = φ_n(b_n), T★ = b_n²/n^{2a} in high precision.
struct FixedPoint {
  BigInt n;
  double a = 0.0;
  BigReal b_prime;
  BigInt b_n;
  BigReal p_n;
  BigReal t_star;
};

/// Throws std::domain_error when the log argument is outside (0, 1), which
/// happens for every n below roughly 10^38 at a = 1.99.
FixedPoint fixed_point(const BigInt& n, double a);

/// [8(p/p_c - 1)]^{1/8} for q = 2; rejects p < p_c.
double theta_asymptotic(double p);
BigReal theta_asymptotic(const BigReal& p);

/// [min(p, 1-p) / (3p n²)]^N.
double edge_closing_price(int n, double p, std::size_t count);

}  // namespace socising
