#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "socising/lattice.hpp"
#include "socising/rng.hpp"

namespace socising {

/// ±1 spins on Λ(n) with an incrementally maintained magnetization.
class SpinConfig {
 public:
  /// All-plus configuration.
  explicit SpinConfig(GeometryPtr geometry);
  static SpinConfig from_spins(GeometryPtr geometry, std::vector<std::int8_t> spins);

  const BoxGeometry& geometry() const { return *geometry_; }
  const GeometryPtr& geometry_ptr() const { return geometry_; }

  int spin(VertexId v) const { return spins_[v]; }
  void set(VertexId v, int value);
  void flip(VertexId v) {
    spins_[v] = static_cast<std::int8_t>(-spins_[v]);
    magnetization_ += 2 * spins_[v];
  }
  std::span<const std::int8_t> spins() const { return spins_; }

  /// m(σ) = Σ_x σ(x).
  long magnetization() const { return magnetization_; }
  bool plus_on_boundary() const;

  friend bool operator==(const SpinConfig& a, const SpinConfig& b) { return a.spins_ == b.spins_; }

 private:
  GeometryPtr geometry_;
  std::vector<std::int8_t> spins_;
  long magnetization_;
};

/// Extended-real energy: either a finite integer or +∞.
class Energy {
 public:
  static Energy finite(long value) { return Energy(value, false); }
  static Energy infinity() { return Energy(0, true); }
  bool is_infinite() const { return infinite_; }
  long value() const;
  friend bool operator==(const Energy&, const Energy&) = default;

 private:
  Energy(long v, bool inf) : value_(v), infinite_(inf) {}
  long value_;
  bool infinite_;
};

/// Temperature T >= 0 with + boundary condition. Positive temperatures are
/// carried as β = 1/T; T = 0 is the point mass on all-plus.
class IsingParams {
 public:
  explicit IsingParams(double temperature);
  double temperature() const { return temperature_; }
  bool zero_temperature() const { return temperature_ == 0.0; }
  double beta() const;

 private:
  double temperature_;
  double beta_;
};

/// H_n^+(σ): -Σ_{edges} σ(x)σ(y) if σ ≡ + on ∂Λ(n), +∞ otherwise.
Energy hamiltonian(const SpinConfig& sigma);

/// T_n(σ) = m(σ)² / n^{2a}.
double feedback_temperature(const SpinConfig& sigma, double a);
double feedback_temperature(long magnetization, int n, double a);

/// One lexicographic pass over the interior vertices, each spin redrawn from
/// its conditional law at temperature T. Returns the number of spins changed.
/// Rejects T = 0.
std::size_t heat_bath_sweep(SpinConfig& sigma, const IsingParams& params, RngStream& rng);

/// P(σ_x = + | neighbour sum h) at inverse temperature β.
double heat_bath_plus_probability(int neighbour_sum, double beta);

SpinConfig zero_temperature_config(GeometryPtr geometry);

/// Every + boundary configuration of a small box, keyed by a mask over the
/// interior vertices (bit i set ⇔ interior_vertices()[i] is -).
struct PlusConfigTable {
  GeometryPtr geometry;
  std::vector<VertexId> free_sites;
  std::vector<int> energy;         // H_n^+ per mask
  std::vector<long> magnetization;  // m per mask

  std::size_t size() const { return energy.size(); }
  SpinConfig config(std::uint64_t mask) const;
  /// Mask of σ, or nullopt if σ violates the + boundary.
  std::optional<std::uint64_t> mask_of(const SpinConfig& sigma) const;
};

inline constexpr int kMaxEnumerationSide = 5;

/// Rejects n > kMaxEnumerationSide.
PlusConfigTable enumerate_plus_configs(GeometryPtr geometry);

/// Exact μ⁺_{n,T} on a small box.
struct IsingDistribution {
  PlusConfigTable table;
  double temperature = 0.0;
  std::vector<double> probability;  // per mask
  /// ln Z⁺_{n,T}; absent at T = 0 where the measure is defined directly.
  std::optional<double> log_partition;
  std::map<long, double> magnetization_law;  // b ↦ μ⁺(m = b)

  double probability_of(const SpinConfig& sigma) const;
};

IsingDistribution exact_ising_distribution(GeometryPtr geometry, const IsingParams& params);
IsingDistribution exact_ising_distribution(const PlusConfigTable& table, const IsingParams& params);

}  // namespace socising
