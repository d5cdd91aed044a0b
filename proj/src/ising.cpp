#include "socising/ising.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace socising {

SpinConfig::SpinConfig(GeometryPtr geometry)
    : geometry_(std::move(geometry)),
      spins_(geometry_->vertex_count(), 1),
      magnetization_(static_cast<long>(geometry_->vertex_count())) {}

SpinConfig SpinConfig::from_spins(GeometryPtr geometry, std::vector<std::int8_t> spins) {
  if (spins.size() != geometry->vertex_count())
    throw std::invalid_argument("SpinConfig: spin array length does not match the box");
  SpinConfig out(std::move(geometry));
  long m = 0;
  for (auto s : spins) {
    if (s != 1 && s != -1) throw std::invalid_argument("SpinConfig: spins must be +1 or -1");
    m += s;
  }
  out.spins_ = std::move(spins);
  out.magnetization_ = m;
  return out;
}

void SpinConfig::set(VertexId v, int value) {
  if (value != 1 && value != -1) throw std::invalid_argument("SpinConfig::set: spin must be +1 or -1");
  if (spins_[v] != value) flip(v);
}

bool SpinConfig::plus_on_boundary() const {
  for (VertexId v : geometry_->boundary())
    if (spins_[v] != 1) return false;
  return true;
}

long Energy::value() const {
  if (infinite_) throw std::logic_error("Energy::value on +infinity");
  return value_;
}

IsingParams::IsingParams(double temperature) : temperature_(temperature) {
  if (!(temperature >= 0.0) || std::isinf(temperature))
    throw std::invalid_argument("IsingParams: temperature must be finite and >= 0");
  beta_ = temperature > 0.0 ? 1.0 / temperature : std::numeric_limits<double>::infinity();
}

double IsingParams::beta() const {
  if (zero_temperature()) throw std::logic_error("IsingParams::beta at T = 0");
  return beta_;
}

Energy hamiltonian(const SpinConfig& sigma) {
  if (!sigma.plus_on_boundary()) return Energy::infinity();
  const auto& g = sigma.geometry();
  long h = 0;
  for (const Edge& e : g.edges()) h -= sigma.spin(e.u) * sigma.spin(e.v);
  return Energy::finite(h);
}

double feedback_temperature(long magnetization, int n, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("feedback_temperature: a must be > 0");
  const double m = static_cast<double>(magnetization);
  return m * m / std::pow(static_cast<double>(n), 2.0 * a);
}

double feedback_temperature(const SpinConfig& sigma, double a) {
  return feedback_temperature(sigma.magnetization(), sigma.geometry().side(), a);
}

double heat_bath_plus_probability(int neighbour_sum, double beta) {
  return 1.0 / (1.0 + std::exp(-2.0 * beta * neighbour_sum));
}

std::size_t heat_bath_sweep(SpinConfig& sigma, const IsingParams& params, RngStream& rng) {
  if (params.zero_temperature())
    throw std::invalid_argument("heat_bath_sweep: T = 0 has no dynamics, use zero_temperature_config");
  const double beta = params.beta();
  std::array<double, 5> plus_prob{};  // indexed by (h + 4) / 2
  for (int k = 0; k < 5; ++k) plus_prob[k] = heat_bath_plus_probability(2 * k - 4, beta);

  const auto& g = sigma.geometry();
  std::size_t changed = 0;
  for (VertexId v : g.interior_vertices()) {
    int h = 0;
    for (Direction d : kDirections) h += sigma.spin(g.other_end(g.incident(v, d), v));
    const int next = rng.uniform() < plus_prob[(h + 4) / 2] ? 1 : -1;
    if (next != sigma.spin(v)) {
      sigma.flip(v);
      ++changed;
    }
  }
  return changed;
}

SpinConfig zero_temperature_config(GeometryPtr geometry) { return SpinConfig(std::move(geometry)); }

SpinConfig PlusConfigTable::config(std::uint64_t mask) const {
  SpinConfig s(geometry);
  for (std::size_t i = 0; i < free_sites.size(); ++i)
    if (mask >> i & 1u) s.set(free_sites[i], -1);
  return s;
}

std::optional<std::uint64_t> PlusConfigTable::mask_of(const SpinConfig& sigma) const {
  if (!sigma.plus_on_boundary()) return std::nullopt;
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < free_sites.size(); ++i)
    if (sigma.spin(free_sites[i]) == -1) mask |= std::uint64_t{1} << i;
  return mask;
}

PlusConfigTable enumerate_plus_configs(GeometryPtr geometry) {
  if (geometry->side() > kMaxEnumerationSide)
    throw std::invalid_argument("exact enumeration: box side " + std::to_string(geometry->side()) +
                                " exceeds " + std::to_string(kMaxEnumerationSide));
  PlusConfigTable t;
  t.geometry = geometry;
  const auto interior = geometry->interior_vertices();
  t.free_sites.assign(interior.begin(), interior.end());
  const std::size_t count = std::size_t{1} << t.free_sites.size();
  t.energy.resize(count);
  t.magnetization.resize(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const SpinConfig s = t.config(mask);
    t.energy[mask] = static_cast<int>(hamiltonian(s).value());
    t.magnetization[mask] = s.magnetization();
  }
  return t;
}

double IsingDistribution::probability_of(const SpinConfig& sigma) const {
  const auto mask = table.mask_of(sigma);
  return mask ? probability[*mask] : 0.0;
}

IsingDistribution exact_ising_distribution(const PlusConfigTable& table, const IsingParams& params) {
  IsingDistribution d;
  d.table = table;
  d.temperature = params.temperature();
  d.probability.assign(table.size(), 0.0);
  if (params.zero_temperature()) {
    d.probability[0] = 1.0;  // mask 0 is all-plus
  } else {
    const double beta = params.beta();
    int h_min = table.energy[0];
    for (int h : table.energy) h_min = std::min(h_min, h);
    double total = 0.0;
    for (std::size_t i = 0; i < table.size(); ++i) {
      d.probability[i] = std::exp(-beta * (table.energy[i] - h_min));
      total += d.probability[i];
    }
    for (double& p : d.probability) p /= total;
    d.log_partition = -beta * h_min + std::log(total);
  }
  for (std::size_t i = 0; i < table.size(); ++i) d.magnetization_law[table.magnetization[i]] += d.probability[i];
  return d;
}

IsingDistribution exact_ising_distribution(GeometryPtr geometry, const IsingParams& params) {
  return exact_ising_distribution(enumerate_plus_configs(std::move(geometry)), params);
}

}  // namespace socising
