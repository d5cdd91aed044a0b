#include "socising/coupling.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace socising {

double critical_p(double q) {
  if (!(q > 0.0)) throw std::invalid_argument("critical_p: q must be positive");
  const double r = std::sqrt(q);
  return r / (1.0 + r);
}

double critical_temperature() { return 2.0 / std::log(1.0 + std::sqrt(2.0)); }

double t_to_p(double temperature) {
  if (!(temperature >= 0.0)) throw std::invalid_argument("t_to_p: temperature must be >= 0");
  if (temperature == 0.0) return 1.0;
  return -std::expm1(-2.0 / temperature);
}

double p_to_t(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p_to_t: p must lie in (0, 1]");
  if (p == 1.0) return 0.0;
  return -2.0 / std::log1p(-p);
}

double phi_n(long b, int n, double a) {
  if (n < 1) throw std::invalid_argument("phi_n: n must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("phi_n: a must be > 0");
  const long n2 = static_cast<long>(n) * n;
  if (std::labs(b) > n2)
    throw std::invalid_argument("phi_n: |b| = " + std::to_string(std::labs(b)) + " exceeds n^2 = " + std::to_string(n2));
  if (b == 0) return 1.0;
  return t_to_p(feedback_temperature(b, n, a));
}

double dual_parameter(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dual_parameter: p must lie in [0, 1]");
  if (!(q >= 1.0)) throw std::invalid_argument("dual_parameter: q must be >= 1");
  return q * (1.0 - p) / (p + q * (1.0 - p));
}

SpinConfig es_fk_to_ising(const BondConfig& omega, RngStream& rng) {
  const auto d = decompose(omega);
  std::vector<std::int8_t> cluster_spin(d.cluster_count(), 1);
  for (std::uint32_t c : d.interior_clusters) cluster_spin[c] = rng.bernoulli(0.5) ? 1 : -1;
  std::vector<std::int8_t> spins(d.label.size());
  for (std::size_t v = 0; v < spins.size(); ++v) spins[v] = cluster_spin[d.label[v]];
  return SpinConfig::from_spins(omega.geometry_ptr(), std::move(spins));
}

BondConfig es_ising_to_fk(const SpinConfig& sigma, double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("es_ising_to_fk: p must lie in [0, 1]");
  if (!sigma.plus_on_boundary()) throw std::invalid_argument("es_ising_to_fk: sigma violates the + boundary");
  BondConfig omega(sigma.geometry_ptr());
  const auto& g = sigma.geometry();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    if (sigma.spin(ed.u) == sigma.spin(ed.v)) omega.set(e, rng.bernoulli(p));
  }
  return omega;
}

BondConfig dual_config(const BondConfig& omega, const DualGeometry& dual) {
  if (dual.primal()->side() != omega.geometry().side())
    throw std::invalid_argument("dual_config: dual geometry built for a different box");
  BondConfig out(dual.dual_box());
  for (EdgeId d = 0; d < out.geometry().edge_count(); ++d) out.set(d, !omega.is_open(dual.primal_edge(d)));
  return out;
}

BondConfig dual_config(const BondConfig& omega) {
  if (omega.geometry().side() < 2) throw std::invalid_argument("dual_config: box side must be >= 2");
  return dual_config(omega, DualGeometry(omega.geometry_ptr()));
}

namespace {

// Position of each vertex among interior_vertices(), or -1 on the boundary.
std::vector<int> free_site_index(const BoxGeometry& g) {
  std::vector<int> index(g.vertex_count(), -1);
  const auto interior = g.interior_vertices();
  for (std::size_t i = 0; i < interior.size(); ++i) index[interior[i]] = static_cast<int>(i);
  return index;
}

// Adds weight × (law of the colouring of ω) into out.
void add_colouring_law(const BondConfig& omega, const std::vector<int>& site_index, double weight,
                       std::vector<double>& out) {
  const auto d = decompose(omega);
  const std::size_t k = d.interior_clusters.size();
  if (k > 30) throw std::invalid_argument("exact colouring: too many interior clusters");
  std::vector<std::uint64_t> cluster_mask(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (VertexId v : d.members(d.interior_clusters[i])) cluster_mask[i] |= std::uint64_t{1} << site_index[v];
  const double share = weight / static_cast<double>(std::uint64_t{1} << k);
  for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << k); ++signs) {
    std::uint64_t mask = 0;  // bit set ⇔ minus
    for (std::size_t i = 0; i < k; ++i)
      if (signs >> i & 1u) mask |= cluster_mask[i];
    out[mask] += share;
  }
}

}  // namespace

std::vector<double> es_pushforward(const FKDistribution& fk) {
  if (fk.params.bc != BoundaryCondition::wired)
    throw std::invalid_argument("es_pushforward: the coupling needs wired boundary");
  const auto& g = *fk.geometry;
  const auto site_index = free_site_index(g);
  std::vector<double> out(std::size_t{1} << g.interior_vertices().size(), 0.0);
  for (std::uint64_t mask = 0; mask < fk.probability.size(); ++mask)
    if (fk.probability[mask] > 0.0) add_colouring_law(fk.config(mask), site_index, fk.probability[mask], out);
  return out;
}

std::vector<double> dual_pushforward(const FKDistribution& fk) {
  const DualGeometry dual(fk.geometry);
  const auto& dual_box = *dual.dual_box();
  std::vector<EdgeId> primal_of(dual_box.edge_count());
  for (EdgeId d = 0; d < primal_of.size(); ++d) primal_of[d] = dual.primal_edge(d);
  std::vector<double> out(std::size_t{1} << dual_box.edge_count(), 0.0);
  for (std::uint64_t mask = 0; mask < fk.probability.size(); ++mask) {
    std::uint64_t dual_mask = 0;
    for (EdgeId d = 0; d < primal_of.size(); ++d)
      if (!(mask >> primal_of[d] & 1u)) dual_mask |= std::uint64_t{1} << d;
    out[dual_mask] += fk.probability[mask];
  }
  return out;
}

std::vector<std::vector<double>> es_roundtrip_kernel(const PlusConfigTable& table, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("es_roundtrip_kernel: p must lie in [0, 1]");
  const auto& g = *table.geometry;
  if (g.edge_count() > 16) throw std::invalid_argument("es_roundtrip_kernel: at most 16 edges");
  const auto site_index = free_site_index(g);
  std::vector<std::vector<double>> kernel(table.size(), std::vector<double>(table.size(), 0.0));
  for (std::uint64_t i = 0; i < table.size(); ++i) {
    const SpinConfig sigma = table.config(i);
    std::vector<EdgeId> agreeing;
    for (EdgeId e = 0; e < g.edge_count(); ++e)
      if (sigma.spin(g.edge(e).u) == sigma.spin(g.edge(e).v)) agreeing.push_back(e);
    const std::size_t a = agreeing.size();
    for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << a); ++subset) {
      BondConfig omega(table.geometry);
      std::size_t open = 0;
      for (std::size_t k = 0; k < a; ++k)
        if (subset >> k & 1u) {
          omega.set(agreeing[k], true);
          ++open;
        }
      const double w = std::pow(p, static_cast<double>(open)) * std::pow(1.0 - p, static_cast<double>(a - open));
      if (w > 0.0) add_colouring_law(omega, site_index, w, kernel[i]);
    }
  }
  return kernel;
}

}  // namespace socising
