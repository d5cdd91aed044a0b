#include "socising/soc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "socising/coupling.hpp"

namespace socising {

namespace mp = boost::multiprecision;

double FeedbackParams::rho() const { return std::max(a / 2.0, 33.0 / 2.0 - 8.0 * a); }

double MuNDistribution::probability_of(const SpinConfig& sigma) const {
  const auto mask = table.mask_of(sigma);
  return mask ? probability[*mask] : 0.0;
}

namespace {

// Exact μ⁺ laws keyed by b², computed once per temperature.
class IsingCache {
 public:
  IsingCache(const PlusConfigTable& table, double a) : table_(table), a_(a) {}

  const IsingDistribution& at_b(long b) {
    const long key = b * b;
    auto it = by_b2_.find(key);
    if (it == by_b2_.end()) {
      const double t = feedback_temperature(b, table_.geometry->side(), a_);
      it = by_b2_.emplace(key, exact_ising_distribution(table_, IsingParams(t))).first;
    }
    return it->second;
  }

 private:
  const PlusConfigTable& table_;
  double a_;
  std::map<long, IsingDistribution> by_b2_;
};

}  // namespace

MuNDistribution exact_mu_n(GeometryPtr geometry, double a) {
  if (geometry->side() > kMaxMuNSide)
    throw std::invalid_argument("exact_mu_n: box side " + std::to_string(geometry->side()) + " exceeds " +
                                std::to_string(kMaxMuNSide));
  if (!(a > 0.0)) throw std::invalid_argument("exact_mu_n: a must be > 0");
  MuNDistribution d;
  d.table = enumerate_plus_configs(geometry);
  d.a = a;
  IsingCache cache(d.table, a);
  const std::size_t count = d.table.size();
  d.temperature.resize(count);
  d.probability.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const long m = d.table.magnetization[i];
    d.temperature[i] = feedback_temperature(m, geometry->side(), a);
    d.probability[i] = cache.at_b(m).probability[i];
    d.z_direct += d.probability[i];
  }
  for (double& p : d.probability) p /= d.z_direct;

  const long n2 = static_cast<long>(geometry->vertex_count());
  for (long b = -n2; b <= n2; ++b) {
    const auto& law = cache.at_b(b).magnetization_law;
    const auto it = law.find(b);
    const double term = it == law.end() ? 0.0 : it->second;
    if (it != law.end()) d.b_terms[b] = term;
    d.z_via_b += term;
  }
  return d;
}

DeviationReport deviation_bound_check(GeometryPtr geometry, double a, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("deviation_bound_check: epsilon must be > 0");
  const auto mu = exact_mu_n(geometry, a);
  const int n = geometry->side();
  const long n2 = static_cast<long>(geometry->vertex_count());
  const double tc = critical_temperature();

  DeviationReport r;
  r.n = n;
  r.a = a;
  r.epsilon = epsilon;
  r.z_n = mu.z_direct;
  const double prefactor = static_cast<double>(n2 + 1) / mu.z_direct;

  // Evaluates one side given the threshold and a predicate on T_n values.
  auto evaluate = [&](double threshold, bool upper_side, auto beyond) {
    DeviationSide side;
    for (std::size_t i = 0; i < mu.probability.size(); ++i)
      if (beyond(mu.temperature[i])) side.lhs += mu.probability[i];
    std::vector<double> candidates;
    for (long b = 0; b <= n2; ++b) {
      const double t = feedback_temperature(b, n, a);
      if (beyond(t)) candidates.push_back(t);
    }
    for (int k = 0; k < kDeviationGrid; ++k) {
      const double t = upper_side ? threshold * std::exp2(k / 8.0) : threshold * k / (kDeviationGrid - 1);
      candidates.push_back(t);
    }
    for (double t : candidates) {
      const auto law = exact_ising_distribution(mu.table, IsingParams(t));
      double value = 0.0;
      for (std::size_t i = 0; i < law.probability.size(); ++i)
        if (beyond(mu.temperature[i])) value += law.probability[i];
      if (value > side.sup_value) {
        side.sup_value = value;
        side.argmax_temperature = t;
      }
    }
    side.rhs = prefactor * side.sup_value;
    return side;
  };

  // Both events compare m²/n^{2a} with the threshold, exactly as T_n does.
  const double upper = tc + epsilon;
  r.supercritical = evaluate(upper, true, [upper](double t) { return t >= upper; });
  const double lower = tc - epsilon;
  if (lower < 0.0) {
    r.subcritical.empty_range = true;  // T_n >= 0 > T_c - ε: both sides vanish
  } else {
    r.subcritical = evaluate(lower, false, [lower](double t) { return t <= lower; });
  }
  return r;
}

SocTrajectory two_timescale_dynamics(GeometryPtr geometry, double a, const TwoTimescaleOptions& options,
                                     RngStream& rng) {
  if (options.tau < 1) throw std::invalid_argument("two_timescale_dynamics: tau must be >= 1");
  if (!(a > 0.0)) throw std::invalid_argument("two_timescale_dynamics: a must be > 0");
  const int n = geometry->side();
  SocTrajectory traj;
  traj.variant = options.refresh == RefreshRule::instantaneous ? "two-timescale" : "two-timescale-block-average";
  traj.tau = options.tau;
  traj.burn_in = options.burn_in;

  SpinConfig sigma(geometry);
  double t = feedback_temperature(sigma, a);
  traj.records.push_back({0, t, sigma.magnetization(), 0, false});

  std::size_t sweep = 0;
  while (sweep < options.total) {
    const std::size_t block = std::min(options.tau, options.total - sweep);
    const IsingParams params(t);
    std::size_t flips = 0;
    double sum_m2 = 0.0;
    for (std::size_t k = 0; k < block; ++k) {
      flips += heat_bath_sweep(sigma, params, rng);
      ++sweep;
      const double m = static_cast<double>(sigma.magnetization());
      sum_m2 += m * m;
      if (options.on_sweep) options.on_sweep(sweep, sigma, t);
    }
    double next = options.refresh == RefreshRule::instantaneous
                      ? feedback_temperature(sigma, a)
                      : sum_m2 / static_cast<double>(block) / std::pow(static_cast<double>(n), 2.0 * a);
    const bool floor_used = next == 0.0;
    if (floor_used) next = kTemperatureFloor;
    t = next;
    traj.records.push_back({sweep, t, sigma.magnetization(), flips, floor_used});
  }
  return traj;
}

double metropolis_acceptance(double delta_energy) {
  if (std::isnan(delta_energy)) throw std::invalid_argument("metropolis_acceptance: NaN energy difference");
  return delta_energy <= 0.0 ? 1.0 : std::exp(-delta_energy);
}

SocTrajectory naive_mu_prime_dynamics(GeometryPtr geometry, double a, std::size_t total_sweeps,
                                      bool account_for_T_change, RngStream& rng, const SweepHook& on_sweep) {
  if (!(a > 0.0)) throw std::invalid_argument("naive_mu_prime_dynamics: a must be > 0");
  const auto& g = *geometry;
  const int n = g.side();
  SocTrajectory traj;
  traj.variant = account_for_T_change ? "mu-prime-exact" : "mu-prime-fixed-T";
  traj.tau = 1;

  SpinConfig sigma(geometry);
  long h_total = hamiltonian(sigma).value();
  const auto interior = g.interior_vertices();
  auto temperature_of = [&](long m) { return feedback_temperature(m, n, a); };
  traj.records.push_back({0, temperature_of(sigma.magnetization()), sigma.magnetization(), 0, false});

  for (std::size_t sweep = 1; sweep <= total_sweeps; ++sweep) {
    std::size_t flips = 0;
    bool floor_used = false;
    for (std::size_t step = 0; step < interior.size(); ++step) {
      const VertexId v = interior[rng.below(interior.size())];
      int h = 0;
      for (Direction d : kDirections) h += sigma.spin(g.other_end(g.incident(v, d), v));
      const int s = sigma.spin(v);
      const long dh = 2L * s * h;
      const long m = sigma.magnetization();
      const long m_new = m - 2L * s;
      double delta_e;
      if (account_for_T_change) {
        if (m_new == 0) continue;  // zero weight
        delta_e = static_cast<double>(h_total + dh) / temperature_of(m_new) -
                  static_cast<double>(h_total) / temperature_of(m);
      } else {
        double t = temperature_of(m);
        if (t == 0.0) {
          t = kTemperatureFloor;
          floor_used = true;
        }
        delta_e = static_cast<double>(dh) / t;
      }
      if (delta_e <= 0.0 || rng.uniform() < metropolis_acceptance(delta_e)) {
        sigma.flip(v);
        h_total += dh;
        ++flips;
      }
    }
    double t = temperature_of(sigma.magnetization());
    if (on_sweep) on_sweep(sweep, sigma, t);
    traj.records.push_back({sweep, t, sigma.magnetization(), flips, floor_used});
  }
  return traj;
}

std::vector<double> exact_mu_prime_n(const PlusConfigTable& table, double a) {
  const int n = table.geometry->side();
  std::vector<double> log_w(table.size(), -std::numeric_limits<double>::infinity());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const long m = table.magnetization[i];
    if (m == 0) continue;
    log_w[i] = -static_cast<double>(table.energy[i]) / feedback_temperature(m, n, a);
    max_log = std::max(max_log, log_w[i]);
  }
  std::vector<double> p(table.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.magnetization[i] == 0) continue;
    p[i] = std::exp(log_w[i] - max_log);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

TrajectorySummary summarize(const SocTrajectory& trajectory) {
  TrajectorySummary s;
  double sum_t = 0.0, sum_t2 = 0.0, sum_m = 0.0;
  for (const auto& r : trajectory.records) {
    if (r.step <= trajectory.burn_in) continue;
    ++s.count;
    sum_t += r.temperature;
    sum_t2 += r.temperature * r.temperature;
    sum_m += static_cast<double>(r.magnetization);
    if (r.floor_used) ++s.floor_count;
  }
  if (s.count == 0) return s;
  const double c = static_cast<double>(s.count);
  s.mean_temperature = sum_t / c;
  s.mean_magnetization = sum_m / c;
  if (s.count > 1) {
    const double var = (sum_t2 - c * s.mean_temperature * s.mean_temperature) / (c - 1.0);
    s.std_temperature = std::sqrt(std::max(0.0, var));
  }
  return s;
}

namespace {

BigReal big_pc() {
  const BigReal r = mp::sqrt(BigReal(2));
  return r / (1 + r);
}

}  // namespace

FixedPoint fixed_point(const BigInt& n, double a) {
  if (n < 1) throw std::invalid_argument("fixed_point: n must be >= 1");
  if (!(a > 31.0 / 16.0 && a < 2.0)) throw std::invalid_argument("fixed_point: a must lie in (31/16, 2)");
  const BigReal nr(n);
  const BigReal ar(a);
  const BigReal log_n = mp::log(nr);
  const BigReal n_a = mp::exp(ar * log_n);
  const BigReal pc = big_pc();
  const BigReal arg = 1 - pc - 6561 * pc / (8 * mp::exp((16 - 8 * ar) * log_n));
  if (!(arg > 0 && arg < 1))
    throw std::domain_error("fixed_point: log argument " + arg.str(8) + " is outside (0, 1); n = " + n.str() +
                            " is too small for a = " + std::to_string(a));
  FixedPoint f;
  f.n = n;
  f.a = a;
  f.b_prime = n_a * mp::sqrt(BigReal(2)) / mp::sqrt(-mp::log(arg));
  BigInt b = mp::floor(f.b_prime).convert_to<BigInt>();
  if (b % 2 != n % 2) b -= 1;  // b_n ≡ n² ≡ n (mod 2)
  if (b > n * n) throw std::domain_error("fixed_point: b_n exceeds n^2");
  f.b_n = b;
  if (b == 0) {
    f.p_n = 1;
    f.t_star = 0;
  } else {
    const BigReal br(b);
    f.t_star = br * br / (n_a * n_a);
    f.p_n = 1 - mp::exp(-2 / f.t_star);
  }
  return f;
}

double theta_asymptotic(double p) {
  const double pc = critical_p(2.0);
  if (!(p >= pc && p <= 1.0)) throw std::invalid_argument("theta_asymptotic: p must lie in [p_c(2), 1]");
  return std::pow(8.0 * (p / pc - 1.0), 1.0 / 8.0);
}

BigReal theta_asymptotic(const BigReal& p) {
  const BigReal pc = big_pc();
  if (!(p >= pc && p <= 1)) throw std::invalid_argument("theta_asymptotic: p must lie in [p_c(2), 1]");
  if (p == pc) return 0;
  return mp::pow(8 * (p / pc - 1), BigReal(1) / 8);
}

double edge_closing_price(int n, double p, std::size_t count) {
  if (n < 1) throw std::invalid_argument("edge_closing_price: n must be >= 1");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("edge_closing_price: p must lie in (0, 1)");
  const double base = std::min(p, 1.0 - p) / (3.0 * p * static_cast<double>(n) * n);
  return std::pow(base, static_cast<double>(count));
}

}  // namespace socising
