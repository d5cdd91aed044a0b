#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "socising/coupling.hpp"
#include "socising/soc.hpp"

using namespace socising;
namespace mp = boost::multiprecision;

namespace {

constexpr double kTc = 2.269185314213022;

std::vector<int> spins_of(const SpinConfig& s) { return {s.spins().begin(), s.spins().end()}; }

// μ_n from the brute-force Ising oracle: weight μ⁺_{n,T_n(σ)}(σ), renormalized.
std::map<std::vector<int>, double> brute_mu_n(int n, double a, double* z_out = nullptr) {
  std::map<long, std::map<std::vector<int>, double>> by_m;
  std::map<std::vector<int>, double> out;
  double z = 0.0;
  for (const auto& [s, unused] : oracle::brute_ising(n, 1.0)) {
    long m = 0;
    for (int x : s) m += x;
    const double T = static_cast<double>(m) * m / std::pow(double(n), 2.0 * a);
    if (!by_m.count(m)) by_m[m] = oracle::brute_ising(n, T);
    out[s] = by_m[m].at(s);
    z += out[s];
  }
  for (auto& [s, w] : out) w /= z;
  if (z_out) *z_out = z;
  return out;
}

BigReal big(const BigInt& x) { return BigReal(x); }

}  // namespace

TEST_SUITE("soc") {
  TEST_CASE("feedback parameters") {
    FeedbackParams f{1.99};
    CHECK(f.in_theorem_range());
    CHECK(f.in_conditional_range());
    CHECK(f.rho() == doctest::Approx(0.995));
    CHECK(f.fss_exponent() == doctest::Approx(0.08));
    FeedbackParams g{1.95};
    CHECK_FALSE(g.in_theorem_range());
    CHECK(g.in_conditional_range());
    CHECK(g.rho() == doctest::Approx(0.975));
    CHECK(FeedbackParams{1.94}.rho() == doctest::Approx(16.5 - 15.52));
    CHECK_FALSE(FeedbackParams{2.0}.in_conditional_range());
  }

  TEST_CASE("exact mu_n: small boxes") {
    const auto d1 = exact_mu_n(build_box(1), 1.99);
    REQUIRE(d1.probability.size() == 1);
    CHECK(d1.probability[0] == 1.0);
    CHECK(d1.temperature[0] == 1.0);
    CHECK(d1.z_direct == doctest::Approx(1.0));
    CHECK(d1.z_via_b == doctest::Approx(1.0));

    const auto d2 = exact_mu_n(build_box(2), 1.99);
    REQUIRE(d2.probability.size() == 1);
    CHECK(d2.probability[0] == 1.0);
    CHECK(d2.temperature[0] == doctest::Approx(16.0 / std::pow(2.0, 3.98)));

    const auto d3 = exact_mu_n(build_box(3), 1.99);
    CHECK(d3.probability.size() == 2);
    CHECK(std::abs(d3.z_direct - d3.z_via_b) <= 1e-12);

    CHECK_THROWS_AS(exact_mu_n(build_box(5), 1.99), std::invalid_argument);
  }

  TEST_CASE("exact mu_n against the brute-force oracle") {
    for (int n : {1, 2, 3, 4}) {
      for (double a : {1.95, 1.99}) {
        CAPTURE(n);
        CAPTURE(a);
        double z = 0.0;
        const auto ref = brute_mu_n(n, a, &z);
        const auto d = exact_mu_n(build_box(n), a);
        double total = 0.0;
        for (std::size_t i = 0; i < d.probability.size(); ++i) {
          const auto cfg = d.table.config(i);
          CHECK(std::abs(d.probability[i] - ref.at(spins_of(cfg))) <= 1e-12);
          CHECK(d.probability_of(cfg) == d.probability[i]);
          total += d.probability[i];
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        CHECK(std::abs(d.z_direct - z) <= 1e-10 * z);
        CHECK(std::abs(d.z_direct - d.z_via_b) <= 1e-10);
        auto g = build_box(n);
        if (n >= 2) {
          SpinConfig bad(g);
          bad.set(g->boundary()[0], -1);
          CHECK(d.probability_of(bad) == 0.0);
        }
      }
    }
  }

  TEST_CASE("deviation bound") {
    const auto r3 = deviation_bound_check(build_box(3), 1.99, 0.5);
    CHECK(r3.holds());
    // Left-hand sides recomputed from the oracle.
    const auto ref = brute_mu_n(3, 1.99);
    double upper = 0.0, lower = 0.0;
    for (const auto& [s, p] : ref) {
      long m = 0;
      for (int x : s) m += x;
      const double T = double(m) * m / std::pow(3.0, 3.98);
      if (T >= kTc + 0.5) upper += p;
      if (T <= kTc - 0.5) lower += p;
    }
    CHECK(r3.supercritical.lhs == doctest::Approx(upper).epsilon(1e-12));
    CHECK(r3.subcritical.lhs == doctest::Approx(lower).epsilon(1e-12));

    const auto huge = deviation_bound_check(build_box(3), 1.99, 1e6);
    CHECK(huge.supercritical.lhs == 0.0);
    CHECK(huge.subcritical.empty_range);
    CHECK(huge.holds());

    const auto r2 = deviation_bound_check(build_box(2), 1.99, 0.5);
    CHECK(r2.holds());
    CHECK(r2.z_n > 0.0);
    const auto r4 = deviation_bound_check(build_box(4), 1.99, 0.5);
    CHECK(r4.holds());
  }

  TEST_CASE("two-timescale dynamics: n = 1 and record layout") {
    RngStream rng(1, 0);
    TwoTimescaleOptions opt;
    opt.tau = 4;
    opt.total = 40;
    const auto t = two_timescale_dynamics(build_box(1), 1.99, opt, rng);
    REQUIRE(t.records.size() == 11);
    for (std::size_t i = 0; i < t.records.size(); ++i) {
      CHECK(t.records[i].temperature == 1.0);
      CHECK(t.records[i].step == 4 * i);
    }
    opt.tau = 0;
    CHECK_THROWS(two_timescale_dynamics(build_box(3), 1.99, opt, rng));
  }

  TEST_CASE("two-timescale dynamics: block average refresh") {
    auto g = build_box(6);
    RngStream rng(2, 0);
    std::vector<long> m_seen;
    TwoTimescaleOptions opt;
    opt.tau = 5;
    opt.total = 50;
    opt.refresh = RefreshRule::block_average;
    opt.on_sweep = [&](std::size_t, const SpinConfig& s, double) { m_seen.push_back(s.magnetization()); };
    const auto t = two_timescale_dynamics(g, 1.99, opt, rng);
    REQUIRE(t.records.size() == 11);
    REQUIRE(m_seen.size() == 50);
    for (std::size_t b = 0; b < 10; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += double(m_seen[5 * b + k]) * m_seen[5 * b + k];
      const double expect = s / 5.0 / std::pow(6.0, 3.98);
      CHECK(t.records[b + 1].temperature == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("two-timescale dynamics: each long block samples the Ising law at its temperature") {
    auto g = build_box(3);
    const VertexId c = *g->vertex_at({0, 0});
    RngStream rng(3, 0);
    const std::size_t tau = 1'000'000;
    std::vector<double> block_t;
    std::vector<double> minus;
    TwoTimescaleOptions opt;
    opt.tau = tau;
    opt.total = 3 * tau;
    opt.on_sweep = [&](std::size_t sweep, const SpinConfig& s, double T) {
      if ((sweep - 1) % tau == 0) {
        block_t.push_back(T);
        minus.push_back(0.0);
      }
      minus.back() += s.spin(c) < 0;
    };
    two_timescale_dynamics(g, 1.99, opt, rng);
    REQUIRE(block_t.size() == 3);
    for (std::size_t b = 0; b < 3; ++b) {
      const auto exact = exact_ising_distribution(g, IsingParams(block_t[b]));
      std::vector<int> s(9, 1);
      s[c] = -1;
      const double p_minus = oracle::brute_ising(3, block_t[b]).at(s);
      CHECK(exact.probability[1] == doctest::Approx(p_minus).epsilon(1e-12));
      const double freq = minus[b] / tau;
      // TV over the two configurations is |freq - p_minus|.
      CHECK(std::abs(freq - p_minus) <= 0.02);
    }
  }

  TEST_CASE("metropolis acceptance") {
    CHECK(metropolis_acceptance(0.0) == 1.0);
    CHECK(metropolis_acceptance(-3.0) == 1.0);
    CHECK(metropolis_acceptance(1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS(metropolis_acceptance(NAN));
  }

  TEST_CASE("mu-prime chain reaches the exact law") {
    for (int n : {3, 4}) {
      CAPTURE(n);
      auto g = build_box(n);
      const auto table = enumerate_plus_configs(g);
      const auto exact = exact_mu_prime_n(table, 1.99);
      // Oracle: exp(-H/T_n) with m = 0 excluded.
      {
        double z = 0.0;
        std::vector<double> w(table.size(), 0.0);
        for (std::size_t i = 0; i < table.size(); ++i) {
          const auto cfg = table.config(i);
          const long m = cfg.magnetization();
          if (m == 0) continue;
          w[i] = std::exp(-double(hamiltonian(cfg).value()) / (double(m) * m / std::pow(double(n), 3.98)));
          z += w[i];
        }
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(exact[i] == doctest::Approx(w[i] / z).epsilon(1e-12));
      }
      RngStream rng(40 + n, 0);
      std::vector<double> freq(table.size(), 0.0);
      const std::size_t moves = 1'000'000;
      const std::size_t sweeps = moves / g->interior_vertices().size();
      std::size_t seen = 0;
      naive_mu_prime_dynamics(g, 1.99, sweeps, true, rng, [&](std::size_t, const SpinConfig& s, double) {
        freq[*table.mask_of(s)] += 1.0;
        ++seen;
      });
      for (double& f : freq) f /= double(seen);
      CHECK(oracle::tv(freq, exact) <= 0.02);
    }
  }

  TEST_CASE("mu-prime variants differ") {
    auto g = build_box(8);
    RngStream r1(5, 0), r2(5, 0);
    const auto exact = summarize(naive_mu_prime_dynamics(g, 1.99, 2000, true, r1));
    const auto fixed = summarize(naive_mu_prime_dynamics(g, 1.99, 2000, false, r2));
    CHECK(exact.count == 2000);
    CHECK(exact.mean_temperature != fixed.mean_temperature);
  }

  TEST_CASE("summarize") {
    SocTrajectory t;
    t.burn_in = 10;
    t.records = {{0, 5.0, 1, 0, false}, {10, 7.0, 3, 0, false}, {20, 1.0, 5, 0, true}, {30, 3.0, 7, 0, false}};
    const auto s = summarize(t);
    CHECK(s.count == 2);
    CHECK(s.mean_temperature == doctest::Approx(2.0));
    CHECK(s.std_temperature == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.mean_magnetization == doctest::Approx(6.0));
    CHECK(s.floor_count == 1);
  }

  TEST_CASE("fixed point: unreachable at desk sizes") {
    for (int n : {10, 100, 1000, 10000}) CHECK_THROWS_AS(fixed_point(BigInt(n), 1.99), std::domain_error);
    CHECK_THROWS_AS(fixed_point(mp::pow(BigInt(10), 60), 1.9), std::invalid_argument);
    CHECK_THROWS_AS(fixed_point(mp::pow(BigInt(10), 60), 2.0), std::invalid_argument);
  }

  TEST_CASE("fixed point: parity, rounding and asymptotics") {
    const double a = 1.99;
    const BigReal tc = 2 / mp::log(1 + mp::sqrt(BigReal(2)));
    const BigReal pc = mp::sqrt(BigReal(2)) / (1 + mp::sqrt(BigReal(2)));
    std::vector<double> ratio_b, ratio_p, ratio_theta;
    for (int e : {100, 200, 300}) {
      const BigInt n = mp::pow(BigInt(10), e);
      const auto f = fixed_point(n, a);
      CHECK(((f.b_n - n * n) % 2) == 0);
      const BigInt fl = mp::floor(f.b_prime).convert_to<BigInt>();
      CHECK((f.b_n == fl || f.b_n == fl - 1));
      CHECK(big(f.b_n) <= f.b_prime);
      const BigReal na = mp::pow(big(n), BigReal(a));
      CHECK(static_cast<double>(f.t_star) == doctest::Approx(static_cast<double>(big(f.b_n) * big(f.b_n) / (na * na))).epsilon(1e-12));
      ratio_b.push_back(static_cast<double>(big(f.b_n) / (na * mp::sqrt(tc))));
      const BigReal scale = mp::pow(BigReal(3), 8) * pc / (8 * mp::pow(big(n), BigReal(16 - 8 * a)));
      ratio_p.push_back(static_cast<double>((f.p_n - pc) / scale));
      ratio_theta.push_back(static_cast<double>(theta_asymptotic(f.p_n) * big(n) * big(n) / (3 * na)));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      CAPTURE(i);
      CHECK(ratio_b[i] >= 0.99);
      CHECK(ratio_b[i] <= 1.01);
      CHECK(ratio_p[i] >= 0.95);
      CHECK(ratio_p[i] <= 1.05);
      CHECK(ratio_theta[i] >= 0.95);
      CHECK(ratio_theta[i] <= 1.05);
    }
    for (std::size_t i = 1; i < 3; ++i) {
      CHECK(std::abs(ratio_b[i] - 1.0) <= std::abs(ratio_b[i - 1] - 1.0));
      CHECK(std::abs(ratio_p[i] - 1.0) <= std::abs(ratio_p[i - 1] - 1.0));
    }
  }

  TEST_CASE("fixed point: parity over a run of consecutive large n") {
    const BigInt base = mp::pow(BigInt(10), 45);
    for (int k = 0; k < 100; ++k) {
      const BigInt n = base + k;
      const auto f = fixed_point(n, 1.99);
      CHECK(((f.b_n - n * n) % 2) == 0);
    }
  }

  TEST_CASE("theta surrogate") {
    const double pc = critical_p(2.0);
    CHECK(theta_asymptotic(pc) == 0.0);
    CHECK(theta_asymptotic(pc * (1.0 + 1.0 / 8.0)) == doctest::Approx(1.0));
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
      const double p = pc + (1.0 - pc) * i / 100.0;
      const double t = theta_asymptotic(p);
      CHECK(t > prev);
      prev = t;
    }
    CHECK_THROWS_AS(theta_asymptotic(pc - 1e-3), std::invalid_argument);
  }

  TEST_CASE("edge closing price") {
    CHECK(edge_closing_price(10, 0.3, 0) == 1.0);
    CHECK(edge_closing_price(10, 0.5, 1) == doctest::Approx(1.0 / 300.0));
    CHECK(edge_closing_price(4, 0.8, 2) == doctest::Approx(std::pow(0.2 / (3 * 0.8 * 16), 2)));
    double prev = 1.0;
    for (std::size_t N = 0; N < 10; ++N) {
      const double v = edge_closing_price(7, 0.6, N);
      CHECK(v <= prev);
      prev = v;
    }
    CHECK_THROWS(edge_closing_price(5, 0.0, 1));
  }
}
