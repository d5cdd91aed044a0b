// Acceptance checks. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero if any selected criterion fails.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "socising/coupling.hpp"
#include "socising/experiments.hpp"
#include "socising/soc.hpp"
#include "socising/surgery.hpp"

using namespace socising;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x;
  return s.str();
}

double tv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("socising-acceptance-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json run(const std::string& text, const fs::path& out) {
  experiments::ExperimentConfig c;
  c.merge_text(text + "\nout = " + out.string() + "\n");
  return json::parse(experiments::run_experiment(c).summary_json);
}

Verdict coupling_exactness() {
  const double grid[] = {0.5, 1.0, critical_temperature(), 3.0, 6.0};
  auto g = build_box(3);
  double worst = 0.0;
  for (double T : grid) {
    const auto fk = exact_fk_distribution(g, FKParams{t_to_p(T), 2.0, BoundaryCondition::wired});
    const auto push = es_pushforward(fk);
    const auto ising = exact_ising_distribution(g, IsingParams(T));
    for (std::size_t i = 0; i < push.size(); ++i) worst = std::max(worst, std::abs(push[i] - ising.probability[i]));
  }
  return {worst <= 1e-10, "max abs error " + fmt(worst) + " over 5 temperatures, n=3"};
}

Verdict duality_exactness() {
  double worst = 0.0, involution = 0.0;
  for (double q : {1.0, 2.0}) {
    for (double p : {0.3, critical_p(q), 0.8}) {
      const double star = dual_parameter(p, q);
      involution = std::max(involution, std::abs(dual_parameter(star, q) - p));
      const auto push = dual_pushforward(exact_fk_distribution(build_box(3), FKParams{p, q, BoundaryCondition::wired}));
      const auto ref = exact_fk_distribution(build_box(2), FKParams{star, q, BoundaryCondition::free});
      for (std::size_t i = 0; i < push.size(); ++i) worst = std::max(worst, std::abs(push[i] - ref.probability[i]));
    }
  }
  return {worst <= 1e-10 && involution <= 1e-12,
          "max abs error " + fmt(worst) + ", |p** - p| max " + fmt(involution)};
}

Verdict partition_identity() {
  double worst = 0.0;
  bool all_hold = true;
  for (int n : {1, 2, 3, 4})
    for (double a : {1.98, 1.99}) {
      const auto mu = exact_mu_n(build_box(n), a);
      worst = std::max(worst, std::abs(mu.z_direct - mu.z_via_b));
      for (double eps : {0.25, 0.5, 1.0}) all_hold = all_hold && deviation_bound_check(build_box(n), a, eps).holds();
    }
  return {worst <= 1e-10 && all_hold, "max |Z direct - Z via b| " + fmt(worst) +
                                          (all_hold ? ", deviation bounds hold" : ", a deviation bound FAILS")};
}

Verdict sampler_correctness() {
  auto g = build_box(2);
  const std::size_t steps = 1'000'000;
  double worst_tv = 0.0, worst_balance = 0.0;
  for (auto bc : {BoundaryCondition::wired, BoundaryCondition::free}) {
    const FKParams params{0.6, 2.0, bc};
    const auto exact = exact_fk_distribution(g, params);
    for (int kind = 0; kind < 2; ++kind) {
      RngStream rng(2024, static_cast<std::uint64_t>(2 * static_cast<int>(bc) + kind));
      BondConfig w(g);
      std::vector<double> freq(exact.probability.size(), 0.0);
      for (std::size_t s = 0; s < steps; ++s) {
        if (kind == 0)
          swendsen_wang_step(w, params, rng);
        else
          single_bond_heat_bath_sweep(w, params, rng);
        freq[w.mask()] += 1.0 / static_cast<double>(steps);
      }
      worst_tv = std::max(worst_tv, tv(freq, exact.probability));
    }
    for (std::uint64_t m = 0; m < exact.probability.size(); ++m)
      for (EdgeId e = 0; e < g->edge_count(); ++e) {
        const std::uint64_t m2 = m ^ (std::uint64_t{1} << e);
        const auto w = exact.config(m), w2 = exact.config(m2);
        const double p1 = single_bond_open_probability(w, e, params);
        const double p2 = single_bond_open_probability(w2, e, params);
        const double fwd = exact.probability[m] * (w2.is_open(e) ? p1 : 1.0 - p1);
        const double back = exact.probability[m2] * (w.is_open(e) ? p2 : 1.0 - p2);
        worst_balance = std::max(worst_balance, std::abs(fwd - back));
      }
  }
  return {worst_tv <= 0.01 && worst_balance <= 1e-12,
          "max TV " + fmt(worst_tv) + " (SW and heat bath, both boundaries), detailed balance error " +
              fmt(worst_balance)};
}

Verdict fixed_point_asymptotics() {
  namespace mp = boost::multiprecision;
  const BigInt n = 10000;
  const double a = 1.99;
  FixedPoint f;
  try {
    f = fixed_point(n, a);
  } catch (const std::domain_error& e) {
    return {false, std::string("fixed point undefined at n=10^4: ") + e.what()};
  }
  const BigReal tc = 2 / mp::log(1 + mp::sqrt(BigReal(2)));
  const BigReal pc = mp::sqrt(BigReal(2)) / (1 + mp::sqrt(BigReal(2)));
  const BigReal nr(n), na = mp::pow(nr, BigReal(a));
  const bool parity = ((f.b_n - n * n) % 2) == 0;
  const double rb = static_cast<double>(BigReal(f.b_n) / (na * mp::sqrt(tc)));
  const double rp =
      static_cast<double>((f.p_n - pc) / (mp::pow(BigReal(3), 8) * pc / (8 * mp::pow(nr, BigReal(16 - 8 * a)))));
  const double rt = static_cast<double>(theta_asymptotic(f.p_n) * nr * nr / (3 * na));
  const bool ok = parity && rb >= 0.99 && rb <= 1.01 && rp >= 0.95 && rp <= 1.05 && rt >= 0.95 && rt <= 1.05;
  return {ok, std::string("parity ") + (parity ? "ok" : "wrong") + ", b ratio " + fmt(rb) + ", p ratio " + fmt(rp) +
                  ", theta ratio " + fmt(rt)};
}

Verdict surgery_contract() {
  const auto dir = scratch("surgery");
  const auto s = run("command = surgery-demo\nn = 30\np = 0.7\nsamples = 200\nseed = 7", dir);
  fs::remove_all(dir);
  const auto& c = s["cells"][0];
  const std::size_t passing = c["passing_preconditions"];
  const double rate = c["success_rate"];
  const bool untouched = c["interior_untouched_all"], c0 = c["c0_bound_all"];
  return {passing >= 200 && rate == 1.0 && untouched && c0,
          std::to_string(passing) + " passing samples, success rate " + fmt(rate) + ", interior untouched " +
              (untouched ? "yes" : "no") + ", |C0| <= |H|+1 " + (c0 ? "yes" : "no") + ", fitted K " +
              fmt(c["K_fit"].get<double>())};
}

Verdict compensation_oracle() {
  RngStream rng(500, 0);
  std::size_t mismatches = 0, odd = 0, odd_nonzero = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t k = 1 + rng.below(20);
    const std::uint32_t max_size = rng.bernoulli(0.5) ? 3 : 40;
    std::vector<std::uint32_t> sizes(k);
    std::uint64_t total = 0;
    for (auto& s : sizes) {
      s = 1 + static_cast<std::uint32_t>(rng.below(max_size));
      total += s;
    }
    std::uint64_t zero = 0;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << k); ++m) {
      long sum = 0;
      for (std::size_t i = 0; i < k; ++i) sum += (m >> i & 1u) ? long(sizes[i]) : -long(sizes[i]);
      zero += sum == 0;
    }
    const auto got = sign_compensation_probability(sizes);
    const double expect = std::ldexp(static_cast<double>(zero), -static_cast<int>(k));
    bool same = got.probability == expect;
    if (got.exact)
      same = same && got.exact_value == boost::multiprecision::cpp_rational(zero, boost::multiprecision::cpp_int(1) << k);
    mismatches += !same;
    if (total % 2 == 1) {
      ++odd;
      odd_nonzero += got.probability != 0.0;
    }
  }
  return {mismatches == 0 && odd_nonzero == 0,
          std::to_string(mismatches) + " mismatches over 500 instances, " + std::to_string(odd) +
              " odd-total instances, " + std::to_string(odd_nonzero) + " nonzero among them"};
}

Verdict soc_concentration() {
  const auto dir = scratch("soc");
  const auto s = run("command = soc-run\nn = 16,32,64\na = 1.99\ntau = 32\ntotal = 200000\nburn_in = 20000\n"
                     "seed = 11\nparallel = serial",
                     dir);
  fs::remove_all(dir);
  std::map<int, json> by_n;
  for (const auto& c : s["cells"]) by_n[c["n"].get<int>()] = c;
  const double tc = critical_temperature();
  const double mean64 = by_n[64]["mean_T"];
  const double s16 = by_n[16]["std_T"], s32 = by_n[32]["std_T"], s64 = by_n[64]["std_T"];
  const bool in_window = std::abs(mean64 - tc) <= 0.35;
  const bool decreasing = s16 > s32 && s32 > s64;
  return {in_window && decreasing, "mean T at n=64 " + fmt(mean64) + " (window " + fmt(tc - 0.35) + ".." +
                                       fmt(tc + 0.35) + ", cap n^(4-2a) = " +
                                       fmt(by_n[64]["T_cap"].get<double>()) + "), std T " + fmt(s16) + " > " +
                                       fmt(s32) + " > " + fmt(s64) + (decreasing ? " holds" : " does not hold")};
}

Verdict tail_positivity() {
  const auto dir = scratch("tail");
  const auto s = run("command = tail-fit\nn = 64\np = 0.4\nq = 2\nbc = free\nsamples = 2000\nseed = 3", dir);
  fs::remove_all(dir);
  const auto& c = s["cells"][0];
  const double psi = c["psi"], lo = c["ci_low"], hi = c["ci_high"];
  return {psi > 0.0 && lo > 0.0 && !c["degenerate"].get<bool>(),
          "psi " + fmt(psi) + ", 95% CI [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

Verdict reproducibility() {
  const std::vector<std::string> configs = {
      "command = soc-compare\nn = 16\ntotal = 3000\ntau = 16\nsnapshot_every = 100\nseed = 9",
      "command = fk-sample\nn = 12,20\nchains = 3\nsamples = 30\nseed = 9",
      "command = surgery-demo\nn = 16\nsamples = 30\nchains = 2\nseed = 9",
      "command = tail-fit\nn = 16\np = 0.4\nbc = free\nsamples = 200\nseed = 9",
      "command = fss-freq\nn = 16\np_source = scaling\nsamples = 100\nseed = 9",
      "command = enumerate\nn = 3\nseed = 9",
  };
  std::size_t identical = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto d1 = scratch("repro-a" + std::to_string(i)), d2 = scratch("repro-b" + std::to_string(i));
    run(configs[i], d1);
    run(configs[i] + "\nparallel = serial", d2);
    identical += slurp(d1 / "rows.csv") == slurp(d2 / "rows.csv") && !slurp(d1 / "rows.csv").empty();
    fs::remove_all(d1);
    fs::remove_all(d2);
  }
  return {identical == configs.size(), std::to_string(identical) + "/" + std::to_string(configs.size()) +
                                           " commands byte-identical across repeated (openmp, serial) runs"};
}

struct Criterion {
  const char* name;
  std::function<Verdict()> check;
  double time_limit_seconds;  // 0: none
};

const Criterion kCriteria[] = {
    {"coupling exactness", coupling_exactness, 5},
    {"duality exactness", duality_exactness, 10},
    {"partition identity", partition_identity, 60},
    {"sampler correctness", sampler_correctness, 0},
    {"fixed-point asymptotics", fixed_point_asymptotics, 1},
    {"surgery contract", surgery_contract, 120},
    {"compensation oracle", compensation_oracle, 60},
    {"SOC concentration", soc_concentration, 1800},
    {"subcritical tail", tail_positivity, 600},
    {"reproducibility", reproducibility, 0},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "criterion numbers (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty())
    for (int i = 1; i <= 10; ++i) selected.push_back(i);

  int failures = 0;
  for (int i : selected) {
    const auto& c = kCriteria[i - 1];
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_seconds > 0 && secs > c.time_limit_seconds) {
      v.pass = false;
      v.detail += ", over the " + fmt(c.time_limit_seconds) + " s budget";
    }
    std::printf("criterion %d %s: %s (%s; %.2f s)\n", i, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(), secs);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
