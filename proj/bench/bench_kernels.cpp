// Serial vs OpenMP timings for the data-parallel kernels, plus single-chain
// throughput of the samplers. Results are also checked for bit-identity.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>

#include "socising/fk.hpp"
#include "socising/ising.hpp"
#include "socising/parallel.hpp"

using namespace socising;
using parallel::Mode;

namespace {

template <class F>
double seconds(F&& f, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / reps;
}

bool identical(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, double serial, double omp, bool same) {
  std::printf("%-28s serial %10.4f ms  openmp %10.4f ms  speedup %5.2fx  %s\n", name, serial * 1e3, omp * 1e3,
              serial / omp, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmarks"};
  bool quick = false;
  app.add_flag("--quick", quick, "small sizes, one repetition");
  CLI11_PARSE(app, argc, argv);
  const int reps = quick ? 1 : 5;
  bool ok = true;

  std::printf("threads: %d\n", parallel::thread_count());

  {
    std::vector<double> v(quick ? 100'000 : 20'000'000);
    RngStream rng(1, 0);
    for (auto& x : v) x = rng.uniform();
    double s = 0, o = 0;
    const double ts = seconds([&] { s = parallel::ordered_sum(v, Mode::serial); }, reps);
    const double to = seconds([&] { o = parallel::ordered_sum(v, Mode::openmp); }, reps);
    ok = ok && s == o;
    report("ordered_sum", ts, to, s == o);
  }

  {
    auto g = build_box(quick ? 3 : 4);  // n = 4 has 24 edges, 2^24 masks
    const FKParams params{0.6, 2.0, BoundaryCondition::wired};
    std::vector<double> s, o;
    const double ts = seconds([&] { s = parallel::fk_weights(g, params, Mode::serial); }, 1);
    const double to = seconds([&] { o = parallel::fk_weights(g, params, Mode::openmp); }, reps);
    ok = ok && identical(s, o);
    report(quick ? "fk_weights n=3" : "fk_weights n=4", ts, to, identical(s, o));
  }

  {
    std::vector<std::vector<std::uint32_t>> corpus;
    RngStream rng(2, 0);
    for (int i = 0; i < (quick ? 20 : 400); ++i) {
      std::vector<std::uint32_t> sizes(quick ? 14 : 22);
      for (auto& x : sizes) x = 1 + static_cast<std::uint32_t>(rng.below(6));
      corpus.push_back(sizes);
    }
    std::vector<std::uint64_t> s, o;
    const double ts = seconds([&] { s = parallel::count_zero_signed_sums(corpus, Mode::serial); }, reps);
    const double to = seconds([&] { o = parallel::count_zero_signed_sums(corpus, Mode::openmp); }, reps);
    ok = ok && s == o;
    report("count_zero_signed_sums", ts, to, s == o);
  }

  {
    const int n = quick ? 32 : 128;
    const std::size_t chains = quick ? 4 : 32;
    const std::size_t steps = quick ? 20 : 200;
    auto g = build_box(n);
    const FKParams params{0.6, 2.0, BoundaryCondition::wired};
    auto task = [&](std::size_t i) {
      RngStream rng(3, i);
      BondConfig w(g);
      for (std::size_t s = 0; s < steps; ++s) swendsen_wang_step(w, params, rng);
      return static_cast<double>(decompose(w).boundary_connected.size());
    };
    std::vector<double> s, o;
    const double ts = seconds([&] { s = parallel::ensemble<double>(chains, task, Mode::serial); }, 1);
    const double to = seconds([&] { o = parallel::ensemble<double>(chains, task, Mode::openmp); }, 1);
    ok = ok && identical(s, o);
    report("SW ensemble", ts, to, identical(s, o));
  }

  {
    const int n = quick ? 32 : 128;
    auto g = build_box(n);
    SpinConfig sigma(g);
    RngStream rng(4, 0);
    const IsingParams params(2.269185314213022);
    const int sweeps = quick ? 50 : 1000;
    const double t = seconds([&] { heat_bath_sweep(sigma, params, rng); }, sweeps);
    std::printf("%-28s %.1f ns/site (n=%d)\n", "heat-bath sweep", t * 1e9 / (double(n) * n), n);
  }

  return ok ? 0 : 1;
}
