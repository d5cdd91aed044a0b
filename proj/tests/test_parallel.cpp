#include <doctest.h>

#include <cstring>

#include "oracles.hpp"
#include "socising/parallel.hpp"

using namespace socising;
using parallel::Mode;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_SUITE("parallel") {
  TEST_CASE("ordered_sum is identical in both modes") {
    RngStream rng(1, 0);
    for (std::size_t size : {0ul, 1ul, 4095ul, 4096ul, 4097ul, 100000ul}) {
      std::vector<double> v(size);
      for (auto& x : v) x = rng.uniform() * std::exp(40.0 * (rng.uniform() - 0.5));
      const double s = parallel::ordered_sum(v, Mode::serial);
      const double o = parallel::ordered_sum(v, Mode::openmp);
      CHECK(same_bits(s, o));
      double plain = 0.0;
      for (double x : v) plain += x;
      CHECK(s == doctest::Approx(plain).epsilon(1e-12));
    }
  }

  TEST_CASE("fk_weights: both paths agree bit for bit and match the oracle") {
    for (int n : {2, 3, 4}) {
      for (auto bc : {BoundaryCondition::free, BoundaryCondition::wired}) {
        const FKParams params{0.6, 2.0, bc};
        auto g = build_box(n);
        const auto s = parallel::fk_weights(g, params, Mode::serial);
        const auto o = parallel::fk_weights(g, params, Mode::openmp);
        REQUIRE(s.size() == o.size());
        bool identical = true;
        for (std::size_t i = 0; i < s.size(); ++i) identical = identical && same_bits(s[i], o[i]);
        CHECK(identical);
        if (n <= 3) {
          const auto ref = oracle::brute_fk(n, 0.6, 2.0, bc == BoundaryCondition::wired);
          double z = 0.0;
          for (double w : s) z += w;
          for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] / z == doctest::Approx(ref[i]).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("ensemble returns results in index order") {
    auto task = [](std::size_t i) {
      RngStream rng(99, i);
      double s = 0.0;
      for (int k = 0; k < 1000; ++k) s += rng.uniform();
      return s;
    };
    const auto s = parallel::ensemble<double>(64, task, Mode::serial);
    const auto o = parallel::ensemble<double>(64, task, Mode::openmp);
    for (std::size_t i = 0; i < 64; ++i) CHECK(same_bits(s[i], o[i]));
  }

  TEST_CASE("zero signed sums") {
    RngStream rng(5, 0);
    std::vector<std::vector<std::uint32_t>> corpus;
    for (int t = 0; t < 60; ++t) {
      std::vector<std::uint32_t> sizes(1 + rng.below(16));
      for (auto& x : sizes) x = 1 + static_cast<std::uint32_t>(rng.below(5));
      corpus.push_back(sizes);
    }
    const auto s = parallel::count_zero_signed_sums(corpus, Mode::serial);
    const auto o = parallel::count_zero_signed_sums(corpus, Mode::openmp);
    CHECK(s == o);
    for (std::size_t i = 0; i < corpus.size(); ++i) CHECK(s[i] == oracle::brute_zero_sums(corpus[i]));
    CHECK(parallel::count_zero_signed_sums(std::vector<std::uint32_t>{1, 1, 2}) == 2);
    CHECK(parallel::thread_count() >= 1);
  }
}
