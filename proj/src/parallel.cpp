#include "socising/parallel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace socising::parallel {

int thread_count() { return omp_get_max_threads(); }

double ordered_sum(std::span<const double> values, Mode mode) {
  const std::size_t chunks = (values.size() + kReductionChunk - 1) / kReductionChunk;
  std::vector<double> partial(chunks, 0.0);
  auto sum_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kReductionChunk;
    const std::size_t end = std::min(values.size(), begin + kReductionChunk);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += values[i];
    partial[c] = s;
  };
  if (mode == Mode::openmp) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) sum_chunk(static_cast<std::size_t>(c));
  } else {
    for (std::size_t c = 0; c < chunks; ++c) sum_chunk(c);
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

namespace {

constexpr std::size_t kMaxKernelVertices = 64;

// Cluster count of one mask with a fixed-size union-find. With wired
// boundary all boundary vertices start in one set.
std::size_t mask_cluster_count(const BoxGeometry& g, std::uint64_t mask, bool wired) {
  std::array<std::uint8_t, kMaxKernelVertices> parent{};
  const std::size_t nv = g.vertex_count();
  for (std::size_t v = 0; v < nv; ++v) parent[v] = static_cast<std::uint8_t>(v);
  auto find = [&](std::uint8_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = nv;
  auto unite = [&](std::uint8_t a, std::uint8_t b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[b] = a;
      --components;
    }
  };
  if (wired) {
    const auto boundary = g.boundary();
    for (std::size_t i = 1; i < boundary.size(); ++i)
      unite(static_cast<std::uint8_t>(boundary[0]), static_cast<std::uint8_t>(boundary[i]));
  }
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    if (mask >> e & 1u) unite(static_cast<std::uint8_t>(g.edge(e).u), static_cast<std::uint8_t>(g.edge(e).v));
  return components;
}

}  // namespace

std::vector<double> fk_weights(const GeometryPtr& geometry, const FKParams& params, Mode mode) {
  params.validate();
  const auto& g = *geometry;
  if (g.edge_count() > kMaxEnumerationEdges)
    throw std::invalid_argument("fk_weights: " + std::to_string(g.edge_count()) + " edges exceed " +
                                std::to_string(kMaxEnumerationEdges));
  const std::uint64_t count = std::uint64_t{1} << g.edge_count();
  std::vector<double> w(count);

  if (mode == Mode::serial) {
    for (std::uint64_t mask = 0; mask < count; ++mask) w[mask] = fk_weight(BondConfig::from_mask(geometry, mask), params);
    return w;
  }

  const bool wired = params.bc == BoundaryCondition::wired;
  const auto edges = static_cast<int>(g.edge_count());
  // std::pow tables so every mask's weight is the same product the
  // reference computes.
  std::vector<double> q_pow(g.vertex_count() + 1), edge_part(static_cast<std::size_t>(edges) + 1);
  for (std::size_t k = 0; k < q_pow.size(); ++k) q_pow[k] = std::pow(params.q, static_cast<double>(k));
  for (int o = 0; o <= edges; ++o)
    edge_part[static_cast<std::size_t>(o)] =
        std::pow(params.p, static_cast<double>(o)) * std::pow(1.0 - params.p, static_cast<double>(edges - o));
#pragma omp parallel for schedule(static, kReductionChunk)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    const auto mask = static_cast<std::uint64_t>(i);
    const auto k = mask_cluster_count(g, mask, wired);
    w[mask] = q_pow[k] * edge_part[static_cast<std::size_t>(std::popcount(mask))];
  }
  return w;
}

std::uint64_t count_zero_signed_sums(std::span<const std::uint32_t> sizes) {
  if (sizes.size() > 30) throw std::invalid_argument("count_zero_signed_sums: at most 30 clusters");
  // Start with all signs +, then flip one sign per Gray-code step.
  std::int64_t sum = 0;
  for (auto s : sizes) sum += s;
  std::vector<std::int8_t> sign(sizes.size(), 1);
  std::uint64_t zeros = sum == 0 ? 1 : 0;
  const std::uint64_t total = std::uint64_t{1} << sizes.size();
  for (std::uint64_t i = 1; i < total; ++i) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(i));
    sum -= 2 * sign[bit] * static_cast<std::int64_t>(sizes[bit]);
    sign[bit] = static_cast<std::int8_t>(-sign[bit]);
    if (sum == 0) ++zeros;
  }
  return zeros;
}

std::vector<std::uint64_t> count_zero_signed_sums(const std::vector<std::vector<std::uint32_t>>& corpus,
                                                  Mode mode) {
  return ensemble<std::uint64_t>(
      corpus.size(), [&](std::size_t i) { return count_zero_signed_sums(corpus[i]); }, mode);
}

}  // namespace socising::parallel
