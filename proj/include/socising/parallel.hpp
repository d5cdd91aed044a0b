#pragma once

// Data-parallel kernels. Each kernel has an OpenMP path and a serial
// reference path; both produce bit-identical results because work is split
// into fixed chunks that are reduced in index order.

#include <omp.h>

#include <cstdint>
#include <span>
#include <vector>

#include "socising/fk.hpp"
#include "socising/lattice.hpp"

namespace socising::parallel {

enum class Mode { serial, openmp };

inline constexpr std::size_t kReductionChunk = 4096;

int thread_count();

/// Σ values, summed per fixed chunk and then across chunks in order.
double ordered_sum(std::span<const double> values, Mode mode);

/// Unnormalized FK weight of every edge mask of a small box. The OpenMP
/// path uses a mask-level union-find; the serial path goes through
/// BondConfig / decompose / fk_weight.
std::vector<double> fk_weights(const GeometryPtr& geometry, const FKParams& params, Mode mode);

/// results[i] = task(i) for i < count. Tasks must only touch their own
/// state (typically an RngStream derived from i).
template <class Result, class Task>
std::vector<Result> ensemble(std::size_t count, Task&& task, Mode mode) {
  std::vector<Result> results(count);
  if (mode == Mode::openmp) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i)
      results[static_cast<std::size_t>(i)] = task(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < count; ++i) results[i] = task(i);
  }
  return results;
}

/// Number of the 2^k sign vectors ε with Σ sizes[i] ε_i = 0, by Gray-code
/// enumeration. k <= 30.
std::uint64_t count_zero_signed_sums(std::span<const std::uint32_t> sizes);

/// count_zero_signed_sums over a corpus of instances.
std::vector<std::uint64_t> count_zero_signed_sums(const std::vector<std::vector<std::uint32_t>>& corpus,
                                                  Mode mode);

}  // namespace socising::parallel
