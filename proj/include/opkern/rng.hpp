#pragma once

#include <cstdint>

namespace opkern::rng {

/// Counter-based stream: every variate is a pure function of
/// (seed, stream, counter, lane), so any partition of a sample range
/// reproduces the same numbers.
///
/// Uniforms come from two rounds of the SplitMix64 finalizer over the packed
/// counter; normals use the inverse normal CDF of that uniform.
std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                   std::uint64_t lane);

/// Uniform in the open interval (0, 1).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter, std::uint64_t lane);

/// Standard normal N(0, 1) by inverse CDF.
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter, std::uint64_t lane);

/// Stream ids keep independent consumers of one seed apart.
enum Stream : std::uint64_t {
  kPathStream = 1,
  kKernelStream = 2,
  kGeneratorStream = 3,
};

}  // namespace opkern::rng
