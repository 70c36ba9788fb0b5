#pragma once

#include <cstdint>

#include "opkern/transfer.hpp"

namespace opkern {

/// Seeded contraction on C^d with spectral norm exactly `norm`.
Mat random_contraction(std::uint64_t seed, std::size_t dim_h, double norm = 0.9);

/// A system satisfying the balance law by construction: random p.d. K2, L2,
/// increment D and contraction T, then L1 = L2 + D and K1 = K2 + T^*D T.
/// L2 is full rank, and seeds are redrawn until the left-invertibility ratio
/// of V_L2(s) - D V_L1(s) is >= min_ratio at every label.
SignedKernelSystem random_valid_system(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                       double min_ratio = 1e-6);

/// Like random_valid_system but with K1 <= K2: random K1, L1, D and T, then
/// L2 = L1 + D and K2 = K1 + T^*D T.
SignedKernelSystem random_dominated_system(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                           double min_ratio = 1e-6);

}  // namespace opkern
