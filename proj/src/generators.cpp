#include "opkern/generators.hpp"

#include <functional>

#include "opkern/builders.hpp"
#include "opkern/rng.hpp"

namespace opkern {

namespace {

constexpr int kMaxAttempts = 64;

std::uint64_t sub_seed(std::uint64_t seed, int attempt, std::uint64_t component) {
  return rng::hash(seed, rng::kGeneratorStream, static_cast<std::uint64_t>(attempt), component);
}

std::size_t random_rank(std::uint64_t seed, std::size_t full) {
  // uniform in [1, full]
  const double u = rng::uniform(seed, rng::kGeneratorStream, 99, 0);
  return 1 + std::min(full - 1, static_cast<std::size_t>(u * static_cast<double>(full)));
}

SignedKernelSystem retry(std::uint64_t seed, double min_ratio,
                         const std::function<SignedKernelSystem(int)>& draw) {
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    SignedKernelSystem sys = draw(attempt);
    try {
      const TransferRealization real = construct_partial_isometry(sys);
      if (invertibility_ratio(real) >= min_ratio) return sys;
    } catch (const GramMismatch&) {
      // numerically unlucky draw; try the next one
    }
  }
  throw InternalInvariantViolation("no admissible system found for seed " + std::to_string(seed));
}

}  // namespace

Mat random_contraction(std::uint64_t seed, std::size_t dim_h, double norm) {
  const auto d = static_cast<Eigen::Index>(dim_h);
  const Mat g = random_complex_matrix(seed, rng::kGeneratorStream, d, d);
  return g * (norm / linalg::op_norm(g));
}

SignedKernelSystem random_valid_system(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                       double min_ratio) {
  const std::size_t full = n * dim_h;
  return retry(seed, min_ratio, [&](int attempt) {
    const auto k2 = random_pd_kernel(sub_seed(seed, attempt, 1), n, dim_h,
                                     random_rank(sub_seed(seed, attempt, 6), full));
    const auto l2 = random_pd_kernel(sub_seed(seed, attempt, 2), n, dim_h, full);
    const auto delta = random_pd_kernel(sub_seed(seed, attempt, 3), n, dim_h,
                                        random_rank(sub_seed(seed, attempt, 7), full));
    const Mat t = random_contraction(sub_seed(seed, attempt, 4), dim_h);
    return SignedKernelSystem{k2 + delta.congruence(t), k2, l2 + delta, l2, t};
  });
}

SignedKernelSystem random_dominated_system(std::uint64_t seed, std::size_t n, std::size_t dim_h,
                                           double min_ratio) {
  const std::size_t full = n * dim_h;
  return retry(seed, min_ratio, [&](int attempt) {
    const auto k1 = random_pd_kernel(sub_seed(seed, attempt, 1), n, dim_h,
                                     random_rank(sub_seed(seed, attempt, 6), full));
    const auto l1 = random_pd_kernel(sub_seed(seed, attempt, 2), n, dim_h, full);
    const auto delta = random_pd_kernel(sub_seed(seed, attempt, 3), n, dim_h,
                                        random_rank(sub_seed(seed, attempt, 7), full));
    const Mat t = random_contraction(sub_seed(seed, attempt, 4), dim_h);
    return SignedKernelSystem{k1, k1 + delta.congruence(t), l1, l1 + delta, t};
  });
}

}  // namespace opkern
