// Serial vs OpenMP timings for path sampling and covariance reduction.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <optional>

#include "opkern/builders.hpp"
#include "opkern/gaussian.hpp"

using namespace opkern;

namespace {

template <class F>
double time_it(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
  std::printf("threads %d, samples %zu\n", omp_get_max_threads(), samples);
  std::printf("%6s %4s %12s %12s %12s %12s %9s\n", "labels", "d", "sample_ser", "sample_par", "cov_ser",
              "cov_par", "rel_gap");
  for (std::size_t labels : {2, 4, 8})
    for (std::size_t d : {1, 2, 4}) {
      const auto k = random_pd_kernel(labels * 10 + d, labels, d, labels * d);
      const auto sampler = make_sampler(k, 1);
      std::optional<PathBatch> ser, par;
      const double ts = time_it([&] { ser.emplace(sampler.sample(0, samples, Execution::kSerial)); });
      const double tp = time_it([&] { par.emplace(sampler.sample(0, samples, Execution::kParallel)); });
      std::optional<OperatorKernelTable> cs, cp;
      const double tcs = time_it([&] { cs.emplace(empirical_covariance(*ser, Execution::kSerial)); });
      const double tcp = time_it([&] { cp.emplace(empirical_covariance(*par, Execution::kParallel)); });
      const double gap = (cs->gram() - cp->gram()).norm() / cs->gram().norm();
      std::printf("%6zu %4zu %12.4f %12.4f %12.4f %12.4f %9.1e\n", labels, d, ts, tp, tcs, tcp, gap);
    }
}
