#include "opkern/rng.hpp"

#include <boost/math/distributions/normal.hpp>

namespace opkern::rng {

namespace {

constexpr std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t hash(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
                   std::uint64_t lane) {
  std::uint64_t h = splitmix(seed ^ splitmix(stream));
  h = splitmix(h ^ counter);
  return splitmix(h ^ (lane * 0xd1b54a32d192ed03ULL));
}

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
               std::uint64_t lane) {
  // 53 random bits centred in their cell, never 0 or 1
  const std::uint64_t bits = hash(seed, stream, counter, lane) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter,
              std::uint64_t lane) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, uniform(seed, stream, counter, lane));
}

}  // namespace opkern::rng
