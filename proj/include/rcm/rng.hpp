#pragma once

#include <cstdint>
#include <span>

namespace rcm {

// Counter-based splittable random stream. The state is a plain counter;
// every output is a keyed hash of it (splitmix64 finalizer, Stafford mix13),
// so streams with distinct (seed, stream) ids are decorrelated and a stream
// can be replayed or skipped ahead at will. One stream per trajectory or
// per omega-sequence keeps parallel Monte Carlo reproducible.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream) {
    key_ = mix(seed ^ 0x9e3779b97f4a7c15ull);
    gamma_ = mix(stream ^ 0xbf58476d1ce4e5b9ull) | 1ull;  // odd increment per stream
    ctr_ = 0;
  }

  std::uint64_t next_u64() { return mix(key_ + (++ctr_) * gamma_); }

  // uniform in [0,1) with 53 random bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // index into a cumulative weight table (weights sum to 1)
  std::size_t pick(std::span<const double> cumulative) {
    const double u = uniform01();
    std::size_t lo = 0, hi = cumulative.size();
    while (lo + 1 < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cumulative[mid - 1]) hi = mid; else lo = mid;
    }
    return lo;
  }

  std::uint64_t counter() const { return ctr_; }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30; z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27; z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

private:
  std::uint64_t key_;
  std::uint64_t gamma_;
  std::uint64_t ctr_;
};

}  // namespace rcm
