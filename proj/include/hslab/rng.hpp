#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace hslab {

// Splittable pseudo-random stream: splitmix64 with a per-stream increment
// derived from the stream id (SplittableRandom-style gamma). The raw 64-bit
// output depends only on (seed, stream_id) and is platform independent;
// floating-point variates are deterministic on a given platform/libm.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-streams/1";

  RngStream() : RngStream(0, 0) {}

  RngStream(std::uint64_t seed, std::uint64_t stream_id) {
    state_ = mix(seed + 0x9E3779B97F4A7C15ULL * stream_id);
    increment_ = mix(stream_id ^ 0xD1B54A32D192ED03ULL) | 1ULL;  // must be odd
  }

  std::uint64_t next_u64() {
    state_ += increment_;
    return mix(state_);
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential() { return -std::log1p(-uniform01()); }

  double normal() {
    // Box-Muller; the paired variate is discarded to keep the stream stateless
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double rad = std::sqrt(-2.0 * std::log1p(-u1));
    return rad * std::cos(6.283185307179586476925286766559 * u2);
  }

  long poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    // sum of exponential inter-arrival times; O(mean) draws
    double acc = exponential();
    long k = 0;
    while (acc < mean) {
      acc += exponential();
      ++k;
    }
    return k;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t increment_ = 1;
};

}  // namespace hslab
