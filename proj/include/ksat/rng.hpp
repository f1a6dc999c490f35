#pragma once

#include <cmath>
#include <cstdint>

namespace ksat {

namespace detail {

inline uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based pseudo-random stream (SplitMix64 core).  Substreams are
// derived by hashing a tag into the state, so any parallel loop can give each
// item its own stream and the results do not depend on scheduling or thread
// count.
class RngStream {
 public:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit RngStream(uint64_t seed) : state_(detail::mix64(seed + kGamma)) {}

  RngStream child(uint64_t tag) const {
    RngStream r(*this);
    r.state_ = detail::mix64(state_ ^ detail::mix64(tag * kGamma + 0x632BE59BD9B4E019ull));
    return r;
  }

  uint64_t u64() {
    state_ += kGamma;
    return detail::mix64(state_);
  }

  // Uniform in [0,1).
  double u01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0,1); never returns an exact endpoint.
  double u01_open() { return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform index in [0,n) without modulo bias (fixed-point multiply).
  uint32_t index(uint32_t n) {
    return static_cast<uint32_t>((static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  // Fair +1/-1.
  int sign() { return (u64() >> 63) ? 1 : -1; }

  bool bernoulli(double p) { return u01() < p; }

  // Poisson draw: inversion below mean 30, Hoermann's PTRS rejection above.
  uint64_t poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  uint64_t poisson_inversion(double lambda) {
    const double limit = std::exp(-lambda);
    uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= u01_open();
    } while (p > limit);
    return k - 1;
  }

  uint64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = u01() - 0.5;
      double v = u01_open();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<uint64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          kf * loglam - lambda - std::lgamma(kf + 1.0))
        return static_cast<uint64_t>(kf);
    }
  }

  uint64_t state_;
};

}  // namespace ksat
