#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace tboot {

namespace detail {

// splitmix64 output function, used both as a bit mixer for key derivation
// and to expand a 64-bit seed into generator state.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Counter-splittable random stream: every stream is identified by a 64-bit
// key, and child streams are derived by mixing the parent key with a child
// index. Work units keyed by (master seed, repetition, replicate, ...) get
// statistically independent streams without any shared state.
//
// The core generator is xoshiro256++ seeded through splitmix64.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key), has_spare_(false) {
    std::uint64_t s = key;
    for (auto& word : state_) word = detail::mix64(s++);
    // xoshiro state must not be all zero; mix64 of consecutive ints never is,
    // but keep the guard explicit.
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t key() const { return key_; }

  // Derive an independent stream; derivation depends only on (key, index).
  RngStream child(std::uint64_t index) const {
    return RngStream(detail::mix64(key_ ^ detail::mix64(index)));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0 so log(u) is always finite.
  double uniform() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Poisson draw: CDF inversion for small rates, Hormann's PTRS transformed
  // rejection for large ones.
  long poisson(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("poisson: rate must be > 0");
    if (rate < 10.0) return poisson_inversion(rate);
    return poisson_ptrs(rate);
  }

  // Index in [0, n) with probabilities from a contiguous row (need not be
  // exactly normalized; trailing leakage goes to the last index).
  int categorical(const double* prob, int n) {
    double u = uniform();
    for (int i = 0; i < n - 1; ++i) {
      u -= prob[i];
      if (u <= 0.0) return i;
    }
    return n - 1;
  }

 private:
  long poisson_inversion(double rate) {
    const double u = uniform();
    double pmf = std::exp(-rate);
    double cdf = pmf;
    long k = 0;
    const long cap = static_cast<long>(10.0 * rate) + 200;
    while (u > cdf && k < cap) {
      ++k;
      pmf *= rate / static_cast<double>(k);
      cdf += pmf;
    }
    return k;
  }

  long poisson_ptrs(double rate) {
    const double log_rate = std::log(rate);
    const double b = 0.931 + 2.53 * std::sqrt(rate);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::abs(u);
      const long k =
          static_cast<long>(std::floor((2.0 * a / us + b) * u + rate + 0.43));
      if (us >= 0.07 && v <= v_r) return k;
      if (k < 0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          -rate + static_cast<double>(k) * log_rate -
              std::lgamma(static_cast<double>(k) + 1.0)) {
        return k;
      }
    }
  }

  std::uint64_t key_;
  std::uint64_t state_[4];
  bool has_spare_;
  double spare_ = 0.0;
};

}  // namespace tboot
