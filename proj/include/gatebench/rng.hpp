#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gatebench {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent RNG streams derived from one run seed. Each simulated concern
/// (driver sampling, environment progress, latency, faults, verifier) draws
/// from its own stream so that removing one concern (e.g. fault injection
/// during replay) does not shift the others.
enum class Stream : std::uint64_t {
  driver = 1,
  env_progress = 2,
  env_latency = 3,
  faults = 4,
  verifier = 5,
  background = 6,
  policy = 7,
  decision = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    Stream stream) noexcept {
  return mix64(mix64(seed ^ mix64(index + 0x51ed2701ULL)) ^
               (static_cast<std::uint64_t>(stream) * 0x2545f4914f6cdd1dULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  // Box-Muller on our own uniforms; avoids the unspecified caching behaviour
  // of std::normal_distribution so draws are a pure function of call count.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Log-normal draw parameterised by its arithmetic mean and coefficient of
  /// variation. cv == 0 returns the mean exactly.
  double lognormal_mean_cv(double mean, double cv) {
    if (cv <= 0.0) return mean;
    const double sigma2 = std::log1p(cv * cv);
    const double mu = std::log(mean) - 0.5 * sigma2;
    return std::exp(mu + std::sqrt(sigma2) * normal());
  }

  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gatebench
