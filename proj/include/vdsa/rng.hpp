#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

namespace vdsa {

/// Seeded generator with platform-stable uniform/normal draws.
///
/// std::uniform_real_distribution and std::normal_distribution are
/// implementation-defined, so the conversions live here to keep runs
/// bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n].
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t span = n + 1;
    if (span == 0) return engine_();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % span;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_{0.0};
  bool has_spare_{false};
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Keyed log-normal shadowing. A draw is a pure function of
/// (seed, link key, period), so every call site sees the same realization
/// without storing per-link state.
class ShadowingField {
 public:
  static constexpr std::size_t kLevels = 1u << 14;

  ShadowingField(std::uint64_t seed, double sigma_db)
      : seed_(splitmix64(seed)), sigma_db_(sigma_db), db_(kLevels), factor_(kLevels) {
    // Mid-point quantiles of the standard normal; tails are truncated at
    // roughly +/-4.1 sigma, which is irrelevant for link budgets.
    for (std::size_t i = 0; i < kLevels; ++i) {
      const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(kLevels);
      const double z = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
      db_[i] = sigma_db * z;
      factor_[i] = std::pow(10.0, -db_[i] / 10.0);
    }
  }

  double sigma_db() const { return sigma_db_; }

  /// Extra loss in dB (positive = weaker link).
  double loss_db(std::uint64_t a, std::uint64_t b, std::uint64_t period) const {
    if (sigma_db_ == 0.0) return 0.0;
    return db_[index(a, b, period)];
  }

  /// Linear multiplier applied to the mean link gain.
  double factor(std::uint64_t a, std::uint64_t b, std::uint64_t period) const {
    if (sigma_db_ == 0.0) return 1.0;
    return factor_[index(a, b, period)];
  }

 private:
  std::size_t index(std::uint64_t a, std::uint64_t b, std::uint64_t period) const {
    // Unordered pair: links are reciprocal.
    const std::uint64_t lo = a < b ? a : b;
    const std::uint64_t hi = a < b ? b : a;
    std::uint64_t h = hash_combine(seed_, lo);
    h = hash_combine(h, hi);
    h = hash_combine(h, period);
    return static_cast<std::size_t>(h >> (64 - 14));
  }

  std::uint64_t seed_;
  double sigma_db_;
  std::vector<double> db_;
  std::vector<double> factor_;
};

}  // namespace vdsa
