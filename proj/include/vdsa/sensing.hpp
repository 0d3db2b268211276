#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "vdsa/error.hpp"

namespace vdsa::sensing {

/// Energy-detector operating point. Powers are linear (mW).
struct SensingParams {
  double noise_power{1.0};
  double dtt_power{0.0};
  double signal_power{0.0};
  std::int64_t sample_count{1};
  double target_pfa{0.01};
  double target_pd{0.99};

  double null_power() const { return dtt_power + noise_power; }
};

/// Gaussian tail probability Q(x) = P(Z > x).
inline double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double q_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("q_inverse: probability must lie in (0, 1)");
  return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// CFAR threshold for the configured false-alarm target.
inline double threshold(const SensingParams& p) {
  const double n = static_cast<double>(p.sample_count);
  return p.null_power() * (std::sqrt(2.0 / n) * q_inverse(p.target_pfa) + 1.0);
}

inline double pfa(const SensingParams& p, double gamma) {
  const double s0 = p.null_power();
  const double n = static_cast<double>(p.sample_count);
  return q_function((gamma - s0) / (std::sqrt(2.0 / n) * s0));
}

inline double pd(const SensingParams& p, double gamma) {
  const double s1 = p.signal_power + p.null_power();
  const double n = static_cast<double>(p.sample_count);
  return q_function((gamma - s1) / (std::sqrt(2.0 / n) * s1));
}

struct SampleRequirement {
  std::int64_t samples{1};
  /// True when the closed form exceeded `max_samples` and was clamped:
  /// the target pair is out of reach within the allowed sensing time.
  bool capped{false};
};

inline constexpr std::int64_t kDefaultMaxSamples = 1'000'000;

/// Smallest N_s reaching (pfa, pd) at the given linear SINR, obtained by
/// equating the CFAR threshold with the detection-side threshold.
inline SampleRequirement required_samples(double sinr, double target_pfa, double target_pd,
                                          std::int64_t max_samples = kDefaultMaxSamples) {
  if (!(sinr > 0.0) || !std::isfinite(sinr))
    throw InfeasibleSensing("required_samples: SINR must be positive and finite, got " + std::to_string(sinr));
  const double margin = q_inverse(target_pfa) - (1.0 + sinr) * q_inverse(target_pd);
  // margin <= 0: the CFAR threshold already meets the detection target at N_s = 1.
  if (margin <= 0.0) return {1, false};
  const double n = std::ceil(2.0 * margin * margin / (sinr * sinr));
  if (!std::isfinite(n) || n > static_cast<double>(max_samples)) return {max_samples, true};
  return {std::max<std::int64_t>(1, static_cast<std::int64_t>(n)), false};
}

}  // namespace vdsa::sensing
