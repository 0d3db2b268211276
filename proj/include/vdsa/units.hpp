#pragma once

#include <cmath>
#include <limits>

namespace vdsa {

/// Road-local Cartesian position in meters: x along the motorway, y across it.
struct Vec2 {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline double mw_to_dbm(double mw) {
  if (mw <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(mw);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) {
  if (ratio <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ratio);
}

inline constexpr double kSpeedOfLight = 299792458.0;

/// Thermal noise floor kTB at 290 K plus receiver noise figure.
inline double thermal_noise_mw(double bandwidth_hz, double noise_figure_db) {
  return dbm_to_mw(-174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

/// Free-space loss at `distance_m` for a carrier at `frequency_hz`.
inline double free_space_loss_db(double distance_m, double frequency_hz) {
  const double lambda = kSpeedOfLight / frequency_hz;
  return 20.0 * std::log10(4.0 * M_PI * distance_m / lambda);
}

}  // namespace vdsa
