#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "vdsa/error.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/units.hpp"

namespace vdsa {

enum class PathlossVariant { DualSlope5g9, TvwsLogDistance };

/// Log-distance path loss with an optional second slope beyond the breakpoint.
/// The TVWS variant is the same form with the far exponent equal to the near one.
struct PathlossModel {
  PathlossVariant variant{PathlossVariant::DualSlope5g9};
  double reference_distance_m{10.0};
  double reference_loss_db{0.0};
  double exponent_near{2.1};
  double exponent_far{3.8};
  double breakpoint_m{100.0};
  double shadowing_sigma_db{3.0};

  static PathlossModel dual_slope_5g9(double carrier_hz = 5.9e9) {
    PathlossModel m;
    m.variant = PathlossVariant::DualSlope5g9;
    m.reference_distance_m = 10.0;
    m.reference_loss_db = free_space_loss_db(m.reference_distance_m, carrier_hz);
    m.exponent_near = 2.1;
    m.exponent_far = 3.8;
    m.breakpoint_m = 100.0;
    m.shadowing_sigma_db = 3.0;
    return m;
  }

  static PathlossModel tvws(double carrier_hz = 506e6) {
    PathlossModel m;
    m.variant = PathlossVariant::TvwsLogDistance;
    m.reference_distance_m = 10.0;
    m.reference_loss_db = free_space_loss_db(m.reference_distance_m, carrier_hz);
    m.exponent_near = 2.0;
    m.exponent_far = 2.0;
    m.breakpoint_m = 100.0;
    m.shadowing_sigma_db = 3.0;
    return m;
  }

  void validate() const {
    if (!(reference_distance_m > 0.0)) throw InvariantViolation("pathloss: d0 must be > 0");
    if (!(breakpoint_m >= reference_distance_m)) throw InvariantViolation("pathloss: breakpoint must be >= d0");
    if (exponent_near < 0.0 || exponent_far < 0.0) throw InvariantViolation("pathloss: exponents must be >= 0");
    if (shadowing_sigma_db < 0.0) throw InvariantViolation("pathloss: shadowing sigma must be >= 0");
    if (!std::isfinite(reference_loss_db)) throw InvariantViolation("pathloss: reference loss must be finite");
  }

  double far_exponent() const {
    return variant == PathlossVariant::TvwsLogDistance ? exponent_near : exponent_far;
  }

  /// Mean loss in dB; distances below d0 get the d0 loss.
  double loss_db(double distance_m) const {
    const double d = std::max(distance_m, reference_distance_m);
    if (d <= breakpoint_m) return reference_loss_db + 10.0 * exponent_near * std::log10(d / reference_distance_m);
    return reference_loss_db + 10.0 * exponent_near * std::log10(breakpoint_m / reference_distance_m) +
           10.0 * far_exponent() * std::log10(d / breakpoint_m);
  }

  /// Mean linear gain, same clamping as loss_db. Hot path for the MAC.
  double mean_gain(double distance_m) const {
    const double d = std::max(distance_m, reference_distance_m);
    const double g0 = std::pow(10.0, -reference_loss_db / 10.0);
    if (d <= breakpoint_m) return g0 * std::pow(d / reference_distance_m, -exponent_near);
    return g0 * std::pow(breakpoint_m / reference_distance_m, -exponent_near) *
           std::pow(d / breakpoint_m, -far_exponent());
  }
};

/// Linear power gain |h|^2 of a link, antenna gains included.
struct LinkGain {
  double value{0.0};
  double db() const { return linear_to_db(value); }
};

inline LinkGain link_gain(const PathlossModel& model, Vec2 tx, Vec2 rx, double shadowing_db) {
  if (tx == rx) throw DegenerateGeometry("link endpoints coincide");
  const double loss = model.loss_db(distance(tx, rx)) + shadowing_db;
  return LinkGain{std::pow(10.0, -loss / 10.0)};
}

/// Step function of absolute center-frequency offset.
class AcirTable {
 public:
  struct Breakpoint {
    double offset_hz;
    double acir;
  };

  AcirTable() : points_{{0.0, 1.0}} {}

  explicit AcirTable(std::vector<Breakpoint> points) : points_(std::move(points)) { validate(); }

  const std::vector<Breakpoint>& points() const { return points_; }

  double operator()(double f_a_hz, double f_b_hz) const { return at_offset(std::abs(f_a_hz - f_b_hz)); }

  double at_offset(double offset_hz) const {
    // Greatest breakpoint <= offset; offset 0 is always present.
    auto it = std::upper_bound(points_.begin(), points_.end(), offset_hz,
                               [](double v, const Breakpoint& b) { return v < b.offset_hz; });
    return std::prev(it)->acir;
  }

  /// "offset:acir, offset:acir, ..." with offsets in Hz.
  static AcirTable parse(const std::string& text) {
    std::vector<Breakpoint> pts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("ACIR entry '" + item + "' lacks ':'");
      try {
        pts.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
      } catch (const std::exception&) {
        throw ConfigError("ACIR entry '" + item + "' is not numeric");
      }
    }
    return AcirTable(std::move(pts));
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (i) s += ", ";
      s += detail::format_double(points_[i].offset_hz) + ":" + detail::format_double(points_[i].acir);
    }
    return s;
  }

 private:
  void validate() const {
    if (points_.empty() || points_.front().offset_hz != 0.0)
      throw InvariantViolation("ACIR table needs a co-channel (offset 0) entry");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& p = points_[i];
      if (!(p.acir > 0.0 && p.acir <= 1.0)) throw InvariantViolation("ACIR values must lie in (0, 1]");
      if (i > 0) {
        if (!(p.offset_hz > points_[i - 1].offset_hz))
          throw InvariantViolation("ACIR offsets must be strictly increasing");
        if (p.acir > points_[i - 1].acir) throw InvariantViolation("ACIR must not increase with offset");
      }
    }
  }

  std::vector<Breakpoint> points_;
};

/// The three coupling directions used by the interference terms.
struct AcirSet {
  AcirTable vehicle_to_vehicle;
  AcirTable dtt_to_vehicle;
  AcirTable vehicle_to_dtt;

  /// Vehicle channel width `vehicle_bw_hz`, DTT channel width `dtt_bw_hz`.
  static AcirSet defaults(double vehicle_bw_hz = 10e6, double dtt_bw_hz = 8e6) {
    AcirSet s;
    s.vehicle_to_vehicle = AcirTable({{0.0, 1.0}, {vehicle_bw_hz, 0.01}, {2.0 * vehicle_bw_hz, 0.001}});
    // Channels stop overlapping at half the summed widths.
    const double adjacent = 0.5 * (vehicle_bw_hz + dtt_bw_hz);
    const AcirTable dtt({{0.0, 1.0}, {adjacent, std::pow(10.0, -3.95)}, {adjacent + dtt_bw_hz, 1e-6}});
    s.dtt_to_vehicle = dtt;
    s.vehicle_to_dtt = dtt;
    return s;
  }
};

/// Aggregate DTT power leaking into a vehicle receiver tuned to `f_hz`, in mW.
/// Sums every modeled channel, protected or not.
inline double dtt_interference_at(Vec2 vehicle, double f_hz, const RemDatabase& rem, const AcirTable& table) {
  if (rem.transmitters().empty()) return 0.0;
  const double* powers = rem.grid().cell_mw(vehicle);
  const auto& chans = rem.channels();
  double total = 0.0;
  for (std::size_t s = 0; s < chans.size(); ++s) {
    for (const auto& t : rem.transmitters())
      if (t.channel == chans[s]) {
        total += powers[s] * table(t.center_frequency_hz, f_hz);
        break;
      }
  }
  return total;
}

}  // namespace vdsa
