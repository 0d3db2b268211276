#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vdsa/error.hpp"
#include "vdsa/rng.hpp"
#include "vdsa/units.hpp"

namespace vdsa {

enum class VehicleKind { Leader, Member, Jammer, Background };

struct Vehicle {
  int id{0};
  int lane{0};
  double x{0.0};
  double speed{0.0};
  VehicleKind kind{VehicleKind::Background};
  int platoon_id{-1};
  /// Position within the platoon, 0 = leader; -1 otherwise.
  int index{-1};
  /// +1 travels towards increasing x.
  int direction{1};
};

struct PlatoonConfig {
  int size{8};
  double intra_gap_m{10.0};
  int lane{0};
  int direction{1};
  /// Leader position at t = 0.
  double initial_x_m{0.0};
  double cruise_speed_mps{130.0 / 3.6};
  /// Leader-to-jammer gap the leader tracks.
  double standoff_m{50.0};

  void validate() const {
    if (size < 2) throw ConfigError("platoon size must be >= 2");
    if (!(intra_gap_m > 0.0)) throw ConfigError("platoon intra_gap must be > 0");
    if (direction != 1 && direction != -1) throw ConfigError("platoon direction must be +1 or -1");
  }
};

struct JammerProfile {
  double v_high_mps{130.0 / 3.6};
  double v_low_mps{100.0 / 3.6};
  double cycle_s{30.0};

  void validate() const {
    if (!(v_high_mps > v_low_mps && v_low_mps > 0.0)) throw ConfigError("jammer speeds need v_high > v_low > 0");
    if (!(cycle_s > 0.0)) throw ConfigError("jammer cycle must be > 0");
  }
};

struct RoadConfig {
  double length_m{10000.0};
  int lanes{6};
  double lane_width_m{3.5};

  double lane_center_y(int lane) const { return (lane + 0.5) * lane_width_m; }
};

/// Gap-tracking controller gains; the jammer-following leader and every
/// follower use the same law.
struct TrackingParams {
  double max_accel_mps2{3.0};
  double gap_gain{0.5};
  double speed_gain{1.4};
  /// Hard floor on any same-lane gap.
  double min_gap_m{1.0};
};

/// Triangular speed cycle: v_high -> v_low over the first half, back over the second.
inline double jammer_speed(double t, const JammerProfile& p) {
  double phase = std::fmod(t, p.cycle_s);
  if (phase < 0.0) phase += p.cycle_s;
  const double half = 0.5 * p.cycle_s;
  const double dv = p.v_high_mps - p.v_low_mps;
  if (phase <= half) return p.v_high_mps - dv * (phase / half);
  return p.v_low_mps + dv * ((phase - half) / half);
}

/// Uniformly placed background traffic. Per lane the count is
/// round(density * length_km); ids start at `first_id`.
inline std::vector<Vehicle> spawn_background(double density_per_km_lane, const std::vector<int>& lanes,
                                             double road_length_m, Rng& rng, int first_id = 0,
                                             const std::vector<double>& lane_speeds_mps = {},
                                             const std::vector<int>& lane_directions = {}) {
  std::vector<Vehicle> out;
  if (density_per_km_lane <= 0.0) return out;
  const auto per_lane = static_cast<int>(std::lround(density_per_km_lane * road_length_m / 1000.0));
  int id = first_id;
  for (std::size_t li = 0; li < lanes.size(); ++li) {
    for (int n = 0; n < per_lane; ++n) {
      Vehicle v;
      v.id = id++;
      v.lane = lanes[li];
      v.x = rng.uniform(0.0, road_length_m);
      v.speed = li < lane_speeds_mps.size() ? lane_speeds_mps[li] : 30.0;
      v.direction = li < lane_directions.size() ? lane_directions[li] : 1;
      v.kind = VehicleKind::Background;
      out.push_back(v);
    }
  }
  return out;
}

/// Vehicle kinematics on a ring road of length road.length_m.
class World {
 public:
  World(RoadConfig road, JammerProfile jammer, TrackingParams tracking)
      : road_(road), jammer_(jammer), tracking_(tracking) {
    jammer_.validate();
  }

  /// Adds a jammer and a converged platoon behind it. Returns the platoon id.
  int add_platoon(const PlatoonConfig& cfg) {
    cfg.validate();
    const int pid = static_cast<int>(platoons_.size());
    PlatoonRefs refs;
    Vehicle jam;
    jam.id = static_cast<int>(vehicles_.size());
    jam.lane = cfg.lane;
    jam.x = wrap(cfg.initial_x_m + cfg.direction * cfg.standoff_m);
    jam.speed = jammer_speed(time_, jammer_);
    jam.kind = VehicleKind::Jammer;
    jam.platoon_id = pid;
    jam.direction = cfg.direction;
    refs.jammer = jam.id;
    vehicles_.push_back(jam);
    for (int i = 0; i < cfg.size; ++i) {
      Vehicle v;
      v.id = static_cast<int>(vehicles_.size());
      v.lane = cfg.lane;
      v.x = wrap(cfg.initial_x_m - cfg.direction * i * cfg.intra_gap_m);
      v.speed = cfg.cruise_speed_mps;
      v.kind = i == 0 ? VehicleKind::Leader : VehicleKind::Member;
      v.platoon_id = pid;
      v.index = i;
      v.direction = cfg.direction;
      refs.members.push_back(v.id);
      vehicles_.push_back(v);
    }
    refs.config = cfg;
    platoons_.push_back(refs);
    return pid;
  }

  void add_background(std::vector<Vehicle> vs) {
    for (auto& v : vs) {
      v.id = static_cast<int>(vehicles_.size());
      v.kind = VehicleKind::Background;
      vehicles_.push_back(v);
    }
  }

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::vector<Vehicle>& vehicles() { return vehicles_; }
  const RoadConfig& road() const { return road_; }
  double time() const { return time_; }
  std::size_t platoon_count() const { return platoons_.size(); }
  const std::vector<int>& platoon_members(int pid) const { return platoons_.at(pid).members; }
  int jammer_of(int pid) const { return platoons_.at(pid).jammer; }
  const PlatoonConfig& platoon_config(int pid) const { return platoons_.at(pid).config; }

  Vec2 position(int vehicle_id) const {
    const auto& v = vehicles_[vehicle_id];
    return {v.x, road_.lane_center_y(v.lane)};
  }

  /// Signed distance `ahead` is in front of `behind` along `direction`, on the ring.
  double gap(int ahead, int behind, int direction) const {
    double d = (vehicles_[ahead].x - vehicles_[behind].x) * direction;
    return wrap_signed(d);
  }

  /// Shortest ring distance between two vehicles, lateral offset included.
  double ring_distance(int a, int b) const {
    const double dx = wrap_signed(vehicles_[a].x - vehicles_[b].x);
    const double dy = road_.lane_center_y(vehicles_[a].lane) - road_.lane_center_y(vehicles_[b].lane);
    return std::hypot(dx, dy);
  }

  /// Advances all vehicles by dt. Leaders track their jammer at the
  /// standoff gap and followers their predecessor at intra_gap, each with
  /// bounded acceleration; background vehicles keep their speed.
  void step(double dt) {
    if (!(dt > 0.0)) throw ConfigError("mobility step must be > 0");
    const double t_next = time_ + dt;
    // Accelerations from the state at the start of the step.
    std::vector<std::pair<int, double>> accel;
    for (const auto& pl : platoons_) {
      for (std::size_t i = 0; i < pl.members.size(); ++i) {
        const int self = pl.members[i];
        const int ahead = i == 0 ? pl.jammer : pl.members[i - 1];
        const double target_gap = i == 0 ? pl.config.standoff_m : pl.config.intra_gap_m;
        const double e = gap(ahead, self, pl.config.direction) - target_gap;
        const double dv = vehicles_[ahead].speed - vehicles_[self].speed;
        double a = tracking_.gap_gain * e + tracking_.speed_gain * dv;
        a = std::clamp(a, -tracking_.max_accel_mps2, tracking_.max_accel_mps2);
        accel.emplace_back(self, a);
      }
    }
    for (auto [id, a] : accel) vehicles_[id].speed = std::max(0.0, vehicles_[id].speed + a * dt);
    for (const auto& pl : platoons_) vehicles_[pl.jammer].speed = jammer_speed(t_next, jammer_);
    for (auto& v : vehicles_) v.x = wrap(v.x + v.direction * v.speed * dt);

    // Order preservation inside each platoon lane.
    for (const auto& pl : platoons_) {
      int ahead = pl.jammer;
      for (int self : pl.members) {
        if (gap(ahead, self, pl.config.direction) < tracking_.min_gap_m) {
          vehicles_[self].x = wrap(vehicles_[ahead].x - pl.config.direction * tracking_.min_gap_m);
          vehicles_[self].speed = std::min(vehicles_[self].speed, vehicles_[ahead].speed);
        }
        ahead = self;
      }
    }
    time_ = t_next;
  }

  double wrap(double x) const {
    double r = std::fmod(x, road_.length_m);
    if (r < 0.0) r += road_.length_m;
    return r;
  }

  double wrap_signed(double d) const {
    const double L = road_.length_m;
    d = std::fmod(d, L);
    if (d > 0.5 * L) d -= L;
    if (d < -0.5 * L) d += L;
    return d;
  }

 private:
  struct PlatoonRefs {
    PlatoonConfig config;
    int jammer{-1};
    std::vector<int> members;
  };

  RoadConfig road_;
  JammerProfile jammer_;
  TrackingParams tracking_;
  std::vector<Vehicle> vehicles_;
  std::vector<PlatoonRefs> platoons_;
  double time_{0.0};
};

}  // namespace vdsa
