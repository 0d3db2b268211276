#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "vdsa/allocator.hpp"
#include "vdsa/channel.hpp"
#include "vdsa/events.hpp"
#include "vdsa/mac.hpp"
#include "vdsa/mobility.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/rng.hpp"

namespace vdsa {

/// (a) CCH only; (b) dual radio, frequency selection without power
/// control; (c) dual radio with REM-based power control.
enum class UseCase { A, B, C };

inline UseCase parse_use_case(const std::string& s) {
  if (s == "a" || s == "A") return UseCase::A;
  if (s == "b" || s == "B") return UseCase::B;
  if (s == "c" || s == "C") return UseCase::C;
  throw ConfigError("use case must be a, b or c, got '" + s + "'");
}

inline const char* to_string(UseCase u) {
  switch (u) {
    case UseCase::A: return "a";
    case UseCase::B: return "b";
    case UseCase::C: return "c";
  }
  return "?";
}

struct MessageSchedule {
  int cam_bytes{300};
  int cacc_bytes{200};
  /// Platoon CAM rate when CAMs are the only platoon traffic.
  double cam_hz_single_radio{10.0};
  double cam_hz_dual_radio{5.0};
  double cacc_hz{5.0};
  double background_cam_hz{10.0};
};

struct SimulationConfig {
  UseCase use_case{UseCase::C};
  double duration_s{140.0};
  double allocation_period_s{1.0};
  double mobility_dt_s{0.05};
  double warmup_s{5.0};
  std::uint64_t seed{1};

  RoadConfig road;
  JammerProfile jammer;
  TrackingParams tracking;
  std::vector<PlatoonConfig> platoons;

  double density_per_km_lane{50.0};
  std::vector<int> background_lanes{1, 2, 3, 4};
  std::vector<double> lane_speeds_mps;
  std::vector<int> lane_directions;

  std::shared_ptr<const RemDatabase> rem;
  ProtectionParams protection;
  double f_min_hz{490e6};
  double f_max_hz{522e6};
  double f_step_hz{1e6};
  double p_max_dbm{20.0};
  double cap_floor_dbm{-40.0};
  double target_pfa{0.01};

  mac::RadioConfig cch;
  mac::RadioConfig tvws;
  double cch_tx_power_dbm{20.0};

  PathlossModel pathloss_cch{PathlossModel::dual_slope_5g9()};
  PathlossModel pathloss_tvws{PathlossModel::tvws()};
  /// Shadowing realizations are redrawn every period of this length.
  double shadowing_period_s{1.0};
  AcirSet acir{AcirSet::defaults()};
  MessageSchedule messages;

  bool event_log{false};
  /// Trajectory rows every N mobility steps; 0 disables.
  int trajectory_stride{0};

  std::vector<double> candidate_frequencies() const {
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((f_max_hz - f_min_hz) / f_step_hz + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(f_min_hz + static_cast<double>(i) * f_step_hz);
    return out;
  }

  void validate() const {
    if (!(duration_s > 0.0)) throw ConfigError("sim.duration_s must be > 0");
    if (!(allocation_period_s > 0.0)) throw ConfigError("sim.allocation_period_s must be > 0");
    if (!(mobility_dt_s > 0.0)) throw ConfigError("sim.mobility_dt_s must be > 0");
    if (warmup_s < 0.0) throw ConfigError("sim.warmup_s must be >= 0");
    if (!(f_step_hz > 0.0)) throw ConfigError("vdsa.f_step_hz must be > 0");
    if (f_max_hz < f_min_hz) throw ConfigError("vdsa.f_max_hz must be >= vdsa.f_min_hz");
    if (!(shadowing_period_s > 0.0)) throw ConfigError("pathloss.shadowing_period_s must be > 0");
    if (!rem) throw ConfigError("no REM loaded");
    if (!(density_per_km_lane >= 0.0)) throw ConfigError("traffic.density_per_km_lane must be >= 0");
    for (int l : background_lanes)
      if (l < 0 || l >= road.lanes) throw ConfigError("traffic.lanes entry outside road");
    for (const auto& p : platoons) {
      p.validate();
      if (p.lane < 0 || p.lane >= road.lanes) throw ConfigError("platoon lane outside road");
    }
    jammer.validate();
    cch.validate();
    tvws.validate();
    pathloss_cch.validate();
    pathloss_tvws.validate();
    const Vec2 corners[] = {{0.0, road.lane_center_y(0)}, {road.length_m, road.lane_center_y(road.lanes - 1)}};
    for (Vec2 c : corners)
      if (!rem->contains(c)) throw ConfigError("REM does not cover the road");
  }
};

enum class SourceRole : std::uint8_t { Leader, Preceding, Other };

inline const char* to_string(SourceRole r) {
  switch (r) {
    case SourceRole::Leader: return "leader";
    case SourceRole::Preceding: return "preceding";
    case SourceRole::Other: return "other";
  }
  return "?";
}

/// Role of the sender relative to the receiver at platoon index `rx_index`.
inline SourceRole source_role(int tx_index, int rx_index) {
  if (tx_index == 0) return SourceRole::Leader;
  if (tx_index == rx_index - 1) return SourceRole::Preceding;
  return SourceRole::Other;
}

struct ReceptionKey {
  mac::MessageKind kind{mac::MessageKind::Cam};
  SourceRole role{SourceRole::Leader};
  int position{0};

  friend auto operator<=>(const ReceptionKey&, const ReceptionKey&) = default;
};

struct ReceptionCounts {
  std::uint64_t intended{0};
  std::uint64_t decoded{0};
  std::uint64_t sinr_fail{0};
  std::uint64_t collision_fail{0};
  std::uint64_t dropped{0};

  void add(const ReceptionCounts& o) {
    intended += o.intended;
    decoded += o.decoded;
    sinr_fail += o.sinr_fail;
    collision_fail += o.collision_fail;
    dropped += o.dropped;
  }
};

struct DecisionRow {
  double t_s{0.0};
  int platoon_id{0};
  double f_star_hz{0.0};
  double min_sinr_db{0.0};
  bool band_changed{false};
};

struct CapRow {
  double t_s{0.0};
  int platoon_id{0};
  int vehicle_idx{0};
  double power_cap_dbm{0.0};
  double gamma_dbm{0.0};
};

struct MetricsStore {
  int runs{1};
  UseCase use_case{UseCase::C};
  std::map<ReceptionKey, ReceptionCounts> reception;
  std::vector<mac::DttSirSample> dtt_sir;
  double sir_min_db{39.5};
  /// Band changes per platoon, summed over runs.
  std::map<int, std::uint64_t> band_changes;
  std::vector<DecisionRow> decisions;
  std::vector<CapRow> caps;
  /// Mean carrier-sense busy fraction over platoon members.
  double cch_busy_ratio{0.0};
  double tvws_busy_ratio{0.0};
  std::uint64_t allocation_events{0};
  std::uint64_t transmissions{0};
  std::uint64_t suppressed_transmissions{0};
  std::uint64_t queue_overflow_drops{0};
  /// Tracked (message, receiver) pairs created vs resolved after warm-up.
  std::uint64_t expected_dispositions{0};
  std::uint64_t dispositions{0};
  /// Wall-clock figures; never written to CSV so outputs stay reproducible.
  double allocator_max_s{0.0};
  double wall_s{0.0};

  void merge(const MetricsStore& o) {
    for (const auto& [k, c] : o.reception) reception[k].add(c);
    dtt_sir.insert(dtt_sir.end(), o.dtt_sir.begin(), o.dtt_sir.end());
    for (const auto& [p, n] : o.band_changes) band_changes[p] += n;
    const double w = static_cast<double>(runs) + o.runs;
    cch_busy_ratio = (cch_busy_ratio * runs + o.cch_busy_ratio * o.runs) / w;
    tvws_busy_ratio = (tvws_busy_ratio * runs + o.tvws_busy_ratio * o.runs) / w;
    allocation_events += o.allocation_events;
    transmissions += o.transmissions;
    suppressed_transmissions += o.suppressed_transmissions;
    queue_overflow_drops += o.queue_overflow_drops;
    expected_dispositions += o.expected_dispositions;
    dispositions += o.dispositions;
    allocator_max_s = std::max(allocator_max_s, o.allocator_max_s);
    wall_s += o.wall_s;
    runs += o.runs;
  }

  /// Band changes per platoon per run, averaged over platoons.
  double mean_band_changes() const {
    if (band_changes.empty()) return 0.0;
    double total = 0.0;
    for (const auto& [p, n] : band_changes) total += static_cast<double>(n);
    return total / static_cast<double>(band_changes.size()) / runs;
  }

  double fraction_below(double sir_db) const {
    if (dtt_sir.empty()) throw NoData("no DTT SIR samples");
    std::size_t n = 0;
    for (const auto& s : dtt_sir) n += s.sir_db < sir_db;
    return static_cast<double>(n) / static_cast<double>(dtt_sir.size());
  }
};

inline double reception_ratio(const MetricsStore& m, mac::MessageKind kind, SourceRole role, int position) {
  auto it = m.reception.find({kind, role, position});
  if (it == m.reception.end() || it->second.intended == 0)
    throw NoData(std::string("no ") + mac::to_string(kind) + " receptions from " + to_string(role) +
                 " at position " + std::to_string(position));
  return static_cast<double>(it->second.decoded) / static_cast<double>(it->second.intended);
}

/// Exact step ECDF: sorted samples paired with i/n.
inline std::vector<std::pair<double, double>> sir_ecdf(const std::vector<double>& samples) {
  if (samples.empty()) throw NoData("ECDF of an empty sample set");
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(s.size());
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out.emplace_back(s[i], static_cast<double>(i + 1) / n);
  return out;
}

inline std::vector<std::pair<double, double>> sir_ecdf(const MetricsStore& m, int channel) {
  std::vector<double> s;
  for (const auto& x : m.dtt_sir)
    if (x.channel == channel) s.push_back(x.sir_db);
  if (s.empty()) throw NoData("no DTT SIR samples on channel " + std::to_string(channel));
  return sir_ecdf(s);
}

/// Optional verbose streams for a run.
struct RunSinks {
  std::ostream* event_log{nullptr};
  std::ostream* trajectory{nullptr};
};

namespace detail {

inline void csv_num(std::ostream& os, double v) { os << vdsa::detail::format_double(v); }

}  // namespace detail

class Simulator {
 public:
  using MacT = mac::Mac<Simulator>;

  explicit Simulator(const SimulationConfig& cfg, RunSinks sinks = {})
      : cfg_(cfg),
        sinks_(sinks),
        rng_(cfg.seed),
        world_(cfg.road, cfg.jammer, cfg.tracking),
        shadow_cch_(hash_combine(cfg.seed, 0xc0), cfg.pathloss_cch.shadowing_sigma_db),
        shadow_tvws_(hash_combine(cfg.seed, 0x7e), cfg.pathloss_tvws.shadowing_sigma_db),
        shadow_dtt_(hash_combine(cfg.seed, 0xd7), cfg.pathloss_tvws.shadowing_sigma_db) {
    cfg_.validate();
    build_world();
    build_mac();
  }

  MetricsStore run() {
    const auto wall0 = std::chrono::steady_clock::now();
    schedule_initial();
    while (!queue_.empty()) {
      const Event e = queue_.pop();
      now_ = e.time;
      if (mac_->handle(e)) continue;
      switch (e.type) {
        case EventType::Generate: on_generate(e); break;
        case EventType::MobilityStep: on_mobility(); break;
        case EventType::Allocate: on_allocate(); break;
        default: break;
      }
    }
    finish();
    metrics_.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return std::move(metrics_);
  }

  // ---- MAC environment ----

  double gain(int tx, int rx, int radio) const {
    const PathlossModel& m = radio == mac::kCch ? cfg_.pathloss_cch : cfg_.pathloss_tvws;
    const ShadowingField& s = radio == mac::kCch ? shadow_cch_ : shadow_tvws_;
    return m.mean_gain(world_.ring_distance(tx, rx)) * s.factor(tx, rx, period());
  }

  double acir_vv(double fa, double fb) const { return cfg_.acir.vehicle_to_vehicle(fa, fb); }

  double tx_power_mw(int node, int radio, double) {
    if (radio == mac::kCch) return dbm_to_mw(cfg_.cch_tx_power_dbm);
    if (cfg_.use_case != UseCase::C) return dbm_to_mw(cfg_.p_max_dbm);
    // Caps follow the vehicle between allocation periods.
    const double cap = power_cap_at_mw(alloc_template_, world_.position(node), mac_->frequency(node, radio));
    return mw_to_dbm(cap) < cfg_.cap_floor_dbm ? 0.0 : cap;
  }

  void on_tx_start(const mac::Transmission& tx, std::span<const mac::Transmission* const> active, double t) {
    if (sinks_.event_log) log_event(t, "tx_start", tx.source, -1, tx.message.kind, tx.frequency_hz, NAN, nullptr);
    if (tx.radio != mac::kTvws || t < cfg_.warmup_s) return;
    emissions_.clear();
    emission_ids_.clear();
    for (const auto* a : active) {
      emissions_.push_back({world_.position(a->source), a->frequency_hz, a->power_mw, 0.0});
      emission_ids_.push_back(a->source);
    }
    const std::uint64_t per = period();
    auto shadow = [&](std::size_t i, int rx_id) {
      return shadow_dtt_.loss_db(static_cast<std::uint64_t>(emission_ids_[i]),
                                 (1ull << 40) + static_cast<std::uint64_t>(rx_id), per);
    };
    const auto samples = mac::sample_dtt_sir(cfg_.rem->receivers(), emissions_, *cfg_.rem,
                                             cfg_.acir.vehicle_to_dtt, cfg_.pathloss_tvws, t, shadow);
    metrics_.dtt_sir.insert(metrics_.dtt_sir.end(), samples.begin(), samples.end());
  }

  void on_disposition(const mac::Message& msg, int rx, mac::Outcome o, double sinr_db, double t) {
    if (sinks_.event_log)
      log_event(t, "rx", msg.source, rx, msg.kind, mac_->frequency(msg.source, msg.radio), sinr_db, &o);
    if (msg.generation_time < cfg_.warmup_s) return;
    const auto& vs = world_.vehicles();
    const int rx_index = vs[rx].index;
    auto& c = metrics_.reception[{msg.kind, source_role(vs[msg.source].index, rx_index), rx_index}];
    ++c.intended;
    ++metrics_.dispositions;
    switch (o) {
      case mac::Outcome::Decoded: ++c.decoded; break;
      case mac::Outcome::SinrFail: ++c.sinr_fail; break;
      case mac::Outcome::CollisionFail: ++c.collision_fail; break;
      case mac::Outcome::Dropped: ++c.dropped; break;
    }
  }

  const World& world() const { return world_; }

 private:
  std::uint64_t period() const { return static_cast<std::uint64_t>(now_ / cfg_.shadowing_period_s); }

  bool dual_radio() const { return cfg_.use_case != UseCase::A; }

  void build_world() {
    for (const auto& p : cfg_.platoons) world_.add_platoon(p);
    std::vector<double> speeds = cfg_.lane_speeds_mps;
    std::vector<int> dirs = cfg_.lane_directions;
    for (std::size_t i = speeds.size(); i < cfg_.background_lanes.size(); ++i) speeds.push_back(30.0);
    for (std::size_t i = dirs.size(); i < cfg_.background_lanes.size(); ++i)
      dirs.push_back(cfg_.background_lanes[i] < cfg_.road.lanes / 2 ? 1 : -1);
    world_.add_background(spawn_background(cfg_.density_per_km_lane, cfg_.background_lanes, cfg_.road.length_m,
                                           rng_, 0, speeds, dirs));
    for (std::size_t pid = 0; pid < world_.platoon_count(); ++pid) {
      const auto& members = world_.platoon_members(static_cast<int>(pid));
      for (int m : members) {
        std::vector<int> others;
        for (int o : members)
          if (o != m) others.push_back(o);
        intended_[m] = others;
        platoon_nodes_.push_back(m);
        if (dual_radio()) tvws_nodes_.push_back(m);
      }
    }

    alloc_template_.rem = cfg_.rem.get();
    alloc_template_.candidate_frequencies_hz = cfg_.candidate_frequencies();
    alloc_template_.protection = cfg_.protection;
    alloc_template_.p_max_dbm = cfg_.p_max_dbm;
    alloc_template_.noise_mw = cfg_.tvws.noise_mw();
    alloc_template_.acir = cfg_.acir;
    alloc_template_.v2v = cfg_.pathloss_tvws;
    alloc_template_.v2dtt = cfg_.pathloss_tvws;
    alloc_template_.power_control = cfg_.use_case == UseCase::C;
    alloc_template_.target_pfa = cfg_.target_pfa;
    alloc_template_.sensing_samples = cfg_.tvws.sensing_samples;
    alloc_template_.cap_floor_dbm = cfg_.cap_floor_dbm;
  }

  void build_mac() {
    const int n = static_cast<int>(world_.vehicles().size());
    mac_ = std::make_unique<MacT>(*this, queue_, rng_, cfg_.cch, cfg_.tvws, n);
    for (int v = 0; v < n; ++v)
      mac_->enable(v, mac::kCch, cfg_.cch.center_frequency_hz, cfg_.cch.sensing_threshold_mw, cfg_.cch.noise_mw());
    // Platoon members report busy time, so their channel state is kept current.
    for (int v : platoon_nodes_) mac_->watch(v, mac::kCch, 0.0);
    // TVWS stations are enabled by the first allocation.
  }

  void schedule_initial() {
    const double T = cfg_.duration_s;
    if (dual_radio()) {
      const auto n = static_cast<long>(std::floor(T / cfg_.allocation_period_s + 1e-9));
      for (long k = 0; k < n; ++k) queue_.push(static_cast<double>(k) * cfg_.allocation_period_s, EventType::Allocate);
    }
    queue_.push(cfg_.mobility_dt_s, EventType::MobilityStep);
    for (const auto& v : world_.vehicles()) {
      const bool member = v.kind == VehicleKind::Leader || v.kind == VehicleKind::Member;
      const double cam_hz = !member ? cfg_.messages.background_cam_hz
                                    : (dual_radio() ? cfg_.messages.cam_hz_dual_radio : cfg_.messages.cam_hz_single_radio);
      if (cam_hz > 0.0) {
        const double t0 = rng_.uniform(0.0, 1.0 / cam_hz);
        if (t0 < T) queue_.push(t0, EventType::Generate, v.id, mac::kCch, 0);
      }
      if (member && dual_radio() && cfg_.messages.cacc_hz > 0.0) {
        const double t0 = rng_.uniform(0.0, 1.0 / cfg_.messages.cacc_hz);
        if (t0 < T) queue_.push(t0, EventType::Generate, v.id, mac::kTvws, 1);
      }
    }
  }

  void on_generate(const Event& e) {
    const auto& v = world_.vehicles()[e.node];
    const bool member = v.kind == VehicleKind::Leader || v.kind == VehicleKind::Member;
    mac::Message m;
    m.id = next_msg_id_++;
    m.source = e.node;
    m.radio = e.radio;
    m.generation_time = e.time;
    double hz;
    if (e.radio == mac::kCch) {
      m.kind = mac::MessageKind::Cam;
      m.payload_bytes = cfg_.messages.cam_bytes;
      hz = !member ? cfg_.messages.background_cam_hz
                   : (dual_radio() ? cfg_.messages.cam_hz_dual_radio : cfg_.messages.cam_hz_single_radio);
    } else {
      m.kind = mac::MessageKind::Cacc;
      m.payload_bytes = cfg_.messages.cacc_bytes;
      hz = cfg_.messages.cacc_hz;
    }
    if (member) {
      m.intended = intended_.at(e.node);
      if (e.time >= cfg_.warmup_s) metrics_.expected_dispositions += m.intended.size();
    }
    mac_->enqueue(std::move(m), e.time);
    const double next = e.time + 1.0 / hz;
    if (next < cfg_.duration_s) queue_.push(next, EventType::Generate, e.node, e.radio, e.token);
  }

  void on_mobility() {
    world_.step(cfg_.mobility_dt_s);
    ++mobility_steps_;
    for (int v : tvws_nodes_) {
      if (!mac_->enabled(v, mac::kTvws)) continue;
      const Vec2 pos = world_.position(v);
      const double f = mac_->frequency(v, mac::kTvws);
      mac_->set_sensing(v, mac::kTvws, sensing_threshold_at_mw(alloc_template_, pos, f), tvws_floor(pos, f), now_);
    }
    if (sinks_.trajectory && cfg_.trajectory_stride > 0 && mobility_steps_ % cfg_.trajectory_stride == 0) {
      for (const auto& v : world_.vehicles()) {
        auto& os = *sinks_.trajectory;
        detail::csv_num(os, now_);
        os << ',' << v.id << ',' << v.lane << ',';
        detail::csv_num(os, v.x);
        os << ',';
        detail::csv_num(os, v.speed);
        os << '\n';
      }
    }
    const double next = now_ + cfg_.mobility_dt_s;
    if (next < cfg_.duration_s + 1e-9) queue_.push(next, EventType::MobilityStep);
  }

  double tvws_floor(Vec2 pos, double f) const {
    return cfg_.tvws.noise_mw() + dtt_interference_at(pos, f, *cfg_.rem, cfg_.acir.dtt_to_vehicle);
  }

  void on_allocate() {
    AllocationInput in = alloc_template_;
    for (std::size_t pid = 0; pid < world_.platoon_count(); ++pid) {
      PlatoonSnapshot snap;
      snap.id = static_cast<int>(pid);
      for (int m : world_.platoon_members(static_cast<int>(pid))) snap.positions.push_back(world_.position(m));
      in.platoons.push_back(std::move(snap));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const AllocationDecision d = allocate(in);
    metrics_.allocator_max_s =
        std::max(metrics_.allocator_max_s, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    ++metrics_.allocation_events;

    for (const auto& pa : d.platoons) {
      const auto& members = world_.platoon_members(pa.platoon_id);
      auto prev = last_frequency_.find(pa.platoon_id);
      const bool changed = prev != last_frequency_.end() && prev->second != pa.frequency_hz;
      last_frequency_[pa.platoon_id] = pa.frequency_hz;
      if (changed) ++metrics_.band_changes[pa.platoon_id];
      else metrics_.band_changes.try_emplace(pa.platoon_id, 0);
      metrics_.decisions.push_back({now_, pa.platoon_id, pa.frequency_hz, pa.predicted_min_sinr_db, changed});
      for (std::size_t i = 0; i < members.size(); ++i) {
        const int v = members[i];
        const auto& va = pa.vehicles[i];
        metrics_.caps.push_back({now_, pa.platoon_id, static_cast<int>(i), va.power_cap_dbm, mw_to_dbm(va.gamma_mw)});
        const double floor = tvws_floor(world_.position(v), pa.frequency_hz);
        if (!mac_->enabled(v, mac::kTvws)) {
          mac_->enable(v, mac::kTvws, pa.frequency_hz, va.gamma_mw, floor);
          mac_->watch(v, mac::kTvws, now_);
        } else {
          mac_->set_frequency(v, mac::kTvws, pa.frequency_hz, floor, now_);
          mac_->set_sensing(v, mac::kTvws, va.gamma_mw, floor, now_);
        }
      }
    }
  }

  void finish() {
    const double end = std::max(now_, cfg_.duration_s);
    double cch = 0.0, tvws = 0.0;
    int n = 0;
    for (std::size_t pid = 0; pid < world_.platoon_count(); ++pid)
      for (int m : world_.platoon_members(static_cast<int>(pid))) {
        cch += mac_->busy_time(m, mac::kCch, end) / end;
        if (mac_->enabled(m, mac::kTvws)) tvws += mac_->busy_time(m, mac::kTvws, end) / end;
        ++n;
      }
    if (n > 0) {
      metrics_.cch_busy_ratio = cch / n;
      metrics_.tvws_busy_ratio = tvws / n;
    }
    metrics_.use_case = cfg_.use_case;
    metrics_.sir_min_db = cfg_.protection.sir_min_db;
    metrics_.transmissions = mac_->counters().transmitted;
    metrics_.suppressed_transmissions = mac_->counters().suppressed;
    metrics_.queue_overflow_drops = mac_->counters().queue_overflow_drops;
  }

  void log_event(double t, const char* ev, int src, int dst, mac::MessageKind kind, double f, double sinr,
                 const mac::Outcome* o) {
    auto& os = *sinks_.event_log;
    detail::csv_num(os, t);
    os << ',' << ev << ',' << src << ',';
    if (dst >= 0) os << dst;
    os << ',' << mac::to_string(kind) << ',';
    detail::csv_num(os, f);
    os << ',';
    if (std::isfinite(sinr)) detail::csv_num(os, sinr);
    os << ',' << (o ? mac::to_string(*o) : "") << '\n';
  }

  SimulationConfig cfg_;
  RunSinks sinks_;
  Rng rng_;
  World world_;
  ShadowingField shadow_cch_;
  ShadowingField shadow_tvws_;
  ShadowingField shadow_dtt_;
  EventQueue queue_;
  std::unique_ptr<MacT> mac_;
  AllocationInput alloc_template_;
  std::vector<int> platoon_nodes_;
  std::vector<int> tvws_nodes_;
  std::map<int, std::vector<int>> intended_;
  std::map<int, double> last_frequency_;
  std::vector<mac::ActiveEmission> emissions_;
  std::vector<int> emission_ids_;
  MetricsStore metrics_;
  double now_{0.0};
  std::uint64_t next_msg_id_{1};
  std::uint64_t mobility_steps_{0};
};

inline MetricsStore run(const SimulationConfig& cfg, RunSinks sinks = {}) { return Simulator(cfg, sinks).run(); }

/// Worker count from VDSA_SIM_THREADS, else the hardware concurrency.
inline unsigned worker_threads() {
  if (const char* env = std::getenv("VDSA_SIM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("VDSA_SIM_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs one config per seed on a bounded pool; results keep seed order.
/// `job` replaces the plain run, e.g. to attach per-seed sinks.
inline std::vector<MetricsStore> run_seeds(const SimulationConfig& base, const std::vector<std::uint64_t>& seeds,
                                           unsigned threads = worker_threads(),
                                           const std::function<MetricsStore(const SimulationConfig&)>& job = {}) {
  std::vector<MetricsStore> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        SimulationConfig c = base;
        c.seed = seeds[i];
        out[i] = job ? job(c) : run(c);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline MetricsStore merge_all(const std::vector<MetricsStore>& runs) {
  if (runs.empty()) throw NoData("no runs to merge");
  MetricsStore m = runs.front();
  m.decisions.clear();
  m.caps.clear();
  for (std::size_t i = 1; i < runs.size(); ++i) m.merge(runs[i]);
  return m;
}

// ---- CSV output ----

inline void write_reception_csv(std::ostream& os, const MetricsStore& m) {
  os << "kind,role,position,intended,decoded,ratio\n";
  for (const auto& [k, c] : m.reception) {
    os << mac::to_string(k.kind) << ',' << to_string(k.role) << ',' << k.position << ',' << c.intended << ','
       << c.decoded << ',';
    detail::csv_num(os, c.intended ? static_cast<double>(c.decoded) / static_cast<double>(c.intended) : 0.0);
    os << '\n';
  }
}

inline void write_dtt_sir_csv(std::ostream& os, const MetricsStore& m) {
  os << "t_s,receiver_id,channel,sir_db\n";
  for (const auto& s : m.dtt_sir) {
    detail::csv_num(os, s.time);
    os << ',' << s.receiver_id << ',' << s.channel << ',';
    detail::csv_num(os, s.sir_db);
    os << '\n';
  }
}

inline void write_band_changes_csv(std::ostream& os, const MetricsStore& m) {
  os << "platoon_id,band_changes,runs,mean_per_run\n";
  for (const auto& [p, n] : m.band_changes) {
    os << p << ',' << n << ',' << m.runs << ',';
    detail::csv_num(os, static_cast<double>(n) / m.runs);
    os << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const MetricsStore& m) {
  auto row = [&](const char* k, double v) {
    os << k << ',';
    detail::csv_num(os, v);
    os << '\n';
  };
  os << "metric,value\n";
  os << "use_case," << to_string(m.use_case) << '\n';
  row("runs", m.runs);
  row("allocation_events", static_cast<double>(m.allocation_events));
  row("mean_band_changes", m.mean_band_changes());
  row("dtt_sir_samples", static_cast<double>(m.dtt_sir.size()));
  row("dtt_sir_fraction_below_min", m.dtt_sir.empty() ? 0.0 : m.fraction_below(m.sir_min_db));
  row("cch_busy_ratio", m.cch_busy_ratio);
  row("tvws_busy_ratio", m.tvws_busy_ratio);
  row("transmissions", static_cast<double>(m.transmissions));
  row("suppressed_transmissions", static_cast<double>(m.suppressed_transmissions));
  row("queue_overflow_drops", static_cast<double>(m.queue_overflow_drops));
  row("expected_dispositions", static_cast<double>(m.expected_dispositions));
  row("dispositions", static_cast<double>(m.dispositions));
}

inline void write_decisions_csv(std::ostream& os, const MetricsStore& m) {
  os << "t_s,platoon_id,f_star_hz,min_sinr_db,band_changed\n";
  for (const auto& d : m.decisions) {
    detail::csv_num(os, d.t_s);
    os << ',' << d.platoon_id << ',';
    detail::csv_num(os, d.f_star_hz);
    os << ',';
    detail::csv_num(os, d.min_sinr_db);
    os << ',' << (d.band_changed ? 1 : 0) << '\n';
  }
}

inline void write_caps_csv(std::ostream& os, const MetricsStore& m) {
  os << "t_s,platoon_id,vehicle_idx,power_cap_dbm,gamma_dbm\n";
  for (const auto& c : m.caps) {
    detail::csv_num(os, c.t_s);
    os << ',' << c.platoon_id << ',' << c.vehicle_idx << ',';
    detail::csv_num(os, c.power_cap_dbm);
    os << ',';
    detail::csv_num(os, c.gamma_dbm);
    os << '\n';
  }
}

inline void write_metrics(const std::filesystem::path& dir, const MetricsStore& m, bool with_decisions) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("reception_vs_position.csv");
    write_reception_csv(f, m);
  }
  {
    auto f = open("dtt_sir_samples.csv");
    write_dtt_sir_csv(f, m);
  }
  {
    auto f = open("band_changes.csv");
    write_band_changes_csv(f, m);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, m);
  }
  if (with_decisions) {
    auto d = open("decisions.csv");
    write_decisions_csv(d, m);
    auto c = open("vehicle_caps.csv");
    write_caps_csv(c, m);
  }
}

}  // namespace vdsa
