#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "vdsa/channel.hpp"
#include "vdsa/events.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/rng.hpp"
#include "vdsa/units.hpp"

namespace vdsa::mac {

inline constexpr int kCch = 0;
inline constexpr int kTvws = 1;

enum class MessageKind : std::uint8_t { Cam, Cacc };
enum class Outcome : std::uint8_t { Decoded, SinrFail, CollisionFail, Dropped };
enum class ChannelState : std::uint8_t { Idle, Busy };

inline const char* to_string(MessageKind k) { return k == MessageKind::Cam ? "CAM" : "CACC"; }

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Decoded: return "decoded";
    case Outcome::SinrFail: return "sinr_fail";
    case Outcome::CollisionFail: return "collision_fail";
    case Outcome::Dropped: return "dropped";
  }
  return "?";
}

/// 802.11p-style access parameters for one radio.
struct RadioConfig {
  int radio_id{kCch};
  double center_frequency_hz{5.9e9};
  double bandwidth_hz{10e6};
  double bitrate_bps{6e6};
  double preamble_s{40e-6};
  /// Fixed carrier-sense threshold; radio 1 overrides it per vehicle.
  double sensing_threshold_mw{dbm_to_mw(-85.0)};
  int cw_min{15};
  int cw_max{1023};
  double slot_s{13e-6};
  double aifs_s{58e-6};
  double decode_threshold_db{8.0};
  std::size_t queue_capacity{4};
  /// Time before a starting transmission is visible to carrier sense.
  double cca_latency_s{8e-6};
  /// Sensed contributions below this are not tracked.
  double sensing_cutoff_mw{dbm_to_mw(-100.0)};
  std::int64_t sensing_samples{100};
  double noise_figure_db{9.0};

  double noise_mw() const { return thermal_noise_mw(bandwidth_hz, noise_figure_db); }

  double airtime_s(int payload_bytes) const { return payload_bytes * 8.0 / bitrate_bps + preamble_s; }

  void validate() const {
    if (!(bitrate_bps > 0.0)) throw ConfigError("radio bitrate must be > 0");
    if (!(sensing_threshold_mw > 0.0)) throw ConfigError("radio sensing threshold must be > 0");
    if (cw_min > cw_max || cw_min < 0) throw ConfigError("radio needs 0 <= cw_min <= cw_max");
    if (!(slot_s > 0.0) || aifs_s < 0.0) throw ConfigError("radio timing must be positive");
    if (queue_capacity == 0) throw ConfigError("radio queue capacity must be >= 1");
    if (sensing_samples < 1) throw ConfigError("radio sensing samples must be >= 1");
  }
};

struct Message {
  std::uint64_t id{0};
  MessageKind kind{MessageKind::Cam};
  int source{-1};
  int payload_bytes{0};
  double generation_time{0.0};
  int radio{kCch};
  /// Receivers whose outcome is tracked; empty for untracked traffic.
  std::vector<int> intended;
};

struct ReceptionRecord {
  std::uint64_t message_id{0};
  MessageKind kind{MessageKind::Cam};
  int source{-1};
  int receiver{-1};
  double sinr_db{0.0};
  Outcome outcome{Outcome::Decoded};
  double time{0.0};
};

struct DttSirSample {
  int receiver_id{0};
  int channel{0};
  double time{0.0};
  double sir_db{0.0};
};

/// Energy-detector statistic T(y) for a true mean power: Gaussian
/// approximation with variance 2/N_s * mean^2.
inline double energy_statistic(double mean_mw, std::int64_t samples, Rng& rng) {
  return mean_mw * (1.0 + std::sqrt(2.0 / static_cast<double>(samples)) * rng.normal());
}

inline ChannelState sense_channel(double mean_mw, double gamma_mw, std::int64_t samples, Rng& rng) {
  return energy_statistic(mean_mw, samples, rng) > gamma_mw ? ChannelState::Busy : ChannelState::Idle;
}

/// A vehicle transmission as seen by a passive observer.
struct ActiveEmission {
  Vec2 position;
  double frequency_hz{0.0};
  double power_mw{0.0};
  /// Extra loss for this link, dB (shadowing realization).
  double shadowing_db{0.0};
};

/// Mean power an energy detector at `rx` tuned to `f_rx_hz` integrates:
/// vehicle emissions (ACIR-weighted), DTT leakage and noise.
inline double sensed_mean_mw(Vec2 rx, double f_rx_hz, std::span<const ActiveEmission> emissions,
                             const RemDatabase* rem, const AcirSet& acir, const PathlossModel& pathloss,
                             double noise_mw) {
  double total = noise_mw;
  for (const auto& e : emissions)
    total += e.power_mw * link_gain(pathloss, e.position, rx, e.shadowing_db).value *
             acir.vehicle_to_vehicle(e.frequency_hz, f_rx_hz);
  if (rem) total += dtt_interference_at(rx, f_rx_hz, *rem, acir.dtt_to_vehicle);
  return total;
}

inline ChannelState sense_channel(Vec2 rx, double f_rx_hz, std::span<const ActiveEmission> emissions,
                                  const RemDatabase* rem, const AcirSet& acir, const PathlossModel& pathloss,
                                  double noise_mw, double gamma_mw, std::int64_t samples, Rng& rng) {
  return sense_channel(sensed_mean_mw(rx, f_rx_hz, emissions, rem, acir, pathloss, noise_mw), gamma_mw, samples,
                       rng);
}

/// Decoding rule shared by the event-driven MAC and the stand-alone resolver.
/// `worst_interference_mw` is the peak overlapping interference over the packet.
inline Outcome decide(double signal_mw, double floor_mw, double worst_interference_mw, bool overlapped,
                      bool half_duplex, double threshold_db, double* sinr_db_out = nullptr) {
  const double sinr_db = linear_to_db(signal_mw / (floor_mw + worst_interference_mw));
  if (sinr_db_out) *sinr_db_out = sinr_db;
  if (half_duplex) return Outcome::CollisionFail;
  if (sinr_db >= threshold_db) return Outcome::Decoded;
  const bool clean_ok = linear_to_db(signal_mw / floor_mw) >= threshold_db;
  return overlapped && clean_ok ? Outcome::CollisionFail : Outcome::SinrFail;
}

struct ReceiverSpec {
  int id{-1};
  Vec2 position;
  double frequency_hz{0.0};
};

/// SINR outcome of `tx` at each receiver with `overlapping` emissions active
/// for the whole packet. DTT leakage is included when `rem` is given.
inline std::vector<ReceptionRecord> resolve_reception(const ActiveEmission& tx, int source,
                                                      std::span<const ActiveEmission> overlapping,
                                                      std::span<const ReceiverSpec> receivers,
                                                      const RemDatabase* rem, const AcirSet& acir,
                                                      const PathlossModel& pathloss, double noise_mw,
                                                      double threshold_db, MessageKind kind = MessageKind::Cam) {
  std::vector<ReceptionRecord> out;
  for (const auto& r : receivers) {
    const double signal = tx.power_mw * link_gain(pathloss, tx.position, r.position, tx.shadowing_db).value *
                          acir.vehicle_to_vehicle(tx.frequency_hz, r.frequency_hz);
    double interference = 0.0;
    for (const auto& o : overlapping)
      interference += o.power_mw * link_gain(pathloss, o.position, r.position, o.shadowing_db).value *
                      acir.vehicle_to_vehicle(o.frequency_hz, r.frequency_hz);
    const double floor = noise_mw + (rem ? dtt_interference_at(r.position, r.frequency_hz, *rem, acir.dtt_to_vehicle) : 0.0);
    ReceptionRecord rec;
    rec.kind = kind;
    rec.source = source;
    rec.receiver = r.id;
    rec.outcome = decide(signal, floor, interference, !overlapping.empty(), false, threshold_db, &rec.sinr_db);
    out.push_back(rec);
  }
  return out;
}

/// DTT-receiver SIR with the given vehicle emissions active. No sample is
/// produced for a receiver that sees zero interference.
inline std::vector<DttSirSample> sample_dtt_sir(std::span<const DttReceiver> receivers,
                                                std::span<const ActiveEmission> active, const RemDatabase& rem,
                                                const AcirTable& v_to_dtt, const PathlossModel& pathloss, double t,
                                                const std::function<double(std::size_t emission, int receiver_id)>&
                                                    shadowing_db = {}) {
  std::vector<DttSirSample> out;
  if (active.empty()) return out;
  for (const auto& r : receivers) {
    const double f_w = rem.channel_frequency_hz(r.channel);
    double interference = 0.0;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double s = shadowing_db ? shadowing_db(i, r.id) : active[i].shadowing_db;
      interference += active[i].power_mw * link_gain(pathloss, active[i].position, r.position, s).value *
                      v_to_dtt(active[i].frequency_hz, f_w);
    }
    if (!(interference > 0.0)) continue;
    out.push_back({r.id, r.channel, t, linear_to_db(rem.lookup_dtt_power_mw(r.position, r.channel) / interference)});
  }
  return out;
}

struct Transmission {
  std::uint64_t id{0};
  int source{-1};
  int radio{kCch};
  double frequency_hz{0.0};
  double power_mw{0.0};
  double start{0.0};
  double end{0.0};
  Message message;
  bool sensing_applied{false};
  /// (station, p*|h|^2 before ACIR, contribution) as applied to carrier sense.
  struct Sensed {
    int node;
    double raw_mw;
    double applied_mw;
  };
  std::vector<Sensed> sensed;
};

struct MacCounters {
  std::uint64_t generated{0};
  std::uint64_t transmitted{0};
  std::uint64_t queue_overflow_drops{0};
  std::uint64_t suppressed{0};
  std::uint64_t false_alarm_deferrals{0};
};

/// Event-driven slotted CSMA-CA for broadcast traffic on two radios.
///
/// Carrier-sense energy is only accumulated at stations whose channel state
/// can matter: those contending or transmitting, plus watched stations whose
/// busy time is reported. An idle station's state is rebuilt from the
/// transmissions in the air when it starts contending.
///
/// `Env` supplies geometry and bookkeeping:
///   double gain(int tx, int rx, int radio) const;          // linear, shadowed
///   double tx_power_mw(int node, int radio, double t);      // <= 0 suppresses the packet
///   double acir_vv(double fa, double fb) const;
///   void on_disposition(const Message&, int rx, Outcome, double sinr_db, double t);
///   void on_tx_start(const Transmission&, std::span<const Transmission* const> active, double t);
template <class Env>
class Mac {
 public:
  Mac(Env& env, EventQueue& queue, Rng& rng, RadioConfig cch, RadioConfig tvws, int nodes)
      : env_(env), queue_(queue), rng_(rng) {
    radios_[kCch] = cch;
    radios_[kTvws] = tvws;
    for (auto& r : radios_) r.validate();
    for (auto& s : stations_) s.resize(nodes);
  }

  const RadioConfig& radio(int r) const { return radios_[r]; }
  const MacCounters& counters() const { return counters_; }

  /// Test hook: fixes every drawn backoff to the returned slot count.
  std::function<int(int node, int radio)> backoff_override;

  void enable(int node, int radio, double frequency_hz, double gamma_mw, double floor_mw) {
    auto& st = stations_[radio][node];
    st.enabled = true;
    st.frequency_hz = frequency_hz;
    st.gamma_mw = gamma_mw;
    st.floor_mw = floor_mw;
    st.busy = st.floor_mw > st.gamma_mw;
  }

  /// Keeps carrier-sense state current for `node` at all times.
  void watch(int node, int radio, double now) {
    stations_[radio][node].watched = true;
    track(node, radio, now);
  }

  bool enabled(int node, int radio) const { return stations_[radio][node].enabled; }
  double frequency(int node, int radio) const { return stations_[radio][node].frequency_hz; }
  double gamma(int node, int radio) const { return stations_[radio][node].gamma_mw; }
  bool busy(int node, int radio) const { return stations_[radio][node].busy; }
  bool transmitting(int node, int radio) const { return stations_[radio][node].state == State::Tx; }
  double sensed_mw(int node, int radio) const { return stations_[radio][node].sensed_mw; }

  /// Time the station's carrier sense reported busy up to `now`.
  double busy_time(int node, int radio, double now) const {
    const auto& st = stations_[radio][node];
    return st.busy_accum + (st.busy ? now - st.busy_since : 0.0);
  }

  void set_sensing(int node, int radio, double gamma_mw, double floor_mw, double now) {
    auto& st = stations_[radio][node];
    st.gamma_mw = gamma_mw;
    st.floor_mw = floor_mw;
    update_busy(node, radio, now);
  }

  /// Retunes a station; carrier-sense contributions of ongoing
  /// transmissions are re-weighted with the new offset.
  void set_frequency(int node, int radio, double frequency_hz, double floor_mw, double now) {
    auto& st = stations_[radio][node];
    if (st.frequency_hz == frequency_hz && st.floor_mw == floor_mw) return;
    st.frequency_hz = frequency_hz;
    st.floor_mw = floor_mw;
    for (std::uint64_t id : active_[radio]) {
      auto& tx = transmissions_.at(id);
      for (auto& s : tx.sensed) {
        if (s.node != node) continue;
        const double updated = s.raw_mw * coupling(radio, tx.frequency_hz, frequency_hz);
        st.sensed_mw += updated - s.applied_mw;
        s.applied_mw = updated;
      }
    }
    if (st.sensed_mw < 0.0) st.sensed_mw = 0.0;
    update_busy(node, radio, now);
  }

  void enqueue(Message msg, double now) {
    ++counters_.generated;
    auto& st = stations_[msg.radio][msg.source];
    if (!st.enabled) {
      drop(msg, now);
      return;
    }
    if (st.queue.size() >= radios_[msg.radio].queue_capacity) {
      ++counters_.queue_overflow_drops;
      drop(st.queue.front(), now);
      st.queue.pop_front();
    }
    st.queue.push_back(std::move(msg));
    if (st.state == State::Idle) start_contention(st.queue.back().source, st.queue.back().radio, now);
  }

  /// Dispatches MAC-owned events; returns false for other event types.
  bool handle(const Event& e) {
    switch (e.type) {
      case EventType::BackoffDone: on_backoff_done(e); return true;
      case EventType::SenseApply: on_sense_apply(e); return true;
      case EventType::TxEnd: on_tx_end(e); return true;
      default: return false;
    }
  }

  std::span<const std::uint64_t> active(int radio) const { return active_[radio]; }
  const Transmission& transmission(std::uint64_t id) const { return transmissions_.at(id); }

 private:
  enum class State : std::uint8_t { Idle, Contend, Tx };

  struct Station {
    bool enabled{false};
    double frequency_hz{0.0};
    double gamma_mw{0.0};
    double floor_mw{0.0};
    std::deque<Message> queue;
    State state{State::Idle};
    int backoff{0};
    bool busy{false};
    bool counting{false};
    double resume_time{0.0};
    std::uint64_t token{0};
    double sensed_mw{0.0};
    int sensed_count{0};
    double busy_since{0.0};
    double busy_accum{0.0};
    bool watched{false};
    int tracked_pos{-1};
  };

  struct Reception {
    std::uint64_t tx_id;
    int receiver;
    int radio;
    double signal_mw;
    double floor_mw;
    double interference_mw;
    double worst_interference_mw;
    bool overlapped;
    bool half_duplex;
    std::vector<std::pair<std::uint64_t, double>> contributions;
  };

  double coupling(int radio, double f_tx, double f_rx) const {
    return radio == kCch ? 1.0 : env_.acir_vv(f_tx, f_rx);
  }

  void drop(const Message& msg, double now) {
    for (int rx : msg.intended)
      env_.on_disposition(msg, rx, Outcome::Dropped, -std::numeric_limits<double>::infinity(), now);
  }

  int draw_backoff(int node, int radio) {
    if (backoff_override) return backoff_override(node, radio);
    return static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(radios_[radio].cw_min)));
  }

  void track(int node, int radio, double now) {
    auto& st = stations_[radio][node];
    if (st.tracked_pos >= 0 || !st.enabled) return;
    auto& list = tracked_[radio];
    st.tracked_pos = static_cast<int>(list.size());
    list.push_back(node);
    st.sensed_mw = 0.0;
    st.sensed_count = 0;
    for (std::uint64_t id : active_[radio]) {
      auto& tx = transmissions_.at(id);
      if (tx.sensing_applied && tx.source != node) apply_sensing(tx, node);
    }
    st.busy = st.sensed_mw + st.floor_mw > st.gamma_mw;
    st.busy_since = now;
  }

  void untrack(int node, int radio) {
    auto& st = stations_[radio][node];
    if (st.tracked_pos < 0 || st.watched) return;
    auto& list = tracked_[radio];
    const int moved = list.back();
    list[st.tracked_pos] = moved;
    stations_[radio][moved].tracked_pos = st.tracked_pos;
    list.pop_back();
    st.tracked_pos = -1;
    if (st.sensed_count > 0)
      for (std::uint64_t id : active_[radio]) {
        auto& sensed = transmissions_.at(id).sensed;
        sensed.erase(std::remove_if(sensed.begin(), sensed.end(), [&](const auto& e) { return e.node == node; }),
                     sensed.end());
      }
    st.sensed_mw = 0.0;
    st.sensed_count = 0;
  }

  void go_idle(int node, int radio) {
    stations_[radio][node].state = State::Idle;
    untrack(node, radio);
  }

  /// Adds `tx`'s carrier-sense contribution at `node` if above the cutoff.
  void apply_sensing(Transmission& tx, int node) {
    auto& st = stations_[tx.radio][node];
    const double raw = tx.power_mw * env_.gain(tx.source, node, tx.radio);
    const double c = raw * coupling(tx.radio, tx.frequency_hz, st.frequency_hz);
    if (c < radios_[tx.radio].sensing_cutoff_mw) return;
    st.sensed_mw += c;
    ++st.sensed_count;
    tx.sensed.push_back({node, raw, c});
  }

  void start_contention(int node, int radio, double now) {
    auto& st = stations_[radio][node];
    track(node, radio, now);
    st.state = State::Contend;
    st.backoff = draw_backoff(node, radio);
    st.counting = false;
    ++st.token;
    if (!st.busy) resume(node, radio, now);
  }

  void resume(int node, int radio, double now) {
    auto& st = stations_[radio][node];
    const auto& rc = radios_[radio];
    st.resume_time = now;
    st.counting = true;
    ++st.token;
    queue_.push(now + rc.aifs_s + st.backoff * rc.slot_s, EventType::BackoffDone, node, radio, st.token);
  }

  void update_busy(int node, int radio, double now) {
    auto& st = stations_[radio][node];
    const bool busy_now = st.sensed_mw + st.floor_mw > st.gamma_mw;
    if (busy_now == st.busy) return;
    st.busy = busy_now;
    if (busy_now) {
      st.busy_since = now;
      if (st.state == State::Contend && st.counting) {
        const auto& rc = radios_[radio];
        const double elapsed = now - st.resume_time - rc.aifs_s;
        if (elapsed > 0.0) {
          const int slots = static_cast<int>(std::floor(elapsed / rc.slot_s + 1e-9));
          st.backoff = std::max(0, st.backoff - slots);
        }
        st.counting = false;
        ++st.token;
      }
    } else {
      st.busy_accum += now - st.busy_since;
      if (st.state == State::Contend && !st.counting) resume(node, radio, now);
    }
  }

  void on_backoff_done(const Event& e) {
    auto& st = stations_[e.radio][e.node];
    if (e.token != st.token || st.state != State::Contend || !st.counting) return;
    const auto& rc = radios_[e.radio];
    // Final clear-channel assessment with the stochastic energy detector.
    if (sense_channel(st.sensed_mw + st.floor_mw, st.gamma_mw, rc.sensing_samples, rng_) == ChannelState::Busy) {
      ++counters_.false_alarm_deferrals;
      ++st.token;
      queue_.push(e.time + rc.slot_s, EventType::BackoffDone, e.node, e.radio, st.token);
      return;
    }
    transmit(e.node, e.radio, e.time);
  }

  void transmit(int node, int radio, double now) {
    auto& st = stations_[radio][node];
    Message msg = std::move(st.queue.front());
    st.queue.pop_front();
    const double power = env_.tx_power_mw(node, radio, now);
    if (!(power > 0.0)) {
      ++counters_.suppressed;
      drop(msg, now);
      if (!st.queue.empty())
        start_contention(node, radio, now);
      else
        go_idle(node, radio);
      return;
    }
    ++counters_.transmitted;
    const auto& rc = radios_[radio];
    const std::uint64_t id = next_tx_id_++;
    Transmission tx;
    tx.id = id;
    tx.source = node;
    tx.radio = radio;
    tx.frequency_hz = st.frequency_hz;
    tx.power_mw = power;
    tx.start = now;
    tx.end = now + rc.airtime_s(msg.payload_bytes);
    tx.message = std::move(msg);
    st.state = State::Tx;
    st.counting = false;
    ++st.token;

    // The new emission overlaps every reception already in the air.
    for (auto& r : receptions_) {
      if (r.radio != radio) continue;
      if (r.receiver == node) {
        r.half_duplex = true;
        continue;
      }
      const double c =
          power * env_.gain(node, r.receiver, radio) *
          coupling(radio, tx.frequency_hz, stations_[radio][r.receiver].frequency_hz);
      r.interference_mw += c;
      r.worst_interference_mw = std::max(r.worst_interference_mw, r.interference_mw);
      r.overlapped = true;
      r.contributions.emplace_back(id, c);
    }

    for (int rx : tx.message.intended) {
      const auto& rst = stations_[radio][rx];
      if (!rst.enabled) {
        env_.on_disposition(tx.message, rx, Outcome::Dropped, -std::numeric_limits<double>::infinity(), now);
        continue;
      }
      Reception rec{id, rx, radio, 0.0, rst.floor_mw, 0.0, 0.0, false, rst.state == State::Tx, {}};
      rec.signal_mw = power * env_.gain(node, rx, radio) * coupling(radio, tx.frequency_hz, rst.frequency_hz);
      for (std::uint64_t other : active_[radio]) {
        const auto& o = transmissions_.at(other);
        if (o.source == rx) {
          rec.half_duplex = true;
          continue;
        }
        const double c = o.power_mw * env_.gain(o.source, rx, radio) * coupling(radio, o.frequency_hz, rst.frequency_hz);
        rec.interference_mw += c;
        rec.contributions.emplace_back(other, c);
        rec.overlapped = true;
      }
      rec.worst_interference_mw = rec.interference_mw;
      receptions_.push_back(std::move(rec));
    }

    active_[radio].push_back(id);
    auto [it, inserted] = transmissions_.emplace(id, std::move(tx));
    queue_.push(now + rc.cca_latency_s, EventType::SenseApply, node, radio, id);
    queue_.push(it->second.end, EventType::TxEnd, node, radio, id);

    active_view_.clear();
    for (std::uint64_t a : active_[radio]) active_view_.push_back(&transmissions_.at(a));
    env_.on_tx_start(it->second, std::span<const Transmission* const>(active_view_), now);
  }

  void on_sense_apply(const Event& e) {
    auto found = transmissions_.find(e.token);
    if (found == transmissions_.end()) return;
    auto& tx = found->second;
    tx.sensing_applied = true;
    for (int rx : tracked_[tx.radio]) {
      if (rx == tx.source) continue;
      const std::size_t before = tx.sensed.size();
      apply_sensing(tx, rx);
      if (tx.sensed.size() != before) update_busy(rx, tx.radio, e.time);
    }
  }

  void on_tx_end(const Event& e) {
    auto found = transmissions_.find(e.token);
    if (found == transmissions_.end()) return;
    Transmission& tx = found->second;
    const int radio = tx.radio;
    const auto& rc = radios_[radio];

    for (const auto& s : tx.sensed) {
      auto& st = stations_[radio][s.node];
      st.sensed_mw -= s.applied_mw;
      // Reset on the last removal so rounding residue cannot accumulate.
      if (--st.sensed_count == 0 || st.sensed_mw < 0.0) st.sensed_mw = 0.0;
      update_busy(s.node, radio, e.time);
    }

    std::vector<Reception> finished;
    for (auto it = receptions_.begin(); it != receptions_.end();) {
      if (it->tx_id == tx.id) {
        finished.push_back(std::move(*it));
        it = receptions_.erase(it);
        continue;
      }
      if (it->radio == radio) {
        for (auto c = it->contributions.begin(); c != it->contributions.end(); ++c)
          if (c->first == tx.id) {
            it->interference_mw = std::max(0.0, it->interference_mw - c->second);
            it->contributions.erase(c);
            break;
          }
        if (it->contributions.empty()) it->interference_mw = 0.0;
      }
      ++it;
    }
    for (const auto& r : finished) {
      double sinr_db = 0.0;
      const Outcome o = decide(r.signal_mw, r.floor_mw, r.worst_interference_mw, r.overlapped, r.half_duplex,
                               rc.decode_threshold_db, &sinr_db);
      env_.on_disposition(tx.message, r.receiver, o, sinr_db, e.time);
    }

    auto& act = active_[radio];
    act.erase(std::remove(act.begin(), act.end(), tx.id), act.end());
    const int src = tx.source;
    transmissions_.erase(found);

    if (!stations_[radio][src].queue.empty())
      start_contention(src, radio, e.time);
    else
      go_idle(src, radio);
  }

  Env& env_;
  EventQueue& queue_;
  Rng& rng_;
  RadioConfig radios_[2];
  std::vector<Station> stations_[2];
  std::vector<std::uint64_t> active_[2];
  std::vector<int> tracked_[2];
  std::unordered_map<std::uint64_t, Transmission> transmissions_;
  std::vector<Reception> receptions_;
  std::vector<const Transmission*> active_view_;
  std::uint64_t next_tx_id_{1};
  MacCounters counters_;
};

}  // namespace vdsa::mac
