#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "vdsa/channel.hpp"
#include "vdsa/error.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/sensing.hpp"
#include "vdsa/units.hpp"

namespace vdsa {

/// Vehicle positions of one platoon at allocation time; index 0 is the leader.
struct PlatoonSnapshot {
  int id{0};
  std::vector<Vec2> positions;
};

struct AllocationInput {
  std::vector<PlatoonSnapshot> platoons;
  const RemDatabase* rem{nullptr};
  std::vector<double> candidate_frequencies_hz;
  ProtectionParams protection;
  double p_max_dbm{20.0};
  double noise_mw{0.0};
  AcirSet acir{AcirSet::defaults()};
  PathlossModel v2v{PathlossModel::tvws()};
  PathlossModel v2dtt{PathlossModel::tvws()};
  /// false pins every cap to p_max_dbm (frequency selection only).
  bool power_control{true};
  double target_pfa{0.01};
  std::int64_t sensing_samples{100};
  /// Caps below this are reported as effectively zero.
  double cap_floor_dbm{-40.0};
  /// Build gamma from noise alone, as a detector without REM data would.
  bool sensing_ignores_dtt{false};
};

struct VehicleAllocation {
  double power_cap_dbm{0.0};
  double gamma_mw{0.0};
  bool effectively_off{false};
};

struct PlatoonAllocation {
  int platoon_id{0};
  double frequency_hz{0.0};
  double predicted_min_sinr_db{0.0};
  std::vector<VehicleAllocation> vehicles;
};

struct AllocationDecision {
  std::vector<PlatoonAllocation> platoons;
  double objective_db{0.0};
};

/// Receivers a transmitting vehicle must protect: the REM's receiver list,
/// plus the synthetic worst-case receiver when enabled.
inline std::vector<Vec2> protection_receivers(Vec2 vehicle, const RemDatabase& rem, const ProtectionParams& p) {
  std::vector<Vec2> out;
  out.reserve(rem.receivers().size() + 1);
  for (const auto& r : rem.receivers()) out.push_back(r.position);
  if (p.inject_worst_case_receiver) {
    Vec2 side{vehicle.x, vehicle.y + p.worst_case_rx_distance_m};
    if (!rem.contains(side)) side.y = vehicle.y - p.worst_case_rx_distance_m;
    out.push_back(side);
  }
  return out;
}

/// Highest transmit power (mW) on channel `w` that keeps every protected DTT
/// receiver at or above the minimum SIR, using zero-shadowing gains.
inline double max_ue_power_mw(Vec2 vehicle, int w, const RemDatabase& rem, const ProtectionParams& protection,
                              double p_max_dbm, const PathlossModel& pathloss) {
  if (!rem.contains(vehicle)) throw PositionOutsideMap("vehicle outside REM extent");
  const double p_max = dbm_to_mw(p_max_dbm);
  const double sir_min = db_to_linear(protection.sir_min_db);
  double allowed = p_max;
  for (Vec2 r : protection_receivers(vehicle, rem, protection)) {
    const double dtt_dbm = rem.lookup_dtt_power_dbm(r, w);
    const double dtt_mw = rem.lookup_dtt_power_mw(r, w);
    const double g = link_gain(pathloss, vehicle, r, 0.0).value;
    const double sir = dtt_mw / (p_max * g);
    double candidate = p_max;
    if (sir < sir_min && dtt_dbm > protection.gamma_dbm) candidate = p_max * sir / sir_min;
    allowed = std::min(allowed, candidate);
  }
  return std::max(allowed, 0.0);
}

inline double max_ue_power(Vec2 vehicle, int w, const RemDatabase& rem, const ProtectionParams& protection,
                           double p_max_dbm, const PathlossModel& pathloss) {
  return mw_to_dbm(max_ue_power_mw(vehicle, w, rem, protection, p_max_dbm, pathloss));
}

/// Per-vehicle cap for a platoon tuned to `f_hz`: the tightest per-channel
/// limit after dividing by the V->DTT coupling, never above the hardware cap.
inline double vehicle_power_cap_mw(Vec2 vehicle, double f_hz, const std::vector<ProtectedPair>& protected_set,
                                   const RemDatabase& rem, const ProtectionParams& protection,
                                   const AcirTable& v_to_dtt, const PathlossModel& pathloss, double p_max_dbm) {
  const double p_max = dbm_to_mw(p_max_dbm);
  double cap = p_max;
  int last_channel = std::numeric_limits<int>::min();
  for (const auto& pair : protected_set) {
    if (pair.channel == last_channel) continue;  // sorted; several towers may share a channel
    last_channel = pair.channel;
    const double coupling = v_to_dtt(f_hz, rem.channel_frequency_hz(pair.channel));
    const double limit = max_ue_power_mw(vehicle, pair.channel, rem, protection, p_max_dbm, pathloss) / coupling;
    cap = std::min(cap, limit);
  }
  return cap;
}

inline double vehicle_power_cap(Vec2 vehicle, double f_hz, const std::vector<ProtectedPair>& protected_set,
                                const RemDatabase& rem, const ProtectionParams& protection,
                                const AcirTable& v_to_dtt, const PathlossModel& pathloss, double p_max_dbm) {
  return mw_to_dbm(
      vehicle_power_cap_mw(vehicle, f_hz, protected_set, rem, protection, v_to_dtt, pathloss, p_max_dbm));
}

/// Convenience: cap at the vehicle's own position, honoring power_control.
inline double power_cap_at_mw(const AllocationInput& in, Vec2 vehicle, double f_hz) {
  if (!in.power_control) return dbm_to_mw(in.p_max_dbm);
  const auto prot = in.rem->protected_channels_at(vehicle, in.protection);
  return vehicle_power_cap_mw(vehicle, f_hz, prot, *in.rem, in.protection, in.acir.vehicle_to_dtt, in.v2dtt,
                              in.p_max_dbm);
}

inline double sensing_threshold_at_mw(const AllocationInput& in, Vec2 vehicle, double f_hz) {
  sensing::SensingParams sp;
  sp.noise_power = in.noise_mw;
  sp.dtt_power = in.sensing_ignores_dtt ? 0.0 : dtt_interference_at(vehicle, f_hz, *in.rem, in.acir.dtt_to_vehicle);
  sp.sample_count = in.sensing_samples;
  sp.target_pfa = in.target_pfa;
  return sensing::threshold(sp);
}

namespace detail {

/// Gains and per-frequency terms shared by every frequency tuple.
class TupleEvaluator {
 public:
  TupleEvaluator(const AllocationInput& in, const std::vector<double>& freqs) : in_(in), freqs_(freqs) {
    const std::size_t K = in.platoons.size();
    caps_.resize(K);
    dtt_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      const auto& pos = in.platoons[k].positions;
      caps_[k].assign(freqs.size(), std::vector<double>(pos.size()));
      dtt_[k].assign(freqs.size(), std::vector<double>(pos.size()));
      for (std::size_t i = 0; i < pos.size(); ++i) {
        const auto prot = in.power_control ? in.rem->protected_channels_at(pos[i], in.protection)
                                           : std::vector<ProtectedPair>{};
        for (std::size_t f = 0; f < freqs.size(); ++f) {
          caps_[k][f][i] = in.power_control
                               ? vehicle_power_cap_mw(pos[i], freqs[f], prot, *in.rem, in.protection,
                                                      in.acir.vehicle_to_dtt, in.v2dtt, in.p_max_dbm)
                               : dbm_to_mw(in.p_max_dbm);
          dtt_[k][f][i] = dtt_interference_at(pos[i], freqs[f], *in.rem, in.acir.dtt_to_vehicle);
        }
      }
    }
    gain_.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      gain_[k].resize(K);
      for (std::size_t p = 0; p < K; ++p) {
        const auto& a = in.platoons[k].positions;
        const auto& b = in.platoons[p].positions;
        gain_[k][p].assign(a.size() * b.size(), 0.0);
        for (std::size_t i = 0; i < a.size(); ++i)
          for (std::size_t j = 0; j < b.size(); ++j)
            if (k != p || i != j) gain_[k][p][i * b.size() + j] = link_gain(in.v2v, b[j], a[i], 0.0).value;
      }
    }
  }

  double cap(std::size_t k, std::size_t f, std::size_t i) const { return caps_[k][f][i]; }

  /// Worst per-vehicle SINR (linear) of platoon k when the tuple assigns
  /// frequency index `tuple[p]` to each platoon p.
  double platoon_min_sinr(std::size_t k, const std::vector<std::size_t>& tuple) const {
    const auto& pos = in_.platoons[k].positions;
    const std::size_t fk = tuple[k];
    const std::size_t n = pos.size();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
      const double leader = caps_[k][fk][0] * gain_[k][k][i * n + 0];
      const double preceding = caps_[k][fk][i - 1] * gain_[k][k][i * n + (i - 1)];
      const double signal = std::min(leader, preceding);
      double ivv = 0.0;
      for (std::size_t p = 0; p < in_.platoons.size(); ++p) {
        if (p == k) continue;
        const std::size_t fp = tuple[p];
        const double coupling = in_.acir.vehicle_to_vehicle(freqs_[fp], freqs_[fk]);
        const std::size_t m = in_.platoons[p].positions.size();
        for (std::size_t j = 0; j < m; ++j) ivv = std::max(ivv, caps_[p][fp][j] * gain_[k][p][i * m + j] * coupling);
      }
      worst = std::min(worst, signal / (dtt_[k][fk][i] + ivv + in_.noise_mw));
    }
    return worst;
  }

 private:
  const AllocationInput& in_;
  const std::vector<double>& freqs_;
  std::vector<std::vector<std::vector<double>>> caps_;
  std::vector<std::vector<std::vector<double>>> dtt_;
  std::vector<std::vector<std::vector<double>>> gain_;
};

inline void validate(const AllocationInput& in) {
  if (in.candidate_frequencies_hz.empty()) throw EmptyCandidateSet("no candidate frequencies");
  if (!in.rem) throw InvariantViolation("allocation input has no REM");
  if (!std::isfinite(in.p_max_dbm)) throw InvariantViolation("p_max must be finite");
  for (const auto& p : in.platoons)
    if (p.positions.size() < 2)
      throw InvariantViolation("platoon " + std::to_string(p.id) + " needs at least 2 vehicles");
}

}  // namespace detail

/// Worst-case SINR (dB) of platoon `k` on `f_hz`, given every platoon's
/// frequency and the per-vehicle caps (mW) at those frequencies.
inline double predicted_min_sinr(const AllocationInput& in, std::size_t k, const std::vector<double>& freqs_hz,
                                 const std::vector<std::vector<double>>& caps_mw) {
  const auto& pos = in.platoons[k].positions;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pos.size(); ++i) {
    const double leader = caps_mw[k][0] * link_gain(in.v2v, pos[0], pos[i], 0.0).value;
    const double preceding = caps_mw[k][i - 1] * link_gain(in.v2v, pos[i - 1], pos[i], 0.0).value;
    double ivv = 0.0;
    for (std::size_t p = 0; p < in.platoons.size(); ++p) {
      if (p == k) continue;
      const double coupling = in.acir.vehicle_to_vehicle(freqs_hz[p], freqs_hz[k]);
      const auto& other = in.platoons[p].positions;
      for (std::size_t j = 0; j < other.size(); ++j)
        ivv = std::max(ivv, caps_mw[p][j] * link_gain(in.v2v, other[j], pos[i], 0.0).value * coupling);
    }
    const double idtt = dtt_interference_at(pos[i], freqs_hz[k], *in.rem, in.acir.dtt_to_vehicle);
    worst = std::min(worst, std::min(leader, preceding) / (idtt + ivv + in.noise_mw));
  }
  return linear_to_db(worst);
}

/// Exhaustive max-min search over every assignment of candidate
/// frequencies to platoons. Ties go to the lexicographically smallest
/// frequency tuple.
inline AllocationDecision allocate(const AllocationInput& in) {
  detail::validate(in);
  std::vector<double> freqs = in.candidate_frequencies_hz;
  std::sort(freqs.begin(), freqs.end());
  freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());

  const std::size_t K = in.platoons.size();
  AllocationDecision decision;
  if (K == 0) return decision;

  detail::TupleEvaluator eval(in, freqs);
  std::vector<std::size_t> tuple(K, 0);
  std::vector<std::size_t> best = tuple;
  std::vector<double> best_sinr(K, 0.0);
  std::vector<double> sinr(K, 0.0);
  double best_objective = -std::numeric_limits<double>::infinity();
  bool first = true;

  for (;;) {
    double objective = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      sinr[k] = eval.platoon_min_sinr(k, tuple);
      objective = std::min(objective, sinr[k]);
    }
    if (first || objective > best_objective) {
      best_objective = objective;
      best = tuple;
      best_sinr = sinr;
      first = false;
    }
    // Odometer with platoon 0 most significant keeps enumeration lexicographic.
    std::size_t pos = K;
    while (pos > 0) {
      --pos;
      if (++tuple[pos] < freqs.size()) break;
      tuple[pos] = 0;
      if (pos == 0) {
        pos = K + 1;
        break;
      }
    }
    if (pos == K + 1) break;
  }

  decision.objective_db = linear_to_db(best_objective);
  for (std::size_t k = 0; k < K; ++k) {
    PlatoonAllocation pa;
    pa.platoon_id = in.platoons[k].id;
    pa.frequency_hz = freqs[best[k]];
    pa.predicted_min_sinr_db = linear_to_db(best_sinr[k]);
    for (std::size_t i = 0; i < in.platoons[k].positions.size(); ++i) {
      VehicleAllocation va;
      va.power_cap_dbm = mw_to_dbm(eval.cap(k, best[k], i));
      va.effectively_off = va.power_cap_dbm < in.cap_floor_dbm;
      va.gamma_mw = sensing_threshold_at_mw(in, in.platoons[k].positions[i], pa.frequency_hz);
      pa.vehicles.push_back(va);
    }
    decision.platoons.push_back(std::move(pa));
  }
  return decision;
}

}  // namespace vdsa
