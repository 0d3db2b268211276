#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vdsa/engine.hpp"
#include "vdsa/rem_synth.hpp"

namespace vdsa {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v))
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

inline long long to_int(const std::string& s, const std::string& key) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + s + "'");
}

/// Reads `key = value` lines, following `include <path>` relative to the
/// including file. Comments start with '#'.
inline void read_kv_file(const std::filesystem::path& path,
                         const std::function<void(const std::string&, const std::string&, const std::string& where)>& sink,
                         int depth = 0) {
  if (depth > 16) throw ConfigError("include depth exceeded at " + path.string());
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.rfind("include", 0) == 0 && (line.size() == 7 || std::isspace(static_cast<unsigned char>(line[7])))) {
      const std::string target = trim(line.substr(7));
      if (target.empty()) throw ConfigError(where + ": include needs a path");
      std::filesystem::path p(target);
      if (p.is_relative()) p = path.parent_path() / p;
      read_kv_file(p, sink, depth + 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    sink(key, trim(line.substr(eq + 1)), where);
  }
}

}  // namespace detail

/// Flat `section.key = value` configuration with a fixed key registry.
class Config {
 public:
  struct Key {
    std::string name;
    std::string default_value;
    std::string help;
  };

  static constexpr int kMaxPlatoons = 4;

  static const std::vector<Key>& registry() {
    static const std::vector<Key> keys = build_registry();
    return keys;
  }

  Config() {
    for (const auto& k : registry()) values_[k.name] = k.default_value;
  }

  static Config load(const std::filesystem::path& path) {
    Config c;
    c.merge_file(path);
    return c;
  }

  void merge_file(const std::filesystem::path& path) {
    detail::read_kv_file(path, [&](const std::string& k, const std::string& v, const std::string& where) {
      if (!values_.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
      // Paths are resolved against the file that names them.
      if (k == "rem.file" && !v.empty() && std::filesystem::path(v).is_relative())
        values_[k] = (path.parent_path() / v).lexically_normal().string();
      else
        values_[k] = v;
    });
  }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) throw ConfigError("unknown key '" + key + "'");
    values_[key] = value;
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
    return it->second;
  }

  double num(const std::string& key) const { return detail::to_double(str(key), key); }
  long long integer(const std::string& key) const { return detail::to_int(str(key), key); }
  bool flag(const std::string& key) const { return detail::to_bool(str(key), key); }

  std::vector<double> nums(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : detail::split(str(key), ',')) out.push_back(detail::to_double(s, key));
    return out;
  }

  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : detail::split(str(key), ',')) out.push_back(static_cast<int>(detail::to_int(s, key)));
    return out;
  }

  /// Every key in registry order, one `key = value` per line.
  std::string dump(bool with_help = false) const {
    std::string out;
    std::string section;
    for (const auto& k : registry()) {
      const std::string sec = k.name.substr(0, k.name.find('.'));
      if (sec != section) {
        if (!section.empty()) out += '\n';
        section = sec;
      }
      if (with_help && !k.help.empty()) out += "# " + k.help + '\n';
      out += k.name + " = " + values_.at(k.name) + '\n';
    }
    return out;
  }

 private:
  static std::vector<Key> build_registry() {
    std::vector<Key> k;
    auto add = [&](std::string n, std::string d, std::string h = {}) { k.push_back({std::move(n), std::move(d), std::move(h)}); };
    add("sim.use_case", "c", "a: CCH only; b: dual radio, no power control; c: dual radio with REM power control");
    add("sim.duration_s", "140");
    add("sim.allocation_period_s", "1");
    add("sim.mobility_dt_s", "0.05");
    add("sim.warmup_s", "5", "statistics ignore messages generated before this time");
    add("sim.seed", "1");

    add("road.length_m", "10000", "ring road; x wraps at this length");
    add("road.lanes", "6");
    add("road.lane_width_m", "3.5");

    add("traffic.density_per_km_lane", "50");
    add("traffic.lanes", "1,2,3,4");
    add("traffic.lane_speeds_kmh", "120,100,100,120");
    add("traffic.lane_directions", "1,1,-1,-1");

    add("platoons.count", "2");
    for (int p = 0; p < kMaxPlatoons; ++p) {
      const std::string s = "platoon" + std::to_string(p) + ".";
      const bool odd = p % 2 == 1;
      add(s + "size", "8");
      add(s + "intra_gap_m", "10");
      add(s + "lane", odd ? "5" : "0");
      add(s + "direction", odd ? "-1" : "1");
      add(s + "initial_x_m", detail::format_double(odd ? 9000.0 - 500.0 * (p / 2) : 1000.0 + 500.0 * (p / 2)));
      add(s + "cruise_speed_kmh", "130");
      add(s + "standoff_m", "50", "leader-to-jammer gap");
    }

    add("jammer.v_high_kmh", "130");
    add("jammer.v_low_kmh", "100");
    add("jammer.cycle_s", "30");

    add("mobility.max_accel_mps2", "3");
    add("mobility.gap_gain", "0.5");
    add("mobility.speed_gain", "1.4");
    add("mobility.min_gap_m", "1");

    add("rem.file", "", "REM text file; empty generates one from the rem.* parameters below");
    const SynthRemParams sp;
    add("rem.cell_m", detail::format_double(sp.cell_m));
    add("rem.origin_x", detail::format_double(sp.origin.x));
    add("rem.origin_y", detail::format_double(sp.origin.y));
    add("rem.nx", std::to_string(sp.nx));
    add("rem.ny", std::to_string(sp.ny));
    add("rem.exponent", detail::format_double(sp.exponent));
    add("rem.reference_distance_m", detail::format_double(sp.reference_distance_m));
    add("rem.residual_sigma_db", detail::format_double(sp.residual_sigma_db));
    add("rem.residual_correlation_m", detail::format_double(sp.residual_correlation_m));
    add("rem.seed", std::to_string(sp.seed));
    std::string towers;
    for (const auto& t : sp.towers) {
      if (!towers.empty()) towers += "; ";
      towers += std::to_string(t.channel) + ":" + detail::format_double(t.position.x) + ":" +
                detail::format_double(t.position.y) + ":" + detail::format_double(t.center_frequency_hz) + ":" +
                detail::format_double(t.bandwidth_hz) + ":" + detail::format_double(t.eirp_dbm);
    }
    add("rem.towers", towers, "channel:x:y:fc_hz:bw_hz:eirp_dbm; ...");
    std::string rxs;
    for (const auto& r : sp.receivers) {
      if (!rxs.empty()) rxs += "; ";
      rxs += std::to_string(r.id) + ":" + detail::format_double(r.position.x) + ":" +
             detail::format_double(r.position.y) + ":" + std::to_string(r.channel);
    }
    add("rem.receivers", rxs, "id:x:y:channel; ...");

    add("dtt.gamma_dbm", "-80", "DTT power above which a channel is protected");
    add("dtt.sir_min_db", "39.5");
    add("dtt.worst_case_receiver", "false", "add a synthetic receiver beside every vehicle");
    add("dtt.worst_case_distance_m", "60");

    add("vdsa.f_min_hz", "490e6");
    add("vdsa.f_max_hz", "522e6");
    add("vdsa.f_step_hz", "1e6");
    add("vdsa.p_max_dbm", "20", "TVWS hardware power limit");
    add("vdsa.cap_floor_dbm", "-40", "caps below this suppress the transmission");

    add("sensing.target_pfa", "0.01");
    add("sensing.samples", "100");

    for (int r = 0; r < 2; ++r) {
      const std::string s = "radio" + std::to_string(r) + ".";
      add(s + "center_frequency_hz", r == 0 ? "5.9e9" : "506e6", r == 1 ? "placeholder until the first allocation" : "");
      add(s + "bandwidth_hz", "10e6");
      add(s + "bitrate_bps", "6e6");
      add(s + "preamble_s", "40e-6");
      add(s + "cw_min", "15");
      add(s + "cw_max", "1023");
      add(s + "slot_s", "13e-6");
      add(s + "aifs_s", "58e-6");
      add(s + "decode_threshold_db", "8");
      add(s + "queue_capacity", "4");
      add(s + "cca_latency_s", "8e-6");
      add(s + "sensing_cutoff_dbm", "-100", "carrier-sense contributions below this are ignored");
      add(s + "noise_figure_db", "9");
    }
    add("radio0.sensing_threshold_dbm", "-85");
    add("radio0.tx_power_dbm", "20");

    add("pathloss.shadowing", "true", "false forces every shadowing sigma to 0");
    add("pathloss.shadowing_period_s", "1", "shadowing is redrawn once per period");
    add("pathloss.cch.reference_distance_m", "10");
    add("pathloss.cch.exponent_near", "2.1");
    add("pathloss.cch.exponent_far", "3.8");
    add("pathloss.cch.breakpoint_m", "100");
    add("pathloss.cch.shadowing_sigma_db", "3");
    add("pathloss.tvws.carrier_hz", "506e6");
    add("pathloss.tvws.reference_distance_m", "10");
    add("pathloss.tvws.exponent", "2");
    add("pathloss.tvws.shadowing_sigma_db", "3");

    const AcirSet acir = AcirSet::defaults();
    add("acir.vv", acir.vehicle_to_vehicle.to_string(), "offset_hz:ratio, ...");
    add("acir.dtt_to_v", acir.dtt_to_vehicle.to_string());
    add("acir.v_to_dtt", acir.vehicle_to_dtt.to_string());

    add("messages.cam_bytes", "300");
    add("messages.cacc_bytes", "200");
    add("messages.cam_hz_single_radio", "10", "platoon CAM rate in use case a");
    add("messages.cam_hz_dual_radio", "5");
    add("messages.cacc_hz", "5");
    add("messages.background_cam_hz", "10");

    add("output.event_log", "false");
    add("output.trajectory_stride", "0", "write trajectory rows every N mobility steps; 0 disables");
    return k;
  }

  std::map<std::string, std::string> values_;
};

namespace detail {

inline std::vector<std::vector<std::string>> split_records(const std::string& s) {
  std::vector<std::vector<std::string>> out;
  for (const auto& rec : split(s, ';')) out.push_back(split(rec, ':'));
  return out;
}

inline mac::RadioConfig radio_from(const Config& c, int r) {
  const std::string s = "radio" + std::to_string(r) + ".";
  mac::RadioConfig rc;
  rc.radio_id = r;
  rc.center_frequency_hz = c.num(s + "center_frequency_hz");
  rc.bandwidth_hz = c.num(s + "bandwidth_hz");
  rc.bitrate_bps = c.num(s + "bitrate_bps");
  rc.preamble_s = c.num(s + "preamble_s");
  rc.cw_min = static_cast<int>(c.integer(s + "cw_min"));
  rc.cw_max = static_cast<int>(c.integer(s + "cw_max"));
  rc.slot_s = c.num(s + "slot_s");
  rc.aifs_s = c.num(s + "aifs_s");
  rc.decode_threshold_db = c.num(s + "decode_threshold_db");
  const long long q = c.integer(s + "queue_capacity");
  if (q < 1) throw ConfigError(s + "queue_capacity must be >= 1");
  rc.queue_capacity = static_cast<std::size_t>(q);
  rc.cca_latency_s = c.num(s + "cca_latency_s");
  rc.sensing_cutoff_mw = dbm_to_mw(c.num(s + "sensing_cutoff_dbm"));
  rc.noise_figure_db = c.num(s + "noise_figure_db");
  rc.sensing_samples = c.integer("sensing.samples");
  if (r == 0) rc.sensing_threshold_mw = dbm_to_mw(c.num("radio0.sensing_threshold_dbm"));
  return rc;
}

}  // namespace detail

inline SynthRemParams synth_params_from(const Config& c) {
  SynthRemParams p;
  p.cell_m = c.num("rem.cell_m");
  p.origin = {c.num("rem.origin_x"), c.num("rem.origin_y")};
  p.nx = static_cast<int>(c.integer("rem.nx"));
  p.ny = static_cast<int>(c.integer("rem.ny"));
  p.exponent = c.num("rem.exponent");
  p.reference_distance_m = c.num("rem.reference_distance_m");
  p.residual_sigma_db = c.num("rem.residual_sigma_db");
  p.residual_correlation_m = c.num("rem.residual_correlation_m");
  p.seed = static_cast<std::uint64_t>(c.integer("rem.seed"));
  p.towers.clear();
  for (const auto& f : detail::split_records(c.str("rem.towers"))) {
    if (f.size() != 6) throw ConfigError("rem.towers: each entry needs channel:x:y:fc_hz:bw_hz:eirp_dbm");
    p.towers.push_back({static_cast<int>(detail::to_int(f[0], "rem.towers")),
                        {detail::to_double(f[1], "rem.towers"), detail::to_double(f[2], "rem.towers")},
                        detail::to_double(f[3], "rem.towers"), detail::to_double(f[4], "rem.towers"),
                        detail::to_double(f[5], "rem.towers")});
  }
  p.receivers.clear();
  for (const auto& f : detail::split_records(c.str("rem.receivers"))) {
    if (f.size() != 4) throw ConfigError("rem.receivers: each entry needs id:x:y:channel");
    p.receivers.push_back({static_cast<int>(detail::to_int(f[0], "rem.receivers")),
                           {detail::to_double(f[1], "rem.receivers"), detail::to_double(f[2], "rem.receivers")},
                           static_cast<int>(detail::to_int(f[3], "rem.receivers"))});
  }
  return p;
}

inline std::shared_ptr<const RemDatabase> rem_from(const Config& c) {
  const std::string& file = c.str("rem.file");
  try {
    if (!file.empty()) return std::make_shared<const RemDatabase>(load_rem(file));
    return std::make_shared<const RemDatabase>(synthesize_rem(synth_params_from(c)));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("REM " + (file.empty() ? std::string("synthesis") : "'" + file + "'") + ": " + e.what());
  }
}

inline SimulationConfig simulation_config_from(const Config& c) {
  constexpr double kmh = 1.0 / 3.6;
  SimulationConfig s;
  s.use_case = parse_use_case(c.str("sim.use_case"));
  s.duration_s = c.num("sim.duration_s");
  s.allocation_period_s = c.num("sim.allocation_period_s");
  s.mobility_dt_s = c.num("sim.mobility_dt_s");
  s.warmup_s = c.num("sim.warmup_s");
  s.seed = static_cast<std::uint64_t>(c.integer("sim.seed"));

  s.road.length_m = c.num("road.length_m");
  s.road.lanes = static_cast<int>(c.integer("road.lanes"));
  s.road.lane_width_m = c.num("road.lane_width_m");
  if (!(s.road.length_m > 0.0) || s.road.lanes < 1) throw ConfigError("road needs length > 0 and >= 1 lane");

  s.density_per_km_lane = c.num("traffic.density_per_km_lane");
  s.background_lanes = c.ints("traffic.lanes");
  for (double v : c.nums("traffic.lane_speeds_kmh")) s.lane_speeds_mps.push_back(v * kmh);
  s.lane_directions = c.ints("traffic.lane_directions");

  const long long n = c.integer("platoons.count");
  if (n < 0 || n > Config::kMaxPlatoons)
    throw ConfigError("platoons.count must lie in [0, " + std::to_string(Config::kMaxPlatoons) + "]");
  for (int p = 0; p < n; ++p) {
    const std::string k = "platoon" + std::to_string(p) + ".";
    PlatoonConfig pc;
    pc.size = static_cast<int>(c.integer(k + "size"));
    pc.intra_gap_m = c.num(k + "intra_gap_m");
    pc.lane = static_cast<int>(c.integer(k + "lane"));
    pc.direction = static_cast<int>(c.integer(k + "direction"));
    pc.initial_x_m = c.num(k + "initial_x_m");
    pc.cruise_speed_mps = c.num(k + "cruise_speed_kmh") * kmh;
    pc.standoff_m = c.num(k + "standoff_m");
    s.platoons.push_back(pc);
  }

  s.jammer.v_high_mps = c.num("jammer.v_high_kmh") * kmh;
  s.jammer.v_low_mps = c.num("jammer.v_low_kmh") * kmh;
  s.jammer.cycle_s = c.num("jammer.cycle_s");
  s.tracking.max_accel_mps2 = c.num("mobility.max_accel_mps2");
  s.tracking.gap_gain = c.num("mobility.gap_gain");
  s.tracking.speed_gain = c.num("mobility.speed_gain");
  s.tracking.min_gap_m = c.num("mobility.min_gap_m");

  s.rem = rem_from(c);
  s.protection.gamma_dbm = c.num("dtt.gamma_dbm");
  s.protection.sir_min_db = c.num("dtt.sir_min_db");
  s.protection.inject_worst_case_receiver = c.flag("dtt.worst_case_receiver");
  s.protection.worst_case_rx_distance_m = c.num("dtt.worst_case_distance_m");

  s.f_min_hz = c.num("vdsa.f_min_hz");
  s.f_max_hz = c.num("vdsa.f_max_hz");
  s.f_step_hz = c.num("vdsa.f_step_hz");
  s.p_max_dbm = c.num("vdsa.p_max_dbm");
  s.cap_floor_dbm = c.num("vdsa.cap_floor_dbm");
  s.target_pfa = c.num("sensing.target_pfa");
  if (!(s.target_pfa > 0.0 && s.target_pfa < 1.0)) throw ConfigError("sensing.target_pfa must lie in (0, 1)");

  s.cch = detail::radio_from(c, 0);
  s.tvws = detail::radio_from(c, 1);
  s.cch_tx_power_dbm = c.num("radio0.tx_power_dbm");

  const bool shadowing = c.flag("pathloss.shadowing");
  s.shadowing_period_s = c.num("pathloss.shadowing_period_s");
  s.pathloss_cch = PathlossModel::dual_slope_5g9(s.cch.center_frequency_hz);
  s.pathloss_cch.reference_distance_m = c.num("pathloss.cch.reference_distance_m");
  s.pathloss_cch.reference_loss_db = free_space_loss_db(s.pathloss_cch.reference_distance_m, s.cch.center_frequency_hz);
  s.pathloss_cch.exponent_near = c.num("pathloss.cch.exponent_near");
  s.pathloss_cch.exponent_far = c.num("pathloss.cch.exponent_far");
  s.pathloss_cch.breakpoint_m = c.num("pathloss.cch.breakpoint_m");
  s.pathloss_cch.shadowing_sigma_db = shadowing ? c.num("pathloss.cch.shadowing_sigma_db") : 0.0;
  const double tv_fc = c.num("pathloss.tvws.carrier_hz");
  s.pathloss_tvws = PathlossModel::tvws(tv_fc);
  s.pathloss_tvws.reference_distance_m = c.num("pathloss.tvws.reference_distance_m");
  s.pathloss_tvws.reference_loss_db = free_space_loss_db(s.pathloss_tvws.reference_distance_m, tv_fc);
  s.pathloss_tvws.exponent_near = s.pathloss_tvws.exponent_far = c.num("pathloss.tvws.exponent");
  s.pathloss_tvws.breakpoint_m = std::max(s.pathloss_tvws.breakpoint_m, s.pathloss_tvws.reference_distance_m);
  s.pathloss_tvws.shadowing_sigma_db = shadowing ? c.num("pathloss.tvws.shadowing_sigma_db") : 0.0;

  try {
    s.acir.vehicle_to_vehicle = AcirTable::parse(c.str("acir.vv"));
    s.acir.dtt_to_vehicle = AcirTable::parse(c.str("acir.dtt_to_v"));
    s.acir.vehicle_to_dtt = AcirTable::parse(c.str("acir.v_to_dtt"));
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("acir: ") + e.what());
  }

  s.messages.cam_bytes = static_cast<int>(c.integer("messages.cam_bytes"));
  s.messages.cacc_bytes = static_cast<int>(c.integer("messages.cacc_bytes"));
  s.messages.cam_hz_single_radio = c.num("messages.cam_hz_single_radio");
  s.messages.cam_hz_dual_radio = c.num("messages.cam_hz_dual_radio");
  s.messages.cacc_hz = c.num("messages.cacc_hz");
  s.messages.background_cam_hz = c.num("messages.background_cam_hz");
  if (s.messages.cam_bytes < 1 || s.messages.cacc_bytes < 1) throw ConfigError("message payloads must be >= 1 byte");

  s.event_log = c.flag("output.event_log");
  s.trajectory_stride = static_cast<int>(c.integer("output.trajectory_stride"));

  try {
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return s;
}

}  // namespace vdsa
