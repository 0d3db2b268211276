// Command-line front end: scenario runs, seed sweeps and the built-in
// verification commands.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdsa/config.hpp"
#include "vdsa/engine.hpp"
#include "vdsa/verify.hpp"

namespace fs = std::filesystem;
using namespace vdsa;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kVerifyFailed = 2;

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : detail::split(s, ',')) {
    const long long v = detail::to_int(tok, "--seeds");
    if (v < 0) throw ConfigError("--seeds: seeds must be non-negative");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  if (out.empty()) throw ConfigError("--seeds: at least one seed required");
  return out;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void print_summary(const MetricsStore& m, std::ostream& os) {
  os << "use case " << to_string(m.use_case) << ", " << m.runs << " run(s)\n";
  os << "  reception ratio by platoon position (leader source):\n";
  for (auto kind : {mac::MessageKind::Cam, mac::MessageKind::Cacc}) {
    std::string line;
    for (int pos = 1; pos < 16; ++pos) {
      try {
        line += "  " + std::to_string(pos) + ":" + fmt(reception_ratio(m, kind, SourceRole::Leader, pos));
      } catch (const NoData&) {
      }
    }
    if (!line.empty()) os << "    " << mac::to_string(kind) << line << '\n';
  }
  if (!m.dtt_sir.empty())
    os << "  DTT SIR samples " << m.dtt_sir.size() << ", below minimum " << fmt(100.0 * m.fraction_below(m.sir_min_db), 2)
       << "%\n";
  os << "  mean band changes per platoon per run " << fmt(m.mean_band_changes(), 2) << '\n';
  os << "  CCH busy ratio " << fmt(m.cch_busy_ratio) << ", TVWS busy ratio " << fmt(m.tvws_busy_ratio) << '\n';
  os << "  wall time " << fmt(m.wall_s, 1) << " s, slowest allocation " << fmt(m.allocator_max_s * 1e3, 2) << " ms\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& seeds_arg,
            const std::string& use_case, const std::vector<std::string>& overrides, int verbosity) {
  if (!fs::exists(config_path)) throw ConfigError("config file '" + config_path + "' not found");
  Config cfg = Config::load(config_path);
  if (!use_case.empty()) cfg.set("sim.use_case", use_case);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
    cfg.set(detail::trim(o.substr(0, eq)), detail::trim(o.substr(eq + 1)));
  }
  const auto seeds = parse_seeds(seeds_arg);
  const SimulationConfig base = simulation_config_from(cfg);

  const fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_dir + "': " + ec.message());
  {
    std::ofstream eff(out / "effective_config.cfg", std::ios::binary);
    if (!eff) throw ConfigError("output directory '" + out_dir + "' is not writable");
    eff << cfg.dump();
  }

  auto job = [&](const SimulationConfig& c) {
    const fs::path dir = seeds.size() > 1 ? out / ("seed_" + std::to_string(c.seed)) : out;
    fs::create_directories(dir);
    std::ofstream events, traj;
    RunSinks sinks;
    if (c.event_log) {
      events.open(dir / "events.csv", std::ios::binary);
      events << "t_s,event,src,dst,kind,channel_hz,sinr_db,outcome\n";
      sinks.event_log = &events;
    }
    if (c.trajectory_stride > 0) {
      traj.open(dir / "trajectory.csv", std::ios::binary);
      traj << "t_s,vehicle_id,lane,x_m,speed_mps\n";
      sinks.trajectory = &traj;
    }
    MetricsStore m = run(c, sinks);
    write_metrics(dir, m, true);
    return m;
  };
  const auto runs = run_seeds(base, seeds, worker_threads(), job);
  const MetricsStore merged = merge_all(runs);
  if (seeds.size() > 1) write_metrics(out, merged, false);
  if (verbosity > 0) {
    for (std::size_t i = 0; i < runs.size() && verbosity > 1; ++i) {
      std::cout << "seed " << seeds[i] << ": ";
      print_summary(runs[i], std::cout);
    }
    print_summary(merged, std::cout);
  }
  return kOk;
}

int cmd_verify_sensing(double pfa, double pd, double sinr_db, std::uint64_t trials, std::uint64_t seed, bool raw) {
  const auto r = verify::verify_sensing(pfa, pd, sinr_db, trials, seed,
                                        raw ? verify::StatisticModel::RawSamples : verify::StatisticModel::Gaussian);
  std::cout << "N_s " << r.samples << (r.samples_capped ? " (capped)" : "") << ", gamma " << fmt(r.gamma, 6)
            << " x noise\n";
  std::cout << "P_fa model " << fmt(r.model_pfa, 6) << " empirical " << fmt(r.empirical_pfa, 6) << " (3 SE "
            << fmt(3 * r.se_pfa, 6) << ")\n";
  std::cout << "P_d  model " << fmt(r.model_pd, 6) << " empirical " << fmt(r.empirical_pd, 6) << " (3 SE "
            << fmt(3 * r.se_pd, 6) << ")\n";
  std::cout << (r.pass ? "PASS" : "FAIL") << '\n';
  return r.pass ? kOk : kVerifyFailed;
}

std::string tuple_str(const std::vector<double>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + fmt(t[i] / 1e6, 3) + " MHz";
  return s + ")";
}

int cmd_verify_allocator(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("scenario file '" + path + "' not found");
  const auto fixture = verify::load_fixture(path);
  const auto r = verify::verify_allocator(fixture);
  std::cout << "allocator " << tuple_str(r.chosen) << " objective " << fmt(r.chosen_objective_db, 9) << " dB\n";
  std::cout << "oracle    " << tuple_str(r.oracle) << " objective " << fmt(r.oracle_objective_db, 9) << " dB\n";
  std::cout << (r.pass ? "PASS" : "FAIL") << '\n';
  return r.pass ? kOk : kVerifyFailed;
}

int cmd_make_rem(const std::string& config_path, const std::string& out) {
  Config cfg;
  if (!config_path.empty()) cfg = Config::load(config_path);
  save_rem(out, synthesize_rem(synth_params_from(cfg)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vehicular dynamic spectrum access simulator for platoons in TV white spaces"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "print every configuration key with its default and exit");

  auto* run_cmd = app.add_subcommand("run", "simulate a scenario for one or more seeds");
  std::string config_path, out_dir, seeds = "1", use_case;
  std::vector<std::string> overrides;
  int verbosity = 1;
  run_cmd->add_option("--config", config_path, "scenario config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--seeds", seeds, "comma-separated seeds");
  run_cmd->add_option("--use-case", use_case, "override sim.use_case")->check(CLI::IsMember({"a", "b", "c"}));
  run_cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
  run_cmd->add_option("-v,--verbosity", verbosity, "0 silent, 1 merged summary, 2 per seed");

  auto* vs = app.add_subcommand("verify-sensing", "Monte-Carlo check of the energy detector closed forms");
  double pfa = 0.01, pd = 0.99, sinr_db = 0.0;
  std::uint64_t trials = 100000, mc_seed = 1;
  bool raw = false;
  vs->add_option("--pfa", pfa)->required();
  vs->add_option("--pd", pd)->required();
  vs->add_option("--sinr-db", sinr_db)->required();
  vs->add_option("--trials", trials);
  vs->add_option("--seed", mc_seed);
  vs->add_flag("--raw-samples", raw, "average N_s squared Gaussian samples instead of the approximated statistic");

  auto* va = app.add_subcommand("verify-allocator", "compare the allocator with a brute-force oracle");
  std::string scenario;
  va->add_option("--scenario", scenario, "fixture file")->required();

  auto* mr = app.add_subcommand("make-rem", "write the synthetic REM described by a config");
  std::string rem_cfg, rem_out;
  mr->add_option("--config", rem_cfg, "config file (defaults if omitted)");
  mr->add_option("--out", rem_out, "REM file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (print_defaults) {
      std::cout << Config().dump(true);
      return kOk;
    }
    if (*run_cmd) return cmd_run(config_path, out_dir, seeds, use_case, overrides, verbosity);
    if (*vs) return cmd_verify_sensing(pfa, pd, sinr_db, trials, mc_seed, raw);
    if (*va) return cmd_verify_allocator(scenario);
    if (*mr) return cmd_make_rem(rem_cfg, rem_out);
    std::cerr << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
