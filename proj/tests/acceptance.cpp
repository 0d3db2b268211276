// Acceptance checks: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion holds. Scenario runs use the bundled configs.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vdsa/config.hpp"
#include "vdsa/engine.hpp"
#include "vdsa/verify.hpp"

namespace fs = std::filesystem;
using namespace vdsa;

namespace {

constexpr double kSirTolDb = 1e-9;
const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  failures += !ok;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

SimulationConfig scenario(const std::string& file, const char* use_case = nullptr) {
  Config c = Config::load(fs::path(VDSA_DATA_DIR) / file);
  if (use_case) c.set("sim.use_case", use_case);
  return simulation_config_from(c);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double fraction_at_or_above(const MetricsStore& m, double sir_min) {
  std::size_t ok = 0;
  for (const auto& s : m.dtt_sir) ok += s.sir_db >= sir_min - kSirTolDb;
  return static_cast<double>(ok) / static_cast<double>(m.dtt_sir.size());
}

void sensing_monte_carlo() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string worst;
  double worst_z = 0.0;
  for (auto [pfa, pd] : {std::pair{0.01, 0.99}, std::pair{0.1, 0.9}})
    for (double sinr_db : {-3.0, 0.0, 10.0}) {
      const auto r = verify::verify_sensing(pfa, pd, sinr_db, 100000, 1);
      ok = ok && r.pass;
      const double z = std::max(std::abs(r.empirical_pfa - r.model_pfa) / r.se_pfa,
                                std::abs(r.empirical_pd - r.model_pd) / r.se_pd);
      if (z >= worst_z) {
        worst_z = z;
        worst = "(" + fmt(pfa, 2) + ", " + fmt(pd, 2) + ", " + fmt(sinr_db, 0) + " dB)";
      }
    }
  const double elapsed = seconds_since(t0);
  report(1, ok && elapsed < 30.0,
         "6 operating points x 1e5 trials, worst deviation " + fmt(worst_z, 2) + " SE at " + worst + ", " +
             fmt(elapsed, 2) + " s");
}

void sample_count_round_trip() {
  Rng rng(2);
  double worst = 1.0;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    sensing::SensingParams p;
    p.noise_power = rng.uniform(0.1, 10.0);
    p.dtt_power = rng.uniform(0.0, 5.0);
    p.signal_power = p.null_power() * db_to_linear(rng.uniform(-15.0, 15.0));
    p.target_pfa = rng.uniform(0.001, 0.3);
    p.target_pd = rng.uniform(0.7, 0.999);
    const auto req = sensing::required_samples(p.signal_power / p.null_power(), p.target_pfa, p.target_pd);
    p.sample_count = req.samples;
    const double margin = sensing::pd(p, sensing::threshold(p)) - p.target_pd;
    worst = std::min(worst, margin);
    ok = ok && !req.capped && margin >= -1e-6;
  }
  report(2, ok, "100 random draws, min(pd - target) = " + fmt(worst, 9));
}

void dtt_protection(const MetricsStore& shadowed_run) {
  const auto no_shadow = run(scenario("no_shadowing.cfg"));
  const auto stress = run(scenario("cochannel_stress.cfg"));
  const double clean = fraction_at_or_above(no_shadow, no_shadow.sir_min_db);
  const double shadowed = fraction_at_or_above(shadowed_run, shadowed_run.sir_min_db);
  const double stressed_below = 1.0 - fraction_at_or_above(stress, stress.sir_min_db);
  const double wall = std::max({no_shadow.wall_s, stress.wall_s, shadowed_run.wall_s});
  const bool ok = !no_shadow.dtt_sir.empty() && !stress.dtt_sir.empty() && clean == 1.0 && shadowed >= 0.95 &&
                  stressed_below >= 0.5 && !shadowed_run.dtt_sir.empty() && wall < 120.0;
  report(3, ok,
         "(c) no shadowing " + fmt(100 * clean, 3) + "% >= SIR_min over " + std::to_string(no_shadow.dtt_sir.size()) +
             " samples; (c) shadowed seed 1 " + fmt(100 * shadowed, 2) + "%; (b) co-channel stress " +
             fmt(100 * stressed_below, 2) + "% below; slowest run " + fmt(wall, 1) + " s");
}

void reception_ordering(const MetricsStore& dense_a, const MetricsStore& dense_c, const MetricsStore& moderate_a) {
  bool ok = true;
  std::string detail;
  int worst_pos = 1;
  double worst = 2.0;
  for (int pos = 1; pos <= 7; ++pos) {
    try {
      const double cacc = reception_ratio(dense_c, mac::MessageKind::Cacc, SourceRole::Leader, pos);
      const double cam = reception_ratio(dense_a, mac::MessageKind::Cam, SourceRole::Leader, pos);
      ok = ok && cacc > cam;
      detail += " " + std::to_string(pos) + ":" + fmt(cacc) + ">" + fmt(cam);
      if (cam < worst) {
        worst = cam;
        worst_pos = pos;
      }
    } catch (const NoData&) {
      ok = false;
      detail += " " + std::to_string(pos) + ":no data";
    }
  }
  double moderate = 0.0;
  try {
    moderate = reception_ratio(moderate_a, mac::MessageKind::Cam, SourceRole::Leader, worst_pos);
  } catch (const NoData&) {
    ok = false;
  }
  ok = ok && worst < moderate;
  report(4, ok,
         "leader CACC (c) vs CAM (a) at 50/km/lane over " + std::to_string(dense_c.runs) + " seeds:" + detail +
             "; worst position " + std::to_string(worst_pos) + " dense " + fmt(worst) + " < moderate " +
             fmt(moderate));
}

void band_changes(const MetricsStore& dense_b, const MetricsStore& dense_c) {
  const double b = dense_b.mean_band_changes(), c = dense_c.mean_band_changes();
  const bool ok = dense_b.runs >= 5 && dense_c.runs >= 5 && b >= 1.5 * c && c < b;
  report(5, ok,
         "mean band changes per platoon per run (b) " + fmt(b, 2) + ", (c) " + fmt(c, 2) + ", ratio " +
             (c > 0 ? fmt(b / c, 3) : std::string("inf")));
}

void allocator_oracle() {
  Rng rng(6);
  int passed = 0, total = 20;
  for (int i = 0; i < total; ++i) passed += verify::verify_allocator(verify::random_fixture(rng)).pass;
  const auto bundled = verify::verify_allocator(verify::load_fixture(fs::path(VDSA_DATA_DIR) / "fixtures/two_platoons.cfg"));
  report(6, passed == total && bundled.pass,
         std::to_string(passed) + "/" + std::to_string(total) + " random fixtures and the bundled fixture match the brute-force oracle");
}

void max_ue_fixed_point() {
  Rng rng(7);
  const auto model = PathlossModel::tvws();
  const ProtectionParams pp;
  int binding = 0, checked = 0;
  double worst_rel = 0.0, min_margin_db = 1e9;
  bool ok = true;
  for (int i = 0; i < 200; ++i) {
    const double dbm = rng.uniform(-79.0, -40.0);
    const Vec2 rx{rng.uniform(0.0, 1000.0), rng.uniform(-200.0, 200.0)};
    std::vector<DttTransmitter> txs{{1, {0, 1e5}, 21, 474e6, 8e6, 75}};
    RemGrid grid(100, {0, -300}, 10, 6, {21});
    for (int iy = 0; iy < 6; ++iy)
      for (int ix = 0; ix < 10; ++ix) grid.set(ix, iy, 21, dbm);
    const RemDatabase rem(txs, {{1, rx, 21}}, grid);
    Vec2 v{rng.uniform(0.0, 1000.0), rng.uniform(-200.0, 200.0)};
    if (v == rx) continue;
    const double p_max = rng.uniform(-60.0, 30.0);
    const double cap = max_ue_power_mw(v, 21, rem, pp, p_max, model);
    const double sir = rem.lookup_dtt_power_mw(rx, 21) / (cap * link_gain(model, v, rx, 0.0).value);
    const double margin_db = linear_to_db(sir) - pp.sir_min_db;
    min_margin_db = std::min(min_margin_db, margin_db);
    ok = ok && margin_db >= -kSirTolDb;
    if (cap < dbm_to_mw(p_max)) {
      const double rel = std::abs(sir / db_to_linear(pp.sir_min_db) - 1.0);
      worst_rel = std::max(worst_rel, rel);
      ok = ok && rel <= 1e-9;
      ++binding;
    }
    ++checked;
  }
  report(7, ok && binding > 0,
         std::to_string(checked) + " geometries (" + std::to_string(binding) + " binding), min SIR margin " +
             fmt(min_margin_db, 9) + " dB, worst binding relative error " + sci(worst_rel));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(const MetricsStore& first) {
  const auto cfg = scenario("dense.cfg", "c");
  const MetricsStore again = run(cfg);
  const fs::path root = fs::temp_directory_path() / "vdsa_acceptance";
  fs::remove_all(root);
  write_metrics(root / "a", first, true);
  write_metrics(root / "b", again, true);
  bool same = true;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    same = same && slurp(e.path()) == slurp(root / "b" / e.path().filename());
    ++files;
  }
  report(8, same && files >= 4, std::to_string(files) + " CSV files byte-identical across two runs of seed 1");
}

void performance(const std::vector<std::vector<MetricsStore>*>& all) {
  double wall = 0.0, alloc = 0.0;
  for (const auto* runs : all)
    for (const auto& r : *runs) {
      wall = std::max(wall, r.wall_s);
      alloc = std::max(alloc, r.allocator_max_s);
    }
  report(9, wall < 300.0 && alloc < 1.0,
         "slowest full-scale run " + fmt(wall, 1) + " s, slowest allocation period " + fmt(alloc * 1e3, 2) + " ms");
}

}  // namespace

int main() {
  try {
    sensing_monte_carlo();
    sample_count_round_trip();

    const unsigned threads = worker_threads();
    auto dense_c = run_seeds(scenario("dense.cfg", "c"), kSeeds, threads);
    auto dense_b = run_seeds(scenario("dense.cfg", "b"), kSeeds, threads);
    auto dense_a = run_seeds(scenario("dense.cfg", "a"), kSeeds, threads);
    auto moderate_a = run_seeds(scenario("moderate.cfg", "a"), kSeeds, threads);
    const MetricsStore c = merge_all(dense_c), b = merge_all(dense_b), a = merge_all(dense_a),
                       ma = merge_all(moderate_a);

    dtt_protection(dense_c.front());
    reception_ordering(a, c, ma);
    band_changes(b, c);
    allocator_oracle();
    max_ue_fixed_point();
    determinism(dense_c.front());
    performance({&dense_c, &dense_b, &dense_a, &moderate_a});
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  return failures == 0 ? 0 : 1;
}
