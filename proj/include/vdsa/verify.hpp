#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "vdsa/allocator.hpp"
#include "vdsa/config.hpp"
#include "vdsa/mac.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/rng.hpp"
#include "vdsa/sensing.hpp"

namespace vdsa::verify {

// ---- sensing ----

enum class StatisticModel {
  /// T drawn from the Gaussian approximation the closed forms assume.
  Gaussian,
  /// T averaged from N_s real Gaussian samples (chi-square; informational).
  RawSamples,
};

struct SensingReport {
  double target_pfa{0.0};
  double target_pd{0.0};
  double sinr_db{0.0};
  std::int64_t samples{0};
  bool samples_capped{false};
  double gamma{0.0};
  double model_pfa{0.0};
  double model_pd{0.0};
  double empirical_pfa{0.0};
  double empirical_pd{0.0};
  double se_pfa{0.0};
  double se_pd{0.0};
  std::uint64_t trials{0};
  bool pass{false};
};

inline double binomial_se(double p, std::uint64_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

/// Monte-Carlo check of the detector: noise power 1, signal power at the
/// given SINR. Passes when both empirical rates sit within 3 standard
/// errors of the closed-form values at the chosen (N_s, gamma).
inline SensingReport verify_sensing(double target_pfa, double target_pd, double sinr_db, std::uint64_t trials,
                                    std::uint64_t seed = 1, StatisticModel model = StatisticModel::Gaussian) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0) || !(target_pd > 0.0 && target_pd < 1.0))
    throw DomainError("verify-sensing: probabilities must lie in (0, 1)");
  if (trials == 0) throw DomainError("verify-sensing: trials must be >= 1");
  SensingReport r;
  r.target_pfa = target_pfa;
  r.target_pd = target_pd;
  r.sinr_db = sinr_db;
  r.trials = trials;
  const double sinr = db_to_linear(sinr_db);
  const auto req = sensing::required_samples(sinr, target_pfa, target_pd);
  r.samples = req.samples;
  r.samples_capped = req.capped;

  sensing::SensingParams p;
  p.noise_power = 1.0;
  p.signal_power = sinr;
  p.sample_count = req.samples;
  p.target_pfa = target_pfa;
  p.target_pd = target_pd;
  r.gamma = sensing::threshold(p);
  r.model_pfa = sensing::pfa(p, r.gamma);
  r.model_pd = sensing::pd(p, r.gamma);

  Rng rng(seed);
  auto draw = [&](double mean) {
    if (model == StatisticModel::Gaussian) return mac::energy_statistic(mean, req.samples, rng);
    const double sd = std::sqrt(mean);
    double acc = 0.0;
    for (std::int64_t i = 0; i < req.samples; ++i) {
      const double y = sd * rng.normal();
      acc += y * y;
    }
    return acc / static_cast<double>(req.samples);
  };
  std::uint64_t fa = 0, det = 0;
  for (std::uint64_t t = 0; t < trials; ++t) fa += draw(p.null_power()) > r.gamma;
  for (std::uint64_t t = 0; t < trials; ++t) det += draw(p.null_power() + p.signal_power) > r.gamma;
  r.empirical_pfa = static_cast<double>(fa) / static_cast<double>(trials);
  r.empirical_pd = static_cast<double>(det) / static_cast<double>(trials);
  r.se_pfa = binomial_se(r.model_pfa, trials);
  r.se_pd = binomial_se(r.model_pd, trials);
  // Half a count of slack keeps rates pinned at 0 or 1 from failing on rounding.
  const double slack = 0.5 / static_cast<double>(trials);
  r.pass = std::abs(r.empirical_pfa - r.model_pfa) <= 3.0 * r.se_pfa + slack &&
           std::abs(r.empirical_pd - r.model_pd) <= 3.0 * r.se_pd + slack && r.model_pd >= target_pd - 1e-6;
  return r;
}

// ---- allocator ----

struct AllocatorFixture {
  std::shared_ptr<const RemDatabase> rem;
  std::vector<double> frequencies_hz;
  std::vector<PlatoonSnapshot> platoons;
  double p_max_dbm{20.0};
  double noise_mw{thermal_noise_mw(10e6, 9.0)};
  bool power_control{true};
  ProtectionParams protection;

  AllocationInput input() const {
    AllocationInput in;
    in.platoons = platoons;
    in.rem = rem.get();
    in.candidate_frequencies_hz = frequencies_hz;
    in.protection = protection;
    in.p_max_dbm = p_max_dbm;
    in.noise_mw = noise_mw;
    in.power_control = power_control;
    return in;
  }
};

/// Fixture file: `fixture.*` keys in the config syntax. The REM path is
/// relative to the fixture file.
inline AllocatorFixture load_fixture(const std::filesystem::path& path) {
  AllocatorFixture f;
  std::map<int, std::vector<Vec2>> platoons;
  std::string rem_path;
  detail::read_kv_file(path, [&](const std::string& k, const std::string& v, const std::string& where) {
    if (k == "fixture.rem") {
      std::filesystem::path p(v);
      rem_path = (p.is_relative() ? path.parent_path() / p : p).string();
    } else if (k == "fixture.frequencies_hz") {
      for (const auto& s : detail::split(v, ',')) f.frequencies_hz.push_back(detail::to_double(s, k));
    } else if (k.rfind("fixture.platoon", 0) == 0) {
      const int id = static_cast<int>(detail::to_int(k.substr(15), k));
      for (const auto& tok : detail::split(v, ' ')) {
        const auto xy = detail::split(tok, ':');
        if (xy.size() != 2) throw ConfigError(where + ": platoon positions are x:y pairs");
        platoons[id].push_back({detail::to_double(xy[0], k), detail::to_double(xy[1], k)});
      }
    } else if (k == "fixture.p_max_dbm") {
      f.p_max_dbm = detail::to_double(v, k);
    } else if (k == "fixture.noise_dbm") {
      f.noise_mw = dbm_to_mw(detail::to_double(v, k));
    } else if (k == "fixture.power_control") {
      f.power_control = detail::to_bool(v, k);
    } else if (k == "fixture.gamma_dbm") {
      f.protection.gamma_dbm = detail::to_double(v, k);
    } else if (k == "fixture.sir_min_db") {
      f.protection.sir_min_db = detail::to_double(v, k);
    } else {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  });
  if (rem_path.empty()) throw ConfigError(path.string() + ": fixture.rem missing");
  try {
    f.rem = std::make_shared<const RemDatabase>(load_rem(rem_path));
  } catch (const Error& e) {
    throw ConfigError("fixture REM '" + rem_path + "': " + e.what());
  }
  for (auto& [id, pos] : platoons) f.platoons.push_back({id, pos});
  return f;
}

inline void save_fixture(const std::filesystem::path& path, const AllocatorFixture& f) {
  const auto rem_name = path.stem().string() + ".rem";
  save_rem((path.parent_path() / rem_name).string(), *f.rem);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "fixture.rem = " << rem_name << '\n';
  out << "fixture.frequencies_hz = ";
  for (std::size_t i = 0; i < f.frequencies_hz.size(); ++i)
    out << (i ? ", " : "") << vdsa::detail::format_double(f.frequencies_hz[i]);
  out << '\n';
  for (const auto& p : f.platoons) {
    out << "fixture.platoon" << p.id << " =";
    for (Vec2 v : p.positions)
      out << ' ' << vdsa::detail::format_double(v.x) << ':' << vdsa::detail::format_double(v.y);
    out << '\n';
  }
  out << "fixture.p_max_dbm = " << vdsa::detail::format_double(f.p_max_dbm) << '\n';
  out << "fixture.noise_dbm = " << vdsa::detail::format_double(mw_to_dbm(f.noise_mw)) << '\n';
  out << "fixture.power_control = " << (f.power_control ? "true" : "false") << '\n';
  out << "fixture.gamma_dbm = " << vdsa::detail::format_double(f.protection.gamma_dbm) << '\n';
  out << "fixture.sir_min_db = " << vdsa::detail::format_double(f.protection.sir_min_db) << '\n';
}

/// Small random instance: K <= 2 platoons of 2..4 vehicles, 1..6
/// candidates, one or two towers and a few receivers.
inline AllocatorFixture random_fixture(Rng& rng) {
  const double cell = 50.0;
  const int nx = 20, ny = 8;
  const Vec2 origin{0.0, -200.0};
  const int towers = 1 + static_cast<int>(rng.uniform_int(1));
  std::vector<DttTransmitter> txs;
  std::vector<int> chans;
  for (int t = 0; t < towers; ++t) {
    const int ch = 21 + 4 * t + static_cast<int>(rng.uniform_int(2));
    const double fc = 474e6 + 8e6 * (ch - 21);
    txs.push_back({t + 1, {rng.uniform(0.0, 1000.0), 30000.0}, ch, fc, 8e6, 75.0});
    chans.push_back(ch);
  }
  RemGrid grid(cell, origin, nx, ny, chans);
  for (int ch : chans) {
    const double base = rng.uniform(-85.0, -50.0);
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) grid.set(ix, iy, ch, std::round((base + rng.uniform(-6.0, 6.0)) * 10.0) / 10.0);
  }
  std::vector<DttReceiver> rxs;
  const int nrx = 1 + static_cast<int>(rng.uniform_int(2));
  for (int r = 0; r < nrx; ++r)
    rxs.push_back({r + 1, {std::round(rng.uniform(20.0, 980.0)), std::round(rng.uniform(-150.0, 150.0))},
                   chans[rng.uniform_int(chans.size() - 1)]});
  AllocatorFixture f;
  f.rem = std::make_shared<const RemDatabase>(std::move(txs), std::move(rxs), std::move(grid));

  const int nf = 1 + static_cast<int>(rng.uniform_int(5));
  while (static_cast<int>(f.frequencies_hz.size()) < nf) {
    const double c = 470e6 + 1e6 * static_cast<double>(rng.uniform_int(60));
    if (std::find(f.frequencies_hz.begin(), f.frequencies_hz.end(), c) == f.frequencies_hz.end())
      f.frequencies_hz.push_back(c);
  }
  const int K = 1 + static_cast<int>(rng.uniform_int(1));
  for (int k = 0; k < K; ++k) {
    PlatoonSnapshot p;
    p.id = k;
    const int n = 2 + static_cast<int>(rng.uniform_int(2));
    const double y = k == 0 ? 1.75 : 19.25;
    const double x0 = std::round(rng.uniform(100.0, 900.0));
    const double gap = std::round(rng.uniform(6.0, 25.0));
    const int dir = k == 0 ? 1 : -1;
    for (int i = 0; i < n; ++i) p.positions.push_back({x0 - dir * i * gap, y});
    f.platoons.push_back(std::move(p));
  }
  f.power_control = rng.uniform() < 0.8;
  return f;
}

/// Exhaustive evaluation written directly from the SINR, DTT-interference
/// and protection definitions, sharing no code with the allocator beyond
/// REM lookups and the ACIR tables.
class BruteForceOracle {
 public:
  explicit BruteForceOracle(const AllocatorFixture& f)
      : f_(f), acir_(AcirSet::defaults()), model_(PathlossModel::tvws()) {}

  /// Mean gain from the log-distance law, evaluated independently.
  double gain(Vec2 a, Vec2 b) const {
    const double d = std::max(std::hypot(a.x - b.x, a.y - b.y), model_.reference_distance_m);
    const double loss_db = model_.reference_loss_db + 10.0 * model_.exponent_near * std::log10(d / model_.reference_distance_m);
    return std::pow(10.0, -loss_db / 10.0);
  }

  double cap_mw(Vec2 v, double f) const {
    const double pmax = std::pow(10.0, f_.p_max_dbm / 10.0);
    if (!f_.power_control) return pmax;
    const double sir_min = std::pow(10.0, f_.protection.sir_min_db / 10.0);
    double cap = pmax;
    for (int w : f_.rem->channels()) {
      if (!(f_.rem->lookup_dtt_power_dbm(v, w) > f_.protection.gamma_dbm)) continue;
      double allowed = pmax;
      for (const auto& r : f_.rem->receivers()) {
        const double pd_dbm = f_.rem->lookup_dtt_power_dbm(r.position, w);
        const double pd = std::pow(10.0, pd_dbm / 10.0);
        const double sir = pd / (pmax * gain(v, r.position));
        if (sir < sir_min && pd_dbm > f_.protection.gamma_dbm) allowed = std::min(allowed, pmax * sir / sir_min);
      }
      cap = std::min(cap, allowed / acir_.vehicle_to_dtt(f, f_.rem->channel_frequency_hz(w)));
    }
    return cap;
  }

  /// Objective (linear) of one frequency tuple: worst SINR over all platoons.
  double objective(const std::vector<double>& tuple) const {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f_.platoons.size(); ++k) {
      const auto& pos = f_.platoons[k].positions;
      for (std::size_t i = 1; i < pos.size(); ++i) {
        const double s_leader = cap_mw(pos[0], tuple[k]) * gain(pos[0], pos[i]);
        const double s_prev = cap_mw(pos[i - 1], tuple[k]) * gain(pos[i - 1], pos[i]);
        double i_dtt = 0.0;
        for (int w : f_.rem->channels())
          i_dtt += f_.rem->lookup_dtt_power_mw(pos[i], w) *
                   acir_.dtt_to_vehicle(f_.rem->channel_frequency_hz(w), tuple[k]);
        // Worst case: the single strongest vehicle of any other platoon.
        double i_vv = 0.0;
        for (std::size_t p = 0; p < f_.platoons.size(); ++p) {
          if (p == k) continue;
          for (Vec2 o : f_.platoons[p].positions)
            i_vv = std::max(i_vv, cap_mw(o, tuple[p]) * gain(o, pos[i]) * acir_.vehicle_to_vehicle(tuple[p], tuple[k]));
        }
        worst = std::min(worst, std::min(s_leader, s_prev) / (i_dtt + i_vv + f_.noise_mw));
      }
    }
    return worst;
  }

  /// First maximizing tuple in lexicographic frequency order.
  std::pair<std::vector<double>, double> best() const {
    std::vector<double> freqs = f_.frequencies_hz;
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
    const std::size_t K = f_.platoons.size();
    std::vector<double> best_tuple;
    double best_value = -std::numeric_limits<double>::infinity();
    std::size_t total = 1;
    for (std::size_t k = 0; k < K; ++k) total *= freqs.size();
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<double> tuple(K);
      std::size_t c = code;
      for (std::size_t k = K; k-- > 0;) {
        tuple[k] = freqs[c % freqs.size()];
        c /= freqs.size();
      }
      const double v = objective(tuple);
      if (best_tuple.empty() || v > best_value) {
        best_value = v;
        best_tuple = tuple;
      }
    }
    return {best_tuple, best_value};
  }

 private:
  const AllocatorFixture& f_;
  AcirSet acir_;
  PathlossModel model_;
};

struct AllocatorReport {
  std::vector<double> chosen;
  std::vector<double> oracle;
  double chosen_objective_db{0.0};
  double oracle_objective_db{0.0};
  bool pass{false};
};

inline AllocatorReport verify_allocator(const AllocatorFixture& f) {
  if (f.platoons.size() > 2 || f.frequencies_hz.size() > 6)
    throw ConfigError("verify-allocator fixtures are limited to 2 platoons and 6 frequencies");
  AllocatorReport r;
  const AllocationDecision d = allocate(f.input());
  for (const auto& p : d.platoons) r.chosen.push_back(p.frequency_hz);
  const BruteForceOracle oracle(f);
  auto [tuple, value] = oracle.best();
  r.oracle = tuple;
  r.oracle_objective_db = linear_to_db(value);
  const double chosen_value = f.platoons.empty() ? value : oracle.objective(r.chosen);
  r.chosen_objective_db = linear_to_db(chosen_value);
  r.pass = chosen_value == value && r.chosen == r.oracle;
  return r;
}

}  // namespace vdsa::verify
