#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vdsa/channel.hpp"
#include "vdsa/rem.hpp"
#include "vdsa/rng.hpp"

namespace vdsa {

struct SynthTower {
  int channel{0};
  Vec2 position;
  double center_frequency_hz{0.0};
  double bandwidth_hz{8e6};
  double eirp_dbm{75.0};
};

/// Parameters of a generated REM: towers far from the road, a
/// log-distance mean and a spatially correlated log-normal residual per
/// channel, as a measured map would show.
struct SynthRemParams {
  double cell_m{50.0};
  Vec2 origin{0.0, -600.0};
  int nx{200};
  int ny{24};
  std::vector<SynthTower> towers{
      {23, {1500.0, 25000.0}, 490e6, 8e6, 75.0},
      {27, {8500.0, -25000.0}, 522e6, 8e6, 75.0},
  };
  std::vector<DttReceiver> receivers{
      {1, {450.0, 60.0}, 23},   {2, {1400.0, -80.0}, 27}, {3, {2350.0, 110.0}, 23}, {4, {3300.0, -50.0}, 27},
      {5, {4300.0, 90.0}, 23},  {6, {5250.0, -120.0}, 27}, {7, {6200.0, 70.0}, 23}, {8, {7150.0, -60.0}, 27},
      {9, {8100.0, 100.0}, 23}, {10, {9100.0, -90.0}, 27},
  };
  double exponent{3.5};
  double reference_distance_m{1000.0};
  double residual_sigma_db{4.0};
  double residual_correlation_m{250.0};
  std::uint64_t seed{7};
};

namespace detail {

/// Bilinear interpolation of i.i.d. normals on a lattice with spacing
/// `corr_m`; gives a smooth field of unit-order variance.
class LatticeField {
 public:
  LatticeField(Vec2 origin, double extent_x, double extent_y, double corr_m, Rng& rng)
      : origin_(origin), step_(corr_m) {
    nx_ = static_cast<int>(std::ceil(extent_x / corr_m)) + 2;
    ny_ = static_cast<int>(std::ceil(extent_y / corr_m)) + 2;
    values_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (auto& v : values_) v = rng.normal();
  }

  double operator()(Vec2 p) const {
    const double u = (p.x - origin_.x) / step_;
    const double v = (p.y - origin_.y) / step_;
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, nx_ - 2);
    const int j = std::clamp(static_cast<int>(std::floor(v)), 0, ny_ - 2);
    const double a = u - i, b = v - j;
    auto at = [&](int x, int y) { return values_[static_cast<std::size_t>(y) * nx_ + x]; };
    const double raw = (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
                       a * b * at(i + 1, j + 1);
    // Bilinear blending shrinks the variance; rescale by its mean factor (4/9).
    return raw / std::sqrt(4.0 / 9.0);
  }

 private:
  Vec2 origin_;
  double step_;
  int nx_{0}, ny_{0};
  std::vector<double> values_;
};

}  // namespace detail

inline RemDatabase synthesize_rem(const SynthRemParams& p) {
  if (p.towers.empty()) throw ConfigError("synthetic REM needs at least one tower");
  std::vector<int> channels;
  std::vector<DttTransmitter> txs;
  int id = 1;
  for (const auto& t : p.towers) {
    channels.push_back(t.channel);
    txs.push_back({id++, t.position, t.channel, t.center_frequency_hz, t.bandwidth_hz, t.eirp_dbm});
  }
  RemGrid grid(p.cell_m, p.origin, p.nx, p.ny, channels);
  Rng rng(p.seed);
  const double ex = p.nx * p.cell_m, ey = p.ny * p.cell_m;
  for (const auto& t : p.towers) {
    PathlossModel m;
    m.variant = PathlossVariant::TvwsLogDistance;
    m.reference_distance_m = p.reference_distance_m;
    m.reference_loss_db = free_space_loss_db(p.reference_distance_m, t.center_frequency_hz);
    m.exponent_near = m.exponent_far = p.exponent;
    m.breakpoint_m = p.reference_distance_m;
    const detail::LatticeField field(p.origin, ex, ey, p.residual_correlation_m, rng);
    for (int iy = 0; iy < p.ny; ++iy)
      for (int ix = 0; ix < p.nx; ++ix) {
        const Vec2 c{p.origin.x + (ix + 0.5) * p.cell_m, p.origin.y + (iy + 0.5) * p.cell_m};
        double dbm = t.eirp_dbm - m.loss_db(distance(c, t.position)) + p.residual_sigma_db * field(c);
        // Two decimals keep written maps compact and round-trip exact.
        dbm = std::round(dbm * 100.0) / 100.0;
        grid.set(ix, iy, t.channel, dbm);
      }
  }
  return RemDatabase(std::move(txs), p.receivers, std::move(grid));
}

}  // namespace vdsa
