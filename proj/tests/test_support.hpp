#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "vdsa/rem.hpp"

namespace vdsa::test {

/// Standard-normal upper tail by composite Simpson integration of the
/// density. Shares nothing with the erfc-based implementation.
inline double q_oracle(double x) {
  if (x < 0.0) return 1.0 - q_oracle(-x);
  const double hi = x + 14.0;
  const int n = 20000;
  const double h = (hi - x) / n;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double s = pdf(x) + pdf(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(x + i * h);
  return s * h / 3.0;
}

/// Inverse of q_oracle by bisection.
inline double q_inverse_oracle(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (q_oracle(mid) > p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Uniform-power map: `cells_x` x `cells_y` cells, one tower per
/// (channel, power) entry, optional receivers.
inline std::shared_ptr<const RemDatabase> flat_rem(double cell, Vec2 origin, int nx, int ny,
                                                   const std::vector<std::pair<int, double>>& channel_dbm,
                                                   const std::vector<DttReceiver>& receivers = {}) {
  std::vector<DttTransmitter> txs;
  std::vector<int> chans;
  int id = 1;
  for (auto [ch, dbm] : channel_dbm) {
    txs.push_back({id++, {origin.x, origin.y + 1e5}, ch, 474e6 + 8e6 * (ch - 21), 8e6, 75.0});
    chans.push_back(ch);
  }
  RemGrid grid(cell, origin, nx, ny, chans);
  for (auto [ch, dbm] : channel_dbm)
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix) grid.set(ix, iy, ch, dbm);
  return std::make_shared<const RemDatabase>(std::move(txs), receivers, std::move(grid));
}

inline RemDatabase parse_rem_text(const std::string& text) {
  std::istringstream in(text);
  return parse_rem(in);
}

}  // namespace vdsa::test
