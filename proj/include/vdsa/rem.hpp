#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vdsa/error.hpp"
#include "vdsa/units.hpp"

namespace vdsa {

struct DttTransmitter {
  int id{0};
  Vec2 position;
  int channel{0};
  double center_frequency_hz{0.0};
  double bandwidth_hz{0.0};
  double eirp_dbm{0.0};

  friend bool operator==(const DttTransmitter&, const DttTransmitter&) = default;
};

struct DttReceiver {
  int id{0};
  Vec2 position;
  int channel{0};

  friend bool operator==(const DttReceiver&, const DttReceiver&) = default;
};

struct ProtectionParams {
  double gamma_dbm{-80.0};
  double sir_min_db{39.5};
  double worst_case_rx_distance_m{60.0};
  /// Adds a synthetic receiver `worst_case_rx_distance_m` to the side of
  /// every transmitting vehicle, for deployments without a receiver list.
  bool inject_worst_case_receiver{false};
};

struct ProtectedPair {
  int transmitter_id{0};
  int channel{0};

  friend bool operator==(const ProtectedPair&, const ProtectedPair&) = default;
  friend auto operator<=>(const ProtectedPair&, const ProtectedPair&) = default;
};

/// Uniform rectangular grid of received DTT power per channel.
///
/// Cell (ix, iy) covers [origin + ix*cell, origin + (ix+1)*cell] on each
/// axis. A point on a shared edge belongs to the lower-index cell.
class RemGrid {
 public:
  RemGrid() = default;

  RemGrid(double cell_size_m, Vec2 origin, int nx, int ny, std::vector<int> channels)
      : cell_size_(cell_size_m), origin_(origin), nx_(nx), ny_(ny), channels_(std::move(channels)) {
    if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_))
      throw InvariantViolation("GRID: cell_size must be > 0");
    if (nx_ <= 0 || ny_ <= 0) throw InvariantViolation("GRID: nx and ny must be positive");
    std::sort(channels_.begin(), channels_.end());
    channels_.erase(std::unique(channels_.begin(), channels_.end()), channels_.end());
    const std::size_t n = static_cast<std::size_t>(nx_) * ny_ * channels_.size();
    dbm_.assign(n, std::numeric_limits<double>::quiet_NaN());
    mw_.assign(n, 0.0);
  }

  double cell_size() const { return cell_size_; }
  Vec2 origin() const { return origin_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<int>& channels() const { return channels_; }
  bool empty() const { return nx_ == 0; }

  bool has_channel(int channel) const { return slot_of(channel).has_value(); }

  bool contains(Vec2 p) const {
    return p.x >= origin_.x && p.y >= origin_.y && p.x <= origin_.x + nx_ * cell_size_ &&
           p.y <= origin_.y + ny_ * cell_size_;
  }

  void set(int ix, int iy, int channel, double power_dbm) {
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_)
      throw InvariantViolation("CELL index (" + std::to_string(ix) + "," + std::to_string(iy) +
                               ") outside grid");
    const auto slot = slot_of(channel);
    if (!slot) throw UnknownChannel("CELL references unknown channel " + std::to_string(channel));
    if (!std::isfinite(power_dbm)) throw InvariantViolation("CELL power must be finite");
    const std::size_t k = flat(ix, iy, *slot);
    dbm_[k] = power_dbm;
    mw_[k] = dbm_to_mw(power_dbm);
  }

  bool is_set(int ix, int iy, int channel) const {
    const auto slot = slot_of(channel);
    return slot && !std::isnan(dbm_[flat(ix, iy, *slot)]);
  }

  double cell_dbm(int ix, int iy, int channel) const {
    return dbm_[flat(ix, iy, require_slot(channel))];
  }

  /// Cell holding `p`, or nullopt outside the covered extent.
  std::optional<std::pair<int, int>> cell_of(Vec2 p) const {
    if (!contains(p)) return std::nullopt;
    return std::pair{axis_index((p.x - origin_.x) / cell_size_, nx_),
                     axis_index((p.y - origin_.y) / cell_size_, ny_)};
  }

  double lookup_dbm(Vec2 p, int channel) const {
    const auto [ix, iy] = require_cell(p);
    return dbm_[flat(ix, iy, require_slot(channel))];
  }

  double lookup_mw(Vec2 p, int channel) const {
    const auto [ix, iy] = require_cell(p);
    return mw_[flat(ix, iy, require_slot(channel))];
  }

  /// Linear powers of every channel at the cell holding `p`, ordered as channels().
  const double* cell_mw(Vec2 p) const {
    const auto [ix, iy] = require_cell(p);
    return &mw_[flat(ix, iy, 0)];
  }

  const double* cell_dbm_row(Vec2 p) const {
    const auto [ix, iy] = require_cell(p);
    return &dbm_[flat(ix, iy, 0)];
  }

 private:
  static int axis_index(double u, int n) {
    // ceil(u) - 1 puts exact edges into the lower cell; u == 0 is cell 0.
    int i = static_cast<int>(std::ceil(u)) - 1;
    return std::clamp(i, 0, n - 1);
  }

  std::pair<int, int> require_cell(Vec2 p) const {
    auto c = cell_of(p);
    if (!c)
      throw PositionOutsideMap("position (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                               ") outside REM extent");
    return *c;
  }

  std::optional<std::size_t> slot_of(int channel) const {
    auto it = std::lower_bound(channels_.begin(), channels_.end(), channel);
    if (it == channels_.end() || *it != channel) return std::nullopt;
    return static_cast<std::size_t>(it - channels_.begin());
  }

  std::size_t require_slot(int channel) const {
    auto s = slot_of(channel);
    if (!s) throw UnknownChannel("channel " + std::to_string(channel) + " not modeled");
    return *s;
  }

  std::size_t flat(int ix, int iy, std::size_t slot) const {
    return (static_cast<std::size_t>(iy) * nx_ + ix) * channels_.size() + slot;
  }

  double cell_size_{0.0};
  Vec2 origin_;
  int nx_{0};
  int ny_{0};
  std::vector<int> channels_;
  std::vector<double> dbm_;
  std::vector<double> mw_;
};

class RemDatabase {
 public:
  RemDatabase() = default;

  RemDatabase(std::vector<DttTransmitter> transmitters, std::vector<DttReceiver> receivers, RemGrid grid)
      : transmitters_(std::move(transmitters)), receivers_(std::move(receivers)), grid_(std::move(grid)) {
    validate();
  }

  const std::vector<DttTransmitter>& transmitters() const { return transmitters_; }
  const std::vector<DttReceiver>& receivers() const { return receivers_; }
  const RemGrid& grid() const { return grid_; }

  /// Channels with stored power, ascending.
  const std::vector<int>& channels() const { return grid_.channels(); }

  double channel_frequency_hz(int channel) const {
    for (const auto& t : transmitters_)
      if (t.channel == channel) return t.center_frequency_hz;
    throw UnknownChannel("channel " + std::to_string(channel) + " has no transmitter");
  }

  bool contains(Vec2 p) const { return grid_.contains(p); }

  double lookup_dtt_power_dbm(Vec2 p, int channel) const { return grid_.lookup_dbm(p, channel); }
  double lookup_dtt_power_mw(Vec2 p, int channel) const { return grid_.lookup_mw(p, channel); }

  /// (transmitter, channel) pairs whose stored power at `p` is strictly above Gamma.
  std::vector<ProtectedPair> protected_channels_at(Vec2 p, const ProtectionParams& params) const {
    const double* row = grid_.cell_dbm_row(p);
    std::vector<ProtectedPair> out;
    const auto& chans = grid_.channels();
    for (std::size_t s = 0; s < chans.size(); ++s) {
      if (!(row[s] > params.gamma_dbm)) continue;
      for (const auto& t : transmitters_)
        if (t.channel == chans[s]) out.push_back({t.id, t.channel});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  friend bool operator==(const RemDatabase& a, const RemDatabase& b) {
    if (a.transmitters_ != b.transmitters_ || a.receivers_ != b.receivers_) return false;
    const RemGrid& ga = a.grid_;
    const RemGrid& gb = b.grid_;
    if (ga.cell_size() != gb.cell_size() || !(ga.origin() == gb.origin()) || ga.nx() != gb.nx() ||
        ga.ny() != gb.ny() || ga.channels() != gb.channels())
      return false;
    for (int iy = 0; iy < ga.ny(); ++iy)
      for (int ix = 0; ix < ga.nx(); ++ix)
        for (int c : ga.channels())
          if (ga.cell_dbm(ix, iy, c) != gb.cell_dbm(ix, iy, c)) return false;
    return true;
  }

 private:
  void validate() const {
    std::set<int> tx_ids;
    std::set<int> tx_channels;
    for (const auto& t : transmitters_) {
      const std::string who = "TX " + std::to_string(t.id);
      if (!tx_ids.insert(t.id).second) throw InvariantViolation(who + ": duplicate transmitter id");
      if (!(t.bandwidth_hz > 0.0)) throw InvariantViolation(who + ": bandwidth must be > 0");
      if (!(t.center_frequency_hz > 0.0)) throw InvariantViolation(who + ": center frequency must be > 0");
      tx_channels.insert(t.channel);
    }
    std::set<int> rx_ids;
    for (const auto& r : receivers_) {
      const std::string who = "RX " + std::to_string(r.id);
      if (!rx_ids.insert(r.id).second) throw InvariantViolation(who + ": duplicate receiver id");
      if (!tx_channels.count(r.channel))
        throw InvariantViolation(who + ": served channel " + std::to_string(r.channel) +
                                 " has no transmitter");
    }
    if (grid_.empty()) throw InvariantViolation("GRID record missing");
    for (int c : tx_channels)
      if (!grid_.has_channel(c))
        throw InvariantViolation("GRID has no power for channel " + std::to_string(c));
    for (int c : grid_.channels()) {
      if (!tx_channels.count(c))
        throw InvariantViolation("GRID channel " + std::to_string(c) + " has no transmitter");
      for (int iy = 0; iy < grid_.ny(); ++iy)
        for (int ix = 0; ix < grid_.nx(); ++ix)
          if (!grid_.is_set(ix, iy, c))
            throw InvariantViolation("GRID cell (" + std::to_string(ix) + "," + std::to_string(iy) +
                                     ") missing channel " + std::to_string(c));
    }
  }

  std::vector<DttTransmitter> transmitters_;
  std::vector<DttReceiver> receivers_;
  RemGrid grid_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(std::string_view tok, int line, const char* field) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError(std::string("field '") + field + "' is not a number: '" + std::string(tok) + "'", line);
  return v;
}

inline int parse_int(std::string_view tok, int line, const char* field) {
  int v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(std::string("field '") + field + "' is not an integer: '" + std::string(tok) + "'", line);
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

inline RemDatabase parse_rem(std::istream& in) {
  std::vector<DttTransmitter> txs;
  std::vector<DttReceiver> rxs;
  struct PendingCell {
    int ix, iy, channel;
    double dbm;
    int line;
  };
  std::vector<PendingCell> cells;
  std::optional<std::tuple<double, Vec2, int, int>> grid_hdr;
  int grid_line = 0;

  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    auto need = [&](std::size_t n) {
      if (f.size() != n)
        throw ParseError(std::string(f[0]) + " record expects " + std::to_string(n - 1) + " fields, got " +
                             std::to_string(f.size() - 1),
                         lineno);
    };
    if (f[0] == "TX") {
      need(8);
      DttTransmitter t;
      t.id = detail::parse_int(f[1], lineno, "id");
      t.position = {detail::parse_double(f[2], lineno, "x_m"), detail::parse_double(f[3], lineno, "y_m")};
      t.channel = detail::parse_int(f[4], lineno, "channel_index");
      t.center_frequency_hz = detail::parse_double(f[5], lineno, "center_freq_hz");
      t.bandwidth_hz = detail::parse_double(f[6], lineno, "bandwidth_hz");
      t.eirp_dbm = detail::parse_double(f[7], lineno, "eirp_dbm");
      txs.push_back(t);
    } else if (f[0] == "RX") {
      need(5);
      DttReceiver r;
      r.id = detail::parse_int(f[1], lineno, "id");
      r.position = {detail::parse_double(f[2], lineno, "x_m"), detail::parse_double(f[3], lineno, "y_m")};
      r.channel = detail::parse_int(f[4], lineno, "channel_index");
      rxs.push_back(r);
    } else if (f[0] == "GRID") {
      need(6);
      if (grid_hdr) throw ParseError("second GRID record", lineno);
      grid_hdr = std::tuple{detail::parse_double(f[1], lineno, "cell_size_m"),
                            Vec2{detail::parse_double(f[2], lineno, "origin_x_m"),
                                 detail::parse_double(f[3], lineno, "origin_y_m")},
                            detail::parse_int(f[4], lineno, "nx"), detail::parse_int(f[5], lineno, "ny")};
      grid_line = lineno;
    } else if (f[0] == "CELL") {
      need(5);
      if (!grid_hdr) throw ParseError("CELL before GRID", lineno);
      cells.push_back({detail::parse_int(f[1], lineno, "ix"), detail::parse_int(f[2], lineno, "iy"),
                       detail::parse_int(f[3], lineno, "channel_index"),
                       detail::parse_double(f[4], lineno, "power_dbm"), lineno});
    } else {
      throw ParseError("unknown record kind '" + std::string(f[0]) + "'", lineno);
    }
  }
  if (!grid_hdr) throw InvariantViolation("GRID record missing");

  std::vector<int> channels;
  for (const auto& c : cells) channels.push_back(c.channel);
  const auto& [cs, origin, nx, ny] = *grid_hdr;
  RemGrid grid;
  try {
    grid = RemGrid(cs, origin, nx, ny, channels);
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(std::string(e.what()) + " (line " + std::to_string(grid_line) + ")");
  }
  for (const auto& c : cells) {
    try {
      grid.set(c.ix, c.iy, c.channel, c.dbm);
    } catch (const Error& e) {
      throw InvariantViolation(std::string(e.what()) + " (line " + std::to_string(c.line) + ")");
    }
  }
  return RemDatabase(std::move(txs), std::move(rxs), std::move(grid));
}

inline RemDatabase load_rem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open REM file '" + path + "'");
  return parse_rem(in);
}

inline void write_rem(std::ostream& out, const RemDatabase& rem) {
  using detail::format_double;
  out << "# REM: DTT transmitters, receivers and received-power grid\n";
  for (const auto& t : rem.transmitters())
    out << "TX " << t.id << ' ' << format_double(t.position.x) << ' ' << format_double(t.position.y) << ' '
        << t.channel << ' ' << format_double(t.center_frequency_hz) << ' ' << format_double(t.bandwidth_hz)
        << ' ' << format_double(t.eirp_dbm) << '\n';
  for (const auto& r : rem.receivers())
    out << "RX " << r.id << ' ' << format_double(r.position.x) << ' ' << format_double(r.position.y) << ' '
        << r.channel << '\n';
  const auto& g = rem.grid();
  out << "GRID " << format_double(g.cell_size()) << ' ' << format_double(g.origin().x) << ' '
      << format_double(g.origin().y) << ' ' << g.nx() << ' ' << g.ny() << '\n';
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix)
      for (int c : g.channels())
        out << "CELL " << ix << ' ' << iy << ' ' << c << ' ' << format_double(g.cell_dbm(ix, iy, c)) << '\n';
}

inline void save_rem(const std::string& path, const RemDatabase& rem) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write REM file '" + path + "'");
  write_rem(out, rem);
}

}  // namespace vdsa
