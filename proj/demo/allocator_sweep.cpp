// One allocation period on the default motorway REM: two platoons passing
// each other, every candidate from 490 to 522 MHz.

#include <chrono>
#include <iostream>

#include "vdsa/allocator.hpp"
#include "vdsa/mobility.hpp"
#include "vdsa/rem_synth.hpp"

int main() {
  using namespace vdsa;
  const RemDatabase rem = synthesize_rem(SynthRemParams{});

  AllocationInput in;
  in.rem = &rem;
  for (double f = 490e6; f <= 522e6; f += 1e6) in.candidate_frequencies_hz.push_back(f);
  in.noise_mw = thermal_noise_mw(10e6, 9.0);
  const RoadConfig road;
  for (int k = 0; k < 2; ++k) {
    PlatoonSnapshot p;
    p.id = k;
    const int dir = k == 0 ? 1 : -1;
    const double lane_y = road.lane_center_y(k == 0 ? 0 : 5);
    for (int i = 0; i < 8; ++i) p.positions.push_back({(k == 0 ? 2000.0 : 2600.0) - dir * 10.0 * i, lane_y});
    in.platoons.push_back(p);
  }

  for (bool pc : {false, true}) {
    in.power_control = pc;
    const auto t0 = std::chrono::steady_clock::now();
    const AllocationDecision d = allocate(in);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (pc ? "with power control\n" : "without power control\n");
    for (const auto& p : d.platoons) {
      std::cout << "  platoon " << p.platoon_id << ": " << p.frequency_hz / 1e6 << " MHz, worst SINR "
                << p.predicted_min_sinr_db << " dB, caps";
      for (const auto& v : p.vehicles) std::cout << ' ' << v.power_cap_dbm;
      std::cout << " dBm\n";
    }
    std::cout << "  objective " << d.objective_db << " dB in " << ms << " ms\n";
  }
}
