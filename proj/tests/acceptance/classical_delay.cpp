#include <sstream>

#include "harness.hpp"

namespace accept {

using namespace qnet;

namespace {

// Two routers a desk apart sharing one 2 km link. The quantum side is
// identical in both variants; only the control-message latency changes.
Config desk_config(bool microsecond_control, double memory_frequency_hz) {
  Config cfg;
  cfg.simulation.stop_s = 10.0;
  cfg.simulation.seed = 3;
  cfg.nodes = {router_node("r1", "ANL", 8), router_node("r2", "FNAL", 8),
               bsm_node("mid", "")};
  cfg.quantum_channels = {channel("r1", "r2", "mid", 2.0)};
  if (microsecond_control) {
    // Direct links: short-fiber propagation plus 8 us transmission and 4 us
    // processing per message.
    cfg.classical.model = ClassicalModel::Channels;
    cfg.classical.channels = {{"r1", "mid", 17.0 * kMicrosecond},
                              {"r2", "mid", 17.0 * kMicrosecond},
                              {"r1", "r2", 22.0 * kMicrosecond}};
  } else {
    // Wide-area control plane: millisecond round trips between the sites.
    cfg.classical.model = ClassicalModel::SiteMatrix;
    cfg.classical.site_pairs = {{"ANL", "FNAL", 2.65, 2.62}};
  }
  cfg.memory.frequency_hz = memory_frequency_hz;
  cfg.static_requests = {request("r1", "r2", 0.1, 9.8, 5, 0.9)};
  return cfg;
}

std::uint64_t delivered(const Config& cfg) {
  Simulation sim(cfg);
  sim.run();
  return sim.metrics().total_delivered();
}

}  // namespace

bool classical_delay_impact(std::ostream& os) {
  Reporter r(os);

  const std::uint64_t us_20k = delivered(desk_config(true, 20e3));
  const std::uint64_t ms_20k = delivered(desk_config(false, 20e3));
  const std::uint64_t ms_2k = delivered(desk_config(false, 2e3));

  {
    std::ostringstream ss;
    ss << "pairs delivered in 10 s: " << us_20k
       << " with microsecond control, " << ms_20k
       << " with millisecond control (both at 20 kHz memories), " << ms_2k
       << " with millisecond control at 2 kHz memories";
    r.note(ss.str());
  }

  r.check(ms_20k > 0 && ms_2k > 0, "the millisecond variants still deliver");
  {
    std::ostringstream ss;
    ss << "microsecond control delivers " << str(double(us_20k) / double(ms_20k))
       << "x the millisecond-control throughput (needs >= 2x)";
    r.check(us_20k >= 2 * ms_20k, ss.str());
  }
  {
    std::ostringstream ss;
    ss << "under millisecond control, raising the memory rate from 2 kHz to "
          "20 kHz gains only "
       << str((double(ms_20k) / double(ms_2k) - 1.0) * 100.0)
       << "% (needs < 25%): latency, not the memory clock, is the "
          "bottleneck";
    r.check(double(ms_20k) < 1.25 * double(ms_2k), ss.str());
  }

  r.within_budget(60.0);
  return r.all_ok();
}

}  // namespace accept
