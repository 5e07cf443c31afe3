#include <algorithm>
#include <cstdint>
#include <sstream>

#include "harness.hpp"
#include "qnetsim/hardware.hpp"
#include "qnetsim/physics.hpp"
#include "stats.hpp"

namespace accept {

using namespace qnet;

bool stochastic_models(std::ostream& os) {
  Reporter r(os);
  const std::int64_t kTrials = 100000;

  {
    // Fiber transmission over 10 km at 0.2 dB/km.
    Timeline tl(101);
    QuantumChannel ch("span", 10.0, 0.2, 2e8, 20000);
    ch.register_source(1);
    std::int64_t arrived = 0;
    for (std::int64_t i = 0; i < kTrials; ++i)
      ch.transmit(tl, PhotonToken{1, tl.now()},
                  [&](const PhotonToken&, SimTime) { ++arrived; });
    tl.run(kSecond);
    const double p = channel_transmittance(10.0, 0.2);
    std::ostringstream ss;
    ss << "channel delivered " << arrived << " of " << kTrials
       << " photons; expectation " << str(p) << " per photon (3 sigma)";
    r.check(within_3sigma_binomial(arrived, kTrials, p), ss.str());
    r.check(ch.transmitted() == static_cast<std::uint64_t>(kTrials) &&
                ch.lost() == ch.transmitted() - arrived,
            "the channel's own counters agree with the delivery count");
  }

  {
    // Detector efficiency, photons spaced well past the dead time.
    Timeline tl(202);
    DetectorParams dp;
    Detector det("det", dp);
    std::int64_t clicks = 0;
    SimTime t = 0;
    for (std::int64_t i = 0; i < kTrials; ++i) {
      t += 100000;  // 100 ns
      if (det.register_photon(tl, t, 1)) ++clicks;
    }
    std::ostringstream ss;
    ss << "detector registered " << clicks << " of " << kTrials
       << " photons; configured efficiency " << str(dp.efficiency)
       << " (3 sigma)";
    r.check(within_3sigma_binomial(clicks, kTrials, dp.efficiency), ss.str());
  }

  {
    // Memory emission probability, spin prepared on the emitting branch so
    // the collection probability is observed directly.
    Timeline tl(303);
    MemoryParams mp;
    mp.frequency_hz = 1e6;  // fast gate keeps the scan short
    QuantumMemory mem(0, "m", mp);
    std::int64_t emitted = 0;
    for (std::int64_t i = 0; i < kTrials; ++i) {
      tl.run(std::max(tl.now() + 1, mem.next_excite_time()));
      mem.set_down();
      if (mem.excite(tl)) ++emitted;
    }
    std::ostringstream ss;
    ss << "memory emitted " << emitted << " of " << kTrials
       << " excitations; configured emission probability "
       << str(mp.emission_probability) << " (3 sigma)";
    r.check(within_3sigma_binomial(emitted, kTrials, mp.emission_probability),
            ss.str());
  }

  {
    // Dark counts as a Poisson process over one second.
    Timeline tl(404);
    DetectorParams dp;
    dp.dark_count_rate_hz = 1e5;
    Detector det("dark", dp);
    std::int64_t dark = 0;
    det.start_dark_counts(tl, time_from_seconds(1.0),
                          [&](const Detection& d) { dark += d.dark ? 1 : 0; });
    tl.run(time_from_seconds(2.0));
    std::ostringstream ss;
    ss << "detector produced " << dark
       << " dark counts in 1 s at a configured rate of 1e5 per second "
          "(3 sigma)";
    r.check(within_3sigma_poisson(dark, 1e5), ss.str());
  }

  {
    // Swap success frequency: repeatedly hand a middle router two halves and
    // count how often an end-to-end pair comes out. Background generation is
    // disabled so only the injected pairs are in play.
    Config cfg = chain_config(0.8, 1);
    cfg.simulation.stop_s = 1000.0;
    cfg.static_requests = {request("node-a", "node-c", 0.1, 999.0, 1, 0.8)};
    cfg.memory.efficiency = 0.0;
    cfg.memory.frequency_hz = 2.0;
    Simulation sim(cfg);
    sim.run_until(time_from_seconds(0.5));

    const NodeIndex a = sim.node_index("node-a");
    const NodeIndex b = sim.node_index("node-b");
    const NodeIndex c = sim.node_index("node-c");
    const std::int64_t kSwaps = 100000;
    const std::uint64_t before = sim.metrics().total_delivered();
    SimTime t = sim.timeline().now();
    for (std::int64_t i = 0; i < kSwaps; ++i) {
      const SimTime expires = t + kSecond;
      sim.inject_pair(a, 0, b, 0, 1, 0.96, expires);
      sim.inject_pair(b, 1, c, 0, 1, 0.96, expires);
      t += 5 * kMillisecond;
      sim.run_until(t);
    }
    const std::int64_t swaps =
        static_cast<std::int64_t>(sim.metrics().total_delivered() - before);
    std::ostringstream ss;
    ss << "swaps completed " << swaps << " of " << kSwaps
       << " attempts; configured success probability "
       << str(cfg.protocol.swap_success_probability) << " (3 sigma)";
    r.check(within_3sigma_binomial(swaps, kSwaps,
                                   cfg.protocol.swap_success_probability),
            ss.str());
    r.check(sim.entanglement_violations().empty(),
            "no entanglement bookkeeping violations during the swap scan");
  }

  r.within_budget(60.0);
  return r.all_ok();
}

}  // namespace accept
