#include "qnetsim/bsm.hpp"

namespace qnet {

BsmStation::BsmStation(std::string name, DetectorParams detector_params,
                       SimTime window_width)
    : name_(std::move(name)),
      window_width_(window_width),
      detectors_{Detector(name_ + ".det0", detector_params),
                 Detector(name_ + ".det1", detector_params)} {
  if (window_width_ <= 0)
    throw SimulationError("station '" + name_ +
                          "': detection window must be positive");
}

void BsmStation::start(Timeline& tl, SimTime stop) {
  for (Detector& d : detectors_) {
    d.start_dark_counts(tl, stop, [this](const Detection& det) {
      record_click(Click{det.timestamp, true, 0, kNoMemory});
    });
  }
}

void BsmStation::add_session(Timeline& tl, const BsmSessionSpec& spec) {
  if (spec.window1_begin < tl.now() || spec.window2_begin < spec.window1_begin) {
    throw SimulationError("station '" + name_ +
                          "': session windows are not in causal order");
  }
  if (sessions_.count(spec.key) != 0) {
    throw SimulationError("station '" + name_ + "': duplicate session key");
  }
  Session session;
  session.spec = spec;
  sessions_.emplace(spec.key, std::move(session));
  const InstanceId key = spec.key;
  tl.schedule(spec.window1_begin + window_width_, name_,
              [this, key] { adjudicate(key, 1); });
  tl.schedule(spec.window2_begin + window_width_, name_,
              [this, key] { adjudicate(key, 2); });
}

void BsmStation::report_excitation(InstanceId key, int round, int side,
                                   bool emitting) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) return;
  it->second.emitted[round - 1][side] = emitting;
}

void BsmStation::photon_arrival(Timeline& tl, int side,
                                const PhotonToken& photon) {
  // Beam splitter: either output port with equal probability.
  Detector& det = detectors_[tl.rng().bernoulli(0.5) ? 1 : 0];
  std::optional<Detection> hit = det.register_photon(tl, tl.now(), photon.source);
  if (hit) record_click(Click{hit->timestamp, false, side, photon.source});
}

void BsmStation::record_click(const Click& click) {
  // A click counts toward every open window covering its timestamp. Windows
  // start one detector-resolution step before the first scheduled arrival of
  // their slot and end before the next slot's arrivals, so a real photon
  // lands in exactly one window; only a dark count in the one-resolution
  // overlap sliver can be seen by two adjacent windows.
  for (auto& [key, s] : sessions_) {
    const SimTime begins[2] = {s.spec.window1_begin, s.spec.window2_begin};
    for (int r = 0; r < 2; ++r) {
      if (click.timestamp >= begins[r] &&
          click.timestamp < begins[r] + window_width_) {
        s.clicks[r].push_back(click);
      }
    }
  }
}

bool BsmStation::genuine_single_click(const Session& s, int round) {
  const Click& c = s.clicks[round - 1].front();
  if (c.dark) return false;
  return c.source == s.spec.mem[c.side];
}

void BsmStation::adjudicate(InstanceId key, int round) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) return;  // ended at round 1
  Session& s = it->second;
  ++adjudicated_;

  BsmResult out[2];
  out[0].round = out[1].round = round;
  out[0].to_inst = s.spec.inst[0];
  out[1].to_inst = s.spec.inst[1];

  const bool one_click = s.clicks[round - 1].size() == 1;
  bool finished = false;
  if (round == 1) {
    out[0].proceed = out[1].proceed = one_click;
    finished = !one_click;
  } else {
    const bool herald =
        one_click && genuine_single_click(s, 2) &&
        s.clicks[0].size() == 1 && genuine_single_click(s, 1) &&
        (s.emitted[0][0] != s.emitted[0][1]);
    out[0].success = out[1].success = herald;
    finished = true;
  }

  const NodeIndex nodes[2] = {s.spec.node[0], s.spec.node[1]};
  if (finished) sessions_.erase(it);
  if (!sink_)
    throw SimulationError("station '" + name_ + "' has no result sink");
  sink_(nodes[0], out[0]);
  sink_(nodes[1], out[1]);
}

}  // namespace qnet
