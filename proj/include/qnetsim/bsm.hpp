#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qnetsim/hardware.hpp"
#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/messages.hpp"

namespace qnet {

// One two-round measurement session at a link's swap station. The responder
// of the generation handshake computes the emission schedule and registers
// the session; `key` is the responder instance id, which both routers know.
// Sides index the two physical fibers of the link (0 = the link's first
// endpoint); `inst`, `node` and `mem` give the protocol instance, router and
// emitting memory attached to each fiber.
struct BsmSessionSpec {
  InstanceId key = kNoInstance;
  InstanceId inst[2] = {kNoInstance, kNoInstance};
  NodeIndex node[2] = {kNoNode, kNoNode};
  MemoryId mem[2] = {kNoMemory, kNoMemory};
  SimTime window1_begin = 0;
  SimTime window2_begin = 0;
};

// Mid-link measurement station: two detectors behind a beam splitter. Photon
// arrivals pick a detector at random; clicks (real or dark) are attributed to
// the open detection window covering their timestamp. At the end of each
// window the station classifies the outcome and reports it to both routers.
//
// Round 1 proceeds on exactly one click. Round 2 reports success on exactly
// one click, demoted to failure unless ground truth confirms a genuine
// herald: each round's single click must be a real photon from this session's
// memories, and exactly one memory may have taken the emitting branch in
// round 1. A dark-count or double-emission herald therefore never produces
// entanglement, while the routers still observe an ordinary failure message.
class BsmStation {
 public:
  using ResultSink = std::function<void(NodeIndex router, const BsmResult&)>;

  BsmStation(std::string name, DetectorParams detector_params,
             SimTime window_width);

  const std::string& name() const { return name_; }
  SimTime window_width() const { return window_width_; }

  void set_result_sink(ResultSink sink) { sink_ = std::move(sink); }

  // Launch the detectors' dark-count processes until `stop`.
  void start(Timeline& tl, SimTime stop);

  // Register a session; both windows must lie in the future. Schedules the
  // two adjudication events.
  void add_session(Timeline& tl, const BsmSessionSpec& spec);

  // Ground truth from a memory excitation: `emitting` says the spin took the
  // photon-emitting branch in `round` (1 or 2). No-op for finished sessions.
  void report_excitation(InstanceId key, int round, int side, bool emitting);

  // Photon arrival from fiber `side`.
  void photon_arrival(Timeline& tl, int side, const PhotonToken& photon);

  const Detector& detector(int i) const { return detectors_[i]; }
  std::uint64_t windows_adjudicated() const { return adjudicated_; }
  std::size_t open_sessions() const { return sessions_.size(); }

 private:
  struct Click {
    SimTime timestamp = 0;
    bool dark = false;
    int side = 0;
    MemoryId source = kNoMemory;
  };
  struct Session {
    BsmSessionSpec spec;
    bool emitted[2][2] = {{false, false}, {false, false}};  // [round-1][side]
    std::vector<Click> clicks[2];                           // per round
  };

  void record_click(const Click& click);
  void adjudicate(InstanceId key, int round);
  // True if the round's single click is a real photon from this session.
  static bool genuine_single_click(const Session& s, int round);

  std::string name_;
  SimTime window_width_;
  Detector detectors_[2];
  ResultSink sink_;
  std::map<InstanceId, Session> sessions_;
  std::uint64_t adjudicated_ = 0;
};

}  // namespace qnet
