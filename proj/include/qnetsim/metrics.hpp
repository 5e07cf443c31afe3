#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/reservation.hpp"
#include "qnetsim/resources.hpp"

namespace qnet {

struct FlowRecord {
  std::string initiator;
  std::string responder;
  SimTime start = 0;
  SimTime end = 0;
  std::uint64_t delivered = 0;
  double min_fidelity = 1.0;  // lowest fidelity among delivered pairs
};

struct RequestRecord {
  std::string app_node;
  std::uint64_t request_id = 0;
  bool approved = false;
  Reservation reservation;
};

struct RuleFiring {
  SimTime at = 0;
  NodeIndex node = kNoNode;
  RuleKind kind = RuleKind::Generation;
  ReservationId rsv = 0;
};

// Collects everything the CSV outputs and the experiment assertions need:
// per-flow delivery counts, request outcomes, and per-router memory-state
// occupancy. Occupancy is integrated exactly between transitions, then
// down-sampled into fixed bins for the CSV time series; time spent above the
// 90% utilization threshold (utilization = 1 - fraction raw) is accumulated
// exactly, not binned.
class MetricsStore {
 public:
  MetricsStore(std::vector<std::string> router_names,
               std::vector<int> memory_counts,
               SimTime sample_interval = 100 * kMillisecond);

  // Memory-state accounting, driven by MemoryManager observers.
  void on_transition(NodeIndex node, SimTime at, MemoryState from,
                     MemoryState to);
  // Close all integrals at the stop time; call once, after the run.
  void finish(SimTime stop);

  void flow_started(ReservationId id, std::string initiator,
                    std::string responder, SimTime start, SimTime end);
  void on_delivery(ReservationId id, double fidelity);

  void on_request_outcome(std::string app_node, std::uint64_t request_id,
                          bool approved, const Reservation& rsv);

  void enable_rule_log() { rule_log_enabled_ = true; }
  void on_rule_fired(SimTime at, NodeIndex node, RuleKind kind,
                     ReservationId rsv);

  // Queries.
  std::uint64_t total_delivered() const;
  const std::map<ReservationId, FlowRecord>& flows() const { return flows_; }
  const std::vector<RequestRecord>& requests() const { return requests_; }
  const std::vector<RuleFiring>& rule_log() const { return rule_log_; }
  // Exact simulated seconds node spent with utilization strictly above 90%.
  double seconds_above_90(NodeIndex node) const;

  // CSV emission; numeric formatting is fixed so identical runs produce
  // byte-identical files.
  void write_throughput_csv(std::ostream& os) const;
  void write_utilization_csv(std::ostream& os) const;
  void write_requests_csv(std::ostream& os) const;

 private:
  struct NodeTrack {
    std::string name;
    int total = 0;
    int raw = 0;
    int occupied = 0;
    int entangled = 0;
    SimTime last = 0;
    std::int64_t bin_index = 0;
    std::array<double, 3> bin_acc{};  // ps-weighted raw/occupied/entangled
    std::vector<std::array<double, 3>> bins;  // finished bins, normalized
    double above_ps = 0.0;
  };

  void integrate_to(NodeTrack& t, SimTime upto);
  void flush_bin(NodeTrack& t, SimTime covered_ps);

  SimTime interval_;
  std::vector<NodeTrack> nodes_;
  std::map<ReservationId, FlowRecord> flows_;
  std::vector<RequestRecord> requests_;
  bool rule_log_enabled_ = false;
  std::vector<RuleFiring> rule_log_;
  bool finished_ = false;
  SimTime stop_ = 0;
};

}  // namespace qnet
