#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qnetsim/bsm.hpp"
#include "qnetsim/config.hpp"
#include "qnetsim/hardware.hpp"
#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/messages.hpp"
#include "qnetsim/metrics.hpp"
#include "qnetsim/reservation.hpp"
#include "qnetsim/resources.hpp"
#include "qnetsim/routing.hpp"

namespace qnet {

class Simulation;
class RouterNode;

// One quantum link: two fibers meeting at the mid-point swap station.
// side_of() maps a router index to its fiber side (0 or 1).
struct LinkPort {
  LinkId id = 0;
  NodeIndex ends[2] = {kNoNode, kNoNode};
  NodeIndex bsm_node = kNoNode;
  std::unique_ptr<QuantumChannel> fiber[2];
  std::unique_ptr<BsmStation> station;

  int side_of(NodeIndex node) const {
    if (node == ends[0]) return 0;
    if (node == ends[1]) return 1;
    return -1;
  }
};

// One memory committed to one reservation over [start, end). End-exclusive
// intervals make back-to-back bookings unambiguous at the boundary instant.
struct Booking {
  ReservationId rsv = 0;
  SimTime start = 0;
  SimTime end = 0;
  MemoryRole role = MemoryRole::Any;
};

// Base for the stateful protocol exchanges (generation, swapping, active
// purification). Instances are owned by their node, addressed by id, and
// looked up on every message or timer so that anything arriving after the
// instance ended is dropped instead of acting on stale state.
class ProtocolInstance {
 public:
  ProtocolInstance(RouterNode& node, InstanceId id, ReservationId rsv)
      : node_(node), id_(id), rsv_(rsv) {}
  virtual ~ProtocolInstance() = default;

  InstanceId id() const { return id_; }
  ReservationId rsv() const { return rsv_; }
  virtual const char* kind() const = 0;

  virtual void on_gen_accept(NodeIndex, const GenAccept&) {
    unexpected("GenAccept");
  }
  virtual void on_gen_decline(NodeIndex, const GenDecline&) {
    unexpected("GenDecline");
  }
  virtual void on_bsm_result(NodeIndex, const BsmResult&) {
    unexpected("BsmResult");
  }
  virtual void on_purify_accept(NodeIndex, const PurifyAccept&) {
    unexpected("PurifyAccept");
  }
  virtual void on_purify_decline(NodeIndex, const PurifyDecline&) {
    unexpected("PurifyDecline");
  }
  virtual void on_swap_accept(NodeIndex, const SwapAccept&) {
    unexpected("SwapAccept");
  }
  virtual void on_swap_decline(NodeIndex, const SwapDecline&) {
    unexpected("SwapDecline");
  }
  virtual void on_swap_cancel(NodeIndex, const SwapCancel&) {
    unexpected("SwapCancel");
  }
  virtual void on_swap_result(NodeIndex, const SwapResult&) {
    unexpected("SwapResult");
  }
  virtual void on_timer(int) { unexpected("timer"); }

  // The record in `mem` expired while this instance held the memory. The
  // instance must release or repurpose the slot and wind down cleanly.
  virtual void on_memory_lost(MemoryId mem) = 0;
  // Reservation teardown: free claims and slots; the instance is destroyed by
  // the caller afterwards.
  virtual void on_teardown() = 0;

 protected:
  [[noreturn]] void unexpected(const char* what) const;

  RouterNode& node_;
  InstanceId id_;
  ReservationId rsv_;
};

// A quantum router: memory array, resource managers, rule engine, protocol
// instances and the reservation lifecycle for everything local to the node.
class RouterNode {
 public:
  RouterNode(Simulation& sim, NodeIndex index, std::string name,
             int memory_count, const MemoryParams& params);

  NodeIndex index() const { return index_; }
  const std::string& name() const { return name_; }
  Simulation& sim() { return sim_; }
  Timeline& timeline();

  MemoryManager& memories() { return mm_; }
  RuleManager& rules() { return rules_; }
  QuantumMemory& memory(MemoryId mem);
  const MemoryParams& memory_params() const { return params_; }
  double fresh_fidelity() const { return fresh_fidelity_; }

  // Booking calendar.
  const Booking* binding_at(MemoryId mem, SimTime at) const;
  // Book `up` + `down` memories over the reservation window on the lowest
  // free indices (upstream block first). All-or-nothing; true on success.
  bool book(const Reservation& rsv, int up, int down);
  // Drop this reservation's bookings (admission rollback, teardown).
  void unbook(ReservationId rsv);
  const std::vector<MemoryId>& booked_memories(ReservationId rsv) const;

  // Reservation entry points.
  void submit_request(const Reservation& rsv, std::uint64_t request_id);

  // Message delivery (scheduled by Simulation::send).
  void deliver(NodeIndex from, const Message& msg);

  // Re-run rule matching for one memory against its current binding.
  void evaluate_memory(MemoryId mem);

  // Instance plumbing.
  InstanceId add_instance(std::shared_ptr<ProtocolInstance> inst);
  std::shared_ptr<ProtocolInstance> find_instance(InstanceId id);
  void destroy_instance(InstanceId id);
  void schedule_timer(SimTime when, InstanceId id, int tag);
  void send_to(NodeIndex to, Message msg);

  // Entanglement record helpers; all record storage goes through here so the
  // expiry callback is wired consistently.
  void adopt_record(MemoryId mem, InstanceId owner, ReservationId rsv,
                    const EntanglementRecord& rec);
  void store_record_on(MemoryId mem, const EntanglementRecord& rec);
  void drop_pair_half(MemoryId mem);  // clear record if any + release + evaluate

  // Far half of a delivered pair: mark the local record as collapsing so no
  // rule picks it up while the release notice is in flight.
  void flag_releasing(MemoryId mem, MemoryId expected_partner);

  // Generation backoff after a decline (peer had no free memory).
  void defer_generation(MemoryId mem, SimTime until);

 private:
  friend class Simulation;

  void handle(NodeIndex from, const GenRequest& m);
  void handle(NodeIndex from, const PurifyRequest& m);
  void handle(NodeIndex from, const SwapRequest& m);
  void handle(NodeIndex from, const ReserveForward& m);
  void handle(NodeIndex from, const ReserveApprove& m);
  void handle(NodeIndex from, const ReserveReject& m);
  void handle(NodeIndex from, const ReleaseNotice& m);

  const Rule* passive_rule(ReservationId rsv, RuleKind kind, NodeIndex peer,
                           LinkId link, bool check_link) const;
  bool try_delivery(const Rule& rule, MemoryId mem);
  bool try_swap(const Rule& rule, MemoryId mem);
  bool try_purify(const Rule& rule, MemoryId mem);
  bool try_generation(const Rule& rule, MemoryId mem);

  void install_rules(const Reservation& rsv, const std::vector<NodeIndex>& path);
  void activate(ReservationId rsv);
  void teardown(ReservationId rsv);

  bool pair_usable(MemoryId mem, ReservationId rsv) const;
  void on_record_expired(MemoryId mem);

  Simulation& sim_;
  NodeIndex index_;
  std::string name_;
  MemoryParams params_;
  double fresh_fidelity_;
  MemoryManager mm_;
  RuleManager rules_;
  std::vector<QuantumMemory> memories_;
  std::vector<std::vector<Booking>> calendar_;
  std::map<ReservationId, std::vector<MemoryId>> rsv_memories_;
  std::map<ReservationId, Reservation> reservations_;
  std::map<InstanceId, std::shared_ptr<ProtocolInstance>> instances_;
  std::map<MemoryId, SimTime> gen_backoff_;
  std::map<ReservationId, std::uint64_t> pending_requests_;  // initiator only
};

// Whole-network assembly: timeline, routers, link ports, delay matrix,
// forwarding, applications and metrics, built from a validated Config.
class Simulation {
 public:
  explicit Simulation(const Config& cfg);

  Timeline& timeline() { return tl_; }
  MetricsStore& metrics() { return metrics_; }
  const Config& config() const { return cfg_; }
  const ForwardingTable& forwarding() const { return fwd_; }

  std::size_t node_count() const { return node_names_.size(); }
  const std::string& node_name(NodeIndex i) const { return node_names_[i]; }
  NodeIndex node_index(const std::string& name) const;
  bool is_router(NodeIndex i) const { return routers_[i] != nullptr; }
  RouterNode& router(NodeIndex i);
  const std::vector<NodeIndex>& router_indices() const { return router_order_; }
  int metrics_slot(NodeIndex i) const { return metrics_slot_[i]; }

  LinkPort& port(LinkId id) { return ports_[id]; }
  std::size_t port_count() const { return ports_.size(); }
  LinkPort* port_between(NodeIndex a, NodeIndex b);

  SimTime delay(NodeIndex a, NodeIndex b) const;
  void send(NodeIndex from, NodeIndex to, Message msg);

  double swap_success_probability() const {
    return cfg_.protocol.swap_success_probability;
  }
  double gate_fidelity() const { return cfg_.protocol.gate_fidelity; }
  SimTime stop_time() const { return stop_; }

  InstanceId next_instance_id() { return next_instance_++; }
  ReservationId next_reservation_id() { return next_reservation_++; }
  std::uint64_t next_request_id() { return next_request_++; }

  // Reservation outcome at the initiator: metrics rows, flow registration,
  // and the application's next submission.
  void reservation_outcome(NodeIndex initiator, std::uint64_t request_id,
                           bool approved, const Reservation& rsv);

  // Run to the configured stop time and close the metrics. run_until leaves
  // metrics open so tests can keep stepping.
  void run();
  void run_until(SimTime t);

  // Test hooks. inject_pair installs a symmetric entangled pair directly,
  // bypassing generation; both halves are evaluated against installed rules.
  void inject_pair(NodeIndex node_a, MemoryId mem_a, NodeIndex node_b,
                   MemoryId mem_b, ReservationId rsv, double fidelity,
                   SimTime expiration);
  // Mirror-consistency scan over all live pair records; returns a line per
  // violation. Meaningful at quiescent instants (no protocol in flight).
  std::vector<std::string> entanglement_violations();

 private:
  struct AppState {
    NodeIndex node = kNoNode;
    std::unique_ptr<Rng> rng;
    bool retrying = false;
    NodeIndex responder = kNoNode;
    double target_fidelity = 0.0;
    std::uint64_t pending_request = 0;
  };

  void build_nodes();
  void build_ports();
  void build_delays();
  void build_apps();
  void app_submit(std::size_t app_idx);
  SimTime intra_delay_ps() const;

  Config cfg_;
  Timeline tl_;
  SimTime stop_;
  std::vector<std::string> node_names_;
  std::map<std::string, NodeIndex> index_of_;
  std::vector<std::unique_ptr<RouterNode>> routers_;
  std::vector<NodeIndex> router_order_;
  std::vector<int> metrics_slot_;
  std::vector<LinkPort> ports_;
  std::vector<SimTime> delays_;  // node_count^2, row-major
  ForwardingTable fwd_;
  MetricsStore metrics_;
  std::vector<AppState> apps_;
  std::map<NodeIndex, std::size_t> app_of_node_;
  InstanceId next_instance_ = 1;
  ReservationId next_reservation_ = 1;
  std::uint64_t next_request_ = 1;
  bool finished_ = false;
};

}  // namespace qnet
