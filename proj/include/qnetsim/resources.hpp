#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/reservation.hpp"

namespace qnet {

// Lifecycle state of one quantum memory as tracked by its node's resource
// manager. RAW means idle, OCCUPIED means pinned by a running protocol
// instance, ENTANGLED means holding a live pair and available for rules.
enum class MemoryState : std::uint8_t { Raw, Occupied, Entangled };

const char* to_string(MemoryState s);

struct MemoryStateCounts {
  int raw = 0;
  int occupied = 0;
  int entangled = 0;
};

// Per-memory bookkeeping. The owning instance is recorded so stray messages
// for dead instances can be filtered out.
struct MemorySlot {
  MemoryState state = MemoryState::Raw;
  InstanceId owner = kNoInstance;
  ReservationId rsv = 0;
};

// Tracks states for all memories of one node and enforces the legal
// transition diagram. Every transition is reported to an observer so metrics
// can integrate state occupancy over time.
class MemoryManager {
 public:
  using Observer = std::function<void(MemoryId, MemoryState, MemoryState)>;

  MemoryManager(int memory_count, std::string node_name);

  // RAW -> OCCUPIED or ENTANGLED -> OCCUPIED: a rule hands the memory to a
  // protocol instance.
  void occupy(MemoryId mem, InstanceId owner, ReservationId rsv);
  // OCCUPIED -> ENTANGLED: the instance established or transformed a pair.
  void mark_entangled(MemoryId mem);
  // OCCUPIED -> RAW or ENTANGLED -> RAW: failure, expiry, consumption or
  // teardown returns the memory to the pool.
  void release(MemoryId mem);

  MemoryState state(MemoryId mem) const;
  InstanceId owner(MemoryId mem) const;
  ReservationId reservation_of(MemoryId mem) const;
  int size() const { return static_cast<int>(slots_.size()); }

  MemoryStateCounts counts() const;

  void set_observer(Observer obs) { observer_ = std::move(obs); }

 private:
  void transition(MemoryId mem, MemoryState to);
  const MemorySlot& slot(MemoryId mem) const;

  std::vector<MemorySlot> slots_;
  std::string node_name_;
  Observer observer_;
};

// What a rule does when it fires.
enum class RuleKind : std::uint8_t {
  Generation,
  Purification,
  Swapping,
  Delivery
};

const char* to_string(RuleKind k);

// Fixed evaluation priorities: smaller fires first. Consuming a finished pair
// beats extending it, swapping beats purifying, and creating raw entanglement
// runs last so higher-value work sees memories first.
int rule_priority(RuleKind k);

// Which half of a node's committed memory pool a rule applies to. Memories
// toward the initiator side of the path are Upstream, toward the responder
// Downstream; endpoint nodes use a single role for their whole pool.
enum class MemoryRole : std::uint8_t { Upstream, Downstream, Any };

const char* to_string(MemoryRole r);

// One installed rule. Conditions are data; the resource layer evaluates them
// against memory snapshots. Fields a kind does not use stay at defaults.
struct Rule {
  RuleKind kind = RuleKind::Generation;
  ReservationId rsv = 0;
  MemoryRole role = MemoryRole::Any;

  // Generation: which neighbor to entangle with, via which link. `initiates`
  // marks the side that opens the handshake; for purification it marks the
  // side that starts the exchange.
  NodeIndex peer = kNoNode;
  LinkId link = 0;
  bool initiates = false;

  // Purification / swapping / delivery partner matching. Swapping names both
  // segment ends (peer = upstream end, other_peer = downstream end).
  NodeIndex other_peer = kNoNode;

  // Fidelity band, both bounds exclusive unless at 0/1.
  double min_fidelity = 0.0;
  double max_fidelity = 1.0;

  std::uint64_t install_seq = 0;  // assigned by the manager
};

// Holds the installed rules of one node sorted by (priority, installation
// order) and answers which rules could claim a memory bound to a given
// reservation and role.
class RuleManager {
 public:
  std::uint64_t install(Rule rule);
  void uninstall_reservation(ReservationId rsv);

  // Matching rules, best first.
  std::vector<const Rule*> candidates(ReservationId rsv, MemoryRole role) const;
  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

 private:
  std::vector<Rule> rules_;  // kept sorted
  std::uint64_t next_seq_ = 1;
};

}  // namespace qnet
