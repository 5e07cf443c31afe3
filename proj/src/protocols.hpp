#pragma once

#include "qnetsim/simulation.hpp"

// Protocol instance types. These live in the implementation, not the public
// API: nodes create them from rule firings and incoming requests.

namespace qnet {

inline constexpr int kTimerEmitRound1 = 1;
inline constexpr int kTimerEmitRound2 = 2;

// A pair of claimed transmission slots, one per fiber of a link.
struct AlignedSlots {
  SimTime a = 0;
  SimTime b = 0;
};

// Claim one slot on each fiber such that the two photons reach the far ends
// within half a frame of each other: a >= min_a, b >= min_b, and
// |(a + da) - (b + db)| <= frame/2. Both slots are claimed on return.
AlignedSlots claim_aligned(QuantumChannel& fa, MemoryId src_a, SimTime min_a,
                           SimTime da, QuantumChannel& fb, MemoryId src_b,
                           SimTime min_b, SimTime db);

// Upstream side of link-level entanglement generation. Fires from a
// generation rule, asks the downstream neighbor for a schedule, emits in the
// two agreed slots and finishes on the second measurement result.
class GenInitiator : public ProtocolInstance {
 public:
  GenInitiator(RouterNode& node, InstanceId id, ReservationId rsv,
               MemoryId mem, LinkId link, NodeIndex peer);
  const char* kind() const override { return "generation-initiator"; }

  void start();
  void on_gen_accept(NodeIndex from, const GenAccept& m) override;
  void on_gen_decline(NodeIndex from, const GenDecline& m) override;
  void on_bsm_result(NodeIndex from, const BsmResult& m) override;
  void on_timer(int tag) override;
  void on_memory_lost(MemoryId mem) override;
  void on_teardown() override;

 private:
  void emit(int round);
  void release_future_slots();

  MemoryId mem_;
  LinkId link_;
  NodeIndex peer_;
  InstanceId session_ = kNoInstance;  // responder instance = session key
  MemoryId peer_mem_ = kNoMemory;
  double pair_fidelity_ = 0.0;
  SimTime emit_[2] = {0, 0};
  bool accepted_ = false;
  bool proceed_ = false;
};

// Downstream side: picks the memory, computes the whole emission schedule
// (slots, windows, margins), registers the session at the swap station and
// returns the initiator's half in the accept.
class GenResponder : public ProtocolInstance {
 public:
  GenResponder(RouterNode& node, InstanceId id, ReservationId rsv,
               MemoryId mem, NodeIndex peer);
  const char* kind() const override { return "generation-responder"; }

  void start(const GenRequest& req);
  void on_bsm_result(NodeIndex from, const BsmResult& m) override;
  void on_timer(int tag) override;
  void on_memory_lost(MemoryId mem) override;
  void on_teardown() override;

 private:
  void emit(int round);
  void release_future_slots();

  MemoryId mem_;
  LinkId link_ = 0;
  NodeIndex peer_;
  MemoryId peer_mem_ = kNoMemory;
  double pair_fidelity_ = 0.0;
  SimTime emit_[2] = {0, 0};  // own (downstream fiber) slots
  bool proceed_ = false;
};

// Active side of one purification attempt: claims the two sibling pairs,
// predetermines the shared outcome, and applies it when the passive side
// confirms it applied the same.
class Purifier : public ProtocolInstance {
 public:
  Purifier(RouterNode& node, InstanceId id, ReservationId rsv, MemoryId keep,
           MemoryId meas, NodeIndex peer, double fidelity, bool success,
           double new_fidelity);
  const char* kind() const override { return "purifier"; }

  void start();
  void on_purify_accept(NodeIndex from, const PurifyAccept& m) override;
  void on_purify_decline(NodeIndex from, const PurifyDecline& m) override;
  void on_memory_lost(MemoryId mem) override;
  void on_teardown() override;

 private:
  void restore(MemoryId mem, bool lost);

  MemoryId keep_;
  MemoryId meas_;
  NodeIndex peer_;
  double fidelity_;
  bool success_;
  double new_fidelity_;
  bool lost_keep_ = false;
  bool lost_meas_ = false;
};

// Swap coordinator at the joining node: pins its two pair halves, asks both
// segment ends to pin theirs, then draws the outcome once and reports it.
class SwapMid : public ProtocolInstance {
 public:
  SwapMid(RouterNode& node, InstanceId id, ReservationId rsv, MemoryId up_mem,
          MemoryId down_mem, NodeIndex up_node, MemoryId up_partner,
          NodeIndex down_node, MemoryId down_partner);
  const char* kind() const override { return "swap-mid"; }

  void start();
  void on_swap_accept(NodeIndex from, const SwapAccept& m) override;
  void on_swap_decline(NodeIndex from, const SwapDecline& m) override;
  void on_memory_lost(MemoryId mem) override;
  void on_teardown() override;

 private:
  enum class EndState { Pending, Accepted, Closed };
  struct End {
    NodeIndex node = kNoNode;
    MemoryId mem = kNoMemory;          // local memory for this segment
    MemoryId partner_mem = kNoMemory;  // the end's memory
    InstanceId inst = kNoInstance;
    EndState state = EndState::Pending;
  };

  int end_index(NodeIndex node) const;
  void resolve();
  void start_abort();
  void try_finish_abort();

  End ends_[2];  // 0 = upstream, 1 = downstream
  bool aborting_ = false;
  bool lost_[2] = {false, false};
};

// Segment end of a swap: pins its memory until the coordinator reports the
// outcome or cancels.
class SwapEnd : public ProtocolInstance {
 public:
  SwapEnd(RouterNode& node, InstanceId id, ReservationId rsv, MemoryId mem,
          NodeIndex mid_node, InstanceId mid_inst);
  const char* kind() const override { return "swap-end"; }

  void start();
  void on_swap_result(NodeIndex from, const SwapResult& m) override;
  void on_swap_cancel(NodeIndex from, const SwapCancel& m) override;
  void on_memory_lost(MemoryId mem) override;
  void on_teardown() override;

 private:
  MemoryId mem_;
  NodeIndex mid_node_;
  InstanceId mid_inst_;
};

}  // namespace qnet
