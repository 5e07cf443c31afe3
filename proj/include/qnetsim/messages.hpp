#pragma once

#include <variant>
#include <vector>

#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"
#include "qnetsim/reservation.hpp"

namespace qnet {

// Classical control-plane messages. Everything protocol instances learn about
// the far side travels through one of these (photon ground truth never does).

// Entanglement generation: pairing request plus hardware negotiation in one
// round trip. The responder computes the shared emission schedule and returns
// the initiator's half of it in the accept.
struct GenRequest {
  ReservationId rsv = 0;
  InstanceId from_inst = kNoInstance;
  MemoryId init_mem = kNoMemory;
  LinkId link = 0;
  double init_fidelity = 0.0;  // initiator memory's fresh-pair fidelity
  SimTime earliest_emit = 0;   // initiator-side hardware constraint
  SimTime init_period = 0;     // initiator memory's excite period
};

struct GenAccept {
  InstanceId to_inst = kNoInstance;
  InstanceId from_inst = kNoInstance;
  MemoryId resp_mem = kNoMemory;
  double pair_fidelity = 0.0;
  SimTime emit1 = 0;  // initiator-side emission times
  SimTime emit2 = 0;
};

struct GenDecline {
  ReservationId rsv = 0;
  InstanceId to_inst = kNoInstance;
};

// Measurement result from the link's swap station after each round's window.
struct BsmResult {
  InstanceId to_inst = kNoInstance;
  int round = 0;
  bool proceed = false;  // round 1: exactly one detector click
  bool success = false;  // round 2: one click and the herald is genuine
};

// Purification: the requester predetermines the shared outcome and sends it
// with the request; both sides apply it only after the exchange reaches them.
struct PurifyRequest {
  ReservationId rsv = 0;
  InstanceId from_inst = kNoInstance;
  MemoryId keep_local = kNoMemory;   // requester's memories
  MemoryId meas_local = kNoMemory;
  MemoryId keep_remote = kNoMemory;  // receiver's memories
  MemoryId meas_remote = kNoMemory;
  double fidelity = 0.0;
  bool success = false;
};

struct PurifyAccept {
  InstanceId to_inst = kNoInstance;
};

struct PurifyDecline {
  ReservationId rsv = 0;
  InstanceId to_inst = kNoInstance;
};

// Swapping: the intermediate asks both segment ends to pin their memories,
// then reports the fused outcome.
struct SwapRequest {
  ReservationId rsv = 0;
  InstanceId from_inst = kNoInstance;
  MemoryId end_mem = kNoMemory;  // receiver's memory holding the pair
  MemoryId mid_mem = kNoMemory;  // requester's memory entangled with it
};

struct SwapAccept {
  InstanceId to_inst = kNoInstance;
  InstanceId from_inst = kNoInstance;
};

struct SwapDecline {
  ReservationId rsv = 0;
  InstanceId to_inst = kNoInstance;
};

struct SwapCancel {
  InstanceId to_inst = kNoInstance;
};

struct SwapResult {
  InstanceId to_inst = kNoInstance;
  bool success = false;
  MemoryId new_partner = kNoMemory;
  NodeIndex new_partner_node = kNoNode;
  double fidelity = 0.0;
  SimTime expiration = 0;
};

// Reservation signaling along the route.
struct ReserveForward {
  Reservation rsv;
  std::vector<NodeIndex> path;  // hops visited so far, initiator first
};

struct ReserveApprove {
  Reservation rsv;
  std::vector<NodeIndex> path;  // full route initiator..responder
};

struct ReserveReject {
  Reservation rsv;
  std::vector<NodeIndex> path;  // hops that committed and must roll back
};

// The far half of a delivered pair was consumed; drop the local record.
// partner identifies the consuming memory so the notice cannot touch a
// record built after the consumed pair was already dropped here.
struct ReleaseNotice {
  ReservationId rsv = 0;
  MemoryId mem = kNoMemory;
  MemoryId partner = kNoMemory;
};

using Message =
    std::variant<GenRequest, GenAccept, GenDecline, BsmResult, PurifyRequest,
                 PurifyAccept, PurifyDecline, SwapRequest, SwapAccept,
                 SwapDecline, SwapCancel, SwapResult, ReserveForward,
                 ReserveApprove, ReserveReject, ReleaseNotice>;

}  // namespace qnet
