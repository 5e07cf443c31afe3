#pragma once

#include "qnetsim/ids.hpp"
#include "qnetsim/kernel.hpp"

namespace qnet {

// An application's request for end-to-end entanglement: `memory_size` pairs
// of memories held between initiator and responder over [start, end), each
// delivered pair meeting `target_fidelity`.
struct Reservation {
  ReservationId id = 0;
  NodeIndex initiator = kNoNode;
  NodeIndex responder = kNoNode;
  int memory_size = 0;
  double target_fidelity = 0.0;
  SimTime start = 0;
  SimTime end = 0;
};

}  // namespace qnet
