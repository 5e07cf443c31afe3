#include "protocols.hpp"

#include <algorithm>

#include "qnetsim/physics.hpp"

namespace qnet {

namespace {

// Floor division and grid helpers that stay correct if an intermediate value
// ever goes negative.
SimTime floor_div(SimTime x, SimTime d) {
  SimTime q = x / d;
  if (x % d != 0 && (x < 0) != (d < 0)) --q;
  return q;
}

SimTime floor_to(SimTime x, SimTime grid) { return floor_div(x, grid) * grid; }

SimTime ceil_to(SimTime x, SimTime grid) {
  return -floor_to(-x, grid);
}

SimTime round_to(SimTime x, SimTime grid) {
  return floor_to(x + grid / 2, grid);
}

// Excite the memory and route the results: the ground-truth spin branch is
// reported to the station at photon-arrival time (never earlier than the
// session registration), and a collected photon enters the fiber.
void emit_photon(RouterNode& node, MemoryId mem, LinkId link,
                 InstanceId session_key, int round) {
  Simulation* sim = &node.sim();
  LinkPort& port = sim->port(link);
  const int side = port.side_of(node.index());
  if (side < 0)
    throw SimulationError("node '" + node.name() + "' is not an endpoint of " +
                          "its generation link");
  QuantumMemory& qm = node.memory(mem);
  Timeline& tl = node.timeline();
  auto token = qm.excite(tl);
  const bool branch = qm.excited_branch();
  BsmStation* station = port.station.get();
  QuantumChannel& fiber = *port.fiber[side];
  tl.schedule(tl.now() + fiber.delay(), station->name(),
              [station, session_key, round, side, branch] {
                station->report_excitation(session_key, round, side, branch);
              });
  if (token) {
    fiber.transmit(tl, *token, [station, side, sim](const PhotonToken& p, SimTime) {
      station->photon_arrival(sim->timeline(), side, p);
    });
  }
}

}  // namespace

AlignedSlots claim_aligned(QuantumChannel& fa, MemoryId src_a, SimTime min_a,
                           SimTime da, QuantumChannel& fb, MemoryId src_b,
                           SimTime min_b, SimTime db) {
  const SimTime frame_a = fa.tdm_frame();
  const SimTime frame_b = fb.tdm_frame();
  const SimTime min_b_grid = ceil_to(min_b, frame_b);
  for (int iter = 0; iter < 100000; ++iter) {
    const SimTime ta = fa.claim_slot(src_a, min_a);
    const SimTime want = round_to(ta + da - db, frame_b);
    if (want < min_b_grid) {
      fa.release_slot(ta);
      min_a = std::max(ta + frame_a, min_b_grid + db - da - frame_b / 2);
      continue;
    }
    const SimTime tb = fb.claim_slot(src_b, want);
    if (tb != want) {
      fa.release_slot(ta);
      fb.release_slot(tb);
      min_a = ta + frame_a;
      continue;
    }
    return {ta, tb};
  }
  throw SimulationError("no aligned transmission slots found on " + fa.name() +
                        " / " + fb.name());
}

// ---------------------------------------------------------------------------
// GenInitiator

GenInitiator::GenInitiator(RouterNode& node, InstanceId id, ReservationId rsv,
                           MemoryId mem, LinkId link, NodeIndex peer)
    : ProtocolInstance(node, id, rsv), mem_(mem), link_(link), peer_(peer) {}

void GenInitiator::start() {
  node_.memories().occupy(mem_, id_, rsv_);
  QuantumMemory& qm = node_.memory(mem_);
  GenRequest req;
  req.rsv = rsv_;
  req.from_inst = id_;
  req.init_mem = mem_;
  req.link = link_;
  req.init_fidelity = node_.fresh_fidelity();
  req.earliest_emit = std::max(qm.next_excite_time(), node_.timeline().now());
  req.init_period = qm.params().excite_period();
  node_.send_to(peer_, req);
}

void GenInitiator::on_gen_accept(NodeIndex, const GenAccept& m) {
  session_ = m.from_inst;
  peer_mem_ = m.resp_mem;
  pair_fidelity_ = m.pair_fidelity;
  emit_[0] = m.emit1;
  emit_[1] = m.emit2;
  accepted_ = true;
  node_.memory(mem_).set_plus_state();
  node_.schedule_timer(emit_[0], id_, kTimerEmitRound1);
  node_.schedule_timer(emit_[1], id_, kTimerEmitRound2);
}

void GenInitiator::on_gen_decline(NodeIndex, const GenDecline&) {
  const SimTime period = node_.memory(mem_).params().excite_period();
  node_.memories().release(mem_);
  node_.defer_generation(mem_, node_.timeline().now() + period);
  node_.destroy_instance(id_);
}

void GenInitiator::on_bsm_result(NodeIndex, const BsmResult& m) {
  const MemoryId mem = mem_;
  if (m.round == 1) {
    if (m.proceed) {
      proceed_ = true;
      node_.memory(mem_).apply_x_gate();
      return;
    }
    release_future_slots();
    node_.memories().release(mem_);
    node_.destroy_instance(id_);
    node_.evaluate_memory(mem);
    return;
  }
  if (m.success) {
    EntanglementRecord rec;
    rec.partner = peer_mem_;
    rec.partner_node = peer_;
    rec.fidelity = pair_fidelity_;
    rec.expiration =
        emit_[1] + time_from_seconds(node_.memory_params().coherence_time_s);
    node_.store_record_on(mem_, rec);
    node_.memories().mark_entangled(mem_);
  } else {
    node_.memories().release(mem_);
  }
  node_.destroy_instance(id_);
  node_.evaluate_memory(mem);
}

void GenInitiator::on_timer(int tag) {
  if (tag == kTimerEmitRound1) {
    emit(1);
  } else if (tag == kTimerEmitRound2) {
    if (!proceed_)
      throw SimulationError("round-two emission due before the round-one "
                            "verdict on " + node_.memory(mem_).name());
    emit(2);
  }
}

void GenInitiator::emit(int round) {
  emit_photon(node_, mem_, link_, session_, round);
}

void GenInitiator::release_future_slots() {
  if (!accepted_) return;
  LinkPort& port = node_.sim().port(link_);
  QuantumChannel& fiber = *port.fiber[port.side_of(node_.index())];
  const SimTime now = node_.timeline().now();
  for (SimTime t : emit_)
    if (t > now) fiber.release_slot(t);
}

void GenInitiator::on_memory_lost(MemoryId) {
  throw SimulationError("generation lost a record it never stored on " +
                        node_.memory(mem_).name());
}

void GenInitiator::on_teardown() { release_future_slots(); }

// ---------------------------------------------------------------------------
// GenResponder

GenResponder::GenResponder(RouterNode& node, InstanceId id, ReservationId rsv,
                           MemoryId mem, NodeIndex peer)
    : ProtocolInstance(node, id, rsv), mem_(mem), peer_(peer) {}

void GenResponder::start(const GenRequest& req) {
  node_.memories().occupy(mem_, id_, rsv_);
  link_ = req.link;
  peer_mem_ = req.init_mem;
  pair_fidelity_ = std::min(req.init_fidelity, node_.fresh_fidelity());

  Simulation& sim = node_.sim();
  LinkPort& port = sim.port(link_);
  const int rside = port.side_of(node_.index());
  if (rside < 0)
    throw SimulationError("node '" + node_.name() +
                          "' is not an endpoint of the requested link");
  const int iside = 1 - rside;
  QuantumChannel& fa = *port.fiber[iside];
  QuantumChannel& fb = *port.fiber[rside];
  const SimTime da = fa.delay();
  const SimTime db = fb.delay();
  const SimTime now = node_.timeline().now();
  const NodeIndex bsm = port.bsm_node;
  const SimTime d_rb = sim.delay(node_.index(), bsm);
  const SimTime res = port.station->detector(0).params().resolution;
  const SimTime margin = 2 * res;
  const SimTime width = port.station->window_width();

  QuantumMemory& qm = node_.memory(mem_);

  // Round 1: the initiator must have received the accept, the session must be
  // registered at the station before either photon (or its ground-truth
  // report) arrives, and both memories must be past their excitation gates.
  const SimTime min_a1 = std::max(
      {req.earliest_emit, now + sim.delay(node_.index(), peer_),
       now + d_rb - da + margin});
  const SimTime min_b1 =
      std::max({qm.next_excite_time(), now, now + d_rb - db + margin});
  const AlignedSlots s1 =
      claim_aligned(fa, peer_mem_, min_a1, da, fb, mem_, min_b1, db);

  const SimTime w1_begin =
      floor_to(std::min(s1.a + da, s1.b + db), res) - res;
  const SimTime w1_end = w1_begin + width;

  // Round 2: after the round-one verdict reached each side, past each
  // memory's re-excitation gate.
  const SimTime min_a2 = std::max(s1.a + req.init_period,
                                  w1_end + sim.delay(bsm, peer_) + margin);
  const SimTime min_b2 =
      std::max(s1.b + qm.params().excite_period(),
               w1_end + sim.delay(bsm, node_.index()) + margin);
  const AlignedSlots s2 =
      claim_aligned(fa, peer_mem_, min_a2, da, fb, mem_, min_b2, db);

  const SimTime w2_begin =
      floor_to(std::min(s2.a + da, s2.b + db), res) - res;

  emit_[0] = s1.b;
  emit_[1] = s2.b;

  BsmSessionSpec spec;
  spec.key = id_;
  spec.inst[iside] = req.from_inst;
  spec.inst[rside] = id_;
  spec.node[iside] = peer_;
  spec.node[rside] = node_.index();
  spec.mem[iside] = peer_mem_;
  spec.mem[rside] = mem_;
  spec.window1_begin = w1_begin;
  spec.window2_begin = w2_begin;
  BsmStation* station = port.station.get();
  Simulation* simp = &sim;
  node_.timeline().schedule(now + d_rb, station->name(), [station, simp, spec] {
    station->add_session(simp->timeline(), spec);
  });

  qm.set_plus_state();
  node_.schedule_timer(emit_[0], id_, kTimerEmitRound1);
  node_.schedule_timer(emit_[1], id_, kTimerEmitRound2);

  GenAccept acc;
  acc.to_inst = req.from_inst;
  acc.from_inst = id_;
  acc.resp_mem = mem_;
  acc.pair_fidelity = pair_fidelity_;
  acc.emit1 = s1.a;
  acc.emit2 = s2.a;
  node_.send_to(peer_, acc);
}

void GenResponder::on_bsm_result(NodeIndex, const BsmResult& m) {
  const MemoryId mem = mem_;
  if (m.round == 1) {
    if (m.proceed) {
      proceed_ = true;
      node_.memory(mem_).apply_x_gate();
      return;
    }
    release_future_slots();
    node_.memories().release(mem_);
    node_.destroy_instance(id_);
    node_.evaluate_memory(mem);
    return;
  }
  if (m.success) {
    EntanglementRecord rec;
    rec.partner = peer_mem_;
    rec.partner_node = peer_;
    rec.fidelity = pair_fidelity_;
    rec.expiration =
        emit_[1] + time_from_seconds(node_.memory_params().coherence_time_s);
    node_.store_record_on(mem_, rec);
    node_.memories().mark_entangled(mem_);
  } else {
    node_.memories().release(mem_);
  }
  node_.destroy_instance(id_);
  node_.evaluate_memory(mem);
}

void GenResponder::on_timer(int tag) {
  if (tag == kTimerEmitRound1) {
    emit(1);
  } else if (tag == kTimerEmitRound2) {
    if (!proceed_)
      throw SimulationError("round-two emission due before the round-one "
                            "verdict on " + node_.memory(mem_).name());
    emit(2);
  }
}

void GenResponder::emit(int round) {
  emit_photon(node_, mem_, link_, id_, round);
}

void GenResponder::release_future_slots() {
  LinkPort& port = node_.sim().port(link_);
  QuantumChannel& fiber = *port.fiber[port.side_of(node_.index())];
  const SimTime now = node_.timeline().now();
  for (SimTime t : emit_)
    if (t > now) fiber.release_slot(t);
}

void GenResponder::on_memory_lost(MemoryId) {
  throw SimulationError("generation lost a record it never stored on " +
                        node_.memory(mem_).name());
}

void GenResponder::on_teardown() { release_future_slots(); }

// ---------------------------------------------------------------------------
// Purifier

Purifier::Purifier(RouterNode& node, InstanceId id, ReservationId rsv,
                   MemoryId keep, MemoryId meas, NodeIndex peer,
                   double fidelity, bool success, double new_fidelity)
    : ProtocolInstance(node, id, rsv),
      keep_(keep),
      meas_(meas),
      peer_(peer),
      fidelity_(fidelity),
      success_(success),
      new_fidelity_(new_fidelity) {}

void Purifier::start() {
  PurifyRequest req;
  req.rsv = rsv_;
  req.from_inst = id_;
  req.keep_local = keep_;
  req.meas_local = meas_;
  req.keep_remote = node_.memory(keep_).record().partner;
  req.meas_remote = node_.memory(meas_).record().partner;
  req.fidelity = fidelity_;
  req.success = success_;
  node_.memories().occupy(keep_, id_, rsv_);
  node_.memories().occupy(meas_, id_, rsv_);
  node_.send_to(peer_, req);
}

void Purifier::on_purify_accept(NodeIndex, const PurifyAccept&) {
  const MemoryId keep = keep_;
  const bool lost_keep = lost_keep_;
  if (success_) {
    if (!lost_keep_) {
      node_.memory(keep_).mutable_record().fidelity = new_fidelity_;
      node_.memories().mark_entangled(keep_);
    }
    if (!lost_meas_) node_.drop_pair_half(meas_);
    node_.destroy_instance(id_);
    if (!lost_keep) node_.evaluate_memory(keep);
  } else {
    if (!lost_meas_) node_.drop_pair_half(meas_);
    if (!lost_keep_) node_.drop_pair_half(keep_);
    node_.destroy_instance(id_);
  }
}

void Purifier::on_purify_decline(NodeIndex, const PurifyDecline&) {
  restore(keep_, lost_keep_);
  restore(meas_, lost_meas_);
  node_.destroy_instance(id_);
}

void Purifier::restore(MemoryId mem, bool lost) {
  if (lost) return;
  node_.memories().mark_entangled(mem);
  node_.evaluate_memory(mem);
}

void Purifier::on_memory_lost(MemoryId mem) {
  node_.memories().release(mem);
  if (mem == keep_) lost_keep_ = true;
  if (mem == meas_) lost_meas_ = true;
}

void Purifier::on_teardown() {}

// ---------------------------------------------------------------------------
// SwapMid

SwapMid::SwapMid(RouterNode& node, InstanceId id, ReservationId rsv,
                 MemoryId up_mem, MemoryId down_mem, NodeIndex up_node,
                 MemoryId up_partner, NodeIndex down_node,
                 MemoryId down_partner)
    : ProtocolInstance(node, id, rsv) {
  ends_[0].node = up_node;
  ends_[0].mem = up_mem;
  ends_[0].partner_mem = up_partner;
  ends_[1].node = down_node;
  ends_[1].mem = down_mem;
  ends_[1].partner_mem = down_partner;
}

void SwapMid::start() {
  node_.memories().occupy(ends_[0].mem, id_, rsv_);
  node_.memories().occupy(ends_[1].mem, id_, rsv_);
  for (const End& e : ends_)
    node_.send_to(e.node, SwapRequest{rsv_, id_, e.partner_mem, e.mem});
}

int SwapMid::end_index(NodeIndex node) const {
  if (node == ends_[0].node) return 0;
  if (node == ends_[1].node) return 1;
  return -1;
}

void SwapMid::on_swap_accept(NodeIndex from, const SwapAccept& m) {
  const int i = end_index(from);
  if (i < 0 || ends_[i].state != EndState::Pending) return;
  ends_[i].inst = m.from_inst;
  if (aborting_) {
    node_.send_to(from, SwapCancel{m.from_inst});
    ends_[i].state = EndState::Closed;
    try_finish_abort();
    return;
  }
  ends_[i].state = EndState::Accepted;
  if (ends_[0].state == EndState::Accepted &&
      ends_[1].state == EndState::Accepted)
    resolve();
}

void SwapMid::on_swap_decline(NodeIndex from, const SwapDecline&) {
  const int i = end_index(from);
  if (i < 0 || ends_[i].state == EndState::Closed) return;
  ends_[i].state = EndState::Closed;
  start_abort();
}

void SwapMid::resolve() {
  Simulation& sim = node_.sim();
  const bool success =
      sim.timeline().rng().bernoulli(sim.swap_success_probability());
  const EntanglementRecord& ru = node_.memory(ends_[0].mem).record();
  const EntanglementRecord& rd = node_.memory(ends_[1].mem).record();
  const double f =
      swapped_fidelity(ru.fidelity, rd.fidelity, sim.gate_fidelity());
  const SimTime expiration = std::min(ru.expiration, rd.expiration);
  for (int i = 0; i < 2; ++i) {
    SwapResult res;
    res.to_inst = ends_[i].inst;
    res.success = success;
    res.new_partner = ends_[1 - i].partner_mem;
    res.new_partner_node = ends_[1 - i].node;
    res.fidelity = f;
    res.expiration = expiration;
    node_.send_to(ends_[i].node, res);
  }
  const MemoryId m0 = ends_[0].mem;
  const MemoryId m1 = ends_[1].mem;
  node_.destroy_instance(id_);
  node_.drop_pair_half(m0);
  node_.drop_pair_half(m1);
}

void SwapMid::start_abort() {
  aborting_ = true;
  for (End& e : ends_) {
    if (e.state == EndState::Accepted) {
      node_.send_to(e.node, SwapCancel{e.inst});
      e.state = EndState::Closed;
    }
  }
  try_finish_abort();
}

void SwapMid::try_finish_abort() {
  if (ends_[0].state == EndState::Pending ||
      ends_[1].state == EndState::Pending)
    return;
  const MemoryId m0 = ends_[0].mem;
  const MemoryId m1 = ends_[1].mem;
  const bool l0 = lost_[0];
  const bool l1 = lost_[1];
  if (!l0) node_.memories().mark_entangled(m0);
  if (!l1) node_.memories().mark_entangled(m1);
  node_.destroy_instance(id_);
  if (!l0) node_.evaluate_memory(m0);
  if (!l1) node_.evaluate_memory(m1);
}

void SwapMid::on_memory_lost(MemoryId mem) {
  node_.memories().release(mem);
  lost_[mem == ends_[1].mem ? 1 : 0] = true;
  start_abort();
}

void SwapMid::on_teardown() {}

// ---------------------------------------------------------------------------
// SwapEnd

SwapEnd::SwapEnd(RouterNode& node, InstanceId id, ReservationId rsv,
                 MemoryId mem, NodeIndex mid_node, InstanceId mid_inst)
    : ProtocolInstance(node, id, rsv),
      mem_(mem),
      mid_node_(mid_node),
      mid_inst_(mid_inst) {}

void SwapEnd::start() {
  node_.memories().occupy(mem_, id_, rsv_);
  node_.send_to(mid_node_, SwapAccept{mid_inst_, id_});
}

void SwapEnd::on_swap_result(NodeIndex, const SwapResult& m) {
  const MemoryId mem = mem_;
  QuantumMemory& qm = node_.memory(mem_);
  if (m.success) {
    const SimTime old_expiration = qm.record().expiration;
    EntanglementRecord rec;
    rec.partner = m.new_partner;
    rec.partner_node = m.new_partner_node;
    rec.fidelity = m.fidelity;
    rec.expiration = std::min(m.expiration, old_expiration);
    qm.clear_record(node_.timeline());
    if (rec.expiration <= node_.timeline().now()) {
      node_.memories().release(mem_);
    } else {
      node_.store_record_on(mem_, rec);
      node_.memories().mark_entangled(mem_);
    }
  } else {
    qm.clear_record(node_.timeline());
    node_.memories().release(mem_);
  }
  node_.destroy_instance(id_);
  node_.evaluate_memory(mem);
}

void SwapEnd::on_swap_cancel(NodeIndex, const SwapCancel&) {
  const MemoryId mem = mem_;
  node_.memories().mark_entangled(mem_);
  node_.destroy_instance(id_);
  node_.evaluate_memory(mem);
}

void SwapEnd::on_memory_lost(MemoryId) {
  node_.memories().release(mem_);
  node_.destroy_instance(id_);
}

void SwapEnd::on_teardown() {}

}  // namespace qnet
