#include <algorithm>

#include "protocols.hpp"
#include "qnetsim/physics.hpp"
#include "qnetsim/simulation.hpp"

namespace qnet {

void ProtocolInstance::unexpected(const char* what) const {
  throw SimulationError("node '" + node_.name() + "': " + kind() +
                        " instance received unexpected " + what);
}

RouterNode::RouterNode(Simulation& sim, NodeIndex index, std::string name,
                       int memory_count, const MemoryParams& params)
    : sim_(sim),
      index_(index),
      name_(std::move(name)),
      params_(params),
      fresh_fidelity_(params.fresh_pair_fidelity()),
      mm_(memory_count, name_),
      calendar_(memory_count) {
  memories_.reserve(memory_count);
  for (int i = 0; i < memory_count; ++i) {
    memories_.emplace_back(static_cast<MemoryId>(i),
                           name_ + ".m" + std::to_string(i), params_);
  }
  mm_.set_observer([this](MemoryId, MemoryState from, MemoryState to) {
    const int slot = sim_.metrics_slot(index_);
    sim_.metrics().on_transition(slot, sim_.timeline().now(), from, to);
  });
}

Timeline& RouterNode::timeline() { return sim_.timeline(); }

QuantumMemory& RouterNode::memory(MemoryId mem) {
  if (mem >= memories_.size())
    throw SimulationError("node '" + name_ + "': memory index out of range");
  return memories_[mem];
}

// ---------------------------------------------------------------------------
// Booking calendar

const Booking* RouterNode::binding_at(MemoryId mem, SimTime at) const {
  for (const Booking& b : calendar_[mem])
    if (b.start <= at && at < b.end) return &b;
  return nullptr;
}

bool RouterNode::book(const Reservation& rsv, int up, int down) {
  const int need = up + down;
  std::vector<MemoryId> chosen;
  for (MemoryId mem = 0; mem < calendar_.size() &&
                         static_cast<int>(chosen.size()) < need;
       ++mem) {
    bool busy = false;
    for (const Booking& b : calendar_[mem])
      if (b.start < rsv.end && rsv.start < b.end) busy = true;
    if (!busy) chosen.push_back(mem);
  }
  if (static_cast<int>(chosen.size()) < need) return false;
  for (int i = 0; i < need; ++i) {
    const MemoryRole role = i < up ? MemoryRole::Upstream : MemoryRole::Downstream;
    calendar_[chosen[i]].push_back(Booking{rsv.id, rsv.start, rsv.end, role});
    rsv_memories_[rsv.id].push_back(chosen[i]);
  }
  return true;
}

void RouterNode::unbook(ReservationId rsv) {
  auto it = rsv_memories_.find(rsv);
  if (it == rsv_memories_.end()) return;
  for (MemoryId mem : it->second) {
    auto& cal = calendar_[mem];
    cal.erase(std::remove_if(cal.begin(), cal.end(),
                             [rsv](const Booking& b) { return b.rsv == rsv; }),
              cal.end());
  }
  rsv_memories_.erase(it);
}

const std::vector<MemoryId>& RouterNode::booked_memories(
    ReservationId rsv) const {
  static const std::vector<MemoryId> kEmpty;
  auto it = rsv_memories_.find(rsv);
  return it == rsv_memories_.end() ? kEmpty : it->second;
}

// ---------------------------------------------------------------------------
// Instance plumbing

InstanceId RouterNode::add_instance(std::shared_ptr<ProtocolInstance> inst) {
  const InstanceId id = inst->id();
  instances_.emplace(id, std::move(inst));
  return id;
}

std::shared_ptr<ProtocolInstance> RouterNode::find_instance(InstanceId id) {
  auto it = instances_.find(id);
  return it == instances_.end() ? nullptr : it->second;
}

void RouterNode::destroy_instance(InstanceId id) { instances_.erase(id); }

void RouterNode::schedule_timer(SimTime when, InstanceId id, int tag) {
  sim_.timeline().schedule(when, name_, [this, id, tag] {
    auto sp = find_instance(id);
    if (sp) sp->on_timer(tag);
  });
}

void RouterNode::send_to(NodeIndex to, Message msg) {
  sim_.send(index_, to, std::move(msg));
}

// ---------------------------------------------------------------------------
// Entanglement record helpers

void RouterNode::store_record_on(MemoryId mem, const EntanglementRecord& rec) {
  memory(mem).store_record(sim_.timeline(), rec, [this](QuantumMemory& m) {
    on_record_expired(m.id());
  });
}

void RouterNode::adopt_record(MemoryId mem, InstanceId owner, ReservationId rsv,
                              const EntanglementRecord& rec) {
  mm_.occupy(mem, owner, rsv);
  store_record_on(mem, rec);
  mm_.mark_entangled(mem);
}

void RouterNode::drop_pair_half(MemoryId mem) {
  QuantumMemory& qm = memory(mem);
  if (qm.entangled()) qm.clear_record(sim_.timeline());
  if (mm_.state(mem) != MemoryState::Raw) mm_.release(mem);
  evaluate_memory(mem);
}

void RouterNode::flag_releasing(MemoryId mem, MemoryId expected_partner) {
  QuantumMemory& qm = memory(mem);
  if (qm.entangled() && qm.record().partner == expected_partner)
    qm.mutable_record().releasing = true;
}

void RouterNode::on_record_expired(MemoryId mem) {
  // Called after the memory already dropped its record. If an instance holds
  // the slot it has to unwind; otherwise just return the memory to the pool.
  if (mm_.state(mem) == MemoryState::Occupied) {
    auto sp = find_instance(mm_.owner(mem));
    if (sp) {
      sp->on_memory_lost(mem);
    } else {
      mm_.release(mem);
    }
  } else if (mm_.state(mem) == MemoryState::Entangled) {
    mm_.release(mem);
  }
  evaluate_memory(mem);
}

void RouterNode::defer_generation(MemoryId mem, SimTime until) {
  gen_backoff_[mem] = until;
  sim_.timeline().schedule(until, name_, [this, mem] { evaluate_memory(mem); });
}

// ---------------------------------------------------------------------------
// Rule evaluation

bool RouterNode::pair_usable(MemoryId mem, ReservationId rsv) const {
  return mm_.state(mem) == MemoryState::Entangled &&
         mm_.reservation_of(mem) == rsv &&
         !memories_[mem].record().releasing;
}

void RouterNode::evaluate_memory(MemoryId mem) {
  const Booking* b = binding_at(mem, sim_.timeline().now());
  if (!b) return;
  if (mm_.state(mem) == MemoryState::Occupied) return;
  for (const Rule* rule : rules_.candidates(b->rsv, b->role)) {
    bool fired = false;
    switch (rule->kind) {
      case RuleKind::Delivery:
        fired = try_delivery(*rule, mem);
        break;
      case RuleKind::Swapping:
        fired = try_swap(*rule, mem);
        break;
      case RuleKind::Purification:
        fired = try_purify(*rule, mem);
        break;
      case RuleKind::Generation:
        fired = try_generation(*rule, mem);
        break;
    }
    if (fired) return;
  }
}

bool RouterNode::try_delivery(const Rule& rule, MemoryId mem) {
  if (!pair_usable(mem, rule.rsv)) return false;
  const EntanglementRecord& rec = memory(mem).record();
  if (rec.partner_node != rule.peer) return false;
  if (rec.fidelity < rule.min_fidelity) return false;

  const SimTime now = sim_.timeline().now();
  sim_.metrics().on_rule_fired(now, index_, RuleKind::Delivery, rule.rsv);
  sim_.metrics().on_delivery(rule.rsv, rec.fidelity);
  const NodeIndex pn = rec.partner_node;
  const MemoryId pm = rec.partner;
  // The far half is physically collapsed by consuming this one; the flag
  // models that instantly while the release notice carries the bookkeeping.
  sim_.router(pn).flag_releasing(pm, mem);
  send_to(pn, ReleaseNotice{rule.rsv, pm, mem});
  drop_pair_half(mem);
  return true;
}

bool RouterNode::try_swap(const Rule& rule, MemoryId mem) {
  if (!pair_usable(mem, rule.rsv)) return false;
  const EntanglementRecord& rec = memory(mem).record();
  if (rec.fidelity < rule.min_fidelity) return false;
  const bool is_up = rec.partner_node == rule.peer;
  const bool is_down = rec.partner_node == rule.other_peer;
  if (!is_up && !is_down) return false;
  const NodeIndex want = is_up ? rule.other_peer : rule.peer;

  MemoryId other = kNoMemory;
  for (MemoryId m2 : booked_memories(rule.rsv)) {
    if (m2 == mem || !pair_usable(m2, rule.rsv)) continue;
    const EntanglementRecord& r2 = memories_[m2].record();
    if (r2.partner_node != want || r2.fidelity < rule.min_fidelity) continue;
    other = m2;
    break;
  }
  if (other == kNoMemory) return false;

  const MemoryId up_mem = is_up ? mem : other;
  const MemoryId down_mem = is_up ? other : mem;
  sim_.metrics().on_rule_fired(sim_.timeline().now(), index_,
                               RuleKind::Swapping, rule.rsv);
  auto inst = std::make_shared<SwapMid>(
      *this, sim_.next_instance_id(), rule.rsv, up_mem, down_mem, rule.peer,
      memory(up_mem).record().partner, rule.other_peer,
      memory(down_mem).record().partner);
  add_instance(inst);
  inst->start();
  return true;
}

bool RouterNode::try_purify(const Rule& rule, MemoryId mem) {
  if (!rule.initiates) return false;
  if (!pair_usable(mem, rule.rsv)) return false;
  const EntanglementRecord& rec = memory(mem).record();
  if (rec.partner_node != rule.peer) return false;
  if (!(rec.fidelity > 0.5 && rec.fidelity < rule.max_fidelity)) return false;

  MemoryId sibling = kNoMemory;
  for (MemoryId m2 : booked_memories(rule.rsv)) {
    if (m2 == mem || !pair_usable(m2, rule.rsv)) continue;
    const EntanglementRecord& r2 = memories_[m2].record();
    if (r2.partner_node != rule.peer) continue;
    if (r2.fidelity != rec.fidelity) continue;  // exact sibling match
    sibling = m2;
    break;
  }
  if (sibling == kNoMemory) return false;

  const MemoryId keep = std::min(mem, sibling);
  const MemoryId meas = std::max(mem, sibling);
  const double f = rec.fidelity;
  const bool success =
      sim_.timeline().rng().bernoulli(purification_success_probability(f));
  sim_.metrics().on_rule_fired(sim_.timeline().now(), index_,
                               RuleKind::Purification, rule.rsv);
  auto inst = std::make_shared<Purifier>(*this, sim_.next_instance_id(),
                                         rule.rsv, keep, meas, rule.peer, f,
                                         success, purified_fidelity(f));
  add_instance(inst);
  inst->start();
  return true;
}

bool RouterNode::try_generation(const Rule& rule, MemoryId mem) {
  if (!rule.initiates) return false;
  if (mm_.state(mem) != MemoryState::Raw) return false;
  auto it = gen_backoff_.find(mem);
  if (it != gen_backoff_.end() && sim_.timeline().now() < it->second)
    return false;
  sim_.metrics().on_rule_fired(sim_.timeline().now(), index_,
                               RuleKind::Generation, rule.rsv);
  auto inst = std::make_shared<GenInitiator>(*this, sim_.next_instance_id(),
                                             rule.rsv, mem, rule.link,
                                             rule.peer);
  add_instance(inst);
  inst->start();
  return true;
}

// ---------------------------------------------------------------------------
// Message handling

const Rule* RouterNode::passive_rule(ReservationId rsv, RuleKind kind,
                                     NodeIndex peer, LinkId link,
                                     bool check_link) const {
  for (const Rule& r : rules_.rules()) {
    if (r.rsv != rsv || r.kind != kind || r.initiates) continue;
    if (r.peer != peer) continue;
    if (check_link && r.link != link) continue;
    return &r;
  }
  return nullptr;
}

void RouterNode::deliver(NodeIndex from, const Message& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GenRequest> ||
                      std::is_same_v<T, PurifyRequest> ||
                      std::is_same_v<T, SwapRequest> ||
                      std::is_same_v<T, ReserveForward> ||
                      std::is_same_v<T, ReserveApprove> ||
                      std::is_same_v<T, ReserveReject> ||
                      std::is_same_v<T, ReleaseNotice>) {
          handle(from, m);
        } else {
          auto sp = find_instance(m.to_inst);
          if (!sp) return;  // instance already finished; stale message
          if constexpr (std::is_same_v<T, GenAccept>)
            sp->on_gen_accept(from, m);
          else if constexpr (std::is_same_v<T, GenDecline>)
            sp->on_gen_decline(from, m);
          else if constexpr (std::is_same_v<T, BsmResult>)
            sp->on_bsm_result(from, m);
          else if constexpr (std::is_same_v<T, PurifyAccept>)
            sp->on_purify_accept(from, m);
          else if constexpr (std::is_same_v<T, PurifyDecline>)
            sp->on_purify_decline(from, m);
          else if constexpr (std::is_same_v<T, SwapAccept>)
            sp->on_swap_accept(from, m);
          else if constexpr (std::is_same_v<T, SwapDecline>)
            sp->on_swap_decline(from, m);
          else if constexpr (std::is_same_v<T, SwapCancel>)
            sp->on_swap_cancel(from, m);
          else if constexpr (std::is_same_v<T, SwapResult>)
            sp->on_swap_result(from, m);
          else
            static_assert(!sizeof(T*), "unhandled message type");
        }
      },
      msg);
}

void RouterNode::handle(NodeIndex from, const GenRequest& m) {
  const Rule* rule = passive_rule(m.rsv, RuleKind::Generation, from, m.link,
                                  /*check_link=*/true);
  MemoryId chosen = kNoMemory;
  if (rule) {
    const SimTime now = sim_.timeline().now();
    for (MemoryId mem : booked_memories(m.rsv)) {
      const Booking* b = binding_at(mem, now);
      if (!b || b->rsv != m.rsv || b->role != rule->role) continue;
      if (mm_.state(mem) != MemoryState::Raw) continue;
      auto bo = gen_backoff_.find(mem);
      if (bo != gen_backoff_.end() && now < bo->second) continue;
      chosen = mem;
      break;
    }
  }
  if (chosen == kNoMemory) {
    send_to(from, GenDecline{m.rsv, m.from_inst});
    return;
  }
  auto inst = std::make_shared<GenResponder>(*this, sim_.next_instance_id(),
                                             m.rsv, chosen, from);
  add_instance(inst);
  inst->start(m);
}

void RouterNode::handle(NodeIndex from, const PurifyRequest& m) {
  const Rule* rule = passive_rule(m.rsv, RuleKind::Purification, from, 0,
                                  /*check_link=*/false);
  const MemoryId keep = m.keep_remote;
  const MemoryId meas = m.meas_remote;
  bool ok = rule != nullptr && keep < memories_.size() &&
            meas < memories_.size() && keep != meas;
  if (ok) {
    const SimTime now = sim_.timeline().now();
    for (MemoryId mem : {keep, meas}) {
      const Booking* b = binding_at(mem, now);
      ok = ok && b && b->rsv == m.rsv && pair_usable(mem, m.rsv);
    }
  }
  if (ok) {
    const EntanglementRecord& rk = memory(keep).record();
    const EntanglementRecord& rm = memory(meas).record();
    ok = rk.partner_node == from && rm.partner_node == from &&
         rk.partner == m.keep_local && rm.partner == m.meas_local &&
         rk.fidelity == m.fidelity && rm.fidelity == m.fidelity;
  }
  if (!ok) {
    send_to(from, PurifyDecline{m.rsv, m.from_inst});
    return;
  }
  if (m.success) {
    memory(keep).mutable_record().fidelity = purified_fidelity(m.fidelity);
    drop_pair_half(meas);
    evaluate_memory(keep);
  } else {
    drop_pair_half(meas);
    drop_pair_half(keep);
  }
  send_to(from, PurifyAccept{m.from_inst});
}

void RouterNode::handle(NodeIndex from, const SwapRequest& m) {
  bool ok = m.end_mem < memories_.size();
  if (ok) {
    const Booking* b = binding_at(m.end_mem, sim_.timeline().now());
    ok = b && b->rsv == m.rsv && pair_usable(m.end_mem, m.rsv);
  }
  if (ok) {
    const EntanglementRecord& rec = memory(m.end_mem).record();
    ok = rec.partner_node == from && rec.partner == m.mid_mem;
  }
  if (!ok) {
    send_to(from, SwapDecline{m.rsv, m.from_inst});
    return;
  }
  auto inst = std::make_shared<SwapEnd>(*this, sim_.next_instance_id(), m.rsv,
                                        m.end_mem, from, m.from_inst);
  add_instance(inst);
  inst->start();
}

void RouterNode::handle(NodeIndex from, const ReleaseNotice& m) {
  if (m.mem >= memories_.size())
    throw SimulationError("node '" + name_ + "': release notice for unknown memory");
  QuantumMemory& qm = memory(m.mem);
  // Act on record identity, not on the releasing flag: when both ends learn
  // of the pair at the same instant the consumer may fire before this record
  // exists, so the instant flag never lands and only the notice remains.
  if (!qm.entangled()) return;
  const EntanglementRecord& rec = qm.record();
  if (rec.partner_node == from && rec.partner == m.partner) drop_pair_half(m.mem);
}

// ---------------------------------------------------------------------------
// Reservations

void RouterNode::submit_request(const Reservation& rsv,
                                std::uint64_t request_id) {
  const NodeIndex nh = sim_.forwarding().next_hop(index_, rsv.responder);
  if (nh == kNoNode || !book(rsv, 0, rsv.memory_size)) {
    sim_.reservation_outcome(index_, request_id, false, rsv);
    return;
  }
  reservations_[rsv.id] = rsv;
  pending_requests_[rsv.id] = request_id;
  send_to(nh, ReserveForward{rsv, {index_}});
}

void RouterNode::handle(NodeIndex from, const ReserveForward& m) {
  const Reservation& rsv = m.rsv;
  if (index_ == rsv.responder) {
    if (book(rsv, rsv.memory_size, 0)) {
      reservations_[rsv.id] = rsv;
      std::vector<NodeIndex> path = m.path;
      path.push_back(index_);
      install_rules(rsv, path);
      const SimTime now = sim_.timeline().now();
      sim_.timeline().schedule(std::max(rsv.start, now), name_,
                               [this, id = rsv.id] { activate(id); });
      sim_.timeline().schedule(std::max(rsv.end, now), name_,
                               [this, id = rsv.id] { teardown(id); });
      send_to(m.path.back(), ReserveApprove{rsv, path});
    } else {
      send_to(m.path.back(), ReserveReject{rsv, m.path});
    }
    return;
  }
  const NodeIndex nh = sim_.forwarding().next_hop(index_, rsv.responder);
  if (nh != kNoNode && book(rsv, rsv.memory_size, rsv.memory_size)) {
    reservations_[rsv.id] = rsv;
    std::vector<NodeIndex> path = m.path;
    path.push_back(index_);
    send_to(nh, ReserveForward{rsv, path});
  } else {
    send_to(m.path.back(), ReserveReject{rsv, m.path});
  }
  (void)from;
}

void RouterNode::handle(NodeIndex, const ReserveApprove& m) {
  const auto pos = std::find(m.path.begin(), m.path.end(), index_);
  if (pos == m.path.end())
    throw SimulationError("node '" + name_ + "': approval for a foreign path");
  install_rules(m.rsv, m.path);
  const SimTime now = sim_.timeline().now();
  sim_.timeline().schedule(std::max(m.rsv.start, now), name_,
                           [this, id = m.rsv.id] { activate(id); });
  sim_.timeline().schedule(std::max(m.rsv.end, now), name_,
                           [this, id = m.rsv.id] { teardown(id); });
  if (pos == m.path.begin()) {
    auto it = pending_requests_.find(m.rsv.id);
    if (it != pending_requests_.end()) {
      const std::uint64_t request_id = it->second;
      pending_requests_.erase(it);
      sim_.reservation_outcome(index_, request_id, true, m.rsv);
    }
  } else {
    send_to(*(pos - 1), ReserveApprove{m.rsv, m.path});
  }
}

void RouterNode::handle(NodeIndex, const ReserveReject& m) {
  if (m.path.empty() || m.path.back() != index_)
    throw SimulationError("node '" + name_ + "': rejection took a wrong turn");
  unbook(m.rsv.id);
  reservations_.erase(m.rsv.id);
  std::vector<NodeIndex> path = m.path;
  path.pop_back();
  if (!path.empty()) {
    send_to(path.back(), ReserveReject{m.rsv, path});
    return;
  }
  auto it = pending_requests_.find(m.rsv.id);
  if (it != pending_requests_.end()) {
    const std::uint64_t request_id = it->second;
    pending_requests_.erase(it);
    sim_.reservation_outcome(index_, request_id, false, m.rsv);
  }
}

void RouterNode::install_rules(const Reservation& rsv,
                               const std::vector<NodeIndex>& path) {
  const double target = rsv.target_fidelity;

  if (index_ == path.front()) {
    Rule r;
    r.kind = RuleKind::Delivery;
    r.rsv = rsv.id;
    r.role = MemoryRole::Downstream;
    r.peer = rsv.responder;
    r.min_fidelity = target;
    rules_.install(r);
  }

  const std::vector<SwapStep> steps = swap_ordering(path);
  for (const SwapStep& s : steps) {
    if (s.node != index_) continue;
    Rule r;
    r.kind = RuleKind::Swapping;
    r.rsv = rsv.id;
    r.role = MemoryRole::Any;
    r.peer = s.upstream;
    r.other_peer = s.downstream;
    r.min_fidelity = target;
    rules_.install(r);
  }

  // Purification covers every segment that ever holds a pair: each physical
  // link plus each swap product span, including the full route.
  std::vector<std::pair<NodeIndex, NodeIndex>> segments;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    segments.emplace_back(path[i], path[i + 1]);
  for (const SwapStep& s : steps) segments.emplace_back(s.upstream, s.downstream);
  for (const auto& [near_end, far_end] : segments) {
    if (index_ == near_end) {
      Rule r;
      r.kind = RuleKind::Purification;
      r.rsv = rsv.id;
      r.role = MemoryRole::Downstream;
      r.peer = far_end;
      r.initiates = true;
      r.max_fidelity = target;
      rules_.install(r);
    } else if (index_ == far_end) {
      Rule r;
      r.kind = RuleKind::Purification;
      r.rsv = rsv.id;
      r.role = MemoryRole::Upstream;
      r.peer = near_end;
      r.initiates = false;
      r.max_fidelity = target;
      rules_.install(r);
    }
  }

  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const NodeIndex a = path[i];
    const NodeIndex b = path[i + 1];
    if (index_ != a && index_ != b) continue;
    LinkPort* port = sim_.port_between(a, b);
    if (!port)
      throw SimulationError("node '" + name_ +
                            "': route uses a link that does not exist");
    Rule r;
    r.kind = RuleKind::Generation;
    r.rsv = rsv.id;
    r.link = port->id;
    if (index_ == a) {
      r.role = MemoryRole::Downstream;
      r.peer = b;
      r.initiates = true;
    } else {
      r.role = MemoryRole::Upstream;
      r.peer = a;
      r.initiates = false;
    }
    rules_.install(r);
  }
}

void RouterNode::activate(ReservationId rsv) {
  for (MemoryId mem : booked_memories(rsv)) evaluate_memory(mem);
}

void RouterNode::teardown(ReservationId rsv) {
  rules_.uninstall_reservation(rsv);

  std::vector<InstanceId> doomed;
  for (const auto& [id, sp] : instances_)
    if (sp->rsv() == rsv) doomed.push_back(id);
  for (InstanceId id : doomed) {
    auto sp = find_instance(id);
    if (!sp) continue;
    sp->on_teardown();
    destroy_instance(id);
  }

  const std::vector<MemoryId> mems = booked_memories(rsv);
  unbook(rsv);
  for (MemoryId mem : mems) {
    gen_backoff_.erase(mem);
    if (mm_.reservation_of(mem) == rsv &&
        mm_.state(mem) != MemoryState::Raw) {
      QuantumMemory& qm = memory(mem);
      if (qm.entangled()) qm.clear_record(sim_.timeline());
      mm_.release(mem);
    }
  }
  // A back-to-back reservation may start at this same instant.
  for (MemoryId mem : mems) evaluate_memory(mem);
  reservations_.erase(rsv);
}

}  // namespace qnet
