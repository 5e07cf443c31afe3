#include "qnetsim/resources.hpp"

#include <algorithm>
#include <functional>

namespace qnet {

const char* to_string(MemoryState s) {
  switch (s) {
    case MemoryState::Raw:
      return "RAW";
    case MemoryState::Occupied:
      return "OCCUPIED";
    case MemoryState::Entangled:
      return "ENTANGLED";
  }
  return "?";
}

const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::Generation:
      return "generation";
    case RuleKind::Purification:
      return "purification";
    case RuleKind::Swapping:
      return "swapping";
    case RuleKind::Delivery:
      return "delivery";
  }
  return "?";
}

int rule_priority(RuleKind k) {
  switch (k) {
    case RuleKind::Delivery:
      return 0;
    case RuleKind::Swapping:
      return 1;
    case RuleKind::Purification:
      return 2;
    case RuleKind::Generation:
      return 3;
  }
  return 99;
}

const char* to_string(MemoryRole r) {
  switch (r) {
    case MemoryRole::Upstream:
      return "upstream";
    case MemoryRole::Downstream:
      return "downstream";
    case MemoryRole::Any:
      return "any";
  }
  return "?";
}

MemoryManager::MemoryManager(int memory_count, std::string node_name)
    : node_name_(std::move(node_name)) {
  if (memory_count < 0) {
    throw ConfigError("memory count must be non-negative, got " +
                      std::to_string(memory_count));
  }
  slots_.resize(static_cast<std::size_t>(memory_count));
}

const MemorySlot& MemoryManager::slot(MemoryId mem) const {
  if (mem >= slots_.size()) {
    throw SimulationError("node '" + node_name_ + "' has no memory " +
                          std::to_string(mem));
  }
  return slots_[mem];
}

void MemoryManager::transition(MemoryId mem, MemoryState to) {
  MemoryState from = slots_[mem].state;
  slots_[mem].state = to;
  if (observer_) observer_(mem, from, to);
}

void MemoryManager::occupy(MemoryId mem, InstanceId owner, ReservationId rsv) {
  const MemorySlot& s = slot(mem);
  if (s.state == MemoryState::Occupied) {
    throw SimulationError("node '" + node_name_ + "' memory " +
                          std::to_string(mem) +
                          ": cannot occupy an OCCUPIED memory");
  }
  transition(mem, MemoryState::Occupied);
  slots_[mem].owner = owner;
  slots_[mem].rsv = rsv;
}

void MemoryManager::mark_entangled(MemoryId mem) {
  const MemorySlot& s = slot(mem);
  if (s.state != MemoryState::Occupied) {
    throw SimulationError("node '" + node_name_ + "' memory " +
                          std::to_string(mem) + ": illegal transition " +
                          to_string(s.state) + " -> ENTANGLED");
  }
  transition(mem, MemoryState::Entangled);
  slots_[mem].owner = kNoInstance;
}

void MemoryManager::release(MemoryId mem) {
  const MemorySlot& s = slot(mem);
  if (s.state == MemoryState::Raw) {
    throw SimulationError("node '" + node_name_ + "' memory " +
                          std::to_string(mem) + ": RAW memory released twice");
  }
  transition(mem, MemoryState::Raw);
  slots_[mem].owner = kNoInstance;
  slots_[mem].rsv = 0;
}

MemoryState MemoryManager::state(MemoryId mem) const { return slot(mem).state; }

InstanceId MemoryManager::owner(MemoryId mem) const { return slot(mem).owner; }

ReservationId MemoryManager::reservation_of(MemoryId mem) const {
  return slot(mem).rsv;
}

MemoryStateCounts MemoryManager::counts() const {
  MemoryStateCounts c;
  for (const MemorySlot& s : slots_) {
    switch (s.state) {
      case MemoryState::Raw:
        ++c.raw;
        break;
      case MemoryState::Occupied:
        ++c.occupied;
        break;
      case MemoryState::Entangled:
        ++c.entangled;
        break;
    }
  }
  return c;
}

std::uint64_t RuleManager::install(Rule rule) {
  rule.install_seq = next_seq_++;
  auto pos = std::upper_bound(
      rules_.begin(), rules_.end(), rule, [](const Rule& a, const Rule& b) {
        int pa = rule_priority(a.kind), pb = rule_priority(b.kind);
        if (pa != pb) return pa < pb;
        return a.install_seq < b.install_seq;
      });
  rules_.insert(pos, rule);
  return rule.install_seq;
}

void RuleManager::uninstall_reservation(ReservationId rsv) {
  rules_.erase(std::remove_if(rules_.begin(), rules_.end(),
                              [rsv](const Rule& r) { return r.rsv == rsv; }),
               rules_.end());
}

std::vector<const Rule*> RuleManager::candidates(ReservationId rsv,
                                                 MemoryRole role) const {
  std::vector<const Rule*> out;
  for (const Rule& r : rules_) {
    if (r.rsv != rsv) continue;
    if (r.role != MemoryRole::Any && role != MemoryRole::Any && r.role != role)
      continue;
    out.push_back(&r);
  }
  return out;
}

}  // namespace qnet
