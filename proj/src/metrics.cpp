#include "qnetsim/metrics.hpp"

#include <algorithm>
#include <cstdio>

namespace qnet {

namespace {

// Shortest round-trippable decimal form, fixed across platforms.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

MetricsStore::MetricsStore(std::vector<std::string> router_names,
                           std::vector<int> memory_counts,
                           SimTime sample_interval)
    : interval_(sample_interval) {
  if (router_names.size() != memory_counts.size())
    throw SimulationError("metrics: node name/memory count size mismatch");
  if (interval_ <= 0)
    throw SimulationError("metrics: sample interval must be positive");
  nodes_.resize(router_names.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    nodes_[i].name = std::move(router_names[i]);
    nodes_[i].total = memory_counts[i];
    nodes_[i].raw = memory_counts[i];
  }
}

void MetricsStore::flush_bin(NodeTrack& t, SimTime covered_ps) {
  if (covered_ps <= 0 || t.total == 0) {
    t.bins.push_back({1.0, 0.0, 0.0});
  } else {
    const double denom = static_cast<double>(covered_ps) * t.total;
    t.bins.push_back({t.bin_acc[0] / denom, t.bin_acc[1] / denom,
                      t.bin_acc[2] / denom});
  }
  t.bin_acc = {0.0, 0.0, 0.0};
  ++t.bin_index;
}

void MetricsStore::integrate_to(NodeTrack& t, SimTime upto) {
  while (t.last < upto) {
    const SimTime bin_end = (t.bin_index + 1) * interval_;
    const SimTime seg_end = std::min(upto, bin_end);
    const double dt = static_cast<double>(seg_end - t.last);
    t.bin_acc[0] += dt * t.raw;
    t.bin_acc[1] += dt * t.occupied;
    t.bin_acc[2] += dt * t.entangled;
    if (t.total > 0 &&
        1.0 - static_cast<double>(t.raw) / t.total > 0.9)
      t.above_ps += dt;
    t.last = seg_end;
    if (seg_end == bin_end) flush_bin(t, interval_);
  }
}

void MetricsStore::on_transition(NodeIndex node, SimTime at, MemoryState from,
                                 MemoryState to) {
  NodeTrack& t = nodes_.at(node);
  integrate_to(t, at);
  int* counts[3] = {&t.raw, &t.occupied, &t.entangled};
  auto slot = [](MemoryState s) {
    return s == MemoryState::Raw ? 0 : s == MemoryState::Occupied ? 1 : 2;
  };
  --*counts[slot(from)];
  ++*counts[slot(to)];
  if (t.raw < 0 || t.occupied < 0 || t.entangled < 0)
    throw SimulationError("metrics: negative state count on node " + t.name);
}

void MetricsStore::finish(SimTime stop) {
  if (finished_) throw SimulationError("metrics: finish() called twice");
  finished_ = true;
  stop_ = stop;
  for (NodeTrack& t : nodes_) {
    integrate_to(t, stop);
    const SimTime partial = stop - t.bin_index * interval_;
    if (partial > 0) flush_bin(t, partial);
  }
}

void MetricsStore::flow_started(ReservationId id, std::string initiator,
                                std::string responder, SimTime start,
                                SimTime end) {
  FlowRecord rec;
  rec.initiator = std::move(initiator);
  rec.responder = std::move(responder);
  rec.start = start;
  rec.end = end;
  flows_.emplace(id, std::move(rec));
}

void MetricsStore::on_delivery(ReservationId id, double fidelity) {
  auto it = flows_.find(id);
  if (it == flows_.end())
    throw SimulationError("metrics: delivery for unknown flow " +
                          std::to_string(id));
  ++it->second.delivered;
  it->second.min_fidelity = std::min(it->second.min_fidelity, fidelity);
}

void MetricsStore::on_request_outcome(std::string app_node,
                                      std::uint64_t request_id, bool approved,
                                      const Reservation& rsv) {
  RequestRecord rec;
  rec.app_node = std::move(app_node);
  rec.request_id = request_id;
  rec.approved = approved;
  rec.reservation = rsv;
  requests_.push_back(std::move(rec));
}

void MetricsStore::on_rule_fired(SimTime at, NodeIndex node, RuleKind kind,
                                 ReservationId rsv) {
  if (!rule_log_enabled_) return;
  rule_log_.push_back(RuleFiring{at, node, kind, rsv});
}

std::uint64_t MetricsStore::total_delivered() const {
  std::uint64_t sum = 0;
  for (const auto& [id, f] : flows_) sum += f.delivered;
  return sum;
}

double MetricsStore::seconds_above_90(NodeIndex node) const {
  return nodes_.at(node).above_ps / static_cast<double>(kSecond);
}

void MetricsStore::write_throughput_csv(std::ostream& os) const {
  os << "flow_id,initiator,responder,pairs_delivered,active_seconds,"
        "pairs_per_second\n";
  for (const auto& [id, f] : flows_) {
    const SimTime effective_end = finished_ ? std::min(f.end, stop_) : f.end;
    const double active =
        std::max<double>(0.0, time_to_seconds(effective_end - f.start));
    const double rate = active > 0.0 ? f.delivered / active : 0.0;
    os << id << ',' << f.initiator << ',' << f.responder << ','
       << f.delivered << ',' << fmt(active) << ',' << fmt(rate) << '\n';
  }
}

void MetricsStore::write_utilization_csv(std::ostream& os) const {
  os << "node,time_s,frac_raw,frac_entangled,frac_occupied\n";
  for (const NodeTrack& t : nodes_) {
    for (std::size_t b = 0; b < t.bins.size(); ++b) {
      const double at = time_to_seconds(static_cast<SimTime>(b) * interval_);
      os << t.name << ',' << fmt(at) << ',' << fmt(t.bins[b][0]) << ','
         << fmt(t.bins[b][2]) << ',' << fmt(t.bins[b][1]) << '\n';
    }
  }
}

void MetricsStore::write_requests_csv(std::ostream& os) const {
  os << "app_node,request_id,outcome,start,end,memory_size,target_fidelity\n";
  for (const RequestRecord& r : requests_) {
    os << r.app_node << ',' << r.request_id << ','
       << (r.approved ? "approved" : "rejected") << ','
       << fmt(time_to_seconds(r.reservation.start)) << ','
       << fmt(time_to_seconds(r.reservation.end)) << ','
       << r.reservation.memory_size << ','
       << fmt(r.reservation.target_fidelity) << '\n';
  }
}

}  // namespace qnet
