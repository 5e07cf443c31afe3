#include "qnetsim/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qnet {

namespace {

std::vector<std::string> router_names_of(const Config& cfg) {
  std::vector<std::string> out;
  for (const NodeConfig& n : cfg.nodes)
    if (n.type == NodeType::Router) out.push_back(n.name);
  return out;
}

std::vector<int> memory_counts_of(const Config& cfg) {
  std::vector<int> out;
  for (const NodeConfig& n : cfg.nodes)
    if (n.type == NodeType::Router)
      out.push_back(n.memory_array_size.value_or(cfg.default_memory_array_size));
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr SimTime kUnreachable = -1;

}  // namespace

Simulation::Simulation(const Config& cfg)
    : cfg_(cfg),
      tl_(cfg.simulation.seed),
      stop_(time_from_seconds(cfg.simulation.stop_s)),
      metrics_(router_names_of(cfg), memory_counts_of(cfg),
               time_from_seconds(cfg.simulation.sample_interval_ms / 1000.0)) {
  build_nodes();

  std::vector<LinkSpec> links;
  links.reserve(cfg_.quantum_channels.size());
  for (const ChannelConfig& ch : cfg_.quantum_channels)
    links.push_back(
        {index_of_.at(ch.a), index_of_.at(ch.b), ch.length_km});
  fwd_ = ForwardingTable(node_names_, links);

  build_ports();
  build_delays();
  build_apps();

  for (const StaticRequestConfig& sr : cfg_.static_requests) {
    const NodeIndex ini = index_of_.at(sr.initiator);
    const NodeIndex resp = index_of_.at(sr.responder);
    tl_.schedule(time_from_seconds(sr.start_s), node_names_[ini],
                 [this, sr, ini, resp] {
                   Reservation rsv;
                   rsv.id = next_reservation_id();
                   rsv.initiator = ini;
                   rsv.responder = resp;
                   rsv.memory_size = sr.memory_size;
                   rsv.target_fidelity = sr.target_fidelity;
                   rsv.start = tl_.now();
                   rsv.end = rsv.start + time_from_seconds(sr.duration_s);
                   router(ini).submit_request(rsv, next_request_id());
                 });
  }
}

void Simulation::build_nodes() {
  const std::size_t n = cfg_.nodes.size();
  node_names_.reserve(n);
  routers_.resize(n);
  metrics_slot_.assign(n, -1);
  int slot = 0;
  for (NodeIndex i = 0; i < n; ++i) {
    const NodeConfig& nc = cfg_.nodes[i];
    node_names_.push_back(nc.name);
    index_of_[nc.name] = i;
    if (nc.type == NodeType::Router) {
      const int count =
          nc.memory_array_size.value_or(cfg_.default_memory_array_size);
      const MemoryConfig& mc = nc.memory ? *nc.memory : cfg_.memory;
      routers_[i] =
          std::make_unique<RouterNode>(*this, i, nc.name, count, mc.params());
      router_order_.push_back(i);
      metrics_slot_[i] = slot++;
    }
  }
}

void Simulation::build_ports() {
  ports_.reserve(cfg_.quantum_channels.size());
  for (std::size_t li = 0; li < cfg_.quantum_channels.size(); ++li) {
    const ChannelConfig& ch = cfg_.quantum_channels[li];
    LinkPort port;
    port.id = static_cast<LinkId>(li);
    port.ends[0] = index_of_.at(ch.a);
    port.ends[1] = index_of_.at(ch.b);
    port.bsm_node = index_of_.at(ch.bsm);
    const double att =
        ch.attenuation_db_per_km.value_or(cfg_.fiber.attenuation_db_per_km);
    const SimTime frame = static_cast<SimTime>(
        std::llround(ch.tdm_frame_ps.value_or(cfg_.fiber.tdm_frame_ps)));
    for (int s = 0; s < 2; ++s) {
      port.fiber[s] = std::make_unique<QuantumChannel>(
          node_names_[port.ends[s]] + ":" + ch.bsm, ch.length_km / 2.0, att,
          cfg_.fiber.light_speed_m_per_s, frame);
      const int count = router(port.ends[s]).memories().size();
      for (int m = 0; m < count; ++m)
        port.fiber[s]->register_source(static_cast<MemoryId>(m));
    }
    const NodeConfig* bn = cfg_.find_node(ch.bsm);
    const DetectorConfig& dc =
        bn && bn->detector ? *bn->detector : cfg_.detector;
    const DetectorParams dp = dc.params();
    port.station =
        std::make_unique<BsmStation>(ch.bsm, dp, frame + dp.resolution);
    port.station->set_result_sink(
        [this, bsm = port.bsm_node](NodeIndex to, const BsmResult& r) {
          send(bsm, to, r);
        });
    port.station->start(tl_, stop_);
    ports_.push_back(std::move(port));
  }
}

void Simulation::build_delays() {
  const std::size_t n = node_count();
  delays_.assign(n * n, kUnreachable);
  auto at = [&](NodeIndex a, NodeIndex b) -> SimTime& {
    return delays_[a * n + b];
  };
  for (NodeIndex i = 0; i < n; ++i) at(i, i) = 0;

  if (cfg_.classical.model == ClassicalModel::SiteMatrix) {
    const SimTime intra = intra_delay_ps();
    auto pair_delay = [&](const std::string& sa,
                          const std::string& sb) -> SimTime {
      if (sa == sb) return intra;
      for (const SitePairDelay& p : cfg_.classical.site_pairs) {
        if ((p.site_a == sa && p.site_b == sb) ||
            (p.site_a == sb && p.site_b == sa))
          return time_from_seconds(p.one_way_ms() / 1e3);
      }
      throw ConfigError("classical.site_pairs: no delay between sites '" + sa +
                        "' and '" + sb + "'");
    };
    for (NodeIndex a : router_order_)
      for (NodeIndex b : router_order_) {
        if (a == b) continue;
        at(a, b) = pair_delay(cfg_.nodes[a].site, cfg_.nodes[b].site);
      }
    // Swap stations inherit positions from their links: half the delay to
    // each adjacent router, then shortest composite paths to everything else.
    for (const LinkPort& p : ports_) {
      const SimTime half = at(p.ends[0], p.ends[1]) / 2;
      at(p.bsm_node, p.ends[0]) = at(p.ends[0], p.bsm_node) = half;
      at(p.bsm_node, p.ends[1]) = at(p.ends[1], p.bsm_node) = half;
    }
    for (const LinkPort& p : ports_) {
      for (NodeIndex x : router_order_) {
        SimTime best = kUnreachable;
        for (NodeIndex anchor : {p.ends[0], p.ends[1]}) {
          const SimTime d = at(p.bsm_node, anchor) + at(anchor, x);
          if (best == kUnreachable || d < best) best = d;
        }
        if (at(p.bsm_node, x) == kUnreachable || best < at(p.bsm_node, x))
          at(p.bsm_node, x) = at(x, p.bsm_node) = best;
      }
    }
    for (const LinkPort& p : ports_)
      for (const LinkPort& q : ports_) {
        if (p.bsm_node == q.bsm_node) continue;
        SimTime best = kUnreachable;
        for (NodeIndex anchor : {q.ends[0], q.ends[1]}) {
          const SimTime d = at(p.bsm_node, anchor) + at(anchor, q.bsm_node);
          if (best == kUnreachable || d < best) best = d;
        }
        if (at(p.bsm_node, q.bsm_node) == kUnreachable ||
            best < at(p.bsm_node, q.bsm_node))
          at(p.bsm_node, q.bsm_node) = at(q.bsm_node, p.bsm_node) = best;
      }
    return;
  }

  // Explicit channel list: shortest path over the given one-way delays.
  constexpr SimTime kInf = std::numeric_limits<SimTime>::max() / 4;
  std::vector<SimTime> d(n * n, kInf);
  for (NodeIndex i = 0; i < n; ++i) d[i * n + i] = 0;
  for (const ClassicalChannelConfig& ch : cfg_.classical.channels) {
    const NodeIndex a = index_of_.at(ch.a);
    const NodeIndex b = index_of_.at(ch.b);
    const SimTime w = static_cast<SimTime>(std::llround(ch.one_way_delay_ps));
    d[a * n + b] = std::min(d[a * n + b], w);
    d[b * n + a] = std::min(d[b * n + a], w);
  }
  for (NodeIndex k = 0; k < n; ++k)
    for (NodeIndex i = 0; i < n; ++i) {
      if (d[i * n + k] == kInf) continue;
      for (NodeIndex j = 0; j < n; ++j) {
        if (d[k * n + j] == kInf) continue;
        const SimTime w = d[i * n + k] + d[k * n + j];
        if (w < d[i * n + j]) d[i * n + j] = w;
      }
    }
  for (NodeIndex i = 0; i < n; ++i)
    for (NodeIndex j = 0; j < n; ++j)
      at(i, j) = d[i * n + j] == kInf ? kUnreachable : d[i * n + j];

  auto require = [&](NodeIndex a, NodeIndex b) {
    if (at(a, b) == kUnreachable)
      throw ConfigError("classical.channels: no path between '" +
                        node_names_[a] + "' and '" + node_names_[b] + "'");
  };
  for (NodeIndex a : router_order_)
    for (NodeIndex b : router_order_)
      if (a != b && !fwd_.route(a, b).empty()) require(a, b);
  for (const LinkPort& p : ports_) {
    require(p.ends[0], p.ends[1]);
    require(p.ends[0], p.bsm_node);
    require(p.ends[1], p.bsm_node);
  }
}

void Simulation::build_apps() {
  std::vector<NodeIndex> app_nodes;
  for (const std::string& name : cfg_.applications.nodes) {
    if (name == "*") {
      app_nodes = router_order_;
      break;
    }
    app_nodes.push_back(index_of_.at(name));
  }
  if (app_nodes.empty()) return;
  if (router_order_.size() < 2)
    throw ConfigError(
        "applications.nodes: traffic needs at least two routers");
  for (NodeIndex idx : app_nodes) {
    if (app_of_node_.count(idx)) continue;
    AppState app;
    app.node = idx;
    app.rng = std::make_unique<Rng>(derive_seed(cfg_.simulation.seed, idx));
    app_of_node_[idx] = apps_.size();
    apps_.push_back(std::move(app));
  }
  for (std::size_t i = 0; i < apps_.size(); ++i)
    tl_.schedule(0, node_names_[apps_[i].node], [this, i] { app_submit(i); });
}

void Simulation::app_submit(std::size_t app_idx) {
  AppState& app = apps_[app_idx];
  Rng& rng = *app.rng;
  const ApplicationsConfig& ac = cfg_.applications;
  RouterNode& node = router(app.node);

  if (!app.retrying) {
    const auto& order = router_order_;
    const std::size_t self =
        std::find(order.begin(), order.end(), app.node) - order.begin();
    const std::size_t k = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(order.size()) - 2));
    app.responder = order[k < self ? k : k + 1];
    app.target_fidelity =
        rng.uniform(ac.target_fidelity_min, ac.target_fidelity_max);
  }
  const double duration = rng.uniform(ac.duration_min_s, ac.duration_max_s);
  const double offset =
      rng.uniform(ac.start_offset_min_s, ac.start_offset_max_s);
  int hi = ac.memory_size_max.value_or(node.memories().size() / 2);
  hi = std::max(hi, 1);
  const int lo = std::max(std::min(ac.memory_size_min, hi), 1);
  const int size = static_cast<int>(rng.uniform_int(lo, hi));

  Reservation rsv;
  rsv.id = next_reservation_id();
  rsv.initiator = app.node;
  rsv.responder = app.responder;
  rsv.memory_size = size;
  rsv.target_fidelity = app.target_fidelity;
  rsv.start = tl_.now() + time_from_seconds(offset);
  rsv.end = rsv.start + time_from_seconds(duration);
  const std::uint64_t rid = next_request_id();
  app.pending_request = rid;
  node.submit_request(rsv, rid);
}

void Simulation::reservation_outcome(NodeIndex initiator,
                                     std::uint64_t request_id, bool approved,
                                     const Reservation& rsv) {
  metrics_.on_request_outcome(node_names_[initiator], request_id, approved,
                              rsv);
  if (approved)
    metrics_.flow_started(rsv.id, node_names_[rsv.initiator],
                          node_names_[rsv.responder], rsv.start, rsv.end);
  auto it = app_of_node_.find(initiator);
  if (it == app_of_node_.end()) return;
  AppState& app = apps_[it->second];
  if (app.pending_request != request_id) return;  // a static request's outcome
  app.pending_request = 0;
  SimTime next;
  if (approved) {
    app.retrying = false;
    next = rsv.end;
  } else {
    app.retrying = true;
    next = tl_.now() + time_from_seconds(cfg_.applications.retry_delay_s);
  }
  if (next >= stop_) return;
  tl_.schedule(next, node_names_[initiator],
               [this, idx = it->second] { app_submit(idx); });
}

NodeIndex Simulation::node_index(const std::string& name) const {
  auto it = index_of_.find(name);
  if (it == index_of_.end())
    throw SimulationError("unknown node '" + name + "'");
  return it->second;
}

RouterNode& Simulation::router(NodeIndex i) {
  if (i >= routers_.size() || !routers_[i])
    throw SimulationError("node index " + std::to_string(i) +
                          " is not a router");
  return *routers_[i];
}

LinkPort* Simulation::port_between(NodeIndex a, NodeIndex b) {
  for (LinkPort& p : ports_) {
    if ((p.ends[0] == a && p.ends[1] == b) ||
        (p.ends[0] == b && p.ends[1] == a))
      return &p;
  }
  return nullptr;
}

SimTime Simulation::delay(NodeIndex a, NodeIndex b) const {
  const SimTime d = delays_[a * node_count() + b];
  if (d == kUnreachable)
    throw SimulationError("no classical path between '" + node_names_[a] +
                          "' and '" + node_names_[b] + "'");
  return d;
}

SimTime Simulation::intra_delay_ps() const {
  return time_from_seconds(cfg_.classical.intra_site_delay_ms / 1e3);
}

void Simulation::send(NodeIndex from, NodeIndex to, Message msg) {
  RouterNode& target = router(to);
  const SimTime at = tl_.now() + delay(from, to);
  RouterNode* tp = &target;
  tl_.schedule(at, target.name(),
               [tp, from, m = std::move(msg)] { tp->deliver(from, m); });
}

void Simulation::run() {
  tl_.run(stop_);
  if (!finished_) {
    metrics_.finish(stop_);
    finished_ = true;
  }
}

void Simulation::run_until(SimTime t) { tl_.run(t); }

void Simulation::inject_pair(NodeIndex node_a, MemoryId mem_a,
                             NodeIndex node_b, MemoryId mem_b,
                             ReservationId rsv, double fidelity,
                             SimTime expiration) {
  // Evict whatever currently holds the slot so injection lands on live
  // traffic deterministically. Generation attempts are aborted; an existing
  // pair is dropped on both ends. No re-evaluation happens here, so the
  // freed slot cannot be re-occupied before the injected record arrives.
  auto evict = [this](NodeIndex node, MemoryId mem) {
    RouterNode& rn = router(node);
    MemoryManager& mm = rn.memories();
    switch (mm.state(mem)) {
      case MemoryState::Raw:
        return;
      case MemoryState::Occupied: {
        const InstanceId owner = mm.owner(mem);
        if (auto inst = rn.find_instance(owner)) {
          inst->on_teardown();
          rn.destroy_instance(owner);
        }
        mm.release(mem);
        return;
      }
      case MemoryState::Entangled: {
        const EntanglementRecord rec = rn.memory(mem).record();
        RouterNode& pn = router(rec.partner_node);
        QuantumMemory& pq = pn.memory(rec.partner);
        if (pq.entangled() && pq.record().partner == mem &&
            pq.record().partner_node == node) {
          pq.clear_record(tl_);
          pn.memories().release(rec.partner);
        }
        rn.memory(mem).clear_record(tl_);
        mm.release(mem);
        return;
      }
    }
  };
  evict(node_a, mem_a);
  evict(node_b, mem_b);
  EntanglementRecord ra{mem_b, node_b, fidelity, expiration, false};
  EntanglementRecord rb{mem_a, node_a, fidelity, expiration, false};
  router(node_a).adopt_record(mem_a, next_instance_id(), rsv, ra);
  router(node_b).adopt_record(mem_b, next_instance_id(), rsv, rb);
  router(node_a).evaluate_memory(mem_a);
  router(node_b).evaluate_memory(mem_b);
}

std::vector<std::string> Simulation::entanglement_violations() {
  std::vector<std::string> out;
  for (NodeIndex i : router_order_) {
    RouterNode& r = router(i);
    const MemoryId count = static_cast<MemoryId>(r.memories().size());
    for (MemoryId m = 0; m < count; ++m) {
      QuantumMemory& qm = r.memory(m);
      if (!qm.entangled()) continue;
      const EntanglementRecord& rec = qm.record();
      if (rec.releasing) continue;
      const std::string where = qm.name();
      if (rec.partner_node >= node_count() || !is_router(rec.partner_node)) {
        out.push_back(where + ": partner node out of range");
        continue;
      }
      RouterNode& pr = router(rec.partner_node);
      if (rec.partner >= static_cast<MemoryId>(pr.memories().size())) {
        out.push_back(where + ": partner memory out of range");
        continue;
      }
      QuantumMemory& pm = pr.memory(rec.partner);
      if (!pm.entangled()) {
        out.push_back(where + ": partner " + pm.name() + " holds no record");
        continue;
      }
      const EntanglementRecord& prec = pm.record();
      if (prec.releasing) continue;
      if (prec.partner != m || prec.partner_node != i)
        out.push_back(where + ": partner " + pm.name() + " points elsewhere");
      else if (prec.fidelity != rec.fidelity)
        out.push_back(where + ": fidelity mismatch with " + pm.name());
    }
  }
  return out;
}

}  // namespace qnet
