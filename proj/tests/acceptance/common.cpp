#include <cstdio>

#include "harness.hpp"

namespace accept {

using namespace qnet;

std::string str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

NodeConfig router_node(std::string name, std::string site, int memories) {
  NodeConfig n;
  n.name = std::move(name);
  n.site = std::move(site);
  n.memory_array_size = memories;
  return n;
}

NodeConfig bsm_node(std::string name, std::string site) {
  NodeConfig n;
  n.name = std::move(name);
  n.type = NodeType::Bsm;
  n.site = std::move(site);
  return n;
}

ChannelConfig channel(std::string a, std::string b, std::string bsm,
                      double length_km) {
  ChannelConfig c;
  c.a = std::move(a);
  c.b = std::move(b);
  c.bsm = std::move(bsm);
  c.length_km = length_km;
  return c;
}

StaticRequestConfig request(std::string initiator, std::string responder,
                            double start_s, double duration_s, int memories,
                            double target) {
  StaticRequestConfig r;
  r.initiator = std::move(initiator);
  r.responder = std::move(responder);
  r.start_s = start_s;
  r.duration_s = duration_s;
  r.memory_size = memories;
  r.target_fidelity = target;
  return r;
}

Config chain_config(double target_fidelity, int memory_size) {
  Config cfg;
  cfg.simulation.stop_s = 20.0;
  cfg.simulation.seed = 1;
  cfg.nodes = {router_node("node-a", "lab", 50),
               router_node("node-b", "lab", 50),
               router_node("node-c", "lab", 50), bsm_node("bsm-ab", "lab"),
               bsm_node("bsm-bc", "lab")};
  cfg.quantum_channels = {channel("node-a", "node-b", "bsm-ab", 10.0),
                          channel("node-b", "node-c", "bsm-bc", 10.0)};
  cfg.static_requests = {
      request("node-a", "node-c", 0.1, 19.0, memory_size, target_fidelity)};
  return cfg;
}

std::string repo_config(const std::string& filename) {
  return std::string(QNETSIM_REPO_CONFIGS) + "/" + filename;
}

}  // namespace accept
