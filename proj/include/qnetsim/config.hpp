#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qnetsim/hardware.hpp"
#include "qnetsim/kernel.hpp"

namespace qnet {

// Validated topology and parameter set, loaded from JSON. Defaults reproduce
// the reference hardware operating point: e=0.75, f_m=20 kHz, t_c=1.3 s,
// C=500, a=50, eta=0.8, r=50 MHz, d=0, s=100 ps, 0.2 dB/km fiber at
// 2e8 m/s, 20 ns TDM frame, F_gate=0.99, p_swap=0.64.

struct MemoryConfig {
  double efficiency = 0.75;
  double frequency_hz = 20e3;
  double coherence_time_s = 1.3;
  double cooperativity = 500.0;
  double gamma = 14.0;
  double gamma_star = 32.0;
  double delta_omega = 0.0;

  MemoryParams params() const;
};

struct DetectorConfig {
  double efficiency = 0.8;
  double count_rate_hz = 50e6;
  double dark_count_rate_hz = 0.0;
  double resolution_ps = 100.0;

  DetectorParams params() const;
};

struct FiberConfig {
  double attenuation_db_per_km = 0.2;
  double light_speed_m_per_s = 2e8;
  double tdm_frame_ps = 20000.0;
};

struct ProtocolConfig {
  double swap_success_probability = 0.64;
  double gate_fidelity = 0.99;
};

enum class NodeType { Router, Bsm };

struct NodeConfig {
  std::string name;
  NodeType type = NodeType::Router;
  std::string site;                          // used by site-matrix delays
  std::optional<int> memory_array_size;      // routers; default from hardware
  std::optional<MemoryConfig> memory;        // router override
  std::optional<DetectorConfig> detector;    // bsm override
};

struct ChannelConfig {
  std::string a;
  std::string b;
  std::string bsm;
  double length_km = 0.0;
  std::optional<double> attenuation_db_per_km;
  std::optional<double> tdm_frame_ps;
};

struct SitePairDelay {
  std::string site_a;
  std::string site_b;
  double rtt_ab_ms = 0.0;
  double rtt_ba_ms = 0.0;

  // One-way delay: the two directional RTTs averaged, then halved.
  double one_way_ms() const { return (rtt_ab_ms + rtt_ba_ms) / 4.0; }
};

struct ClassicalChannelConfig {
  std::string a;
  std::string b;
  double one_way_delay_ps = 0.0;
};

enum class ClassicalModel { SiteMatrix, Channels };

struct ClassicalConfig {
  ClassicalModel model = ClassicalModel::SiteMatrix;
  double intra_site_delay_ms = 0.25;
  std::vector<SitePairDelay> site_pairs;
  std::vector<ClassicalChannelConfig> channels;
};

struct ApplicationsConfig {
  std::vector<std::string> nodes;  // router names, or "*" for all routers
  double target_fidelity_min = 0.8;
  double target_fidelity_max = 1.0;
  double duration_min_s = 10.0;
  double duration_max_s = 20.0;
  double start_offset_min_s = 1.0;
  double start_offset_max_s = 2.0;
  int memory_size_min = 10;
  std::optional<int> memory_size_max;  // default: floor(array size / 2)
  double retry_delay_s = 1.0;
};

struct StaticRequestConfig {
  std::string initiator;
  std::string responder;
  double start_s = 0.0;
  double duration_s = 0.0;
  int memory_size = 0;
  double target_fidelity = 0.0;
};

struct SimulationConfig {
  double stop_s = 10.0;
  std::uint64_t seed = 1;
  double sample_interval_ms = 100.0;
};

struct Config {
  SimulationConfig simulation;
  int default_memory_array_size = 50;
  MemoryConfig memory;
  DetectorConfig detector;
  FiberConfig fiber;
  ProtocolConfig protocol;
  std::vector<NodeConfig> nodes;
  std::vector<ChannelConfig> quantum_channels;
  ClassicalConfig classical;
  ApplicationsConfig applications;
  std::vector<StaticRequestConfig> static_requests;

  const NodeConfig* find_node(const std::string& name) const;
};

// Parse + validate. Errors are ConfigError naming the offending JSON path.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text, const std::string& origin);

// Serialize a validated config with every default materialized; parsing the
// result reproduces the same config.
std::string serialize_config(const Config& cfg);

}  // namespace qnet
