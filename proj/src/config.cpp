#include "qnetsim/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "qnetsim/physics.hpp"

namespace qnet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

void require_object(const json& v, const std::string& path) {
  if (!v.is_object()) fail(path, "expected an object");
}

void require_array(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array");
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) known = true;
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

double get_number(const json& obj, const std::string& path,
                  const std::string& key, double def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number()) fail(path + "." + key, "expected a number");
  return it->get<double>();
}

std::int64_t get_integer(const json& obj, const std::string& path,
                         const std::string& key, std::int64_t def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
  return it->get<std::int64_t>();
}

std::string get_string(const json& obj, const std::string& path,
                       const std::string& key, const std::string& def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (!it->is_string()) fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

std::string required_string(const json& obj, const std::string& path,
                            const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path, "missing required key '" + key + "'");
  if (!it->is_string()) fail(path + "." + key, "expected a string");
  return it->get<std::string>();
}

void check_range(double v, double lo, double hi, const std::string& path) {
  if (!(v >= lo && v <= hi))
    fail(path, "value " + std::to_string(v) + " outside [" +
                   std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_positive(double v, const std::string& path) {
  if (!(v > 0.0)) fail(path, "value must be > 0");
}

void check_non_negative(double v, const std::string& path) {
  if (!(v >= 0.0)) fail(path, "value must be >= 0");
}

std::pair<double, double> get_pair(const json& obj, const std::string& path,
                                   const std::string& key, double lo_def,
                                   double hi_def) {
  auto it = obj.find(key);
  if (it == obj.end()) return {lo_def, hi_def};
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() ||
      !(*it)[1].is_number())
    fail(path + "." + key, "expected [low, high]");
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

MemoryConfig parse_memory(const json& obj, const std::string& path,
                          const MemoryConfig& base) {
  require_object(obj, path);
  check_keys(obj, path,
             {"efficiency", "collection_efficiency", "frequency_hz",
              "coherence_time_s", "cooperativity", "gamma", "gamma_star",
              "delta_omega"});
  MemoryConfig m = base;
  m.frequency_hz = get_number(obj, path, "frequency_hz", base.frequency_hz);
  m.coherence_time_s =
      get_number(obj, path, "coherence_time_s", base.coherence_time_s);
  m.cooperativity = get_number(obj, path, "cooperativity", base.cooperativity);
  m.gamma = get_number(obj, path, "gamma", base.gamma);
  m.gamma_star = get_number(obj, path, "gamma_star", base.gamma_star);
  m.delta_omega = get_number(obj, path, "delta_omega", base.delta_omega);
  const bool has_e = obj.count("efficiency") != 0;
  const bool has_col = obj.count("collection_efficiency") != 0;
  if (has_e && has_col)
    fail(path, "give either 'efficiency' or 'collection_efficiency', not both");
  if (has_e) {
    m.efficiency = get_number(obj, path, "efficiency", base.efficiency);
  } else if (has_col) {
    const double col = get_number(obj, path, "collection_efficiency", 0.0);
    check_range(col, 0.0, 1.0, path + ".collection_efficiency");
    m.efficiency = memory_emission_efficiency(col, m.cooperativity);
  }
  check_range(m.efficiency, 0.0, 1.0, path + ".efficiency");
  check_positive(m.frequency_hz, path + ".frequency_hz");
  check_positive(m.coherence_time_s, path + ".coherence_time_s");
  check_positive(m.cooperativity, path + ".cooperativity");
  check_positive(m.gamma, path + ".gamma");
  check_non_negative(m.gamma_star, path + ".gamma_star");
  return m;
}

DetectorConfig parse_detector(const json& obj, const std::string& path,
                              const DetectorConfig& base) {
  require_object(obj, path);
  check_keys(obj, path, {"efficiency", "count_rate_hz", "dark_count_rate_hz",
                         "resolution_ps"});
  DetectorConfig d = base;
  d.efficiency = get_number(obj, path, "efficiency", base.efficiency);
  d.count_rate_hz = get_number(obj, path, "count_rate_hz", base.count_rate_hz);
  d.dark_count_rate_hz =
      get_number(obj, path, "dark_count_rate_hz", base.dark_count_rate_hz);
  d.resolution_ps = get_number(obj, path, "resolution_ps", base.resolution_ps);
  check_range(d.efficiency, 0.0, 1.0, path + ".efficiency");
  check_positive(d.count_rate_hz, path + ".count_rate_hz");
  check_non_negative(d.dark_count_rate_hz, path + ".dark_count_rate_hz");
  check_positive(d.resolution_ps, path + ".resolution_ps");
  return d;
}

json pair_json(double lo, double hi) { return json::array({lo, hi}); }

}  // namespace

MemoryParams MemoryConfig::params() const {
  MemoryParams p;
  p.emission_probability = efficiency;
  p.frequency_hz = frequency_hz;
  p.coherence_time_s = coherence_time_s;
  p.cooperativity = cooperativity;
  p.gamma = gamma;
  p.gamma_star = gamma_star;
  p.delta_omega = delta_omega;
  return p;
}

DetectorParams DetectorConfig::params() const {
  DetectorParams p;
  p.efficiency = efficiency;
  p.count_rate_hz = count_rate_hz;
  p.dark_count_rate_hz = dark_count_rate_hz;
  p.resolution = static_cast<SimTime>(resolution_ps);
  return p;
}

const NodeConfig* Config::find_node(const std::string& name) const {
  for (const NodeConfig& n : nodes)
    if (n.name == name) return &n;
  return nullptr;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

Config parse_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + origin + "' is not valid JSON: " + e.what());
  }
  require_object(root, origin);
  check_keys(root, origin,
             {"simulation", "hardware", "protocol", "nodes", "quantum_channels",
              "classical", "applications", "static_requests"});

  Config cfg;

  if (root.count("simulation")) {
    const json& s = root["simulation"];
    const std::string p = "simulation";
    require_object(s, p);
    check_keys(s, p, {"stop_s", "seed", "sample_interval_ms"});
    cfg.simulation.stop_s = get_number(s, p, "stop_s", cfg.simulation.stop_s);
    cfg.simulation.seed = static_cast<std::uint64_t>(
        get_integer(s, p, "seed", static_cast<std::int64_t>(cfg.simulation.seed)));
    cfg.simulation.sample_interval_ms =
        get_number(s, p, "sample_interval_ms", cfg.simulation.sample_interval_ms);
    check_positive(cfg.simulation.stop_s, p + ".stop_s");
    check_positive(cfg.simulation.sample_interval_ms, p + ".sample_interval_ms");
  }

  if (root.count("hardware")) {
    const json& h = root["hardware"];
    const std::string p = "hardware";
    require_object(h, p);
    check_keys(h, p, {"memory_array_size", "memory", "detector", "fiber"});
    cfg.default_memory_array_size = static_cast<int>(
        get_integer(h, p, "memory_array_size", cfg.default_memory_array_size));
    if (cfg.default_memory_array_size < 0)
      fail(p + ".memory_array_size", "value must be >= 0");
    if (h.count("memory"))
      cfg.memory = parse_memory(h["memory"], p + ".memory", cfg.memory);
    if (h.count("detector"))
      cfg.detector = parse_detector(h["detector"], p + ".detector", cfg.detector);
    if (h.count("fiber")) {
      const json& f = h["fiber"];
      const std::string fp = p + ".fiber";
      require_object(f, fp);
      check_keys(f, fp,
                 {"attenuation_db_per_km", "light_speed_m_per_s", "tdm_frame_ps"});
      cfg.fiber.attenuation_db_per_km = get_number(
          f, fp, "attenuation_db_per_km", cfg.fiber.attenuation_db_per_km);
      cfg.fiber.light_speed_m_per_s = get_number(
          f, fp, "light_speed_m_per_s", cfg.fiber.light_speed_m_per_s);
      cfg.fiber.tdm_frame_ps =
          get_number(f, fp, "tdm_frame_ps", cfg.fiber.tdm_frame_ps);
      check_non_negative(cfg.fiber.attenuation_db_per_km,
                         fp + ".attenuation_db_per_km");
      check_positive(cfg.fiber.light_speed_m_per_s, fp + ".light_speed_m_per_s");
      check_positive(cfg.fiber.tdm_frame_ps, fp + ".tdm_frame_ps");
    }
  }

  if (root.count("protocol")) {
    const json& pr = root["protocol"];
    const std::string p = "protocol";
    require_object(pr, p);
    check_keys(pr, p, {"swap_success_probability", "gate_fidelity"});
    cfg.protocol.swap_success_probability = get_number(
        pr, p, "swap_success_probability", cfg.protocol.swap_success_probability);
    cfg.protocol.gate_fidelity =
        get_number(pr, p, "gate_fidelity", cfg.protocol.gate_fidelity);
    check_range(cfg.protocol.swap_success_probability, 0.0, 1.0,
                p + ".swap_success_probability");
    check_range(cfg.protocol.gate_fidelity, 0.0, 1.0, p + ".gate_fidelity");
    if (cfg.protocol.gate_fidelity <= 0.0)
      fail(p + ".gate_fidelity", "value must be > 0");
  }

  if (!root.count("nodes")) fail(origin, "missing required key 'nodes'");
  require_array(root["nodes"], "nodes");
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < root["nodes"].size(); ++i) {
    const json& n = root["nodes"][i];
    const std::string p = "nodes[" + std::to_string(i) + "]";
    require_object(n, p);
    check_keys(n, p,
               {"name", "type", "site", "memory_array_size", "memory",
                "detector"});
    NodeConfig node;
    node.name = required_string(n, p, "name");
    if (node.name.empty()) fail(p + ".name", "node name must be non-empty");
    if (node.name.find(',') != std::string::npos)
      fail(p + ".name", "node name must not contain ','");
    if (!names.insert(node.name).second)
      fail(p + ".name", "duplicate node name '" + node.name + "'");
    const std::string type = get_string(n, p, "type", "router");
    if (type == "router")
      node.type = NodeType::Router;
    else if (type == "bsm")
      node.type = NodeType::Bsm;
    else
      fail(p + ".type", "expected 'router' or 'bsm', got '" + type + "'");
    node.site = get_string(n, p, "site", "");
    if (n.count("memory_array_size")) {
      if (node.type != NodeType::Router)
        fail(p + ".memory_array_size", "only router nodes hold memories");
      node.memory_array_size =
          static_cast<int>(get_integer(n, p, "memory_array_size", 0));
      if (*node.memory_array_size < 0)
        fail(p + ".memory_array_size", "value must be >= 0");
    }
    if (n.count("memory")) {
      if (node.type != NodeType::Router)
        fail(p + ".memory", "only router nodes hold memories");
      node.memory = parse_memory(n["memory"], p + ".memory", cfg.memory);
    }
    if (n.count("detector")) {
      if (node.type != NodeType::Bsm)
        fail(p + ".detector", "only bsm nodes hold detectors");
      node.detector = parse_detector(n["detector"], p + ".detector", cfg.detector);
    }
    cfg.nodes.push_back(std::move(node));
  }

  auto node_type = [&cfg](const std::string& name) -> std::optional<NodeType> {
    const NodeConfig* n = cfg.find_node(name);
    if (!n) return std::nullopt;
    return n->type;
  };

  if (!root.count("quantum_channels"))
    fail(origin, "missing required key 'quantum_channels'");
  require_array(root["quantum_channels"], "quantum_channels");
  std::unordered_set<std::string> used_bsms;
  std::set<std::pair<std::string, std::string>> used_pairs;
  for (std::size_t i = 0; i < root["quantum_channels"].size(); ++i) {
    const json& c = root["quantum_channels"][i];
    const std::string p = "quantum_channels[" + std::to_string(i) + "]";
    require_object(c, p);
    check_keys(c, p,
               {"endpoints", "bsm", "length_km", "attenuation_db_per_km",
                "tdm_frame_ps"});
    ChannelConfig ch;
    auto ep = c.find("endpoints");
    if (ep == c.end() || !ep->is_array() || ep->size() != 2 ||
        !(*ep)[0].is_string() || !(*ep)[1].is_string())
      fail(p + ".endpoints", "expected [router, router]");
    ch.a = (*ep)[0].get<std::string>();
    ch.b = (*ep)[1].get<std::string>();
    if (ch.a == ch.b) fail(p + ".endpoints", "endpoints must differ");
    for (const std::string& e : {ch.a, ch.b}) {
      auto t = node_type(e);
      if (!t) fail(p + ".endpoints", "unknown node '" + e + "'");
      if (*t != NodeType::Router)
        fail(p + ".endpoints", "'" + e + "' is not a router");
    }
    auto key = std::minmax(ch.a, ch.b);
    if (!used_pairs.insert({key.first, key.second}).second)
      fail(p + ".endpoints",
           "duplicate quantum channel between '" + ch.a + "' and '" + ch.b + "'");
    ch.bsm = required_string(c, p, "bsm");
    auto bt = node_type(ch.bsm);
    if (!bt)
      fail(p + ".bsm", "channel between '" + ch.a + "' and '" + ch.b +
                           "' names unknown midpoint node '" + ch.bsm + "'");
    if (*bt != NodeType::Bsm)
      fail(p + ".bsm", "midpoint node '" + ch.bsm + "' is not a bsm node");
    if (!used_bsms.insert(ch.bsm).second)
      fail(p + ".bsm", "bsm node '" + ch.bsm + "' serves more than one channel");
    ch.length_km = get_number(c, p, "length_km", -1.0);
    if (ch.length_km < 0.0)
      fail(p + ".length_km", "channel between '" + ch.a + "' and '" + ch.b +
                                 "' needs a length_km >= 0");
    if (c.count("attenuation_db_per_km")) {
      ch.attenuation_db_per_km = get_number(c, p, "attenuation_db_per_km", 0.0);
      check_non_negative(*ch.attenuation_db_per_km,
                         p + ".attenuation_db_per_km");
    }
    if (c.count("tdm_frame_ps")) {
      ch.tdm_frame_ps = get_number(c, p, "tdm_frame_ps", 0.0);
      check_positive(*ch.tdm_frame_ps, p + ".tdm_frame_ps");
    }
    cfg.quantum_channels.push_back(std::move(ch));
  }
  for (const NodeConfig& n : cfg.nodes) {
    if (n.type == NodeType::Bsm && used_bsms.count(n.name) == 0)
      fail("nodes", "bsm node '" + n.name + "' is not assigned to any channel");
  }

  if (root.count("classical")) {
    const json& cl = root["classical"];
    const std::string p = "classical";
    require_object(cl, p);
    check_keys(cl, p, {"model", "intra_site_delay_ms", "site_pairs", "channels"});
    const std::string model = get_string(cl, p, "model", "site_matrix");
    if (model == "site_matrix")
      cfg.classical.model = ClassicalModel::SiteMatrix;
    else if (model == "channels")
      cfg.classical.model = ClassicalModel::Channels;
    else
      fail(p + ".model", "expected 'site_matrix' or 'channels'");
    cfg.classical.intra_site_delay_ms = get_number(
        cl, p, "intra_site_delay_ms", cfg.classical.intra_site_delay_ms);
    check_non_negative(cfg.classical.intra_site_delay_ms,
                       p + ".intra_site_delay_ms");
    if (cl.count("site_pairs")) {
      if (cfg.classical.model != ClassicalModel::SiteMatrix)
        fail(p + ".site_pairs", "only valid with model 'site_matrix'");
      require_array(cl["site_pairs"], p + ".site_pairs");
      std::set<std::pair<std::string, std::string>> seen;
      for (std::size_t i = 0; i < cl["site_pairs"].size(); ++i) {
        const json& sp = cl["site_pairs"][i];
        const std::string pp = p + ".site_pairs[" + std::to_string(i) + "]";
        require_object(sp, pp);
        check_keys(sp, pp, {"sites", "rtt_ab_ms", "rtt_ba_ms"});
        SitePairDelay d;
        auto sites = sp.find("sites");
        if (sites == sp.end() || !sites->is_array() || sites->size() != 2 ||
            !(*sites)[0].is_string() || !(*sites)[1].is_string())
          fail(pp + ".sites", "expected [site, site]");
        d.site_a = (*sites)[0].get<std::string>();
        d.site_b = (*sites)[1].get<std::string>();
        if (d.site_a == d.site_b) fail(pp + ".sites", "sites must differ");
        auto key = std::minmax(d.site_a, d.site_b);
        if (!seen.insert({key.first, key.second}).second)
          fail(pp + ".sites", "duplicate site pair");
        d.rtt_ab_ms = get_number(sp, pp, "rtt_ab_ms", -1.0);
        d.rtt_ba_ms = get_number(sp, pp, "rtt_ba_ms", -1.0);
        check_non_negative(d.rtt_ab_ms, pp + ".rtt_ab_ms");
        check_non_negative(d.rtt_ba_ms, pp + ".rtt_ba_ms");
        cfg.classical.site_pairs.push_back(std::move(d));
      }
    }
    if (cl.count("channels")) {
      if (cfg.classical.model != ClassicalModel::Channels)
        fail(p + ".channels", "only valid with model 'channels'");
      require_array(cl["channels"], p + ".channels");
      for (std::size_t i = 0; i < cl["channels"].size(); ++i) {
        const json& cc = cl["channels"][i];
        const std::string pp = p + ".channels[" + std::to_string(i) + "]";
        require_object(cc, pp);
        check_keys(cc, pp, {"endpoints", "one_way_delay_ps"});
        ClassicalChannelConfig ch;
        auto ep = cc.find("endpoints");
        if (ep == cc.end() || !ep->is_array() || ep->size() != 2 ||
            !(*ep)[0].is_string() || !(*ep)[1].is_string())
          fail(pp + ".endpoints", "expected [node, node]");
        ch.a = (*ep)[0].get<std::string>();
        ch.b = (*ep)[1].get<std::string>();
        if (ch.a == ch.b) fail(pp + ".endpoints", "endpoints must differ");
        for (const std::string& e : {ch.a, ch.b})
          if (!node_type(e)) fail(pp + ".endpoints", "unknown node '" + e + "'");
        ch.one_way_delay_ps = get_number(cc, pp, "one_way_delay_ps", -1.0);
        check_non_negative(ch.one_way_delay_ps, pp + ".one_way_delay_ps");
        cfg.classical.channels.push_back(std::move(ch));
      }
    }
  }
  if (cfg.classical.model == ClassicalModel::SiteMatrix) {
    std::set<std::string> sites;
    for (const NodeConfig& n : cfg.nodes)
      if (n.type == NodeType::Router) {
        if (n.site.empty())
          fail("nodes", "router '" + n.name +
                            "' needs a site for site-matrix classical delays");
        sites.insert(n.site);
      }
    for (auto a = sites.begin(); a != sites.end(); ++a)
      for (auto b = std::next(a); b != sites.end(); ++b) {
        bool found = false;
        for (const SitePairDelay& d : cfg.classical.site_pairs) {
          if ((d.site_a == *a && d.site_b == *b) ||
              (d.site_a == *b && d.site_b == *a))
            found = true;
        }
        if (!found)
          fail("classical.site_pairs",
               "no delay entry for site pair '" + *a + "' / '" + *b + "'");
      }
  }

  if (root.count("applications")) {
    const json& a = root["applications"];
    const std::string p = "applications";
    require_object(a, p);
    check_keys(a, p,
               {"nodes", "target_fidelity_range", "duration_range_s",
                "start_offset_range_s", "memory_size_range", "retry_delay_s"});
    if (a.count("nodes")) {
      require_array(a["nodes"], p + ".nodes");
      for (std::size_t i = 0; i < a["nodes"].size(); ++i) {
        const json& e = a["nodes"][i];
        const std::string pp = p + ".nodes[" + std::to_string(i) + "]";
        if (!e.is_string()) fail(pp, "expected a node name or \"*\"");
        const std::string name = e.get<std::string>();
        if (name != "*") {
          auto t = node_type(name);
          if (!t) fail(pp, "unknown node '" + name + "'");
          if (*t != NodeType::Router) fail(pp, "'" + name + "' is not a router");
        }
        cfg.applications.nodes.push_back(name);
      }
    }
    auto [flo, fhi] = get_pair(a, p, "target_fidelity_range",
                               cfg.applications.target_fidelity_min,
                               cfg.applications.target_fidelity_max);
    cfg.applications.target_fidelity_min = flo;
    cfg.applications.target_fidelity_max = fhi;
    if (!(flo > 0.0 && flo <= fhi && fhi <= 1.0))
      fail(p + ".target_fidelity_range", "expected 0 < low <= high <= 1");
    auto [dlo, dhi] =
        get_pair(a, p, "duration_range_s", cfg.applications.duration_min_s,
                 cfg.applications.duration_max_s);
    cfg.applications.duration_min_s = dlo;
    cfg.applications.duration_max_s = dhi;
    if (!(dlo > 0.0 && dlo <= dhi))
      fail(p + ".duration_range_s", "expected 0 < low <= high");
    auto [slo, shi] = get_pair(a, p, "start_offset_range_s",
                               cfg.applications.start_offset_min_s,
                               cfg.applications.start_offset_max_s);
    cfg.applications.start_offset_min_s = slo;
    cfg.applications.start_offset_max_s = shi;
    if (!(slo >= 0.0 && slo <= shi))
      fail(p + ".start_offset_range_s", "expected 0 <= low <= high");
    if (a.count("memory_size_range")) {
      auto [mlo, mhi] = get_pair(a, p, "memory_size_range", 0, 0);
      if (!(mlo >= 1.0 && mlo <= mhi))
        fail(p + ".memory_size_range", "expected 1 <= low <= high");
      cfg.applications.memory_size_min = static_cast<int>(mlo);
      cfg.applications.memory_size_max = static_cast<int>(mhi);
    }
    cfg.applications.retry_delay_s =
        get_number(a, p, "retry_delay_s", cfg.applications.retry_delay_s);
    check_positive(cfg.applications.retry_delay_s, p + ".retry_delay_s");
  }

  if (root.count("static_requests")) {
    require_array(root["static_requests"], "static_requests");
    for (std::size_t i = 0; i < root["static_requests"].size(); ++i) {
      const json& r = root["static_requests"][i];
      const std::string p = "static_requests[" + std::to_string(i) + "]";
      require_object(r, p);
      check_keys(r, p,
                 {"initiator", "responder", "start_s", "duration_s",
                  "memory_size", "target_fidelity"});
      StaticRequestConfig rq;
      rq.initiator = required_string(r, p, "initiator");
      rq.responder = required_string(r, p, "responder");
      if (rq.initiator == rq.responder)
        fail(p, "initiator and responder must differ");
      for (const std::string& e : {rq.initiator, rq.responder}) {
        auto t = node_type(e);
        if (!t) fail(p, "unknown node '" + e + "'");
        if (*t != NodeType::Router) fail(p, "'" + e + "' is not a router");
      }
      rq.start_s = get_number(r, p, "start_s", 0.0);
      rq.duration_s = get_number(r, p, "duration_s", -1.0);
      rq.memory_size = static_cast<int>(get_integer(r, p, "memory_size", 0));
      rq.target_fidelity = get_number(r, p, "target_fidelity", -1.0);
      check_non_negative(rq.start_s, p + ".start_s");
      check_positive(rq.duration_s, p + ".duration_s");
      if (rq.memory_size < 1) fail(p + ".memory_size", "value must be >= 1");
      if (!(rq.target_fidelity > 0.0 && rq.target_fidelity <= 1.0))
        fail(p + ".target_fidelity", "value must be in (0, 1]");
      cfg.static_requests.push_back(std::move(rq));
    }
  }

  return cfg;
}

std::string serialize_config(const Config& cfg) {
  json root;
  root["simulation"] = {{"stop_s", cfg.simulation.stop_s},
                        {"seed", cfg.simulation.seed},
                        {"sample_interval_ms", cfg.simulation.sample_interval_ms}};
  auto memory_json = [](const MemoryConfig& m) {
    return json{{"efficiency", m.efficiency},
                {"frequency_hz", m.frequency_hz},
                {"coherence_time_s", m.coherence_time_s},
                {"cooperativity", m.cooperativity},
                {"gamma", m.gamma},
                {"gamma_star", m.gamma_star},
                {"delta_omega", m.delta_omega}};
  };
  auto detector_json = [](const DetectorConfig& d) {
    return json{{"efficiency", d.efficiency},
                {"count_rate_hz", d.count_rate_hz},
                {"dark_count_rate_hz", d.dark_count_rate_hz},
                {"resolution_ps", d.resolution_ps}};
  };
  root["hardware"] = {
      {"memory_array_size", cfg.default_memory_array_size},
      {"memory", memory_json(cfg.memory)},
      {"detector", detector_json(cfg.detector)},
      {"fiber",
       {{"attenuation_db_per_km", cfg.fiber.attenuation_db_per_km},
        {"light_speed_m_per_s", cfg.fiber.light_speed_m_per_s},
        {"tdm_frame_ps", cfg.fiber.tdm_frame_ps}}}};
  root["protocol"] = {
      {"swap_success_probability", cfg.protocol.swap_success_probability},
      {"gate_fidelity", cfg.protocol.gate_fidelity}};
  root["nodes"] = json::array();
  for (const NodeConfig& n : cfg.nodes) {
    json j = {{"name", n.name},
              {"type", n.type == NodeType::Router ? "router" : "bsm"}};
    if (!n.site.empty()) j["site"] = n.site;
    if (n.memory_array_size) j["memory_array_size"] = *n.memory_array_size;
    if (n.memory) j["memory"] = memory_json(*n.memory);
    if (n.detector) j["detector"] = detector_json(*n.detector);
    root["nodes"].push_back(std::move(j));
  }
  root["quantum_channels"] = json::array();
  for (const ChannelConfig& c : cfg.quantum_channels) {
    json j = {{"endpoints", json::array({c.a, c.b})},
              {"bsm", c.bsm},
              {"length_km", c.length_km}};
    if (c.attenuation_db_per_km)
      j["attenuation_db_per_km"] = *c.attenuation_db_per_km;
    if (c.tdm_frame_ps) j["tdm_frame_ps"] = *c.tdm_frame_ps;
    root["quantum_channels"].push_back(std::move(j));
  }
  json cl = {{"model", cfg.classical.model == ClassicalModel::SiteMatrix
                           ? "site_matrix"
                           : "channels"},
             {"intra_site_delay_ms", cfg.classical.intra_site_delay_ms}};
  if (!cfg.classical.site_pairs.empty()) {
    cl["site_pairs"] = json::array();
    for (const SitePairDelay& d : cfg.classical.site_pairs) {
      cl["site_pairs"].push_back({{"sites", json::array({d.site_a, d.site_b})},
                                  {"rtt_ab_ms", d.rtt_ab_ms},
                                  {"rtt_ba_ms", d.rtt_ba_ms}});
    }
  }
  if (!cfg.classical.channels.empty()) {
    cl["channels"] = json::array();
    for (const ClassicalChannelConfig& c : cfg.classical.channels) {
      cl["channels"].push_back({{"endpoints", json::array({c.a, c.b})},
                                {"one_way_delay_ps", c.one_way_delay_ps}});
    }
  }
  root["classical"] = std::move(cl);
  json apps = {
      {"target_fidelity_range", pair_json(cfg.applications.target_fidelity_min,
                                          cfg.applications.target_fidelity_max)},
      {"duration_range_s", pair_json(cfg.applications.duration_min_s,
                                     cfg.applications.duration_max_s)},
      {"start_offset_range_s", pair_json(cfg.applications.start_offset_min_s,
                                         cfg.applications.start_offset_max_s)},
      {"retry_delay_s", cfg.applications.retry_delay_s}};
  if (!cfg.applications.nodes.empty()) apps["nodes"] = cfg.applications.nodes;
  if (cfg.applications.memory_size_max)
    apps["memory_size_range"] = pair_json(cfg.applications.memory_size_min,
                                          *cfg.applications.memory_size_max);
  root["applications"] = std::move(apps);
  if (!cfg.static_requests.empty()) {
    root["static_requests"] = json::array();
    for (const StaticRequestConfig& r : cfg.static_requests) {
      root["static_requests"].push_back({{"initiator", r.initiator},
                                         {"responder", r.responder},
                                         {"start_s", r.start_s},
                                         {"duration_s", r.duration_s},
                                         {"memory_size", r.memory_size},
                                         {"target_fidelity", r.target_fidelity}});
    }
  }
  return root.dump(2) + "\n";
}

}  // namespace qnet
