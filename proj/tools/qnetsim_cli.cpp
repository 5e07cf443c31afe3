#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "qnetsim/config.hpp"
#include "qnetsim/simulation.hpp"

namespace {

const char* rule_kind_name(qnet::RuleKind k) {
  switch (k) {
    case qnet::RuleKind::Generation: return "generation";
    case qnet::RuleKind::Purification: return "purification";
    case qnet::RuleKind::Swapping: return "swapping";
    case qnet::RuleKind::Delivery: return "delivery";
  }
  return "?";
}

void write_csv(const std::filesystem::path& path,
               const std::function<void(std::ostream&)>& emit) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "'");
  emit(os);
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qnetsim: discrete-event simulation of quantum repeater networks"};

  std::string config_path;
  std::string out_dir = ".";
  std::string log_level = "info";
  double stop_s = 0.0;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "topology and experiment JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* stop_opt =
      app.add_option("--stop", stop_s, "override simulated stop time, seconds");
  auto* seed_opt = app.add_option("--seed", seed, "override the RNG seed");
  app.add_option("--out", out_dir, "directory for the CSV outputs")
      ->capture_default_str();
  app.add_option("--log-level", log_level, "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const bool info = log_level != "quiet";
  const bool debug = log_level == "debug";

  qnet::Config cfg;
  try {
    cfg = qnet::load_config(config_path);
    if (stop_opt->count() > 0) {
      if (stop_s <= 0.0)
        throw qnet::ConfigError("--stop must be a positive number of seconds");
      cfg.simulation.stop_s = stop_s;
    }
    if (seed_opt->count() > 0) cfg.simulation.seed = seed;
  } catch (const qnet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    qnet::Simulation sim(cfg);
    if (debug) sim.metrics().enable_rule_log();

    const auto wall_start = std::chrono::steady_clock::now();
    sim.run();
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      wall_start)
            .count();

    const std::filesystem::path out(out_dir);
    std::filesystem::create_directories(out);
    const qnet::MetricsStore& m = sim.metrics();
    write_csv(out / "throughput.csv",
              [&](std::ostream& os) { m.write_throughput_csv(os); });
    write_csv(out / "utilization.csv",
              [&](std::ostream& os) { m.write_utilization_csv(os); });
    write_csv(out / "requests.csv",
              [&](std::ostream& os) { m.write_requests_csv(os); });

    if (info) {
      std::size_t approved = 0;
      for (const auto& r : m.requests()) approved += r.approved ? 1 : 0;
      const qnet::RunStats st = sim.timeline().stats();
      std::cout << "run finished: " << cfg.simulation.stop_s
                << " simulated seconds in " << wall_s << " s wall\n"
                << "seed " << cfg.simulation.seed << ", "
                << sim.router_indices().size() << " routers, "
                << sim.port_count() << " links\n"
                << "requests: " << approved << " approved, "
                << (m.requests().size() - approved) << " rejected\n"
                << "entangled pairs delivered: " << m.total_delivered() << "\n"
                << "events executed: " << st.executed << "\n"
                << "outputs: " << (out / "throughput.csv").string() << ", "
                << (out / "utilization.csv").string() << ", "
                << (out / "requests.csv").string() << "\n";
    }
    if (debug) {
      std::map<qnet::RuleKind, std::uint64_t> fired;
      for (const auto& f : m.rule_log()) ++fired[f.kind];
      std::cout << "rule firings:";
      for (const auto& [k, n] : fired)
        std::cout << " " << rule_kind_name(k) << "=" << n;
      std::cout << "\n";
      for (const auto& [id, flow] : m.flows())
        std::cout << "flow " << id << " " << flow.initiator << "->"
                  << flow.responder << ": " << flow.delivered
                  << " pairs, min fidelity " << flow.min_fidelity << "\n";
      const auto violations = sim.entanglement_violations();
      std::cout << "pair-record violations at stop: " << violations.size()
                << "\n";
      for (const auto& v : violations) std::cout << "  " << v << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
