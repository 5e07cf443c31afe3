#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "qnetsim/config.hpp"
#include "qnetsim/physics.hpp"
#include "qnetsim/simulation.hpp"

namespace py = pybind11;
using namespace qnet;

namespace {

py::dict run_simulation(const std::string& config_json,
                        std::optional<double> stop_s,
                        std::optional<std::uint64_t> seed,
                        std::optional<std::string> out_dir) {
  Config cfg = parse_config(config_json, "<python>");
  if (stop_s) {
    if (*stop_s <= 0.0) throw ConfigError("stop_s must be positive");
    cfg.simulation.stop_s = *stop_s;
  }
  if (seed) cfg.simulation.seed = *seed;

  Simulation sim(cfg);
  sim.run();

  const MetricsStore& m = sim.metrics();
  std::size_t approved = 0;
  for (const auto& r : m.requests()) approved += r.approved ? 1 : 0;

  py::list flows;
  for (const auto& [id, f] : m.flows()) {
    py::dict d;
    d["reservation"] = id;
    d["initiator"] = f.initiator;
    d["responder"] = f.responder;
    d["start_s"] = double(f.start) / kSecond;
    d["end_s"] = double(f.end) / kSecond;
    d["delivered"] = f.delivered;
    d["min_fidelity"] = f.min_fidelity;
    flows.append(std::move(d));
  }

  std::ostringstream thr, utl, req;
  m.write_throughput_csv(thr);
  m.write_utilization_csv(utl);
  m.write_requests_csv(req);
  if (out_dir) {
    const std::filesystem::path out(*out_dir);
    std::filesystem::create_directories(out);
    std::ofstream(out / "throughput.csv") << thr.str();
    std::ofstream(out / "utilization.csv") << utl.str();
    std::ofstream(out / "requests.csv") << req.str();
  }

  const RunStats st = sim.timeline().stats();
  py::dict out;
  out["stop_s"] = cfg.simulation.stop_s;
  out["seed"] = cfg.simulation.seed;
  out["delivered"] = m.total_delivered();
  out["requests_approved"] = approved;
  out["requests_rejected"] = m.requests().size() - approved;
  out["events_executed"] = st.executed;
  out["flows"] = std::move(flows);
  py::dict csv;
  csv["throughput"] = thr.str();
  csv["utilization"] = utl.str();
  csv["requests"] = req.str();
  out["csv"] = std::move(csv);
  return out;
}

}  // namespace

PYBIND11_MODULE(_qnetsim, m) {
  m.doc() = "quantum repeater network simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError",
                                          PyExc_RuntimeError);

  m.def("entangled_pair_fidelity", &entangled_pair_fidelity,
        py::arg("cooperativity"), py::arg("gamma"), py::arg("gamma_star"),
        py::arg("delta_omega"),
        "Fidelity of a fresh cavity-memory entangled pair.");
  m.def("memory_emission_efficiency", &memory_emission_efficiency,
        py::arg("collection_efficiency"), py::arg("cooperativity"),
        "Photon emission efficiency of a cavity memory.");
  m.def("purified_fidelity", &purified_fidelity, py::arg("fidelity"),
        "Output fidelity of one purification round on two equal pairs.");
  m.def("purification_success_probability", &purification_success_probability,
        py::arg("fidelity"), "Success probability of one purification round.");
  m.def("swapped_fidelity", &swapped_fidelity, py::arg("f1"), py::arg("f2"),
        py::arg("degradation"),
        "Fidelity after entanglement swapping through an imperfect node.");
  m.def("channel_transmittance", &channel_transmittance, py::arg("length_km"),
        py::arg("attenuation_db_per_km"),
        "Fraction of photons surviving a fiber span.");

  m.def(
      "validate_config",
      [](const std::string& text, const std::string& origin) {
        return serialize_config(parse_config(text, origin));
      },
      py::arg("text"), py::arg("origin") = "<python>",
      "Parse and validate config JSON; returns the canonical form with "
      "defaults filled in. Raises ConfigError on invalid input.");
  m.def(
      "load_config",
      [](const std::string& path) {
        return serialize_config(load_config(path));
      },
      py::arg("path"),
      "Load and validate a config file; returns the canonical JSON text.");

  m.def("run", &run_simulation, py::arg("config_json"),
        py::kw_only(), py::arg("stop_s") = py::none(),
        py::arg("seed") = py::none(), py::arg("out_dir") = py::none(),
        "Run a simulation from config JSON text. Returns a summary dict; "
        "writes the three CSV files when out_dir is given.");
}
