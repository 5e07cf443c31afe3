"""Python front end for the qnetsim quantum network simulator."""

try:
    from ._qnetsim import (
        ConfigError,
        SimulationError,
        channel_transmittance,
        entangled_pair_fidelity,
        load_config,
        memory_emission_efficiency,
        purification_success_probability,
        purified_fidelity,
        run,
        swapped_fidelity,
        validate_config,
    )
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _qnetsim import (
        ConfigError,
        SimulationError,
        channel_transmittance,
        entangled_pair_fidelity,
        load_config,
        memory_emission_efficiency,
        purification_success_probability,
        purified_fidelity,
        run,
        swapped_fidelity,
        validate_config,
    )

__all__ = [
    "ConfigError",
    "SimulationError",
    "channel_transmittance",
    "entangled_pair_fidelity",
    "load_config",
    "memory_emission_efficiency",
    "purification_success_probability",
    "purified_fidelity",
    "run",
    "run_file",
    "swapped_fidelity",
    "validate_config",
]


def run_file(path, *, stop_s=None, seed=None, out_dir=None):
    """Run a simulation from a config file path; see ``run`` for the result."""
    with open(path, "r", encoding="utf-8") as f:
        return run(f.read(), stop_s=stop_s, seed=seed, out_dir=out_dir)
