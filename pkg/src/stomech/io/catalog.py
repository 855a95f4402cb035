"""Machine-readable inventory of what the CLI can run.

list_catalog() is the single source the `catalog` subcommand prints: the
quantum states (with their constructor parameters, read off the classes so
the listing cannot drift from the code), the process kinds with the fields
each records and the spec keys each consumes, and the experiment kinds with
the harness entry point behind each.
"""

import inspect

from ..quantum import CATALOG
from .spec import EXPERIMENT_KINDS, _ESTIMATOR_DEFAULTS, _PARAM_DEFAULTS


_PROCESSES = {
    "nelson_white": {
        "description": "osmotic-drift diffusion; white noise of amplitude eps",
        "record_fields": ["x"],
        "spec_fields": ["state", "n_traj", "dt", "horizon", "seed"],
        "readouts": ["marginal", "checkpoints", "forward_derivative",
                     "stochastic_acceleration"],
    },
    "colored_smoothing": {
        "description": "drift driven through an exponentially correlated "
                       "unit-variance noise of rate beta",
        "record_fields": ["x", "a"],
        "spec_fields": ["state", "betas", "n_traj", "dt", "horizon", "seed"],
        "readouts": ["marginal", "checkpoints", "forward_derivative",
                     "stochastic_acceleration"],
    },
    "phase_space": {
        "description": "second-order dynamics with a recorded momentum; the "
                       "force enters through the acceleration field and the "
                       "colored noise of rate beta rides on the velocity",
        "record_fields": ["x", "v", "a"],
        "spec_fields": ["state", "potential", "betas", "beta",
                        "n_traj", "dt", "horizon", "seed"],
        "readouts": ["marginal", "checkpoints", "velocity_profile",
                     "acceleration_from_velocity", "drift_from_velocity_mean"],
    },
}

_EXPERIMENTS = {
    "simulate": {
        "entry": "stomech.harness.run_first_law_check",
        "outputs": ["checkpoints.csv", "marginal.csv", "fields.csv",
                    "summary.json"],
    },
    "sweep": {
        "entry": "stomech.harness.run_beta_sweep",
        "outputs": ["sweep.csv", "summary.json"],
    },
    "measure": {
        "entry": "two_time_expectation",
        "outputs": ["twotime.csv", "summary.json"],
    },
    "field": {
        "entry": "stomech.field.simulate_field_phase_space",
        "outputs": ["modes.csv", "kernel.csv", "summary.json"],
    },
    "spectrum": {
        "entry": "stomech.field.gravitational_spectrum",
        "outputs": ["spectrum.csv", "summary.json"],
    },
}


def _state_entry(cls) -> dict:
    doc = (inspect.getdoc(cls) or "").split("\n")[0]
    sig = inspect.signature(cls.__init__)
    params = {}
    for name, p in sig.parameters.items():
        if name == "self":
            continue
        params[name] = None if p.default is inspect.Parameter.empty else p.default
    return {"description": doc, "params": params}


def list_catalog() -> dict:
    states = {name: _state_entry(cls) for name, cls in sorted(CATALOG.items())}
    experiments = {}
    for kind in EXPERIMENT_KINDS:
        experiments[kind] = dict(_EXPERIMENTS[kind])
        experiments[kind]["params"] = dict(_PARAM_DEFAULTS[kind])
    return {
        "states": states,
        "processes": _PROCESSES,
        "experiments": experiments,
        "estimator_defaults": dict(_ESTIMATOR_DEFAULTS),
    }
