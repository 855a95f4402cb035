"""Experiment specification: parsing, defaults, validation, canonical hash.

A spec is a single YAML document with a fixed top-level schema plus a
kind-specific params block. Parsing resolves every default, so two documents
that mean the same experiment hash identically; the hash (sha256 of the
canonical JSON form, 16 hex chars) is stamped into every output file header
and is what the tracer verifies.

Validation is strict on names: unknown keys are an error listing them, not a
warning, because a silently ignored misspelled key ("n_trajectory") is a
wrong experiment that looks right.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import yaml

EXPERIMENT_KINDS = ("simulate", "sweep", "measure", "field", "spectrum")
PROCESS_KINDS = ("nelson_white", "colored_smoothing", "phase_space")

# resolution rule: the exact OU step factors are unconditionally stable, but
# the drift/acceleration Euler error grows with dt*beta, and every frozen
# protocol in the harness keeps dt*beta <= 0.1
DT_BETA_MAX = 0.1


class SpecError(ValueError):
    """Invalid or malformed experiment specification."""


_TOP_DEFAULTS = {
    "kind": None,
    "state": None,
    "potential": None,
    "constants": None,
    "betas": [],
    "n_traj": 100_000,
    "dt": None,
    "horizon": None,
    "estimator": None,
    "seed": None,
    "output_dir": None,
    "params": None,
}

_CONSTANT_DEFAULTS = {
    "hbar": 1.0,
    "mass": 1.0,
    "eps": None,   # derived as sqrt(hbar/mass) unless given (then checked)
    "xi": 1.0,
    "G": 1.0 / (4.0 * math.pi),
}

_ESTIMATOR_DEFAULTS = {
    "n_bins": 20,
    "bin_span": 2.5,
    "delta_over_dt": 10,
    "bandwidth": "fd",
}

_PARAM_DEFAULTS = {
    "simulate": {
        "process": "nelson_white",
        "rec_stride": 10,
        "n_checkpoints": 5,
    },
    "sweep": {
        "process": "phase_space",
        "dt_scale": 0.05,
        "t_factor": 15.0,
    },
    "measure": {
        "t1": 1.5,
        "t2": 2.2,
        "collapse": True,
        "grid_n": 384,
        "n_per_stratum": 2000,
        "n_off": 200_000,
        "slice_stride": 5,
        "with_control": True,
        "with_width_check": True,
    },
    "field": {
        "n_modes": 8,
        "length": 2.0 * math.pi,
        "field_mass": 1.0,
        "beta_over_omega": 60.0,
        "rec_stride": 25,
        "probes": None,   # defaults to (0, L/2)
    },
    "spectrum": {
        "k": 2.0,
        "t": 1.0,
        "round_trip": False,
        "length": 100.0,
        "grid_n": 1024,
        "realizations": 400,
        "band_kh": 0.3,
        "matter_power": 1.0,
    },
}

_HORIZON_DEFAULTS = {"simulate": 2.0, "field": 0.35, "measure": None,
                     "sweep": None, "spectrum": None}


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    state: str | None
    potential: dict | None
    constants: dict
    betas: tuple
    n_traj: int
    dt: float | None
    horizon: float | None
    estimator: dict
    seed: int
    output_dir: str | None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Canonical fully-resolved form; the hash and the round trip use it."""
        return {
            "kind": self.kind,
            "state": self.state,
            "potential": self.potential,
            "constants": dict(self.constants),
            "betas": list(self.betas),
            "n_traj": self.n_traj,
            "dt": self.dt,
            "horizon": self.horizon,
            "estimator": dict(self.estimator),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "params": dict(self.params),
        }

    def serialize(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True,
                              default_flow_style=False)


def spec_hash(spec: ExperimentSpec) -> str:
    canon = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _check_keys(given: dict, allowed, where: str):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise SpecError(f"unknown keys in {where}: {', '.join(unknown)}")


def _merged(defaults: dict, given: dict | None, where: str) -> dict:
    given = given or {}
    if not isinstance(given, dict):
        raise SpecError(f"{where} must be a mapping")
    _check_keys(given, defaults, where)
    out = dict(defaults)
    out.update(given)
    return out


def apply_overrides(doc: dict, overrides) -> dict:
    """--set key=value (dotted paths, YAML scalar values) onto a parsed doc."""
    for item in overrides or ():
        if "=" not in item:
            raise SpecError(f"override {item!r} is not of the form key=value")
        path, _, raw = item.partition("=")
        keys = path.strip().split(".")
        node = doc
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise SpecError(f"override path {path!r} crosses a non-mapping")
        node[keys[-1]] = yaml.safe_load(raw)
    return doc


def parse_spec(text: str, kind: str | None = None, overrides=None) -> ExperimentSpec:
    """Parse, default-fill, and validate one spec document.

    `kind` (from the CLI subcommand) fills a missing kind field and must
    match an explicit one. Overrides are applied before validation.
    """
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise SpecError(f"malformed spec document: {exc}") from exc
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a mapping")
    doc = apply_overrides(dict(doc), overrides)
    _check_keys(doc, _TOP_DEFAULTS, "spec")

    top = dict(_TOP_DEFAULTS)
    top.update(doc)
    if top["kind"] is None:
        top["kind"] = kind
    if top["kind"] not in EXPERIMENT_KINDS:
        raise SpecError(f"kind must be one of {EXPERIMENT_KINDS}, got {top['kind']!r}")
    if kind is not None and top["kind"] != kind:
        raise SpecError(f"spec kind {top['kind']!r} does not match subcommand {kind!r}")
    k = top["kind"]

    constants = _merged(_CONSTANT_DEFAULTS, top["constants"], "constants")
    estimator = _merged(_ESTIMATOR_DEFAULTS, top["estimator"], "estimator")
    params = _merged(_PARAM_DEFAULTS[k], top["params"], f"params ({k})")

    if top["seed"] is None:
        raise SpecError("seed is required (determinism contract)")
    seed = int(top["seed"])

    betas = [float(b) for b in (top["betas"] or [])]
    if betas != sorted(betas):
        raise SpecError("betas must be sorted ascending")

    # epsilon constraint: eps = sqrt(hbar/m); field modes have unit mass
    hbar, mass = float(constants["hbar"]), float(constants["mass"])
    if hbar <= 0 or mass <= 0:
        raise SpecError("constants hbar and mass must be positive")
    eps_rule = math.sqrt(hbar / (1.0 if k == "field" else mass))
    if constants["eps"] is None:
        constants["eps"] = eps_rule
    elif not math.isclose(float(constants["eps"]), eps_rule, rel_tol=1e-9):
        raise SpecError(
            "epsilon constraint eps = sqrt(hbar/m) violated: "
            f"eps={constants['eps']}, sqrt(hbar/m)={eps_rule}")
    constants["eps"] = float(constants["eps"])

    n_traj = int(top["n_traj"])
    if n_traj < 1:
        raise SpecError("n_traj must be at least 1")

    dt = None if top["dt"] is None else float(top["dt"])
    horizon = top["horizon"]
    if horizon is None:
        horizon = _HORIZON_DEFAULTS[k]
    if horizon is not None:
        horizon = float(horizon)
        if horizon <= 0:
            raise SpecError("horizon must be positive")

    _validate_kind(k, top, params, estimator, betas, dt)
    if dt is None:
        dt = _default_dt(k, betas)

    # resolution rule: dt * beta <= 0.1 for every requested beta
    if dt is not None and betas:
        worst = dt * max(betas)
        if worst > DT_BETA_MAX + 1e-12:
            raise SpecError(
                f"resolution rule dt*beta <= {DT_BETA_MAX} violated: "
                f"dt={dt}, beta={max(betas)} gives dt*beta={worst:g}")
    if dt is not None and dt <= 0:
        raise SpecError("dt must be positive")
    if k == "simulate" and dt is not None \
            and horizon < 4.0 * estimator["delta_over_dt"] * dt:
        raise SpecError("horizon too short for the derivative window: need "
                        "horizon >= 4 * delta_over_dt * dt")

    state = top["state"]
    potential = top["potential"]
    if potential is not None:
        potential = _merged({"kind": None, "omega": 1.0}, potential, "potential")
        if potential["kind"] not in ("harmonic", "free"):
            raise SpecError("potential kind must be 'harmonic' or 'free'")
        potential["omega"] = float(potential["omega"])

    return ExperimentSpec(kind=k, state=state, potential=potential,
                          constants=constants, betas=tuple(betas),
                          n_traj=n_traj, dt=dt, horizon=horizon,
                          estimator=estimator, seed=seed,
                          output_dir=top["output_dir"], params=params)


def _default_dt(kind, betas):
    if kind in ("sweep", "field", "spectrum"):
        return None            # sweep/field derive dt per beta; spectrum has none
    if kind == "measure":
        return 2e-3
    if betas:
        return min(0.05 / max(betas), 2e-3)
    return 2e-3


def _validate_kind(kind, top, params, estimator, betas, dt):
    if kind in ("simulate", "sweep"):
        if top["state"] is None and top["potential"] is None:
            raise SpecError(f"{kind} needs a catalog state or a potential")
        process = params["process"]
        if process not in PROCESS_KINDS:
            raise SpecError(f"process must be one of {PROCESS_KINDS}, got {process!r}")
        if process != "nelson_white" and not betas:
            raise SpecError(f"{process} needs a betas list")
    if kind == "simulate":
        if top["potential"] is not None and params["process"] != "phase_space":
            raise SpecError("potential-only runs need process: phase_space "
                            "(other processes require a catalog state's drift)")
        if params["process"] != "nelson_white" and len(betas) != 1:
            raise SpecError(f"simulate with {params['process']} needs exactly "
                            "one beta")
        if params["process"] == "nelson_white" and betas:
            raise SpecError("nelson_white has no correlated noise: betas must "
                            "be empty")
        dod, stride = estimator["delta_over_dt"], params["rec_stride"]
        if dod < 1 or dod % stride != 0:
            raise SpecError("delta must land on the record grid: estimator "
                            "delta_over_dt must be a positive multiple of "
                            "params rec_stride")
    if kind == "sweep":
        if top["state"] is None:
            raise SpecError("sweep needs a catalog state")
        if params["dt_scale"] > DT_BETA_MAX + 1e-12:
            raise SpecError(
                f"resolution rule dt*beta <= {DT_BETA_MAX} violated: "
                f"sweep dt_scale={params['dt_scale']} is the per-beta dt*beta")
        if len(betas) < 2:
            raise SpecError("sweep needs at least two betas to report a trend")
    if kind == "measure":
        if not (0 <= params["t1"] <= params["t2"]):
            raise SpecError("measure needs 0 <= t1 <= t2")
    if kind == "field":
        if params["n_modes"] < 1:
            raise SpecError("n_modes must be at least 1")
        if params["length"] <= 0:
            raise SpecError("length must be positive")
        if betas and len(betas) != params["n_modes"]:
            raise SpecError("betas must have one entry per mode (or be empty "
                            "to use beta_over_omega * omega_i)")
    if kind == "spectrum":
        if params["grid_n"] < 2:
            raise SpecError("grid_n must be at least 2")
        if params["t"] < 0:
            raise SpecError("t must be non-negative")
