"""Strict JSON config parsing for the command-line front end.

Unknown keys are rejected everywhere, every value is validated at parse
time, and error messages carry the JSON path of the offending entry.
The production range 1 < p < 2 is enforced here; the library API itself
additionally admits p = 2 as the linear verification edge case.
"""

from __future__ import annotations

import json
from pathlib import Path

from .constitutive import ModelParams, Variant
from .errors import ValidationError
from .grid import Grid
from .simulator import CouplingSpec, SimConfig, SolverOptions

_SECTIONS = ("grid", "model", "time", "coupling", "initial", "source",
             "solvers", "output")

_DEFAULTS = {
    "model": {"theta_c": 2.17, "p": 1.5, "epsilon": 0.0, "delta": 1e-8,
              "c_s": 1.0, "ell": 1.0, "k": 1.0, "mu": 1.0, "d": 1.0,
              "variant": "simplified"},
    "coupling": {"mode": "staggered", "max_outer": 50, "outer_tol": 1e-10},
    "solvers": {"phase_tol": 1e-10, "phase_max_iter": 50000,
                "picard_tol": 1e-11, "picard_max": 60, "linear_tol": 1e-12},
    "output": {"dir": "cryophase_out", "cadence": 0.0},
}


def _require_keys(mapping, allowed, required, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ValidationError(
            f"{where}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    missing = set(required) - set(mapping)
    if missing:
        raise ValidationError(f"{where}: missing required key(s) {sorted(missing)}")


def _number(mapping, key, where, positive=False, nonnegative=False):
    v = mapping[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{where}.{key}: expected a number, got {v!r}")
    v = float(v)
    if positive and v <= 0:
        raise ValidationError(f"{where}.{key}: must be positive, got {v}")
    if nonnegative and v < 0:
        raise ValidationError(f"{where}.{key}: must be >= 0, got {v}")
    return v


def parse_config_dict(doc: dict, base_dir=".") -> SimConfig:
    if not isinstance(doc, dict):
        raise ValidationError("config root must be a JSON object")
    _require_keys(doc, _SECTIONS, ("grid", "time", "initial"), "config")

    gsec = doc["grid"]
    _require_keys(gsec, ("dim", "lengths", "nodes"), ("dim", "lengths", "nodes"),
                  "grid")
    if gsec["dim"] not in (1, 2):
        raise ValidationError(f"grid.dim: must be 1 or 2, got {gsec['dim']!r}")
    grid = Grid(int(gsec["dim"]), tuple(gsec["lengths"]), tuple(gsec["nodes"]))

    msec = dict(_DEFAULTS["model"])
    msec.update(doc.get("model", {}))
    _require_keys(msec, _DEFAULTS["model"], (), "model")
    p = _number(msec, "p", "model")
    if not 1.0 < p < 2.0:
        raise ValidationError(
            f"model.p: admissible range is 1 < p < 2, got {p}")
    try:
        variant = Variant(msec["variant"])
    except ValueError:
        raise ValidationError(
            f"model.variant: expected 'simplified' or 'full_energy', "
            f"got {msec['variant']!r}") from None
    params = ModelParams(
        theta_c=_number(msec, "theta_c", "model", positive=True),
        p=p,
        epsilon=_number(msec, "epsilon", "model", nonnegative=True),
        delta=_number(msec, "delta", "model", nonnegative=True),
        c_s=_number(msec, "c_s", "model", positive=True),
        ell=_number(msec, "ell", "model", positive=True),
        k=_number(msec, "k", "model", positive=True),
        mu=_number(msec, "mu", "model", positive=True),
        d=_number(msec, "d", "model", positive=True),
        variant=variant,
    )

    tsec = doc["time"]
    _require_keys(tsec, ("dt", "t_end"), ("dt", "t_end"), "time")
    dt = _number(tsec, "dt", "time", positive=True)
    t_end = _number(tsec, "t_end", "time", positive=True)
    if dt > t_end:
        raise ValidationError(f"time.dt: must not exceed t_end ({dt} > {t_end})")

    csec = dict(_DEFAULTS["coupling"])
    csec.update(doc.get("coupling", {}))
    _require_keys(csec, _DEFAULTS["coupling"], (), "coupling")
    coupling = CouplingSpec(mode=csec["mode"],
                            max_outer=int(csec["max_outer"]),
                            outer_tol=_number(csec, "outer_tol", "coupling",
                                              positive=True))

    isec = doc["initial"]
    _require_keys(isec, ("theta0", "beta0"), ("theta0", "beta0"), "initial")
    theta0 = _initial_value(isec["theta0"], grid, base_dir, "initial.theta0",
                            column="theta")
    beta0 = _initial_value(isec["beta0"], grid, base_dir, "initial.beta0",
                           column="beta")

    ssec = doc.get("source", {"r": "zero"})
    _require_keys(ssec, ("r",), ("r",), "source")
    source = ssec["r"]
    if not isinstance(source, str):
        raise ValidationError("source.r: expected 'zero' or an expression string")

    osec = dict(_DEFAULTS["solvers"])
    osec.update(doc.get("solvers", {}))
    _require_keys(osec, _DEFAULTS["solvers"], (), "solvers")
    solvers = SolverOptions(
        phase_tol=_number(osec, "phase_tol", "solvers", positive=True),
        phase_max_iter=int(osec["phase_max_iter"]),
        picard_tol=_number(osec, "picard_tol", "solvers", positive=True),
        picard_max=int(osec["picard_max"]),
        linear_tol=_number(osec, "linear_tol", "solvers", positive=True),
    )

    outsec = dict(_DEFAULTS["output"])
    outsec.update(doc.get("output", {}))
    _require_keys(outsec, _DEFAULTS["output"], (), "output")
    cadence = _number(outsec, "cadence", "output", nonnegative=True)

    config = SimConfig(
        grid=grid, params=params, dt=dt, t_end=t_end,
        theta0=theta0, beta0=beta0, source=source,
        coupling=coupling, solvers=solvers, output_cadence=cadence,
        output_dir=str(outsec["dir"]),
    )
    config.validate()          # fail fast, with the file still in context
    config.initial_fields()
    return config


def _initial_value(spec, grid, base_dir, where, column):
    if not isinstance(spec, str):
        raise ValidationError(f"{where}: expected an expression string or CSV path")
    if spec.endswith(".csv"):
        from .io import read_snapshot

        path = Path(base_dir) / spec
        if not path.exists():
            raise ValidationError(f"{where}: file {path} does not exist")
        theta, beta, _ = read_snapshot(path, grid)
        return theta if column == "theta" else beta
    return spec


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
        ) from None
    config = parse_config_dict(doc, base_dir=path.parent)
    config.label = path.stem
    return config


def config_to_dict(config: SimConfig, output_dir=None) -> dict:
    """Canonical echo of an effective config, reloadable by parse_config_dict."""
    if output_dir is None:
        output_dir = config.output_dir
    theta0 = config.theta0 if isinstance(config.theta0, str) else "<field>"
    beta0 = config.beta0 if isinstance(config.beta0, str) else "<field>"
    return {
        "grid": {"dim": config.grid.dim,
                 "lengths": list(config.grid.lengths),
                 "nodes": list(config.grid.nodes)},
        "model": {"theta_c": config.params.theta_c, "p": config.params.p,
                  "epsilon": config.params.epsilon, "delta": config.params.delta,
                  "c_s": config.params.c_s, "ell": config.params.ell,
                  "k": config.params.k, "mu": config.params.mu,
                  "d": config.params.d,
                  "variant": config.params.variant.value},
        "time": {"dt": config.dt, "t_end": config.t_end},
        "coupling": {"mode": config.coupling.mode,
                     "max_outer": config.coupling.max_outer,
                     "outer_tol": config.coupling.outer_tol},
        "initial": {"theta0": theta0, "beta0": beta0},
        "source": {"r": config.source if isinstance(config.source, str) else "<callable>"},
        "solvers": {"phase_tol": config.solvers.phase_tol,
                    "phase_max_iter": config.solvers.phase_max_iter,
                    "picard_tol": config.solvers.picard_tol,
                    "picard_max": config.solvers.picard_max,
                    "linear_tol": config.solvers.linear_tol},
        "output": {"dir": output_dir, "cadence": config.output_cadence},
    }
