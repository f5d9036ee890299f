"""Shipped scenario configurations.

Three reference setups, also available as JSON files under
``cryophase/configs`` for the command line:

* steady_state: theta at the transition temperature, beta = 1/2;
  nothing moves, to machine precision.
* quench: spatially uniform supercooled start (theta below the
  transition, all normal fluid).  Stays uniform, so the coupled
  dynamics reduce to a scalar recurrence; the temperature recovers as
  the phase fraction decays (latent-heat release).
* supercooling: half the domain supercooled, half overheated, all
  normal fluid; a phase front develops in the cold half.
"""

from __future__ import annotations

from dataclasses import replace
from importlib import resources

from .configfile import load_config
from .simulator import SimConfig

NAMES = ("steady_state", "quench", "supercooling")


def scenario_path(name: str):
    if name not in NAMES:
        from .errors import ValidationError

        raise ValidationError(f"unknown scenario {name!r}; available: {NAMES}")
    return resources.files("cryophase").joinpath(f"configs/{name}.json")


def scenario_config(name: str, **param_overrides) -> SimConfig:
    """Load a shipped scenario; keyword overrides patch the model params.

    scenario_config("quench", p=1.3, epsilon=1e-3) is the parameter-
    sweep entry point used by the verification suite.
    """
    with resources.as_file(scenario_path(name)) as path:
        config = load_config(path)
    if param_overrides:
        config = replace(
            config, params=config.params.with_updates(**param_overrides)
        )
    return config
