"""Python bindings for the qedcascade photodetection simulator."""

import json as _json

from ._core import (
    ConfigError,
    PhysicsViolation,
    ScenarioError,
    __version__,
    caves_bound,
    periodogram,
    photocount_distribution,
    spectrum_n0_coefficient,
    split_frequency,
    validate_amplifier,
    weak_bound,
)
from . import _core


def run(config):
    """Run a scenario given as a dict (or JSON text); returns files and checks."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _core.run_config(text)


def check(config):
    """List the noise-limit violations of a scenario."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _core.check_config(text)


__all__ = [
    "ConfigError",
    "PhysicsViolation",
    "ScenarioError",
    "__version__",
    "caves_bound",
    "check",
    "periodogram",
    "photocount_distribution",
    "run",
    "spectrum_n0_coefficient",
    "split_frequency",
    "validate_amplifier",
    "weak_bound",
]
