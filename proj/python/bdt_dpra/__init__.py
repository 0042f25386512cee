"""Python interface to the bdt simulator core."""

import json

from ._core import (
    BdtError,
    ConfigError,
    InfeasibleSlotError,
    block_time,
    difficulty,
    model_profile,
)
from . import _core

__all__ = [
    "BdtError",
    "ConfigError",
    "InfeasibleSlotError",
    "block_time",
    "difficulty",
    "model_profile",
    "paper_default",
    "simulate",
    "summarize_trace",
    "validate",
]


def _text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def paper_default():
    """Paper-default configuration as a nested dict."""
    return json.loads(_core.paper_default_json())


def simulate(config=None, policy="dpra", V=1e4, seed=1, T=None, strict=False):
    """Runs one (policy, V, seed) cell and returns its per-slot trace.

    `config` is a dict or JSON text layered over paper-default. The result
    holds per-slot lists, the trace CSV and a `summary` dict.
    """
    if T is None:
        T = json.loads(_core.normalize_config_json(_text(config)))["run"]["T"]
    run = _core.simulate_json(_text(config), policy, float(V), int(seed),
                              int(T), strict)
    run["summary"] = json.loads(run["summary"])
    return run


def summarize_trace(csv):
    """Summary dict recomputed from a trace CSV."""
    return json.loads(_core.summarize_trace_csv(csv))


def validate(kind, config=None, instances=200, seed=None):
    """Runs the oracle, statistics or drift checks; returns the report."""
    if seed is None:
        seed = {"oracle": 7, "statistics": 11}.get(kind, 1)
    return json.loads(_core.validate_json(kind, _text(config), int(instances),
                                          int(seed)))
