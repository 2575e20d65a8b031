"""Experiment configuration with parameter-domain checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

from ..graph_core import FiberGraph, parse_fiber
from ..walks import as_delta


class ConfigError(ValueError):
    """A parameter outside its domain; the message names the constraint."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Inputs shared by all experiments.

    ``None`` means "use the experiment's default grid".  ``extra`` carries
    experiment-specific options (grids, caps, calibrated points) and
    ``constant_overrides`` the values used for unspecified constants.
    """

    fiber: FiberGraph | None = None
    delta: Fraction | None = None
    D: int | None = None
    alpha: float = 0.3
    beta: float = 0.6
    epsilon: float = 0.5
    x: int | None = None
    r: int | None = None
    d: int | None = None
    k: int | None = None
    eta: float | None = None
    horizon: int | None = None
    samples: int | None = None
    replications: int | None = None
    confidence: float = 0.99
    seed: int = 0
    constant_overrides: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.fiber, str):
            object.__setattr__(self, "fiber", parse_fiber(self.fiber))
        if self.delta is not None:
            try:
                object.__setattr__(self, "delta", as_delta(self.delta))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"delta: {exc}") from None
        if not 0.25 < self.alpha < 0.5:
            raise ConfigError(f"alpha must lie in (1/4, 1/2), got {self.alpha}")
        if not 0.5 < self.beta < 1:
            raise ConfigError(f"beta must lie in (1/2, 1), got {self.beta}")
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 < self.confidence < 1:
            raise ConfigError(f"confidence must lie in (0, 1), got {self.confidence}")
        for name in ("D", "d", "k", "horizon", "samples", "replications"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < (0 if name == "horizon" else 1)):
                raise ConfigError(f"{name} must be a {'non-negative' if name == 'horizon' else 'positive'} integer, got {v}")
        for name in ("x", "r"):
            v = getattr(self, name)
            if v is not None and int(v) != v:
                raise ConfigError(f"{name} must be an integer, got {v}")
        if self.eta is not None and not (self.eta > 0 and math.isfinite(self.eta)):
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def const(self, name: str, default: float) -> float:
        return float(self.constant_overrides.get(name, default))

    def snapshot(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, FiberGraph):
                v = v.name if not v.name.startswith("fiber") else sorted(v.edges)
            elif isinstance(v, Fraction):
                v = str(v)
            out[f.name] = v
        return out
