"""Random trigonometric seed inputs.

A seed channel is a windowed sum of ``M`` harmonics of a base period ``T``::

    ubar_k(t) = W(t) sum_{l=1}^{M} [a_kl sin(2 l pi t / T) + b_kl cos(2 l pi t / T)]

with coefficients drawn uniformly from ``[-A_m, A_m]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from riga.errors import ConfigError
from riga.integrators import PulseSet, TimeGrid
from riga.problem import window_hamming

__all__ = ["SeedConfig", "SeedCoefficients", "draw_coefficients", "generate_seed",
           "load_coefficients", "save_coefficients"]


@dataclass(frozen=True)
class SeedCoefficients:
    """Coefficient arrays ``a`` and ``b`` of shape ``(m, M)``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise ConfigError(f"coefficient shapes differ: {a.shape} vs {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def to_json(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_json(cls, doc: dict) -> "SeedCoefficients":
        try:
            return cls(doc["a"], doc["b"])
        except KeyError as exc:
            raise ConfigError(f"coefficient document lacks key {exc}") from None


@dataclass(frozen=True)
class SeedConfig:
    """Seed parameters.

    Attributes
    ----------
    M : int
        Number of harmonics.
    T : float
        Base period.
    A_m : float
        Coefficient bound.
    rng_seed : int
        Seed for ``numpy.random.default_rng``.
    apply_window : bool
        Multiply by the Hamming-like window.
    coefficients : SeedCoefficients, optional
        Fixed coefficients; bypasses the random draw.
    """

    M: int = 3
    T: float = 1.0
    A_m: float = 0.1
    rng_seed: int = 0
    apply_window: bool = True
    coefficients: Optional[SeedCoefficients] = None

    def __post_init__(self):
        if self.M < 1:
            raise ConfigError("M must be at least 1")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.A_m < 0:
            raise ConfigError("A_m must be non-negative")

    def bound(self) -> float:
        """A priori bound ``2 M A_m`` on the seed amplitude."""
        return 2 * self.M * self.A_m


def draw_coefficients(cfg: SeedConfig, m: int) -> SeedCoefficients:
    """Coefficients from ``cfg`` (fixed ones if supplied, else a fresh draw)."""
    if cfg.coefficients is not None:
        if cfg.coefficients.a.shape != (m, cfg.M):
            raise ConfigError(
                f"coefficients have shape {cfg.coefficients.a.shape}, expected {(m, cfg.M)}"
            )
        return cfg.coefficients
    rng = np.random.default_rng(cfg.rng_seed)
    a = rng.uniform(-cfg.A_m, cfg.A_m, size=(m, cfg.M))
    b = rng.uniform(-cfg.A_m, cfg.A_m, size=(m, cfg.M))
    return SeedCoefficients(a, b)


def generate_seed(cfg: SeedConfig, m: int, grid: TimeGrid, mode: str = "smooth") -> PulseSet:
    """Sample the seed input on the grid (all nodes, or left edges for piecewise)."""
    coef = draw_coefficients(cfg, m)
    t = grid.sample_times(mode)
    harm = 2 * np.pi * np.arange(1, cfg.M + 1)[:, None] * t[None, :] / cfg.T
    u = coef.a @ np.sin(harm) + coef.b @ np.cos(harm)
    if cfg.apply_window:
        w = window_hamming(t, grid.t_f)
        if mode == "smooth":
            w[0] = w[-1] = 0.0  # exact zeros despite cos(2 pi) rounding
        u = u * w
    return PulseSet(mode, u)


def save_coefficients(coef: SeedCoefficients, path) -> None:
    Path(path).write_text(json.dumps(coef.to_json()))


def load_coefficients(path) -> SeedCoefficients:
    return SeedCoefficients.from_json(json.loads(Path(path).read_text()))
