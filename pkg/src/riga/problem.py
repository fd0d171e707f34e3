"""Control problem definitions: systems, gates, Lyapunov functions and feedback.

The controlled system is

    dX/dt = (S_0 + sum_k u_k(t) S_k) X,   S_k = -i H_k,

and an (encoded) gate is given by two isometries ``E`` and ``F``: the goal is
``X(T_f) E = exp(i phi) F`` for some global phase ``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from riga.errors import ConfigError, SeedOutOfBounds, SingularAtMinusOne
from riga.unitary import (
    EIG_TOL,
    cayley_forward,
    complete_isometry,
    dag,
    is_isometry,
    is_unitary,
    skewness_defect,
)

__all__ = [
    "SystemModel",
    "GateSpec",
    "ShapingConfig",
    "infidelity",
    "lyapunov_partial",
    "lyapunov_full",
    "z_matrix",
    "z_from_cayley",
    "feedback_partial",
    "feedback_full",
    "partial_feedback_all",
    "full_feedback_all",
    "window_hamming",
    "smooth_sat",
    "saturation_policy",
]


@dataclass(frozen=True)
class SystemModel:
    """Drift ``S0`` and control generators ``S[k]`` (all skew-Hermitian)."""

    drift: np.ndarray
    controls: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        s0 = np.asarray(self.drift, dtype=complex)
        s = np.asarray(self.controls, dtype=complex)
        if s.ndim == 2:
            s = s[None]
        if s0.ndim != 2 or s0.shape[0] != s0.shape[1]:
            raise ConfigError("drift must be a square matrix")
        if s.ndim != 3 or s.shape[1:] != s0.shape or s.shape[0] < 1:
            raise ConfigError("controls must be a non-empty stack of n x n matrices")
        tol = 1e-9 * max(1.0, float(np.abs(s0).max()), float(np.abs(s).max()))
        if skewness_defect(s0) > tol or any(skewness_defect(sk) > tol for sk in s):
            raise ConfigError("generators must be skew-Hermitian (S = -iH)")
        object.__setattr__(self, "drift", s0)
        object.__setattr__(self, "controls", s)

    @classmethod
    def from_hamiltonians(cls, h0, hs: Sequence[np.ndarray], labels=()) -> "SystemModel":
        return cls(-1j * np.asarray(h0), -1j * np.asarray(hs), tuple(labels))

    @property
    def n(self) -> int:
        return self.drift.shape[0]

    @property
    def m(self) -> int:
        return self.controls.shape[0]

    def generator(self, u: np.ndarray) -> np.ndarray:
        """``S0 + sum_k u_k S_k``; ``u`` may carry trailing batch axes."""
        u = np.asarray(u, dtype=float)
        if u.ndim == 1:
            return self.drift + np.tensordot(u, self.controls, axes=1)
        return self.drift + np.einsum("k...,kij->...ij", u, self.controls)


@dataclass(frozen=True)
class GateSpec:
    """Decoded/encoded isometries and an optional full goal unitary.

    ``target`` must satisfy ``target @ E == F``; when omitted a completion
    ``[F, F_hat][E, E_hat]^dag`` is used.
    """

    E: np.ndarray
    F: np.ndarray
    target: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        e = np.asarray(self.E, dtype=complex)
        f = np.asarray(self.F, dtype=complex)
        if e.ndim == 1:
            e = e[:, None]
        if f.ndim == 1:
            f = f[:, None]
        if e.shape != f.shape:
            raise ConfigError(f"E {e.shape} and F {f.shape} must share a shape")
        if not (is_isometry(e) and is_isometry(f)):
            raise ConfigError("E and F must have orthonormal columns")
        object.__setattr__(self, "E", e)
        object.__setattr__(self, "F", f)
        if self.target is not None:
            t = np.asarray(self.target, dtype=complex)
            if not is_unitary(t) or np.linalg.norm(t @ e - f) > 1e-9:
                raise ConfigError("target must be unitary with target @ E = F")
            object.__setattr__(self, "target", t)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def nbar(self) -> int:
        return self.E.shape[1]

    @property
    def full(self) -> bool:
        return self.nbar == self.n

    def goal(self) -> np.ndarray:
        """A unitary ``X_goal`` with ``X_goal E = F``."""
        if self.target is not None:
            return self.target.copy()
        return complete_isometry(self.F) @ dag(complete_isometry(self.E))


@dataclass(frozen=True)
class ShapingConfig:
    """Window and amplitude bound applied to the feedback correction."""

    window: str = "none"
    u_max: Optional[float] = None
    saturation: str = "off"

    def __post_init__(self):
        if self.window not in ("none", "hamming"):
            raise ConfigError(f"unknown window {self.window!r}")
        if self.saturation not in ("off", "smooth"):
            raise ConfigError(f"unknown saturation {self.saturation!r}")
        if self.saturation == "smooth" and not (self.u_max and self.u_max > 0):
            raise ConfigError("saturation requires u_max > 0")

    @property
    def saturating(self) -> bool:
        return self.saturation == "smooth"

    def window_value(self, t, t_f: float):
        if self.window == "hamming":
            return window_hamming(t, t_f)
        return np.ones_like(np.asarray(t, dtype=float))

    def apply(self, ubar: np.ndarray, utilde: np.ndarray) -> np.ndarray:
        """Final input from reference ``ubar`` and (windowed) correction ``utilde``."""
        if not self.saturating:
            return ubar + utilde
        return saturation_policy(ubar, utilde, self.u_max)


def infidelity(x: np.ndarray, spec: GateSpec) -> float:
    """``1 - (|trace(F^dag X E)| / nbar)^2``; invariant under a global phase."""
    tr = np.trace(dag(spec.F) @ x @ spec.E)
    return float(1.0 - (abs(tr) / spec.nbar) ** 2)


def lyapunov_partial(xt: np.ndarray, e: np.ndarray) -> float:
    """Partial-trace Lyapunov function ``2 nbar - 2 Re trace(E^dag Xt E)``."""
    nbar = e.shape[1]
    return float(2 * nbar - 2 * np.real(np.trace(dag(e) @ xt @ e)))


def lyapunov_full(xt: np.ndarray, eig_tol: float = EIG_TOL) -> float:
    """``trace[(Xt - I)^2 (Xt + I)^{-2}]``, the squared norm of the Cayley coordinates.

    Equals ``sum_i tan(theta_i / 2)**2`` over the eigenphases of ``Xt``.
    """
    w = cayley_forward(xt, eig_tol)
    return float(np.real(np.vdot(w, w)))


def z_matrix(xt: np.ndarray, eig_tol: float = EIG_TOL) -> np.ndarray:
    """``Z(Xt) = Xt (Xt - I)(Xt + I)^{-3}``."""
    return z_from_cayley(cayley_forward(xt, eig_tol))


def z_from_cayley(w: np.ndarray) -> np.ndarray:
    """``Z`` expressed in Cayley coordinates: ``Z(cayley_inverse(W)) = W (I - W^2) / 4``."""
    return (w - w @ w @ w) / 4


def feedback_partial(xt, sk_tilde, e, gain: float, w: float = 1.0) -> float:
    """One channel of the partial-trace feedback ``w 2K Re trace(E^dag S~_k Xt E)``.

    Equals ``-K`` times the derivative of :func:`lyapunov_partial` along
    ``S~_k Xt``, so the closed loop has ``dV/dt = -sum_k u~_k^2 / K``.
    """
    return float(w * 2 * gain * np.real(np.trace(dag(e) @ sk_tilde @ xt @ e)))


def feedback_full(xt, sk_tilde, gain: float, w: float = 1.0, eig_tol: float = EIG_TOL) -> float:
    """One channel of the full Lyapunov feedback ``4 w K Re trace[Z(Xt) S~_k]``.

    This is ``-K`` times the derivative of :func:`lyapunov_full` along
    ``S~_k Xt`` (the derivative equals ``-4 Re trace[Z S~_k]``), so the
    closed loop has ``dV/dt = -sum_k u~_k^2 / K``.

    Raises
    ------
    SingularAtMinusOne
        If ``Xt`` has an eigenvalue at -1.
    """
    return float(4 * w * gain * np.real(np.trace(z_matrix(xt, eig_tol) @ sk_tilde)))


def partial_feedback_all(ybar: np.ndarray, y: np.ndarray, controls: np.ndarray, gain: float) -> np.ndarray:
    """All channels of the partial-trace feedback from ``Ybar = Xbar E`` and ``Y = X E``.

    ``trace(E^dag Xbar^dag S_k Xbar Xbar^dag X E) = trace(Ybar^dag S_k Y)``.
    """
    return 2 * gain * np.real(np.einsum("ia,kij,ja->k", ybar.conj(), controls, y))


def full_feedback_all(xbar: np.ndarray, wt: np.ndarray, controls: np.ndarray, gain: float) -> np.ndarray:
    """All channels of ``4K Re trace[Z S~_k]`` given Cayley coordinates ``wt`` of the error.

    ``trace(Z Xbar^dag S_k Xbar) = trace(Xbar Z Xbar^dag S_k)``.
    """
    m = xbar @ z_from_cayley(wt) @ dag(xbar)
    return 4 * gain * np.real(np.einsum("ij,kji->k", m, controls))


def window_hamming(t, t_f: float):
    """``(1 - cos(2 pi t / T_f)) / 2``."""
    return 0.5 * (1.0 - np.cos(2 * np.pi * np.asarray(t, dtype=float) / t_f))


def smooth_sat(x, u_star):
    """Odd, bounded smooth saturation ``u* (2/pi) arctan(pi x / (2 u*))``.

    Slope one at the origin; ``|sat(x)| < u*``.
    """
    u_star = np.asarray(u_star, dtype=float)
    return u_star * (2 / np.pi) * np.arctan(np.pi * np.asarray(x) / (2 * u_star))


def saturation_policy(ubar, utilde, u_max):
    """Saturated input ``ubar + sat(utilde)`` with asymmetric room to ``+-u_max``.

    Positive corrections saturate at ``u_max - ubar``, negative ones at
    ``u_max + ubar``, so the result stays in ``[-u_max, u_max]`` and the sign
    of the correction is kept.

    Raises
    ------
    SeedOutOfBounds
        If ``|ubar| > u_max``.
    """
    ubar = np.asarray(ubar, dtype=float)
    utilde = np.asarray(utilde, dtype=float)
    if np.any(np.abs(ubar) > u_max):
        raise SeedOutOfBounds(f"reference input exceeds u_max = {u_max}")
    return _saturate_unchecked(ubar, utilde, u_max)


def _saturate_unchecked(ubar: np.ndarray, utilde: np.ndarray, u_max: float):
    """Body of :func:`saturation_policy` without the bound check (hot loops)."""
    room = np.where(utilde >= 0, u_max - ubar, u_max + ubar)
    safe = np.where(room > 0, room, 1.0)
    corr = np.where(room > 0, smooth_sat(utilde, safe), 0.0)
    out = np.clip(ubar + corr, -u_max, u_max)
    return out if out.ndim else float(out)
