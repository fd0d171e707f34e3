"""Time propagation on the unitary group.

Two input parametrisations are supported:

* ``piecewise``: ``N_sim`` constant values per channel, one per interval
  ``[t_{s-1}, t_s)``; propagation is exact by matrix exponentials.
* ``smooth``: ``N_sim + 1`` samples per channel, linearly interpolated;
  propagation uses a fourth-order Runge-Kutta scheme in Cayley coordinates,
  re-centred at the identity on every step, so each sample is unitary to
  rounding error regardless of the step count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from riga.errors import CayleyBlowup, ConfigError, SeedOutOfBounds
from riga.problem import (
    GateSpec,
    ShapingConfig,
    SystemModel,
    _saturate_unchecked,
    full_feedback_all,
    partial_feedback_all,
    z_from_cayley,
)
from riga.unitary import (
    cayley_forward,
    cayley_inverse,
    dag,
    exp_skew,
    unitary_projection,
)

__all__ = [
    "TimeGrid",
    "PulseSet",
    "Trajectory",
    "propagate_pc_forward",
    "propagate_pc_backward",
    "propagate_pc_closed",
    "propagate_smooth_open",
    "propagate_smooth_closed",
    "smooth_open_increments",
    "halfstep_infidelity",
    "halfstep_distance",
    "refine_pulses",
    "direct_rk4_diagnostic",
]

#: Cayley coordinates larger than this mean the error left the chart numerically.
W_BLOWUP = 1e6
_CHUNK = 256


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_s = s * delta`` on ``[0, T_f]``."""

    t_f: float
    n_sim: int

    def __post_init__(self):
        if self.n_sim < 1 or int(self.n_sim) != self.n_sim:
            raise ConfigError("n_sim must be a positive integer")
        if not (np.isfinite(self.t_f) and self.t_f > 0):
            raise ConfigError("t_f must be positive")

    @property
    def delta(self) -> float:
        return self.t_f / self.n_sim

    @property
    def times(self) -> np.ndarray:
        """All ``N_sim + 1`` sample instants."""
        return np.linspace(0.0, self.t_f, self.n_sim + 1)

    def sample_times(self, mode: str) -> np.ndarray:
        """Sample instants of a pulse set: all nodes or left interval edges."""
        t = self.times
        return t if mode == "smooth" else t[:-1]

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_f, self.n_sim * factor)


@dataclass(frozen=True)
class PulseSet:
    """Control values on a grid; ``values`` has shape ``(m, L)``."""

    mode: str
    values: np.ndarray

    def __post_init__(self):
        if self.mode not in ("smooth", "piecewise"):
            raise ConfigError(f"unknown pulse mode {self.mode!r}")
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(v)):
            raise ConfigError("pulse values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def check_grid(self, grid: TimeGrid) -> None:
        want = grid.n_sim + 1 if self.mode == "smooth" else grid.n_sim
        if self.length != want:
            raise ConfigError(
                f"{self.mode} pulses need {want} samples on this grid, got {self.length}"
            )

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    @classmethod
    def zeros(cls, m: int, grid: TimeGrid, mode: str = "smooth") -> "PulseSet":
        length = grid.n_sim + 1 if mode == "smooth" else grid.n_sim
        return cls(mode, np.zeros((m, length)))


@dataclass(frozen=True)
class Trajectory:
    """Propagator samples ``X_0 .. X_{N_sim}``, shape ``(N_sim + 1, n, n)``."""

    samples: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def initial(self) -> np.ndarray:
        return self.samples[0]

    def __len__(self) -> int:
        return self.samples.shape[0]

    def right_multiply(self, r: np.ndarray) -> "Trajectory":
        """Right translation ``X(t) R``."""
        return Trajectory(self.samples @ r)

    def unitarity_defects(self) -> np.ndarray:
        n = self.samples.shape[-1]
        g = dag(self.samples) @ self.samples - np.eye(n)
        return np.linalg.norm(g, axis=(-2, -1))


def _init(x0, n: int) -> np.ndarray:
    return np.eye(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex)


def _check(sys: SystemModel, pulses: PulseSet, grid: TimeGrid, mode: str) -> None:
    if pulses.mode != mode:
        raise ConfigError(f"expected {mode} pulses, got {pulses.mode}")
    if pulses.m != sys.m:
        raise ConfigError(f"pulses have {pulses.m} channels, system has {sys.m}")
    pulses.check_grid(grid)


# ----------------------------------------------------------------------------
# Piecewise-constant propagation


def _pc_steps(sys: SystemModel, values: np.ndarray, delta: float, sign: float = 1.0):
    """Per-interval exponentials ``exp(sign delta Sigma_s)``, shape ``(N, n, n)``."""
    out = np.empty((values.shape[1], sys.n, sys.n), dtype=complex)
    for s in range(values.shape[1]):
        out[s] = exp_skew(sys.generator(values[:, s]), sign * delta)
    return out


def propagate_pc_forward(sys: SystemModel, pulses: PulseSet, grid: TimeGrid, x0=None) -> Trajectory:
    """``X_s = exp[delta (S_0 + sum_k u_ks S_k)] X_{s-1}``."""
    _check(sys, pulses, grid, "piecewise")
    steps = _pc_steps(sys, pulses.values, grid.delta)
    out = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
    out[0] = _init(x0, sys.n)
    for s in range(grid.n_sim):
        out[s + 1] = steps[s] @ out[s]
    return Trajectory(out)


def propagate_pc_backward(sys: SystemModel, pulses: PulseSet, grid: TimeGrid, x_goal) -> Trajectory:
    """Reference ending at ``x_goal``: ``Xbar_{s-1} = exp(-delta Sigma_s) Xbar_s``."""
    _check(sys, pulses, grid, "piecewise")
    steps = _pc_steps(sys, pulses.values, grid.delta, sign=-1.0)
    out = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
    out[-1] = np.asarray(x_goal, dtype=complex)
    for s in range(grid.n_sim, 0, -1):
        out[s - 1] = steps[s - 1] @ out[s]
    return Trajectory(out)


def _feedback(kind, sys, spec, xbar, x, gain):
    """Unwindowed feedback ``u~`` for the error ``Xbar^dag X``."""
    if kind == "partial":
        return partial_feedback_all(xbar @ spec.E, x @ spec.E, sys.controls, gain)
    wt = cayley_forward(dag(xbar) @ x)
    return full_feedback_all(xbar, wt, sys.controls, gain)


def propagate_pc_closed(
    sys: SystemModel,
    spec: GateSpec,
    ref: Trajectory,
    ref_pulses: PulseSet,
    grid: TimeGrid,
    gain: float,
    mode: str = "riga",
    shaping: Optional[ShapingConfig] = None,
    lyapunov: str = "partial",
    x0=None,
) -> tuple[Trajectory, PulseSet]:
    """Piecewise-constant closed loop producing the next reference pulses.

    On interval ``s`` the update ``u_s = ubar_s + u~(X~_{s-1})`` is formed from
    the error at the left edge. In ``riga`` mode the updated value drives the
    exponential; in ``grape_lagged`` mode the old value ``ubar_s`` does, so
    the trajectory is the open loop and all updates are collected for the
    next sweep (a first-order gradient step).
    """
    if mode not in ("riga", "grape_lagged"):
        raise ConfigError(f"unknown closed-loop mode {mode!r}")
    _check(sys, ref_pulses, grid, "piecewise")
    shaping = shaping or ShapingConfig()
    ubar = ref_pulses.values
    w = shaping.window_value(grid.sample_times("piecewise"), grid.t_f)
    xs = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
    xs[0] = _init(x0, sys.n)
    new = np.empty_like(ubar)
    for s in range(grid.n_sim):
        xbar = ref.samples[s]
        ut = w[s] * _feedback(lyapunov, sys, spec, xbar, xs[s], gain) if gain else 0.0 * ubar[:, s]
        new[:, s] = shaping.apply(ubar[:, s], ut)
        drive = new[:, s] if mode == "riga" else ubar[:, s]
        xs[s + 1] = exp_skew(sys.generator(drive), grid.delta) @ xs[s]
    return Trajectory(xs), PulseSet("piecewise", new)


# ----------------------------------------------------------------------------
# Smooth propagation in Cayley coordinates


def _cayley_rhs(w: np.ndarray, s: np.ndarray) -> np.ndarray:
    """``dW/dt = -(W - I) S (W + I) / 2``; broadcasts over leading axes."""
    eye = np.eye(w.shape[-1])
    return -0.5 * (w - eye) @ s @ (w + eye)


def _skew(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a - dag(a))


def smooth_open_increments(sys: SystemModel, pulses: PulseSet, grid: TimeGrid) -> np.ndarray:
    """Per-step Cayley increments ``Wbar_s`` of the open loop, shape ``(N, n, n)``.

    Each step starts from ``W = 0`` and uses RK4 with the input linearly
    interpolated at ``tau = 0, delta / 2, delta``. The increments do not depend
    on the state, so they are evaluated in vectorised chunks.
    """
    _check(sys, pulses, grid, "smooth")
    d = grid.delta
    u = pulses.values
    out = np.empty((grid.n_sim, sys.n, sys.n), dtype=complex)
    for lo in range(0, grid.n_sim, _CHUNK):
        hi = min(lo + _CHUNK, grid.n_sim)
        s0 = sys.generator(u[:, lo:hi])
        s1 = sys.generator(u[:, lo + 1 : hi + 1])
        sh = 0.5 * (s0 + s1)  # generator is affine in u
        k1 = 0.5 * d * s0
        k2 = d * _cayley_rhs(k1 / 2, sh)
        k3 = d * _cayley_rhs(k2 / 2, sh)
        k4 = d * _cayley_rhs(k3, s1)
        out[lo:hi] = _skew((k1 + 2 * k2 + 2 * k3 + k4) / 6)
    if not np.all(np.isfinite(out)) or np.abs(out).max(initial=0.0) > W_BLOWUP:
        raise CayleyBlowup("open-loop Cayley increment left the chart")
    return out


def propagate_smooth_open(sys: SystemModel, pulses: PulseSet, grid: TimeGrid, x0=None) -> Trajectory:
    """Open-loop Cayley-RK4 propagation, ``X_{s+1} = cay^{-1}(Wbar_s) X_s``."""
    steps = cayley_inverse(smooth_open_increments(sys, pulses, grid))
    out = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
    out[0] = _init(x0, sys.n)
    for s in range(grid.n_sim):
        out[s + 1] = steps[s] @ out[s]
    return Trajectory(out)


def propagate_smooth_closed(
    sys: SystemModel,
    spec: GateSpec,
    ref: Trajectory,
    ref_pulses: PulseSet,
    grid: TimeGrid,
    gain: float,
    shaping: Optional[ShapingConfig] = None,
    lyapunov: str = "partial",
    x0=None,
    ref_increments: Optional[np.ndarray] = None,
) -> tuple[Trajectory, PulseSet]:
    """Closed-loop Cayley-RK4 tracking of a reference trajectory.

    Parameters
    ----------
    ref : Trajectory
        Reference ``Xbar(t_s)`` on the grid (open loop of ``ref_pulses`` right
        translated to end at the goal).
    ref_increments : ndarray, optional
        Open-loop increments of ``ref_pulses``; the reference at mid-step is
        ``cay^{-1}(Wbar_s / 2) Xbar_s``. Recomputed when omitted.
    lyapunov : {"partial", "full"}
        ``partial`` integrates ``X`` with a per-step chart and feeds back
        ``2K Re tr(E^dag S~_k X~ E)``. ``full`` (requires ``nbar = n``)
        integrates the Cayley coordinates of the error ``X~`` continuously
        and feeds back ``4K Re tr(Z S~_k)``.

    Returns
    -------
    trajectory, pulses
        Closed-loop samples and the new reference input ``ubar + u~``
        evaluated at every grid node.

    Raises
    ------
    CayleyBlowup
        If the Cayley coordinates stop being finite or exceed ``W_BLOWUP``.
    """
    _check(sys, ref_pulses, grid, "smooth")
    if lyapunov not in ("partial", "full"):
        raise ConfigError(f"unknown Lyapunov function {lyapunov!r}")
    if lyapunov == "full" and not spec.full:
        raise ConfigError("the full Lyapunov function needs nbar = n")
    shaping = shaping or ShapingConfig()
    if ref_increments is None:
        ref_increments = smooth_open_increments(sys, ref_pulses, grid)
    x0 = _init(x0, sys.n)
    if lyapunov == "partial":
        return _closed_partial(sys, spec, ref, ref_pulses, grid, gain, shaping, x0, ref_increments)
    return _closed_full(sys, ref, ref_pulses, grid, gain, shaping, x0, ref_increments)


class _FastLoop:
    """Precomputed pieces for the closed-loop inner loop.

    Flattening the control stack to ``(m, n*n)`` turns the generator and the
    feedback traces into single matrix products; the reference-bound check
    of the saturation policy is done once for the whole pass.
    """

    def __init__(self, sys: SystemModel, shaping: ShapingConfig, ubar: np.ndarray):
        n = sys.n
        self.drift = sys.drift
        self.flat = sys.controls.reshape(sys.m, n * n)
        self.eye = np.eye(n)
        self.shaping = shaping
        self.u_max = shaping.u_max
        if shaping.saturating and np.any(np.abs(ubar) > shaping.u_max):
            raise SeedOutOfBounds(f"reference input exceeds u_max = {shaping.u_max}")

    def generator(self, u: np.ndarray) -> np.ndarray:
        return self.drift + (u @ self.flat).reshape(self.drift.shape)

    def trace_with_controls(self, a: np.ndarray) -> np.ndarray:
        """``Re trace(A S_k)`` for every control ``k``."""
        return np.real(self.flat @ a.T.ravel())

    def shape(self, u_ref: np.ndarray, ut: np.ndarray) -> np.ndarray:
        if not self.shaping.saturating:
            return u_ref + ut
        return _saturate_unchecked(u_ref, ut, self.u_max)

    def rhs(self, w: np.ndarray, s: np.ndarray) -> np.ndarray:
        return -0.5 * (w - self.eye) @ s @ (w + self.eye)

    def cayley_inverse(self, w: np.ndarray) -> np.ndarray:
        return -np.linalg.solve(w - self.eye, w + self.eye)


def _ref_mid(ref_increments, ref):
    return cayley_inverse(ref_increments / 2) @ ref.samples[:-1]


def _closed_partial(sys, spec, ref, ref_pulses, grid, gain, shaping, x0, incs):
    d, n, e = grid.delta, sys.n, spec.E
    t = grid.times
    ubar = ref_pulses.values
    umid = 0.5 * (ubar[:, :-1] + ubar[:, 1:])
    w_nodes = gain * shaping.window_value(t, grid.t_f)
    w_mid = gain * shaping.window_value(t[:-1] + d / 2, grid.t_f)
    ybar_h = (ref.samples @ e).conj()
    ybar_mid_h = (_ref_mid(incs, ref) @ e).conj()
    fast = _FastLoop(sys, shaping, ubar)

    def mu(u_ref, ybh, x, wk):
        if wk == 0.0:
            return np.array(u_ref, dtype=float)
        # trace(Ybar^dag S_k Y) = trace(S_k (Y Ybar^dag))
        ut = 2 * wk * fast.trace_with_controls((x @ e) @ ybh.T)
        return fast.shape(u_ref, ut)

    xs = np.empty((grid.n_sim + 1, n, n), dtype=complex)
    xs[0] = x0
    new = np.empty_like(ubar)
    for s in range(grid.n_sim):
        xc = xs[s]
        u1 = mu(ubar[:, s], ybar_h[s], xc, w_nodes[s])
        new[:, s] = u1
        k1 = 0.5 * d * fast.generator(u1)
        u2 = mu(umid[:, s], ybar_mid_h[s], fast.cayley_inverse(k1 / 2) @ xc, w_mid[s])
        k2 = d * fast.rhs(k1 / 2, fast.generator(u2))
        u3 = mu(umid[:, s], ybar_mid_h[s], fast.cayley_inverse(k2 / 2) @ xc, w_mid[s])
        k3 = d * fast.rhs(k2 / 2, fast.generator(u3))
        u4 = mu(ubar[:, s + 1], ybar_h[s + 1], fast.cayley_inverse(k3) @ xc, w_nodes[s + 1])
        k4 = d * fast.rhs(k3, fast.generator(u4))
        wbar = _skew((k1 + 2 * k2 + 2 * k3 + k4) / 6)
        if not np.all(np.isfinite(wbar)) or np.abs(wbar).max() > W_BLOWUP:
            raise CayleyBlowup(f"closed-loop increment left the chart at step {s}")
        xs[s + 1] = fast.cayley_inverse(wbar) @ xc
    new[:, -1] = mu(ubar[:, -1], ybar_h[-1], xs[-1], w_nodes[-1])
    return Trajectory(xs), PulseSet("smooth", new)


def _closed_full(sys, ref, ref_pulses, grid, gain, shaping, x0, incs):
    d, n = grid.delta, sys.n
    t = grid.times
    ubar = ref_pulses.values
    umid = 0.5 * (ubar[:, :-1] + ubar[:, 1:])
    w_nodes = gain * shaping.window_value(t, grid.t_f)
    w_mid = gain * shaping.window_value(t[:-1] + d / 2, grid.t_f)
    xbar = ref.samples
    xbar_mid = _ref_mid(incs, ref)
    fast = _FastLoop(sys, shaping, ubar)

    def correction(u_ref, xb, wt, wk):
        """Applied correction ``u - ubar`` (after window and saturation)."""
        if wk == 0.0:
            return np.zeros_like(u_ref)
        # 4K Re trace(Z Xbar^dag S_k Xbar) = 4K Re trace((Xbar Z Xbar^dag) S_k)
        ut = 4 * wk * fast.trace_with_controls(xb @ z_from_cayley(wt) @ dag(xb))
        return fast.shape(u_ref, ut) - u_ref

    def rhs(wt, xb, corr):
        sig = dag(xb) @ (corr @ fast.flat).reshape(n, n) @ xb
        return fast.rhs(wt, sig)

    try:
        wt = cayley_forward(dag(xbar[0]) @ x0)
    except Exception as exc:  # eigenvalue at -1: error outside the chart
        raise CayleyBlowup(f"initial error has no Cayley coordinates: {exc}") from exc
    ws = np.empty((grid.n_sim + 1, n, n), dtype=complex)
    ws[0] = wt
    new = np.empty_like(ubar)
    for s in range(grid.n_sim):
        wc = ws[s]
        c1 = correction(ubar[:, s], xbar[s], wc, w_nodes[s])
        new[:, s] = ubar[:, s] + c1
        k1 = d * rhs(wc, xbar[s], c1)
        wa = wc + k1 / 2
        k2 = d * rhs(wa, xbar_mid[s], correction(umid[:, s], xbar_mid[s], wa, w_mid[s]))
        wb = wc + k2 / 2
        k3 = d * rhs(wb, xbar_mid[s], correction(umid[:, s], xbar_mid[s], wb, w_mid[s]))
        wd = wc + k3
        k4 = d * rhs(wd, xbar[s + 1], correction(ubar[:, s + 1], xbar[s + 1], wd, w_nodes[s + 1]))
        wn = _skew(wc + (k1 + 2 * k2 + 2 * k3 + k4) / 6)
        if not np.all(np.isfinite(wn)) or np.abs(wn).max() > W_BLOWUP:
            raise CayleyBlowup(f"error coordinates left the chart at step {s}")
        ws[s + 1] = wn
    new[:, -1] = ubar[:, -1] + correction(ubar[:, -1], xbar[-1], ws[-1], w_nodes[-1])
    xs = xbar @ cayley_inverse(ws)
    return Trajectory(xs), PulseSet("smooth", new)


# ----------------------------------------------------------------------------
# Diagnostics


def refine_pulses(pulses: PulseSet, factor: int = 2) -> PulseSet:
    """Resample pulses on a grid ``factor`` times finer.

    Smooth pulses are linearly interpolated (the refined pulse is the same
    function of time); piecewise pulses are repeated.
    """
    v = pulses.values
    if pulses.mode == "piecewise":
        return PulseSet("piecewise", np.repeat(v, factor, axis=1))
    n = v.shape[1] - 1
    x_old = np.arange(n + 1)
    x_new = np.arange(n * factor + 1) / factor
    return PulseSet("smooth", np.vstack([np.interp(x_new, x_old, row) for row in v]))


def _propagate(sys, pulses, grid):
    if pulses.mode == "smooth":
        return propagate_smooth_open(sys, pulses, grid).final
    return propagate_pc_forward(sys, pulses, grid).final


def halfstep_infidelity(sys: SystemModel, pulses: PulseSet, grid: TimeGrid) -> float:
    """Phase-insensitive infidelity ``1 - |tr(X_a^dag X_b) / n|^2`` between step ``delta`` and ``delta / 2``.

    The value is quadratic in the propagator error, so for the fourth-order
    smooth propagator it falls by about ``2**8`` per halving of ``delta``.
    """
    xa = _propagate(sys, pulses, grid)
    xb = _propagate(sys, refine_pulses(pulses), grid.refined())
    return float(1.0 - abs(np.trace(dag(xa) @ xb) / sys.n) ** 2)


def halfstep_distance(sys: SystemModel, pulses: PulseSet, grid: TimeGrid) -> float:
    """Frobenius distance ``||X_a - X_b||`` between the step-``delta`` and step-``delta / 2`` endpoints.

    Linear in the propagator error: falls by about ``2**4`` per halving for the
    smooth propagator.
    """
    xa = _propagate(sys, pulses, grid)
    xb = _propagate(sys, refine_pulses(pulses), grid.refined())
    return float(np.linalg.norm(xa - xb))


def direct_rk4_diagnostic(
    sys: SystemModel, pulses: PulseSet, grid: TimeGrid, correction: str = "none", x0=None
) -> Trajectory:
    """Classical RK4 on ``dX/dt = S(t) X`` in the ambient matrix space.

    With ``correction="unitary_projection"`` each sample is replaced by its
    closest unitary. Only meant for accuracy comparisons.
    """
    if correction not in ("none", "unitary_projection"):
        raise ConfigError(f"unknown correction {correction!r}")
    _check(sys, pulses, grid, "smooth")
    d = grid.delta
    u = pulses.values
    out = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
    out[0] = _init(x0, sys.n)
    for s in range(grid.n_sim):
        s0 = sys.generator(u[:, s])
        s1 = sys.generator(u[:, s + 1])
        sh = 0.5 * (s0 + s1)
        x = out[s]
        k1 = s0 @ x
        k2 = sh @ (x + d / 2 * k1)
        k3 = sh @ (x + d / 2 * k2)
        k4 = s1 @ (x + d * k3)
        x = x + d / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if correction == "unitary_projection":
            x = unitary_projection(x)
        out[s + 1] = x
    return Trajectory(out)
