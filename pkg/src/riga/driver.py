"""The RIGA iteration and a first-order GRAPE baseline.

Each step ``l`` of RIGA

1. simulates the current reference input ``ubar^{l-1}`` in open loop from
   the identity, giving ``X_f^{l-1}``;
2. stops if the infidelity of ``X_f^{l-1}`` is small enough;
3. builds a goal ``Xbar_goal`` (fixed, optimised and saturated, or taken
   from a precomputed path);
4. right-translates the open-loop trajectory by ``R = X_f^dag Xbar_goal`` so
   that it ends at the goal;
5. integrates the closed loop tracking that reference; the applied input
   becomes ``ubar^l``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from riga.errors import (
    CayleyBlowup,
    ConfigError,
    NoReachableGoal,
    NonConvergence,
    SeedOutOfBounds,
)
from riga.goals import GoalPath, build_goal_path, optgoal, strategy_one_goal, switch_select
from riga.integrators import (
    PulseSet,
    TimeGrid,
    Trajectory,
    propagate_pc_closed,
    propagate_pc_forward,
    propagate_smooth_closed,
    smooth_open_increments,
)
from riga.problem import GateSpec, ShapingConfig, SystemModel, infidelity, lyapunov_full, lyapunov_partial
from riga.seed import SeedConfig, generate_seed
from riga.unitary import cayley_inverse, dag

__all__ = [
    "RigaConfig",
    "StepRecord",
    "RunReport",
    "run_riga",
    "run_grape",
    "resimulate",
    "open_loop",
    "grape_objective",
]

log = logging.getLogger(__name__)

STRATEGIES = ("fixed_goal", "optimize_saturate", "goal_path")


@dataclass(frozen=True)
class RigaConfig:
    """Parameters of a RIGA or GRAPE run.

    Attributes
    ----------
    K : float
        Feedback gain (for GRAPE, see ``grape_step``).
    T_f, N_sim : float, int
        Horizon and number of grid intervals.
    target_infidelity : float
        Stop once the open-loop infidelity is at or below this value.
    max_steps : int
        Maximum number of closed-loop passes.
    variant : {"smooth", "piecewise"}
    lyapunov : {"auto", "partial", "full"}
        ``auto`` picks ``full`` when the gate acts on the whole space.
    strategy : {"fixed_goal", "optimize_saturate", "goal_path"}
    alpha, beta : float
        Spacing and switching radius of the goal path.
    theta_max : float
        Eigenphase bound of the saturated correction.
    allow_phase : bool
        Optimise the global phase of the goal.
    shaping : ShapingConfig
    seed : SeedConfig
    grape_step : float, optional
        GRAPE step ``eta``; when set, the gain used is ``K = eta * delta`` so
        the update is ``-eta`` times the gradient of the objective.
    stagnation_window, stagnation_tol
        Stop when the relative infidelity improvement over this many steps is
        below the tolerance.
    """

    K: float
    T_f: float
    N_sim: int
    target_infidelity: float = 1e-3
    max_steps: int = 300
    variant: str = "smooth"
    lyapunov: str = "auto"
    strategy: str = "optimize_saturate"
    alpha: float = 0.5
    beta: float = 1.0
    theta_max: float = np.pi / 4
    allow_phase: bool = True
    shaping: ShapingConfig = field(default_factory=ShapingConfig)
    seed: SeedConfig = field(default_factory=SeedConfig)
    grape_step: Optional[float] = None
    stagnation_window: int = 20
    stagnation_tol: float = 1e-9

    def __post_init__(self):
        if not self.K >= 0:
            raise ConfigError("K must be non-negative")
        if not 0 < self.target_infidelity < 1:
            raise ConfigError("target_infidelity must lie in (0, 1)")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")
        if self.variant not in ("smooth", "piecewise"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.lyapunov not in ("auto", "partial", "full"):
            raise ConfigError(f"unknown Lyapunov choice {self.lyapunov!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.strategy == "goal_path" and not 0 < self.alpha < self.beta < 2:
            raise ConfigError("goal path needs 0 < alpha < beta < 2")
        if not 0 < self.theta_max <= np.pi:
            raise ConfigError("theta_max must lie in (0, pi]")
        TimeGrid(self.T_f, self.N_sim)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.T_f, self.N_sim)

    def lyapunov_for(self, spec: GateSpec) -> str:
        if self.lyapunov == "auto":
            return "full" if spec.full else "partial"
        if self.lyapunov == "full" and not spec.full:
            raise ConfigError("the full Lyapunov function needs nbar = n")
        return self.lyapunov


@dataclass(frozen=True)
class StepRecord:
    """Diagnostics of the open-loop input ``ubar^step``.

    ``lyapunov`` is ``V(goal_step^dag X_f^step)``, the error at the end of the
    horizon with respect to the goal that produced the input (NaN for the
    seed). ``lyapunov_start`` is ``V(goal_{step+1}^dag X_f^step)``, the
    initial error of the next closed loop (NaN when no further goal is built).
    """

    step: int
    infidelity: float
    lyapunov: float
    lyapunov_start: float
    goal_index: int
    goal_saturated: bool
    max_pulse: float
    wall_ms: float


@dataclass
class RunReport:
    records: list
    pulses: PulseSet
    final: np.ndarray
    reason: str
    target: float
    message: str = ""

    @property
    def success(self) -> bool:
        return self.reason == "converged"

    @property
    def final_infidelity(self) -> float:
        return self.records[-1].infidelity

    @property
    def steps(self) -> int:
        """Number of closed-loop passes performed."""
        return self.records[-1].step

    def infidelities(self) -> np.ndarray:
        return np.array([r.infidelity for r in self.records])

    def lyapunov_values(self) -> np.ndarray:
        return np.array([r.lyapunov for r in self.records])

    def raise_for_status(self) -> "RunReport":
        if self.reason == "converged":
            return self
        if self.reason == "no_reachable_goal":
            raise NoReachableGoal(self.message)
        if self.reason == "cayley_blowup":
            raise CayleyBlowup(self.message)
        raise NonConvergence(
            f"{self.reason}: infidelity {self.final_infidelity:.3e} > {self.target:.3e} "
            f"after {self.steps} steps"
        )


def open_loop(sys: SystemModel, pulses: PulseSet, grid: TimeGrid):
    """Open-loop trajectory from the identity, and the smooth increments if any."""
    if pulses.mode == "smooth":
        incs = smooth_open_increments(sys, pulses, grid)
        steps = cayley_inverse(incs)
        xs = np.empty((grid.n_sim + 1, sys.n, sys.n), dtype=complex)
        xs[0] = np.eye(sys.n)
        for s in range(grid.n_sim):
            xs[s + 1] = steps[s] @ xs[s]
        return Trajectory(xs), incs
    return propagate_pc_forward(sys, pulses, grid), None


def _lyap(kind: str, xt: np.ndarray, spec: GateSpec) -> float:
    if kind == "partial":
        return lyapunov_partial(xt, spec.E)
    try:
        return lyapunov_full(xt)
    except ValueError:
        return float("inf")


def _initial_pulses(sys, cfg: RigaConfig, grid: TimeGrid, pulses: Optional[PulseSet]) -> PulseSet:
    ubar = pulses if pulses is not None else generate_seed(cfg.seed, sys.m, grid, cfg.variant)
    if ubar.mode != cfg.variant:
        raise ConfigError(f"initial pulses are {ubar.mode}, run is {cfg.variant}")
    ubar.check_grid(grid)
    if cfg.shaping.saturating and ubar.max_abs() > cfg.shaping.u_max:
        raise SeedOutOfBounds(
            f"seed amplitude {ubar.max_abs():.4g} exceeds u_max = {cfg.shaping.u_max}"
        )
    return ubar


def run_riga(
    sys: SystemModel,
    spec: GateSpec,
    cfg: RigaConfig,
    pulses: Optional[PulseSet] = None,
    callback=None,
) -> RunReport:
    """Run RIGA until the target infidelity, ``max_steps`` or stagnation.

    Parameters
    ----------
    sys, spec, cfg
        System, gate and run parameters.
    pulses : PulseSet, optional
        Initial reference input; a seed is generated from ``cfg.seed`` if
        omitted.
    callback : callable, optional
        Called with each :class:`StepRecord`.

    Returns
    -------
    RunReport
        ``reason`` is one of ``converged``, ``max_steps``, ``stagnation``,
        ``no_reachable_goal`` or ``cayley_blowup``; call
        :meth:`RunReport.raise_for_status` to turn failures into exceptions.
    """
    if spec.n != sys.n:
        raise ConfigError(f"gate acts on dimension {spec.n}, system has {sys.n}")
    grid = cfg.grid
    kind = cfg.lyapunov_for(spec)
    ubar = _initial_pulses(sys, cfg, grid, pulses)
    x_goal = spec.goal()
    path: Optional[GoalPath] = None
    records: list[StepRecord] = []
    prev_goal = None
    prev_saturated = False
    prev_q = 0
    reason, message = "max_steps", ""
    t_last = time.perf_counter()
    x_f = np.eye(sys.n)

    for step in range(cfg.max_steps + 1):
        traj, incs = open_loop(sys, ubar, grid)
        x_f = traj.final
        inf = infidelity(x_f, spec)
        v_end = np.nan if prev_goal is None else _lyap(kind, dag(prev_goal) @ x_f, spec)
        now = time.perf_counter()
        rec = StepRecord(step, inf, v_end, np.nan, prev_q, prev_saturated,
                         ubar.max_abs(), 1e3 * (now - t_last))
        t_last = now

        if inf <= cfg.target_infidelity:
            reason = "converged"
        elif step >= cfg.max_steps:
            reason = "max_steps"
        elif _stagnated(records, inf, cfg):
            reason = "stagnation"
        else:
            reason = ""
        if reason:
            records.append(rec)
            if callback:
                callback(rec)
            break

        try:
            if cfg.strategy == "goal_path":
                if path is None:
                    x_star, _ = optgoal(x_goal, x_f, spec, cfg.allow_phase)
                    path = build_goal_path(x_f, x_star, spec, cfg.alpha, cfg.beta)
                q = switch_select(path, x_f, spec)
                goal, saturated = path.matrices[q], False
            else:
                goal, saturated, q = _next_goal(cfg, spec, x_goal, x_f)
        except NoReachableGoal as exc:
            reason, message = "no_reachable_goal", str(exc)
            records.append(rec)
            break

        rec = replace(rec, lyapunov_start=_lyap(kind, dag(goal) @ x_f, spec))
        records.append(rec)
        if callback:
            callback(rec)

        r = dag(x_f) @ goal
        ref = traj.right_multiply(r)
        try:
            if cfg.variant == "smooth":
                _, ubar = propagate_smooth_closed(
                    sys, spec, ref, ubar, grid, cfg.K, cfg.shaping, kind, ref_increments=incs
                )
            else:
                _, ubar = propagate_pc_closed(
                    sys, spec, ref, ubar, grid, cfg.K, "riga", cfg.shaping, kind
                )
        except CayleyBlowup as exc:
            reason, message = "cayley_blowup", str(exc)
            break
        prev_goal, prev_saturated, prev_q = goal, saturated, q
        log.debug("step %d infidelity %.3e", step, inf)

    return RunReport(records, ubar, x_f, reason, cfg.target_infidelity, message)


def _stagnated(records, value, cfg: RigaConfig, field: str = "infidelity") -> bool:
    """No relative improvement of ``field`` over the last ``stagnation_window`` records."""
    w = cfg.stagnation_window
    if len(records) < w:
        return False
    old = getattr(records[-w], field)
    return (old - value) <= cfg.stagnation_tol * max(old, 1e-300)


def _next_goal(cfg, spec, x_goal, x_f):
    """Fixed or optimised-and-saturated goal; returns ``(goal, saturated, index)``."""
    if cfg.strategy == "fixed_goal":
        return x_goal, False, 0
    goal, sat = strategy_one_goal(
        x_goal, x_f, spec, cfg.theta_max, cfg.allow_phase, return_flag=True
    )
    return goal, sat, 0


# ----------------------------------------------------------------------------
# GRAPE


def grape_objective(sys: SystemModel, spec: GateSpec, pulses: PulseSet, grid: TimeGrid,
                    x_goal=None, lyapunov: str = "partial") -> float:
    """``Omega(U) = V(X_goal^dag X(T_f))`` for piecewise-constant pulses."""
    x_goal = spec.goal() if x_goal is None else x_goal
    x_f = propagate_pc_forward(sys, pulses, grid).final
    return _lyap(lyapunov, dag(x_goal) @ x_f, spec)


def run_grape(sys: SystemModel, spec: GateSpec, cfg: RigaConfig,
              pulses: Optional[PulseSet] = None, callback=None) -> RunReport:
    """First-order GRAPE as lagged piecewise RIGA with a fixed goal.

    Each sweep adds ``-K grad V . (S~ X~)`` to every interval, which is
    ``-(K / delta)`` times the gradient of ``Omega``. With ``grape_step = eta``
    the gain is ``eta * delta`` and the sweep is a plain gradient step of size
    ``eta``. The ``lyapunov`` field of the records holds ``Omega``, and
    stagnation is judged on ``Omega`` since a descent step need not lower
    the infidelity.
    """
    cfg = replace(cfg, variant="piecewise")
    grid = cfg.grid
    kind = cfg.lyapunov_for(spec)
    gain = cfg.grape_step * grid.delta if cfg.grape_step is not None else cfg.K
    ubar = _initial_pulses(sys, cfg, grid, pulses)
    x_goal = spec.goal()
    records: list[StepRecord] = []
    t_last = time.perf_counter()
    reason = "max_steps"
    x_f = np.eye(sys.n)
    for step in range(cfg.max_steps + 1):
        traj = propagate_pc_forward(sys, ubar, grid)
        x_f = traj.final
        inf = infidelity(x_f, spec)
        omega = _lyap(kind, dag(x_goal) @ x_f, spec)
        now = time.perf_counter()
        rec = StepRecord(step, inf, omega, omega, 0, False, ubar.max_abs(), 1e3 * (now - t_last))
        t_last = now
        records.append(rec)
        if callback:
            callback(rec)
        if inf <= cfg.target_infidelity:
            reason = "converged"
            break
        if step >= cfg.max_steps:
            break
        if _stagnated(records[:-1], omega, cfg, "lyapunov") or gain == 0:
            reason = "stagnation"
            break
        ref = traj.right_multiply(dag(x_f) @ x_goal)
        _, ubar = propagate_pc_closed(sys, spec, ref, ubar, grid, gain, "grape_lagged",
                                      cfg.shaping, kind)
    return RunReport(records, ubar, x_f, reason, cfg.target_infidelity)


def resimulate(sys_expanded: SystemModel, pulses: PulseSet, grid: TimeGrid,
               spec_embedded: GateSpec) -> float:
    """Infidelity of the given pulses in a larger truncation of the model."""
    traj, _ = open_loop(sys_expanded, pulses, grid)
    return infidelity(traj.final, spec_embedded)
