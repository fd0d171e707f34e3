"""Goal-matrix construction for each iteration.

``optgoal`` solves the constrained unitary Procrustes problem

    minimise ||X - X_f||  over unitary X  with  X E = exp(i phi) X_goal E,

in closed form: the phase aligns the trace of the constrained block and an
SVD gives the optimal rotation of the orthogonal complement. Two strategies
turn the optimum into the goal actually tracked:

* ``strategy_one_goal`` clamps the eigenphases of the correction
  ``R = X_f^dag X*`` to ``[-theta_max, theta_max]``;
* ``build_goal_path`` / ``switch_select`` precompute a path of goals with
  bounded spacing and advance along it monotonically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from riga.errors import NoReachableGoal, SingularAtMinusOne
from riga.problem import GateSpec, lyapunov_full
from riga.unitary import (
    complete_isometry,
    dag,
    eigphases,
    partial_distance,
    pth_root,
    saturate_eigenphases,
)

__all__ = [
    "optgoal",
    "eigenopt_unit_count",
    "strategy_one_goal",
    "GoalPath",
    "goal_distance",
    "build_goal_path",
    "switch_select",
]

MAX_PATH_LENGTH = 100_000


def optgoal(x_goal, x_f, spec: GateSpec, allow_phase: bool = True) -> tuple[np.ndarray, float]:
    """Unitary closest to ``x_f`` that maps ``E`` like ``x_goal`` (up to a phase).

    Parameters
    ----------
    x_goal : ndarray
        Any unitary with ``x_goal E = exp(i psi) F``.
    x_f : ndarray
        Current final propagator.
    spec : GateSpec
    allow_phase : bool
        Optimise the global phase of the constrained block; otherwise it is 0.

    Returns
    -------
    x_star : ndarray
        Optimal goal, ``x_star E = exp(i phi) x_goal E``.
    phi : float
        The phase applied to the constrained block.
    """
    x_goal = np.asarray(x_goal, dtype=complex)
    x_f = np.asarray(x_f, dtype=complex)
    e = spec.E
    nbar = spec.nbar
    xe = complete_isometry(e)
    g = x_goal @ xe
    fm = x_f @ xe
    g1, g2 = g[:, :nbar], g[:, nbar:]
    f1, f2 = fm[:, :nbar], fm[:, nbar:]

    if spec.full:
        w2 = g2
    else:
        u, _, vh = np.linalg.svd(dag(g2) @ f2)
        w2 = g2 @ (u @ vh)

    phi = 0.0
    if allow_phase:
        # rho exp(i theta) = beta - i alpha for tr(G1^dag F1) = alpha + i beta;
        # the two stationary phases are theta +- pi/2.
        c = np.trace(dag(g1) @ f1)
        theta = np.angle(-1j * c)
        best = None
        for cand in (theta + np.pi / 2, theta - np.pi / 2):
            cand = float(np.angle(np.exp(1j * cand)))
            dist = np.linalg.norm(np.exp(1j * cand) * g1 - f1)
            key = (round(dist, 12), abs(cand))
            if best is None or key < best[0]:
                best = (key, cand)
        phi = best[1]
    w = np.hstack([np.exp(1j * phi) * g1, w2])
    return w @ dag(xe), phi


def eigenopt_unit_count(x_star, x_f, tol: float = 1e-8) -> int:
    """Number of eigenphases of ``x_star^dag x_f`` within ``tol`` of zero."""
    _, theta = eigphases(dag(np.asarray(x_star)) @ np.asarray(x_f))
    return int(np.sum(np.abs(theta) <= tol))


def strategy_one_goal(
    x_goal, x_f, spec: GateSpec, theta_max: float = np.pi / 4,
    allow_phase: bool = True, return_flag: bool = False,
):
    """Optimise, then saturate: ``X_f R_sat`` with ``R = X_f^dag optgoal(...)``.

    With ``return_flag`` also report whether any eigenphase was clamped.
    """
    x_star, _ = optgoal(x_goal, x_f, spec, allow_phase)
    x_f = np.asarray(x_f, dtype=complex)
    r = dag(x_f) @ x_star
    r_sat, clamped = saturate_eigenphases(r, theta_max, return_flag=True)
    goal = x_f @ r_sat
    return (goal, clamped) if return_flag else goal


def goal_distance(x1, x2, spec: GateSpec, metric: str = "partial") -> float:
    """``pdist`` on the columns of ``E``, or ``sqrt(V_full(x2^dag x1))`` for ``metric="full"``."""
    if metric == "partial":
        return partial_distance(x1, x2, spec.E)
    try:
        return float(np.sqrt(lyapunov_full(dag(np.asarray(x2)) @ np.asarray(x1))))
    except SingularAtMinusOne:
        return float("inf")


@dataclass
class GoalPath:
    """Precomputed goals ``X_g^0 .. X_g^p`` and the current index."""

    matrices: list
    alpha: float
    beta: float
    metric: str = "partial"
    q: int = 0
    history: list = field(default_factory=list)

    @property
    def p(self) -> int:
        return len(self.matrices) - 1

    @property
    def current(self) -> np.ndarray:
        return self.matrices[self.q]


def build_goal_path(x_f0, x_goal_star, spec: GateSpec, alpha: float,
                    beta: float | None = None, metric: str | None = None) -> GoalPath:
    """Goals ``X_g^q = X_f0 Sigma^q`` with ``Sigma`` the ``p``-th root of ``X_f0^dag X*``.

    ``p`` is the smallest integer with ``dist(Sigma, I) <= alpha``, so
    consecutive goals are at most ``alpha`` apart and ``X_g^p = X*``.
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")
    beta = 2 * alpha if beta is None else beta
    if not alpha < beta < 2:
        raise ValueError("need alpha < beta < 2")
    metric = metric or ("full" if spec.full else "partial")
    x_f0 = np.asarray(x_f0, dtype=complex)
    x_goal_star = np.asarray(x_goal_star, dtype=complex)
    r = dag(x_f0) @ x_goal_star
    eye = np.eye(spec.n)
    if np.linalg.norm(r - eye) <= 1e-12:
        return GoalPath([x_goal_star], alpha, beta, metric)
    p = 1
    while True:
        sigma = pth_root(r, p)
        if goal_distance(sigma, eye, spec, metric) <= alpha:
            break
        p += 1
        if p > MAX_PATH_LENGTH:
            raise ValueError("goal path would exceed the maximum length")
    mats = [x_f0]
    cur = x_f0
    for _ in range(p - 1):
        cur = cur @ sigma
        mats.append(cur)
    mats.append(x_goal_star)
    return GoalPath(mats, alpha, beta, metric)


def switch_select(path: GoalPath, x_f, spec: GateSpec) -> int:
    """Advance to the largest ``q >= q_prev`` whose goal lies within ``beta`` of ``x_f``.

    Raises
    ------
    NoReachableGoal
        If no goal from the current one onward is within ``beta``.
    """
    lo = max(path.q, 1) if path.p >= 1 else 0
    for q in range(path.p, lo - 1, -1):
        if goal_distance(path.matrices[q], x_f, spec, path.metric) <= path.beta:
            path.q = q
            path.history.append(q)
            return q
    raise NoReachableGoal(
        f"no goal with index >= {lo} lies within beta = {path.beta} of the current endpoint"
    )
