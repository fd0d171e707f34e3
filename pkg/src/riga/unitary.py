"""Dense complex matrix kernel on the unitary group U(n).

Matrices are plain complex ``numpy`` arrays. Unitary matrices live in U(n),
skew-Hermitian matrices in its Lie algebra u(n), and isometries are ``n x nbar``
arrays with orthonormal columns.

The Cayley pair used throughout the package is

    cayley_forward(X) = (X - I)(X + I)^{-1}        U(n) -> u(n)
    cayley_inverse(W) = -(W - I)^{-1}(W + I)       u(n) -> U(n)

which maps the identity to the zero matrix and an eigenvalue exp(i theta) of
``X`` to the eigenvalue ``i tan(theta / 2)`` of ``W``.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from scipy.stats import unitary_group

from riga.errors import RankDeficient, SingularAtMinusOne

UNITARITY_TOL = 1e-9
EIG_TOL = 1e-8
SVD_TOL = 1e-12

__all__ = [
    "UNITARITY_TOL",
    "EIG_TOL",
    "SVD_TOL",
    "dag",
    "unitarity_defect",
    "skewness_defect",
    "is_unitary",
    "is_isometry",
    "complete_isometry",
    "cayley_forward",
    "cayley_inverse",
    "exp_skew",
    "eigphases",
    "from_eigphases",
    "saturate_eigenphases",
    "pth_root",
    "unitary_projection",
    "partial_distance",
    "random_unitary",
    "random_skew_hermitian",
    "random_isometry",
]


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


def unitarity_defect(x: np.ndarray) -> float:
    """Frobenius norm of ``X^dag X - I``."""
    x = np.asarray(x)
    return float(np.linalg.norm(dag(x) @ x - np.eye(x.shape[-1])))


def skewness_defect(a: np.ndarray) -> float:
    """Frobenius norm of ``A + A^dag``."""
    a = np.asarray(a)
    return float(np.linalg.norm(a + dag(a)))


def is_unitary(x: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    x = np.asarray(x)
    return x.ndim == 2 and x.shape[0] == x.shape[1] and unitarity_defect(x) <= tol


def is_isometry(e: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    e = np.asarray(e)
    if e.ndim != 2 or e.shape[1] > e.shape[0] or e.shape[1] == 0:
        return False
    return np.linalg.norm(dag(e) @ e - np.eye(e.shape[1])) <= tol


def complete_isometry(e: np.ndarray) -> np.ndarray:
    """Return a unitary ``[E, E_hat]`` whose first columns are ``E``."""
    e = np.asarray(e, dtype=complex)
    if e.shape[1] == e.shape[0]:
        return e.copy()
    comp = sla.null_space(dag(e))
    return np.hstack([e, comp])


def cayley_forward(x: np.ndarray, eig_tol: float = EIG_TOL) -> np.ndarray:
    """Cayley coordinates ``(X - I)(X + I)^{-1}`` of a unitary matrix.

    Raises
    ------
    SingularAtMinusOne
        If ``X`` has an eigenvalue within ``eig_tol`` of -1.
    """
    x = np.asarray(x, dtype=complex)
    eye = np.eye(x.shape[0])
    # X is normal, so the singular values of X + I are |1 + lambda_i|.
    smin = np.linalg.svd(x + eye, compute_uv=False).min()
    if smin <= eig_tol:
        raise SingularAtMinusOne(
            f"eigenvalue within {smin:.3e} of -1; Cayley coordinates undefined"
        )
    # (X + I)^{-1} commutes with X - I.
    return np.linalg.solve(x + eye, x - eye)


def cayley_inverse(w: np.ndarray) -> np.ndarray:
    """Inverse Cayley map ``-(W - I)^{-1}(W + I)``; works on stacks of matrices."""
    w = np.asarray(w, dtype=complex)
    eye = np.eye(w.shape[-1])
    return -np.linalg.solve(w - eye, w + eye)


def exp_skew(a: np.ndarray, dt: float = 1.0) -> np.ndarray:
    """``exp(dt * A)`` by Pade approximation with scaling and squaring."""
    return sla.expm(dt * np.asarray(a, dtype=complex))


def eigphases(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenstructure ``R = U^dag diag(exp(i theta)) U`` of a unitary matrix.

    Uses the complex Schur form, which is diagonal for normal matrices, so
    the returned ``U`` is unitary even for clustered eigenvalues. Phases are
    in ``(-pi, pi]``.
    """
    t, z = sla.schur(np.asarray(r, dtype=complex), output="complex")
    theta = np.angle(np.diag(t))
    theta[theta <= -np.pi] = np.pi
    return dag(z), theta


def from_eigphases(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rebuild ``U^dag diag(exp(i theta)) U``."""
    return dag(u) @ (np.exp(1j * np.asarray(theta))[:, None] * u)


def saturate_eigenphases(
    r: np.ndarray, theta_max: float, *, return_flag: bool = False
):
    """Clamp the eigenphases of ``R`` to ``[-theta_max, theta_max]``.

    Eigenvectors are kept. With ``return_flag`` the second return value tells
    whether any phase was actually clamped.
    """
    if not 0 < theta_max <= np.pi:
        raise ValueError("theta_max must lie in (0, pi]")
    u, theta = eigphases(r)
    clamped = np.abs(theta) > theta_max
    if not clamped.any():
        out = np.array(r, dtype=complex, copy=True)
    else:
        out = from_eigphases(u, np.clip(theta, -theta_max, theta_max))
    if return_flag:
        return out, bool(clamped.any())
    return out


def pth_root(r: np.ndarray, p: int) -> np.ndarray:
    """Principal p-th root: eigenphases divided by ``p`` (phase pi stays pi/p)."""
    if int(p) != p or p < 1:
        raise ValueError("p must be a positive integer")
    if p == 1:
        return np.array(r, dtype=complex, copy=True)
    u, theta = eigphases(r)
    return from_eigphases(u, theta / p)


def unitary_projection(x: np.ndarray, svd_tol: float = SVD_TOL) -> np.ndarray:
    """Closest unitary matrix in Frobenius norm (polar factor of ``X``).

    Raises
    ------
    RankDeficient
        If a singular value of ``X`` is not above ``svd_tol``.
    """
    u, s, vh = np.linalg.svd(np.asarray(x, dtype=complex))
    if s.min() <= svd_tol:
        raise RankDeficient(f"smallest singular value {s.min():.3e} <= {svd_tol}")
    return u @ vh


def partial_distance(x1: np.ndarray, x2: np.ndarray, e: np.ndarray) -> float:
    """Seminorm ``||(X1 - X2) E||`` restricted to the columns of ``E``."""
    return float(np.linalg.norm((np.asarray(x1) - np.asarray(x2)) @ e))


def random_unitary(n: int, rng=None) -> np.ndarray:
    """Haar-random unitary."""
    if n == 1:
        rng = np.random.default_rng(rng)
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def random_skew_hermitian(n: int, rng=None, scale: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(rng)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (g - dag(g)) / 2


def random_isometry(n: int, nbar: int, rng=None) -> np.ndarray:
    return random_unitary(n, rng)[:, :nbar]
