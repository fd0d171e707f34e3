"""Benchmark systems: coupled transmons, a cavity dispersively coupled to a
transmon, and a chain of qubits with nearest-neighbour ``ZZ`` coupling.

Time is in nanoseconds and angular frequencies in rad/ns. Parameter classes
take frequencies as ``f / 2pi`` in GHz (the way they are usually quoted) and
multiply by ``2 pi`` when building Hamiltonians.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from riga.errors import ConfigError
from riga.problem import GateSpec, SystemModel
from riga.unitary import dag

__all__ = [
    "TWO_PI",
    "destroy",
    "number",
    "kron_all",
    "TransmonPairParams",
    "CavityTransmonParams",
    "QubitChainParams",
    "build_transmon_pair",
    "build_cavity_transmon",
    "build_qubit_chain",
    "cat_state",
    "hadamard_power",
    "transmon_forbidden_isometry",
    "cavity_forbidden_isometry",
    "embedding_isometry",
    "embed_spec",
    "forbidden_population",
    "good_population",
    "CHAIN_GAIN_FACTORS",
    "CHAIN_HARMONICS",
    "chain_settings",
    "transmon_settings",
]

TWO_PI = 2 * np.pi

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def destroy(n: int) -> np.ndarray:
    """Truncated annihilation operator, ``b|k> = sqrt(k)|k-1>``."""
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def number(n: int) -> np.ndarray:
    return np.diag(np.arange(n)).astype(complex)


def kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops)


def _basis(n: int, k: int) -> np.ndarray:
    v = np.zeros(n, dtype=complex)
    v[k] = 1.0
    return v


# ----------------------------------------------------------------------------
# Coupled transmons


@dataclass(frozen=True)
class TransmonPairParams:
    """Two coupled transmons (frequencies as ``f / 2pi`` in GHz)."""

    f1: float = 3.5
    f2: float = 3.9
    anharm1: float = -0.225
    anharm2: float = -0.225
    coupling: float = 0.1
    drive: float = 1.0
    n_c: int = 7

    def __post_init__(self):
        if self.n_c < 2:
            raise ConfigError("n_c must be at least 2")

    @property
    def omega1(self) -> float:
        return TWO_PI * self.f1


def build_transmon_pair(p: TransmonPairParams):
    """System, encoded C-NOT and Bell-state preparation specs.

    Controls are ``beta (b1 + b1^dag)``, ``beta (b2 + b2^dag)``,
    ``beta b2^dag b2`` and the identity (global phase).

    Returns
    -------
    sys : SystemModel
    cnot : GateSpec
        ``|00>,|01>,|10>,|11> -> |00>,|01>,|11>,|10>``.
    prep : GateSpec
        ``|00> -> (|10> + |01>) / sqrt(2)``.
    """
    nc = p.n_c
    b, nn, eye = destroy(nc), number(nc), np.eye(nc)
    b1, b2 = np.kron(b, eye), np.kron(eye, b)
    n1, n2 = np.kron(nn, eye), np.kron(eye, nn)
    x1, x2 = b1 + dag(b1), b2 + dag(b2)
    w1, w2 = TWO_PI * p.f1, TWO_PI * p.f2
    a1, a2 = TWO_PI * p.anharm1, TWO_PI * p.anharm2
    idn = np.eye(nc * nc)
    h0 = (
        TWO_PI * p.coupling * x1 @ x2
        + w1 * n1 + 0.5 * a1 * n1 @ (n1 - idn)
        + w2 * n2 + 0.5 * a2 * n2 @ (n2 - idn)
    )
    beta = TWO_PI * p.drive
    hs = [beta * x1, beta * x2, beta * n2, idn.astype(complex)]
    sys = SystemModel.from_hamiltonians(h0, hs, labels=("x1", "x2", "n2", "phase"))

    def ket(i, j):
        return _basis(nc * nc, i * nc + j)

    e = np.column_stack([ket(0, 0), ket(0, 1), ket(1, 0), ket(1, 1)])
    f = np.column_stack([ket(0, 0), ket(0, 1), ket(1, 1), ket(1, 0)])
    cnot = GateSpec(e, f, name="cnot")
    prep = GateSpec(ket(0, 0)[:, None], ((ket(1, 0) + ket(0, 1)) / np.sqrt(2))[:, None],
                    name="bell_prep")
    return sys, cnot, prep


def transmon_forbidden_isometry(n_c: int) -> np.ndarray:
    """Columns spanning ``|i j>`` with ``i = n_c - 1`` or ``j = n_c - 1``."""
    idx = [i * n_c + j for i in range(n_c) for j in range(n_c) if n_c - 1 in (i, j)]
    return np.eye(n_c * n_c, dtype=complex)[:, idx]


def transmon_settings(p: TransmonPairParams | None = None) -> dict:
    """Run settings used for the C-NOT benchmark (time in ns)."""
    p = p or TransmonPairParams()
    m_harm = 3
    return {
        "T_f": 10.0,
        "N_sim": 4000,
        "K": 1.0 / p.omega1,
        "u_max": 0.5,
        "window": "none",
        "seed": {"M": m_harm, "T": 19 * m_harm * TWO_PI / p.omega1, "A_m": 0.2 / m_harm},
    }


# ----------------------------------------------------------------------------
# Cavity and transmon


@dataclass(frozen=True)
class CavityTransmonParams:
    """Cavity dispersively coupled to a transmon, in the rotating frame.

    Frequencies are ``f / 2pi`` in GHz. ``alpha_coh`` is the coherent
    amplitude of the logical cat states and ``drive_scale`` the angular
    frequency (rad/ns) of a unit drive input.
    """

    chi: float = 2194.0e-6
    anharm: float = -0.236
    kerr: float = -3.7e-6
    chi2: float = 19.0e-6
    n_c: int = 20
    n_t: int = 4
    alpha_coh: float = 1.5
    drive_scale: float = TWO_PI * 1e-3
    f_cavity: float = 4.4526
    f_transmon: float = 5.664

    def __post_init__(self):
        if self.n_c < 2 or self.n_t < 2:
            raise ConfigError("n_c and n_t must be at least 2")


def cat_state(alpha: float, n_c: int, parity: int) -> np.ndarray:
    """Truncated, renormalised ``sum_k alpha^k / sqrt(k!) |k>`` over ``k = parity (mod 4)``."""
    v = np.zeros(n_c, dtype=complex)
    for k in range(parity, n_c, 4):
        v[k] = alpha**k / math.sqrt(math.factorial(k))
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ConfigError(f"cat state with parity {parity} is empty at n_c = {n_c}")
    return v / norm


def build_cavity_transmon(p: CavityTransmonParams):
    """Rotating-frame system and encoded Hadamard spec.

    The bare ``omega_c a^dag a`` and ``omega_T b^dag b`` terms are dropped;
    Kerr, anharmonic and (second-order) dispersive terms remain. The five
    controls are ``a + a^dag``, ``-i(a - a^dag)``, ``b + b^dag``,
    ``-i(b - b^dag)`` and the identity.
    """
    a = np.kron(destroy(p.n_c), np.eye(p.n_t))
    b = np.kron(np.eye(p.n_c), destroy(p.n_t))
    ad, bd = dag(a), dag(b)
    na, nb = ad @ a, bd @ b
    a2, b2 = ad @ ad @ a @ a, bd @ bd @ b @ b
    h0 = TWO_PI * (
        0.5 * p.kerr * a2 + 0.5 * p.anharm * b2 + p.chi * na @ nb + 0.5 * p.chi2 * a2 @ b2
    )
    g = p.drive_scale
    n = p.n_c * p.n_t
    hs = [g * (a + ad), -1j * g * (a - ad), g * (b + bd), -1j * g * (b - bd), np.eye(n, dtype=complex)]
    sys = SystemModel.from_hamiltonians(h0, hs, labels=("ax", "ay", "bx", "by", "phase"))

    ground, excited = _basis(p.n_t, 0), _basis(p.n_t, 1)
    vac = _basis(p.n_c, 0)
    e = np.column_stack([np.kron(vac, ground), np.kron(vac, excited)])
    f1 = np.kron(cat_state(p.alpha_coh, p.n_c, 0), ground)
    f2 = np.kron(cat_state(p.alpha_coh, p.n_c, 2), ground)
    f = np.column_stack([f1, f2]) @ HADAMARD
    return sys, GateSpec(e, f, name="cat_hadamard")


def cavity_forbidden_isometry(n_c: int, n_t: int) -> np.ndarray:
    """Columns spanning the top cavity level or the top transmon level."""
    idx = [i * n_t + j for i in range(n_c) for j in range(n_t) if i == n_c - 1 or j == n_t - 1]
    return np.eye(n_c * n_t, dtype=complex)[:, idx]


# ----------------------------------------------------------------------------
# Qubit chain


CHAIN_GAIN_FACTORS = (10, 10, 10, 2, 2, 1, 0.5, 0.25, 0.125, 0.0625)
CHAIN_HARMONICS = (10, 10, 11, 10, 14, 14, 14, 14, 14, 14)


@dataclass(frozen=True)
class QubitChainParams:
    """``N`` qubits with couplings given as ``f / 2pi`` in GHz."""

    N: int = 3
    J0: float = 0.1
    J: float = 0.1
    Jg: float = 0.1

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError("N must be at least 2")


def _site(op: np.ndarray, k: int, nq: int) -> np.ndarray:
    ops = [np.eye(2, dtype=complex)] * nq
    ops = list(ops)
    ops[k] = op
    return kron_all(ops)


def hadamard_power(nq: int) -> np.ndarray:
    return kron_all([HADAMARD] * nq)


def build_qubit_chain(p: QubitChainParams):
    """Chain system (``m = 2N + 1`` controls) and the ``N``-fold Hadamard gate.

    Controls are ordered ``x_1, y_1, ..., x_N, y_N`` then the global phase.
    The gate spec has ``E = I`` and ``F = H^{(x)N}``.
    """
    nq = p.N
    if nq > 10:
        warnings.warn(f"a {nq}-qubit chain needs dense {2**nq}x{2**nq} matrices", ResourceWarning)
    n = 2**nq
    h0 = TWO_PI * p.J0 * sum(
        _site(SIGMA_Z, k, nq) @ _site(SIGMA_Z, k + 1, nq) for k in range(nq - 1)
    )
    hs, labels = [], []
    for k in range(nq):
        hs += [TWO_PI * p.J * _site(SIGMA_X, k, nq), TWO_PI * p.J * _site(SIGMA_Y, k, nq)]
        labels += [f"x{k + 1}", f"y{k + 1}"]
    hs.append(TWO_PI * p.Jg * np.eye(n, dtype=complex))
    labels.append("phase")
    sys = SystemModel.from_hamiltonians(h0, hs, labels=labels)
    target = hadamard_power(nq)
    spec = GateSpec(np.eye(n, dtype=complex), target, target=target, name=f"hadamard{nq}")
    return sys, spec


def chain_settings(nq: int, p: QubitChainParams | None = None) -> dict:
    """Run settings for the chain benchmark with ``nq`` qubits (time in ns)."""
    p = p or QubitChainParams(N=nq)
    if not 1 <= nq <= len(CHAIN_GAIN_FACTORS):
        raise ConfigError(f"no preset for N = {nq}")
    t_f = 2.0 * nq
    m_harm = CHAIN_HARMONICS[nq - 1]
    return {
        "T_f": t_f,
        "N_sim": 20 * nq,
        "K": CHAIN_GAIN_FACTORS[nq - 1] / (TWO_PI * p.J),
        "u_max": 5.0,
        "window": "hamming",
        "seed": {"M": m_harm, "T": np.pi * t_f, "A_m": 2.0 / m_harm},
    }


# ----------------------------------------------------------------------------
# Diagnostics and embeddings


def forbidden_population(x, e, forb) -> float:
    """Largest column norm of ``Pi_forb X E`` with ``Pi_forb = forb forb^dag``."""
    b = dag(np.asarray(forb)) @ np.asarray(x) @ np.asarray(e)
    return float(np.linalg.norm(b, axis=0).max())


def good_population(x, spec: GateSpec) -> float:
    """Smallest modulus on the diagonal of ``F^dag X E``."""
    g = dag(spec.F) @ np.asarray(x) @ spec.E
    return float(np.abs(np.diag(g)).min())


def embedding_isometry(dims_from: Sequence[int], dims_to: Sequence[int]) -> np.ndarray:
    """Isometry sending each product basis state of the smaller truncation to the same state of the larger."""
    if len(dims_from) != len(dims_to) or any(a > b for a, b in zip(dims_from, dims_to)):
        raise ConfigError("target truncation must contain the source truncation")
    n_from, n_to = int(np.prod(dims_from)), int(np.prod(dims_to))
    p = np.zeros((n_to, n_from), dtype=complex)
    for idx in np.ndindex(*dims_from):
        p[np.ravel_multi_index(idx, dims_to), np.ravel_multi_index(idx, dims_from)] = 1.0
    return p


def embed_spec(spec: GateSpec, dims_from: Sequence[int], dims_to: Sequence[int]) -> GateSpec:
    p = embedding_isometry(dims_from, dims_to)
    return GateSpec(p @ spec.E, p @ spec.F, name=spec.name)
