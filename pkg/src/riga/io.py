"""Configuration parsing and artifact files.

A run is described by one JSON document with the sections ``system``,
``gate``, ``riga`` and optionally ``outputs`` and ``verify``. Complex matrices
are nested lists whose entries are either real numbers or ``[re, im]`` pairs.
All output files are written atomically (temporary file, then rename).
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from riga import models
from riga.driver import RigaConfig, RunReport
from riga.errors import ConfigError
from riga.integrators import PulseSet, TimeGrid
from riga.problem import GateSpec, ShapingConfig, SystemModel
from riga.seed import SeedCoefficients, SeedConfig
from riga.spectra import Spectrum

__all__ = [
    "RunSetup",
    "load_schema",
    "parse_complex_matrix",
    "encode_complex_matrix",
    "load_config",
    "build_setup",
    "atomic_write_text",
    "pulses_to_csv",
    "pulses_from_csv",
    "write_pulses",
    "read_pulses",
    "convergence_csv",
    "spectra_csv",
    "report_document",
    "validate_report",
]


def load_schema(name: str) -> dict:
    text = resources.files("riga").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def parse_complex_matrix(data) -> np.ndarray:
    """Decode ``[[re, im] | re, ...]`` rows into a complex 2-D array."""
    rows = []
    for row in data:
        out = []
        for x in row:
            if isinstance(x, (list, tuple)):
                out.append(complex(float(x[0]), float(x[1])))
            else:
                out.append(complex(float(x), 0.0))
        rows.append(out)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError("complex matrix rows have different lengths")
    return np.array(rows, dtype=complex)


def encode_complex_matrix(a: np.ndarray) -> list:
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


@dataclass
class RunSetup:
    system: SystemModel
    gate: GateSpec
    config: RigaConfig
    outputs: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    builtin: Optional[str] = None
    params: Any = None


def load_config(path) -> dict:
    """Read and schema-validate a configuration file.

    Raises
    ------
    ConfigError
        For a missing file, malformed JSON (with line and column) or a schema
        violation (with the JSON path of the offending entry).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema("config"))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
    if errors:
        msgs = [f"{path}: at /{'/'.join(map(str, e.path))}: {e.message}" for e in errors]
        raise ConfigError("\n".join(msgs))
    return doc


_PARAM_TYPES = {
    "qubit_chain": models.QubitChainParams,
    "transmon_pair": models.TransmonPairParams,
    "cavity_transmon": models.CavityTransmonParams,
}


def _builtin(name: str, params: dict):
    try:
        p = _PARAM_TYPES[name](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None
    if name == "qubit_chain":
        sys, spec = models.build_qubit_chain(p)
        gates = {"default": spec, "hadamard": spec}
        preset = models.chain_settings(p.N, p)
    elif name == "transmon_pair":
        sys, cnot, prep = models.build_transmon_pair(p)
        gates = {"default": cnot, "cnot": cnot, "bell_prep": prep}
        preset = models.transmon_settings(p)
    else:
        sys, spec = models.build_cavity_transmon(p)
        gates = {"default": spec, "hadamard": spec}
        preset = None
    return p, sys, gates, preset


def build_setup(doc: dict, seed_override: Optional[int] = None,
                max_steps_override: Optional[int] = None) -> RunSetup:
    """Turn a validated configuration document into model objects."""
    sysdoc, gatedoc = doc["system"], doc["gate"]
    builtin, params, gates, preset = None, None, {}, None
    if "builtin" in sysdoc:
        builtin = sysdoc["builtin"]
        params, sys, gates, preset = _builtin(builtin, sysdoc.get("params", {}))
    else:
        drift = parse_complex_matrix(sysdoc["drift"])
        ctrls = np.array([parse_complex_matrix(c) for c in sysdoc["controls"]])
        if sysdoc.get("hamiltonian", True):
            sys = SystemModel.from_hamiltonians(drift, ctrls)
        else:
            sys = SystemModel(drift, ctrls)

    if "builtin" in gatedoc:
        name = gatedoc["builtin"]
        if name not in gates:
            raise ConfigError(f"gate {name!r} is not available for this system")
        gate = gates[name]
    else:
        target = gatedoc.get("target")
        gate = GateSpec(
            parse_complex_matrix(gatedoc["E"]),
            parse_complex_matrix(gatedoc["F"]),
            None if target is None else parse_complex_matrix(target),
        )
    if gate.n != sys.n:
        raise ConfigError(f"gate dimension {gate.n} does not match system dimension {sys.n}")

    r = dict(doc["riga"])
    base: dict = {}
    if r.pop("preset", False):
        if preset is None:
            raise ConfigError("no preset run settings for this system")
        base = {
            "K": preset["K"], "T_f": preset["T_f"], "N_sim": preset["N_sim"],
            "window": preset["window"], "u_max": preset["u_max"], "saturation": "smooth",
            "seed": {**preset["seed"], "apply_window": preset["window"] == "hamming"},
        }
    seed_doc = {**base.get("seed", {}), **r.pop("seed", {})}
    merged = {**{k: v for k, v in base.items() if k != "seed"}, **r}
    for key in ("K", "T_f", "N_sim"):
        if key not in merged:
            raise ConfigError(f"riga.{key} is required (or set riga.preset)")
    shaping = ShapingConfig(
        merged.pop("window", "none"), merged.pop("u_max", None), merged.pop("saturation", "off")
    )
    coef = seed_doc.pop("coefficients", None)
    if seed_override is not None:
        seed_doc["rng_seed"] = seed_override
    seed = SeedConfig(**seed_doc, coefficients=SeedCoefficients.from_json(coef) if coef else None)
    if max_steps_override is not None:
        merged["max_steps"] = max_steps_override
    try:
        cfg = RigaConfig(**merged, shaping=shaping, seed=seed)
    except TypeError as exc:
        raise ConfigError(f"bad riga section: {exc}") from None
    return RunSetup(sys, gate, cfg, dict(doc.get("outputs", {})), dict(doc.get("verify", {})),
                    builtin, params)


# ----------------------------------------------------------------------------
# Files


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _g17(x: float) -> str:
    return "%.17g" % x


def pulses_to_csv(pulses: PulseSet, grid: TimeGrid) -> str:
    """Header ``t,u_1,...,u_m`` then one row per sample (left edges for piecewise)."""
    pulses.check_grid(grid)
    t = grid.sample_times(pulses.mode)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"u_{k + 1}" for k in range(pulses.m)])
    for s in range(pulses.length):
        w.writerow([_g17(t[s])] + [_g17(v) for v in pulses.values[:, s]])
    return buf.getvalue()


def pulses_from_csv(text: str, mode: Optional[str] = None) -> tuple[np.ndarray, PulseSet]:
    """Parse pulses; returns the time column and the pulse set.

    ``mode`` defaults to ``smooth`` when the last time is the horizon of a
    uniform grid containing it, which callers usually know; pass it explicitly
    when possible.
    """
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or rows[0][0] != "t":
        raise ConfigError("pulses file must start with a 't,u_1,...' header")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError("pulses file has no pulse columns")
    return data[:, 0], PulseSet(mode or "smooth", data[:, 1:].T.copy())


def write_pulses(path, pulses: PulseSet, grid: TimeGrid) -> None:
    atomic_write_text(path, pulses_to_csv(pulses, grid))


def read_pulses(path, grid: TimeGrid, mode: str) -> PulseSet:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read pulses {path}: {exc.strerror or exc}") from None
    t, pulses = pulses_from_csv(text, mode)
    try:
        pulses.check_grid(grid)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not np.allclose(t, grid.sample_times(mode), rtol=0, atol=1e-9 * grid.t_f):
        raise ConfigError(f"{path}: time column does not match the configured grid")
    return pulses


def _num(x: float) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else _g17(x)


def convergence_csv(report: RunReport) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "infidelity", "lyapunov", "goal_index", "max_pulse", "wall_ms"])
    for r in report.records:
        w.writerow([r.step, _num(r.infidelity), _num(r.lyapunov), r.goal_index,
                    _num(r.max_pulse), "%.3f" % r.wall_ms])
    return buf.getvalue()


def spectra_csv(spec: Spectrum) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    m = spec.magnitudes.shape[0]
    w.writerow(["frequency"] + [f"u_{k + 1}" for k in range(m)] + ["mean"])
    mean = spec.mean
    for i, f in enumerate(spec.frequencies):
        w.writerow([_g17(f)] + [_g17(v) for v in spec.magnitudes[:, i]] + [_g17(mean[i])])
    return buf.getvalue()


def _finite_or_none(x):
    return None if x is None or not np.isfinite(x) else float(x)


def report_document(command: str, report: RunReport, setup: RunSetup, nyquist=None) -> dict:
    """JSON-ready run report; infidelities are clamped to ``[0, 1]`` here only."""
    cfg = setup.config
    doc = {
        "command": command,
        "reason": report.reason,
        "success": report.success,
        "message": report.message,
        "steps": int(report.steps),
        "final_infidelity": float(np.clip(report.final_infidelity, 0.0, 1.0)),
        "target_infidelity": cfg.target_infidelity,
        "n": setup.system.n,
        "m": setup.system.m,
        "T_f": cfg.T_f,
        "N_sim": cfg.N_sim,
        "variant": report.pulses.mode,
        "max_pulse": report.pulses.max_abs(),
        "rng_seed": cfg.seed.rng_seed,
        "records": [
            {
                "step": r.step,
                "infidelity": float(np.clip(r.infidelity, 0.0, 1.0)),
                "lyapunov": _finite_or_none(r.lyapunov),
                "lyapunov_start": _finite_or_none(r.lyapunov_start),
                "goal_index": int(r.goal_index),
                "goal_saturated": bool(r.goal_saturated),
                "max_pulse": float(r.max_pulse),
                "wall_ms": float(r.wall_ms),
            }
            for r in report.records
        ],
    }
    if nyquist is not None:
        doc["nyquist"] = {"flagged": bool(nyquist.flagged),
                          "fraction_above": float(nyquist.fraction_above),
                          "cutoff": float(nyquist.cutoff)}
    return doc


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, load_schema("report"))
