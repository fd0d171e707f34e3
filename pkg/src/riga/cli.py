"""Command-line entry point: ``riga run | grape | verify``.

Exit status is 0 when the target infidelity is reached (or verification
completes), 2 when the iteration stops without reaching it, and 1 on any
error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import sys
from pathlib import Path

from riga import models
from riga.driver import open_loop, resimulate, run_grape, run_riga
from riga.errors import RigaError
from riga.integrators import halfstep_distance, halfstep_infidelity, refine_pulses
from riga.io import (
    RunSetup,
    atomic_write_text,
    build_setup,
    convergence_csv,
    load_config,
    read_pulses,
    report_document,
    spectra_csv,
    validate_report,
    write_pulses,
)
from riga.problem import infidelity
from riga.spectra import nyquist_margin, pulse_spectrum

log = logging.getLogger("riga")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


def _out_dir(args, setup: RunSetup) -> Path:
    return Path(args.out or setup.outputs.get("directory") or "riga_out")


def _run_like(args, command: str) -> int:
    setup = build_setup(load_config(args.config), args.seed, args.max_steps)
    runner = run_riga if command == "run" else run_grape

    def progress(rec):
        if not args.quiet:
            print(f"step {rec.step:4d}  infidelity {rec.infidelity:.4e}", file=sys.stderr)

    report = runner(setup.system, setup.gate, setup.config, callback=progress)
    grid = setup.config.grid
    out = _out_dir(args, setup)
    out.mkdir(parents=True, exist_ok=True)
    write_pulses(out / "pulses.csv", report.pulses, grid)
    atomic_write_text(out / "convergence.csv", convergence_csv(report))
    nyq = None
    if setup.outputs.get("spectra", True):
        spec = pulse_spectrum(report.pulses, grid)
        atomic_write_text(out / "spectra.csv", spectra_csv(spec))
        nyq = nyquist_margin(spec, setup.outputs.get("nyquist_fraction", 0.5))
    doc = report_document(command, report, setup, nyq)
    validate_report(doc)
    atomic_write_text(out / "report.json", json.dumps(doc, indent=2) + "\n")
    if not args.quiet:
        print(f"{report.reason}: infidelity {report.final_infidelity:.4e} after "
              f"{report.steps} steps; artifacts in {out}", file=sys.stderr)
    return EXIT_OK if report.success else EXIT_NOT_CONVERGED


def _expanded(setup: RunSetup):
    """Larger truncation of a builtin model and the embedded gate, or ``None``."""
    extra = setup.verify.get("resim_params", {})
    p = setup.params
    if setup.builtin == "transmon_pair":
        big = models.TransmonPairParams(**{**p.__dict__, "n_c": p.n_c + 2, **extra})
        sys_big, cnot, prep = models.build_transmon_pair(big)
        spec = models.embed_spec(setup.gate, (p.n_c, p.n_c), (big.n_c, big.n_c))
        forb = models.transmon_forbidden_isometry(big.n_c)
        return sys_big, spec, forb
    if setup.builtin == "cavity_transmon":
        big = models.CavityTransmonParams(
            **{**p.__dict__, "n_c": p.n_c + 5, "n_t": p.n_t + 2, **extra}
        )
        sys_big, _ = models.build_cavity_transmon(big)
        spec = models.embed_spec(setup.gate, (p.n_c, p.n_t), (big.n_c, big.n_t))
        forb = models.cavity_forbidden_isometry(big.n_c, big.n_t)
        return sys_big, spec, forb
    return None


def _verify(args) -> int:
    setup = build_setup(load_config(args.config))
    cfg = setup.config
    grid = cfg.grid
    pulses = read_pulses(args.pulses, grid, cfg.variant)
    sys_, gate = setup.system, setup.gate
    traj, _ = open_loop(sys_, pulses, grid)
    fine_grid, fine = grid.refined(), refine_pulses(pulses)
    hs1 = halfstep_infidelity(sys_, pulses, grid)
    hs2 = halfstep_infidelity(sys_, fine, fine_grid)
    hd1 = halfstep_distance(sys_, pulses, grid)
    hd2 = halfstep_distance(sys_, fine, fine_grid)
    doc = {
        "infidelity": infidelity(traj.final, gate),
        "halfstep_infidelity": hs1,
        "halfstep_infidelity_refined": hs2,
        "halfstep_infidelity_ratio": hs1 / hs2 if hs2 > 0 else None,
        "halfstep_distance": hd1,
        "halfstep_distance_ratio": hd1 / hd2 if hd2 > 0 else None,
        "unitarity_defect": float(traj.unitarity_defects().max()),
    }
    rows = [["t", "good_population"]]
    t = grid.times
    good = [models.good_population(x, gate) for x in traj.samples]
    big = _expanded(setup)
    forb_series = None
    if big is not None:
        sys_big, spec_big, forb = big
        doc["resim_infidelity"] = resimulate(sys_big, pulses, grid, spec_big)
        traj_big, _ = open_loop(sys_big, pulses, grid)
        forb_series = [models.forbidden_population(x, spec_big.E, forb) for x in traj_big.samples]
        doc["max_forbidden_population"] = float(max(forb_series))
        rows[0].append("forbidden_population")
    for s in range(len(t)):
        row = ["%.17g" % t[s], "%.17g" % good[s]]
        if forb_series is not None:
            row.append("%.17g" % forb_series[s])
        rows.append(row)
    out = _out_dir(args, setup)
    buf = _io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    atomic_write_text(out / "populations.csv", buf.getvalue())
    atomic_write_text(out / "verify.json", json.dumps(doc, indent=2) + "\n")
    if not args.quiet:
        print(json.dumps(doc, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riga", description="Lyapunov-based pulse synthesis")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run RIGA"), ("grape", "run first-order GRAPE"),
                        ("verify", "check a pulse file")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides outputs.directory)")
        p.add_argument("--quiet", action="store_true")
        if name == "verify":
            p.add_argument("--pulses", required=True, help="pulses.csv to verify")
        else:
            p.add_argument("--seed", type=int, help="override the seed rng_seed")
            p.add_argument("--max-steps", type=int, help="override riga.max_steps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    try:
        if args.command == "verify":
            return _verify(args)
        return _run_like(args, args.command)
    except (RigaError, OSError, ValueError) as exc:
        print(f"riga: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
