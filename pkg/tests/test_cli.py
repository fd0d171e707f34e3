import json

import pytest

from riga.cli import EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, build_parser, main


def _config(tmp_path, doc):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return str(path)


CHAIN = {
    "system": {"builtin": "qubit_chain", "params": {"N": 2}},
    "gate": {"builtin": "default"},
    "riga": {"preset": True, "max_steps": 150, "seed": {"rng_seed": 0}},
}


def test_run_then_verify(tmp_path):
    cfg = _config(tmp_path, CHAIN)
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_OK
    for name in ("pulses.csv", "convergence.csv", "spectra.csv", "report.json"):
        assert (out / name).exists()
    report = json.loads((out / "report.json").read_text())
    assert report["success"] and report["final_infidelity"] <= 1e-3
    code = main(["verify", "--config", cfg, "--pulses", str(out / "pulses.csv"),
                 "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    ver = json.loads((out / "verify.json").read_text())
    assert ver["infidelity"] == pytest.approx(report["final_infidelity"], abs=1e-12)
    assert ver["unitarity_defect"] < 1e-9
    assert (out / "populations.csv").read_text().startswith("t,good_population")


def test_not_converged_exit_code(tmp_path):
    cfg = _config(tmp_path, CHAIN)
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--max-steps", "1", "--quiet"])
    assert code == EXIT_NOT_CONVERGED


def test_grape_command(tmp_path):
    doc = {**CHAIN, "riga": {"preset": True, "max_steps": 2, "variant": "piecewise",
                             "grape_step": 0.1, "seed": {"rng_seed": 1}}}
    cfg = _config(tmp_path, doc)
    code = main(["grape", "--config", cfg, "--out", str(tmp_path / "g"), "--quiet"])
    assert code == EXIT_NOT_CONVERGED
    report = json.loads((tmp_path / "g" / "report.json").read_text())
    assert report["command"] == "grape" and report["variant"] == "piecewise"


def test_verify_transmon_resimulates(tmp_path):
    doc = {
        "system": {"builtin": "transmon_pair", "params": {"n_c": 3}},
        "gate": {"builtin": "cnot"},
        "riga": {"preset": True, "N_sim": 400, "max_steps": 0},
    }
    cfg = _config(tmp_path, doc)
    out = tmp_path / "t"
    assert main(["run", "--config", cfg, "--out", str(out), "--quiet"]) == EXIT_NOT_CONVERGED
    assert main(["verify", "--config", cfg, "--pulses", str(out / "pulses.csv"),
                 "--out", str(out), "--quiet"]) == EXIT_OK
    ver = json.loads((out / "verify.json").read_text())
    assert 0 <= ver["resim_infidelity"] <= 1
    assert 0 <= ver["max_forbidden_population"] <= 1


def test_errors_exit_one(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_ERROR
    assert "riga: error" in capsys.readouterr().err
    bad = _config(tmp_path, {**CHAIN, "riga": {"preset": True, "u_max": 1e-6, "saturation": "smooth"}})
    assert main(["run", "--config", bad, "--quiet"]) == EXIT_ERROR


def test_parser_requires_subcommand():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
