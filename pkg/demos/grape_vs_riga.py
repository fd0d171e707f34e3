"""Piecewise-constant RIGA against first-order GRAPE on a two-qubit chain.

Both start from the same seed. RIGA corrects the pulses inside the closed
loop, GRAPE takes lagged gradient steps towards a fixed goal.

    python3 demos/grape_vs_riga.py
"""

from dataclasses import replace

from riga import RigaConfig, SeedConfig, ShapingConfig, run_grape, run_riga
from riga.models import QubitChainParams, build_qubit_chain, chain_settings


def main() -> None:
    system, gate = build_qubit_chain(QubitChainParams(N=2))
    st = chain_settings(2)
    base = RigaConfig(
        K=st["K"], T_f=st["T_f"], N_sim=80, variant="piecewise", max_steps=200,
        shaping=ShapingConfig(st["window"], st["u_max"], "smooth"),
        seed=SeedConfig(M=st["seed"]["M"], T=st["seed"]["T"], A_m=st["seed"]["A_m"], rng_seed=0),
    )
    riga = run_riga(system, gate, base)
    grape = run_grape(system, gate, replace(base, grape_step=0.05, strategy="fixed_goal"))
    for name, rep in (("RIGA", riga), ("GRAPE", grape)):
        inf = rep.infidelities()
        marks = [inf[min(k, len(inf) - 1)] for k in (0, 10, 100, len(inf) - 1)]
        print(f"{name:5s} {rep.reason:10s} steps {rep.steps:3d}  infidelity at 0/10/100/end: "
              + "  ".join(f"{v:.2e}" for v in marks))


if __name__ == "__main__":
    main()
