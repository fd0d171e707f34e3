"""Encoded C-NOT on two transmons and what truncation does to it.

Synthesises the gate with three levels per transmon, then replays the pulses
in models with more levels and tracks the population leaving the encoded
subspace. Expect a few minutes of run time.

    python3 demos/cnot_truncation.py [rng_seed]
"""

import sys

from riga import RigaConfig, SeedConfig, ShapingConfig, run_riga
from riga.driver import open_loop, resimulate
from riga.models import (
    TransmonPairParams,
    build_transmon_pair,
    embed_spec,
    forbidden_population,
    transmon_forbidden_isometry,
    transmon_settings,
)


def main(rng_seed: int = 0) -> None:
    p = TransmonPairParams(n_c=3)
    system, cnot, _ = build_transmon_pair(p)
    st = transmon_settings(p)
    cfg = RigaConfig(
        K=st["K"], T_f=st["T_f"], N_sim=st["N_sim"], max_steps=500, target_infidelity=1e-2,
        shaping=ShapingConfig(st["window"], st["u_max"], "smooth"),
        seed=SeedConfig(M=st["seed"]["M"], T=st["seed"]["T"], A_m=st["seed"]["A_m"],
                        rng_seed=rng_seed, apply_window=False),
    )
    report = run_riga(system, cnot, cfg,
                      callback=lambda r: print(f"  step {r.step:3d}  infidelity {r.infidelity:.3e}"))
    print(f"{report.reason}: infidelity {report.final_infidelity:.3e} with n_c = 3")

    traj, _ = open_loop(system, report.pulses, cfg.grid)
    forb = transmon_forbidden_isometry(p.n_c)
    peak = max(forbidden_population(x, cnot.E, forb) for x in traj.samples)
    print(f"peak amplitude in the top level during the gate: {peak:.3f}")

    for n_c in (4, 5, 7):
        big, _, _ = build_transmon_pair(TransmonPairParams(n_c=n_c))
        inf = resimulate(big, report.pulses, cfg.grid, embed_spec(cnot, (3, 3), (n_c, n_c)))
        print(f"same pulses with n_c = {n_c}: infidelity {inf:.3e}")
    print("A large top-level population means the truncated model is not trustworthy; "
          "synthesise with more levels when the replay disagrees.")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
