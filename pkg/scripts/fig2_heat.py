"""Heat exchanged along the ramped-dephasing path versus tau_dec, for the gamma0 grid.

Writes dQ (simulated and closed form) to a CSV and prints the worst deviation.

    python3 scripts/fig2_heat.py --out results
"""

import argparse
from pathlib import Path

import numpy as np

from adiabatic_thermo.cli import write_csv
from adiabatic_thermo.models import linear_gamma
from adiabatic_thermo.thermo import exact_heat, max_heat, total_heat_closed_form
from adiabatic_thermo.units import BETA_REF, GAMMA0_GRID, HBAR_OMEGA_REF


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--points", type=int, default=50, help="tau_dec values in (0, 3] ms")
    args = ap.parse_args()

    taus = np.linspace(3e-3 / args.points, 3e-3, args.points)
    qmax = max_heat(HBAR_OMEGA_REF, BETA_REF)
    rows, worst = [], 0.0
    for g0 in GAMMA0_GRID:
        for tau in taus:
            m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
            q = exact_heat(m, r0)
            cf = total_heat_closed_form(HBAR_OMEGA_REF, BETA_REF, m.dissipators[0].rate, tau)
            worst = max(worst, abs(q - cf) / qmax)
            rows.append((g0, tau, q, cf))
    path = write_csv(args.out / "fig2_heat.csv", ("gamma0_Hz", "tau_dec_s", "dQ_peV", "dQ_closed_form_peV"), rows)
    print(f"{path}: {len(rows)} points, dQ_max = {qmax:.4f} peV, max |dQ - closed form| / dQ_max = {worst:.2e}")


if __name__ == "__main__":
    main()
