"""Average power dQ(tau)/tau for the gamma0 grid, with its small-tau limit.

    python3 scripts/fig3_power.py --out results
"""

import argparse
from pathlib import Path

import numpy as np

from adiabatic_thermo.cli import write_csv
from adiabatic_thermo.models import linear_gamma
from adiabatic_thermo.thermo import average_power, exact_heat, max_heat
from adiabatic_thermo.units import BETA_REF, GAMMA0_GRID, HBAR_OMEGA_REF


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--points", type=int, default=50)
    args = ap.parse_args()

    taus = np.linspace(3e-3 / args.points, 3e-3, args.points)
    qmax = max_heat(HBAR_OMEGA_REF, BETA_REF)
    rows = []
    for g0 in GAMMA0_GRID:
        gbar = 1.5 * g0  # time average of gamma0 (1 + t / tau)
        for tau in taus:
            m, r0 = linear_gamma(gamma0=g0, tau_dec=tau)
            rows.append((g0, tau, exact_heat(m, r0) / tau, average_power(HBAR_OMEGA_REF, BETA_REF, gbar, tau)))
        print(f"gamma0 = {g0:6g} Hz: P(tau -> 0) = 2 gbar dQ_max = {2 * gbar * qmax:.4e} peV/s")
    path = write_csv(args.out / "fig3_power.csv", ("gamma0_Hz", "tau_dec_s", "P_peV_per_s", "P_closed_form_peV_per_s"),
                     rows)
    print(path)


if __name__ == "__main__":
    main()
