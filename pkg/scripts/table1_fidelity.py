"""Minimum fidelity between exact and adiabatic states over tau_dec, per gamma0.

    python3 scripts/table1_fidelity.py --samples 201
"""

import argparse
from pathlib import Path

import numpy as np

from adiabatic_thermo.cli import write_csv
from adiabatic_thermo.dynamics import adiabaticity_report
from adiabatic_thermo.models import energy_eigenbasis_dephasing, linear_gamma
from adiabatic_thermo.units import GAMMA0_GRID


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=101)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()

    taus = np.linspace(0.3e-3, 3e-3, 10)
    r0 = linear_gamma()[1]
    ramp = adiabaticity_report(lambda g, t: linear_gamma(gamma0=g, tau_dec=t)[0], r0, GAMMA0_GRID, taus,
                               args.samples)
    # the moving-eigenbasis model is where the adiabatic approximation is actually tested
    r1 = energy_eigenbasis_dephasing()[1]
    moving = adiabaticity_report(lambda g, t: energy_eigenbasis_dephasing(gamma0=g, tau_dec=t)[0], r1,
                                 GAMMA0_GRID, taus, args.samples)
    print(f"{'gamma0 [Hz]':>12} {'F_min ramp':>14} {'F_min moving basis':>20}")
    for a, b in zip(ramp, moving):
        print(f"{a.gamma0:12g} {a.f_min:14.10f} {b.f_min:20.10f}")
    path = write_csv(args.out / "table1_fidelity.csv",
                     ("gamma0_Hz", "F_min_ramp", "tau_at_min_ramp_s", "F_min_moving", "tau_at_min_moving_s"),
                     [(a.gamma0, a.f_min, a.tau_at_min, b.f_min, b.tau_at_min) for a, b in zip(ramp, moving)])
    print(path)


if __name__ == "__main__":
    main()
