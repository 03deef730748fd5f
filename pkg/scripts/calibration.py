"""Synthetic Rabi traces at the calibration amplitudes, fitted rates and the sqrt(gamma0) line.

    python3 scripts/calibration.py --shots 100000 --seed 0
"""

import argparse
from dataclasses import replace

from adiabatic_thermo.cli import calibration_rows
from adiabatic_thermo.config import builtin
from adiabatic_thermo.tomography import fit_calibration_line

REPORTED_RATES = (182.0, 650.0, 1426.0, 2469.0, 3846.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = builtin("calibration")
    cfg = replace(cfg, seed=args.seed, tomography=replace(cfg.tomography, trace_shots=args.shots))
    rows, line = calibration_rows(cfg)
    print(f"{'A [V]':>6} {'true [Hz]':>10} {'fit [Hz]':>10} {'rel err':>9}")
    for a, truth, fit, err in rows:
        print(f"{a:6.2f} {truth:10.1f} {fit:10.1f} {err:9.2e}")
    print(f"synthetic line: sqrt(gamma0) = {line.slope:.3f} A + {line.intercept:.3f}, gamma_nd = {line.gamma_nd:.2f} Hz")
    ref = fit_calibration_line(cfg.tomography.amplitudes, REPORTED_RATES)
    print(f"reported rates: sqrt(gamma0) = {ref.slope:.3f} A + {ref.intercept:.3f}, gamma_nd = {ref.gamma_nd:.2f} Hz")


if __name__ == "__main__":
    main()
