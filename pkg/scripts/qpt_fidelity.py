"""Shot-noised process tomography of the driven dephasing channel at five evolution times.

    python3 scripts/qpt_fidelity.py --repetitions 1000
"""

import argparse

import numpy as np

from adiabatic_thermo.models import qpt_channel
from adiabatic_thermo.tomography import qpt_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shots", type=int, default=100_000)
    ap.add_argument("--repetitions", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    times = np.linspace(0.08e-3, 0.40e-3, 5)
    study = qpt_study(qpt_channel()[0], times, args.shots, args.repetitions, args.seed)
    step = np.concatenate([[np.nan], study.mean_step])
    err = np.concatenate([[np.nan], study.step_stderr])
    print(f"{'t [ms]':>7} {'F single':>10} {'F mean':>10} {'F min':>10} {'step':>10} {'stderr':>9}")
    for k, t in enumerate(times):
        print(f"{t * 1e3:7.2f} {study.fidelities[0, k]:10.6f} {study.mean[k]:10.6f} {study.minimum[k]:10.6f} "
              f"{step[k]:10.2e} {err[k]:9.1e}")
    print(f"mean nondecreasing: {study.monotone()}")


if __name__ == "__main__":
    main()
