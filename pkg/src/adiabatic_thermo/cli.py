"""Command-line scenario runner.

    adiabatic-thermo simulate --scenario fig2 --out results/
    adiabatic-thermo sweep --config table1.toml --seed 3 --grid 401
    adiabatic-thermo theorem1 | tomography | calibrate

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import models
from .config import BUILTIN_SCENARIOS, ConfigError, ScenarioConfig, builtin, load_config
from .dynamics import propagate_adiabatic, trajectory_fidelities
from .spectral import AmbiguousTracking, DefectiveLiouvillian
from .thermo import (average_power, bitflip_unitary, conjugation_witness, exact_heat, exact_ledger, gamma_integral,
                     max_heat, total_heat_closed_form)
from .tomography import fit_calibration_line, fit_rabi_decay, qpt_study, simulate_rabi_trace

LEDGER_HEADER = ("t_s", "U_peV", "Q_peV", "W_peV", "S_nats", "beta_deph_inv_peV", "fidelity_exact_vs_adiabatic")

# presets whose heat follows the closed dephasing-qubit forms
_CLOSED_FORM_PRESETS = {"dephasing_qubit", "linear_gamma", "bitflip_conjugate"}


def fmt(x) -> str:
    """Locale-free shortest round-trip representation."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def _tag(point: dict) -> str:
    return "".join(f"_{k}={fmt(v)}" for k, v in point.items())


# -- scenario runners --------------------------------------------------------

def _fidelity_column(model, rho0, ex_traj):
    try:
        ad = propagate_adiabatic(model, rho0, ex_traj.times)
    except (DefectiveLiouvillian, AmbiguousTracking) as exc:
        print(f"warning: adiabatic propagation unavailable ({exc})", file=sys.stderr)
        return np.full(len(ex_traj), np.nan)
    return trajectory_fidelities(ex_traj, ad)


def ledger_rows(cfg: ScenarioConfig, point: dict):
    model, rho0 = cfg.build(**point)
    grid = np.linspace(*model.t_span, cfg.grid.samples)
    led, traj = exact_ledger(model, rho0, grid)
    led.check_first_law()
    fid = _fidelity_column(model, rho0, traj)
    with np.errstate(divide="ignore"):
        temp = 1.0 / led.beta_deph
    return [(t, u, q, w, s, b, f) for t, u, q, w, s, b, f in
            zip(led.times, led.internal_energy, led.heat, led.work, led.entropy, temp, fid)]


def _closed_forms(cfg, point, model, tau):
    if cfg.model.inline is not None or cfg.model.preset not in _CLOSED_FORM_PRESETS:
        return float("nan"), float("nan")
    c = cfg.constants
    params = {**cfg.model.params, **point}
    hw, beta = params.get("hbar_omega", c.hbar_omega), params.get("beta", c.beta)
    rate = model.dissipators[0].rate
    dq = total_heat_closed_form(hw, beta, rate, tau)
    gbar = gamma_integral(rate, tau) / tau
    return dq, average_power(hw, beta, gbar, tau)


def curve_rows(cfg: ScenarioConfig, point: dict):
    rows = []
    key = next(iter(point.values()), "")
    for tau in cfg.grid.tau_values or (cfg.grid.tau_dec,):
        model, rho0 = cfg.build(**point, tau_dec=tau)
        dq = exact_heat(model, rho0)
        dq_cf, p_cf = _closed_forms(cfg, point, model, tau)
        rows.append((key, tau, dq, dq_cf, abs(dq) / tau, p_cf))
    return rows


def _map(cfg: ScenarioConfig, fn, points):
    if cfg.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(fn, points))
    return [fn(p) for p in points]


def run_scenario(cfg: ScenarioConfig, out: Path) -> list[Path]:
    points = cfg.sweep_points()
    paths = []
    for point, rows in zip(points, _map(cfg, lambda p: ledger_rows(cfg, p), points)):
        paths.append(write_csv(out / f"ledger_{cfg.name}{_tag(point)}.csv", LEDGER_HEADER, rows))
    if cfg.grid.tau_values:
        param = cfg.sweep.parameter if cfg.sweep else "point"
        header = (param, "tau_dec_s", "dQ_peV", "dQ_closed_form_peV", "P_avg_peV_per_s", "P_closed_form_peV_per_s")
        curves = _map(cfg, lambda p: curve_rows(cfg, p), points)
        paths.append(write_csv(out / f"{cfg.name}_curves.csv", header, [r for c in curves for r in c]))
    return paths


def sweep_row(cfg: ScenarioConfig, point: dict):
    model, rho0 = cfg.build(**point)
    tau = cfg.grid.tau_dec
    dq = exact_heat(model, rho0)
    f_min = np.inf
    for t in cfg.grid.tau_values or (tau,):
        m, r = cfg.build(**point, tau_dec=t)
        grid = np.linspace(*m.t_span, cfg.grid.samples)
        led, traj = exact_ledger(m, r, grid)
        f_min = min(f_min, float(np.nanmin(_fidelity_column(m, r, traj))))
    return (next(iter(point.values()), ""), dq, f_min, abs(dq) / tau)


def run_sweep(cfg: ScenarioConfig, out: Path) -> Path:
    param = cfg.sweep.parameter if cfg.sweep else "point"
    points = cfg.sweep_points() if cfg.sweep is None or cfg.sweep.values else []
    rows = _map(cfg, lambda p: sweep_row(cfg, p), points)
    return write_csv(out / f"sweep_{cfg.name}.csv", (param, "dQ_peV", "F_min", "P_avg_peV_per_s"), rows)


def theorem1_rows(cfg: ScenarioConfig):
    rows = []
    model, rho0 = cfg.build()
    if cfg.model.preset in _CLOSED_FORM_PRESETS and cfg.model.inline is None:
        scale = abs(max_heat(cfg.model.params.get("hbar_omega", cfg.constants.hbar_omega),
                             cfg.model.params.get("beta", cfg.constants.beta)))
    else:
        scale = float(np.ptp(np.linalg.eigvalsh(model.hamiltonian_at(0.0))))
    cases = []
    if cfg.unitary.bitflip:
        cases.append(("bitflip", model, rho0, bitflip_unitary(), scale))
    if cfg.unitary.identity:
        cases.append(("identity", model, rho0, np.eye(model.dim), scale))
    rng = np.random.default_rng(cfg.seed)
    for k in range(cfg.unitary.random):
        m = models.random_constant_model(rng, tau_dec=cfg.grid.tau_dec)
        r = models.vectorize(models.random_state(rng), m.basis)
        U = models.random_unitary(rng)
        cases.append((f"random_{k}", m, r, U, float(np.ptp(np.linalg.eigvalsh(m.hamiltonian_at(0.0))))))
    for name, m, r, U, s in cases:
        w = conjugation_witness(m, r, U)
        rows.append((name, w.delta_q, w.delta_q_conj, w.difference, w.difference / s))
    return rows


def run_theorem1(cfg: ScenarioConfig, out: Path) -> Path:
    header = ("case", "dQ_peV", "dQ_conj_peV", "abs_diff_peV", "diff_over_dQmax")
    return write_csv(out / f"theorem1_{cfg.name}.csv", header, theorem1_rows(cfg))


def run_tomography(cfg: ScenarioConfig, out: Path) -> Path:
    model, _ = cfg.build()
    tc = cfg.tomography
    study = qpt_study(model, tc.times, tc.shots, max(tc.repetitions, 1), cfg.seed)
    step = np.concatenate([[np.nan], study.mean_step])
    err = np.concatenate([[np.nan], study.step_stderr])
    rows = zip(study.times, study.fidelities[0], study.mean, study.minimum, step, err, study.off_support_noiseless)
    header = ("t_s", "fidelity_single", "fidelity_mean", "fidelity_min", "mean_step", "step_stderr",
              "off_support_noiseless")
    return write_csv(out / f"tomography_{cfg.name}.csv", header, rows)


def calibration_rows(cfg: ScenarioConfig):
    tc = cfg.tomography
    rows, fitted = [], []
    for k, A in enumerate(tc.amplitudes):
        truth = (tc.slope * A + tc.intercept) ** 2
        span = 4.0 / truth
        model, rho0 = models.rabi_decay(tc.rabi_omega, truth, span)
        rng = np.random.default_rng([cfg.seed, k])
        t, p = simulate_rabi_trace(model, rho0, np.linspace(0, span, tc.trace_samples), tc.trace_shots, rng)
        fit = fit_rabi_decay(t, p)
        fitted.append(fit.gamma0)
        rows.append((A, truth, fit.gamma0, fit.gamma0 / truth - 1))
    line = fit_calibration_line(tc.amplitudes, fitted)
    return rows, line


def run_calibrate(cfg: ScenarioConfig, out: Path) -> list[Path]:
    rows, line = calibration_rows(cfg)
    a = write_csv(out / f"calibration_{cfg.name}.csv", ("amplitude_V", "gamma0_true_Hz", "gamma0_fit_Hz", "rel_error"),
                  rows)
    b = write_csv(out / f"calibration_line_{cfg.name}.csv", ("slope_sqrtHz_per_V", "intercept_sqrtHz", "gamma_nd_Hz"),
                  [(line.slope, line.intercept, line.gamma_nd)])
    return [a, b]


# -- entry point -------------------------------------------------------------

_DEFAULT_SCENARIO = {"simulate": "fig2", "sweep": "table1", "theorem1": "theorem1", "tomography": "qpt",
                     "calibrate": "calibration"}
_RUNNERS = {"simulate": run_scenario, "sweep": run_sweep, "theorem1": run_theorem1, "tomography": run_tomography,
            "calibrate": run_calibrate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adiabatic-thermo", description="Open-system heat/work scenario runner")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _RUNNERS:
        s = sub.add_parser(name)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--config", type=Path, help="TOML scenario file")
        src.add_argument("--scenario", choices=BUILTIN_SCENARIOS, help=f"builtin (default {_DEFAULT_SCENARIO[name]})")
        s.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--grid", type=int, default=None, help="samples per trajectory")
        s.add_argument("--workers", type=int, default=None, help="parallel sweep points")
    return p


def _failing_module(exc: BaseException) -> str:
    pkg = Path(__file__).resolve().parent
    name = "cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        f = Path(frame.filename).resolve()
        if f.parent == pkg:
            name = f.stem
    return name


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else builtin(args.scenario or _DEFAULT_SCENARIO[args.command])
        cfg = cfg.with_overrides(args.seed, args.grid)
        if args.workers:
            from dataclasses import replace
            cfg = replace(cfg, workers=args.workers)
        cfg.build()  # resolve the model before any work
    except (ConfigError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        result = _RUNNERS[args.command](cfg, args.out)
    except (ArithmeticError, RuntimeError, AssertionError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {_failing_module(exc)}: {exc}", file=sys.stderr)
        return 3
    for path in result if isinstance(result, list) else [result]:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
