"""Scenario configuration: dataclasses, TOML loading and the builtin scenarios.

A scenario file looks like::

    name = "fig2"
    seed = 7

    [model]
    preset = "linear_gamma"          # or an inline model below
    params = { gamma0 = 314.0 }

    [model.inline]
    hamiltonian = { x = 82.662 }     # Pauli coefficients, peV
    [[model.inline.dissipators]]
    jump = { z = 1.0 }
    gamma = { kind = "linear_ramp", gamma0 = 314.0 }

    [grid]
    tau_dec = 1e-3
    samples = 201

    [sweep]
    parameter = "gamma0"
    values = [314.0, 628.0]
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import models
from .superop import Dissipator, LindbladModel, vectorize
from .thermo import thermal_state
from .units import BETA_REF, EV_TO_PEV, GAMMA0_GRID, HBAR_EV_S, HBAR_OMEGA_REF, KB_EV_PER_K

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Constants:
    hbar_ev_s: float = HBAR_EV_S
    kb_ev_per_k: float = KB_EV_PER_K
    hbar_omega: float = HBAR_OMEGA_REF  # peV
    beta: float = BETA_REF  # peV^-1

    @property
    def hbar(self) -> float:
        return self.hbar_ev_s * EV_TO_PEV


@dataclass(frozen=True)
class RateSpec:
    kind: str = "constant"  # constant | linear_ramp | table
    value: float = 0.0
    gamma0: float = 0.0
    tau: float | None = None  # ramp time; defaults to the grid's tau_dec
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def build(self, tau_dec: float):
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "linear_ramp":
            return models.linear_ramp(self.gamma0, self.tau or tau_dec)
        if self.kind == "table":
            ts, vs = np.asarray(self.times, float), np.asarray(self.values, float)
            return lambda t: float(np.interp(t, ts, vs))
        raise ConfigError(f"unknown rate kind {self.kind!r}")


@dataclass(frozen=True)
class DissipatorSpec:
    jump: dict[str, float]
    gamma: RateSpec = RateSpec()


@dataclass(frozen=True)
class InlineModel:
    hamiltonian: dict[str, float]
    dissipators: tuple[DissipatorSpec, ...] = ()
    initial: str = "thermal"  # thermal | ground | excited | mixed


@dataclass(frozen=True)
class ModelSpec:
    preset: str | None = "linear_gamma"
    params: dict[str, Any] = field(default_factory=dict)
    inline: InlineModel | None = None


@dataclass(frozen=True)
class GridSpec:
    tau_dec: float = 1e-3
    samples: int = 201
    # process durations for ΔQ / P curves; empty means just tau_dec
    tau_values: tuple[float, ...] = ()


@dataclass(frozen=True)
class SweepSpec:
    parameter: str = "gamma0"
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class UnitarySpec:
    random: int = 0  # number of random (model, U) pairs
    bitflip: bool = True
    identity: bool = True


@dataclass(frozen=True)
class TomographySpec:
    times: tuple[float, ...] = (0.08e-3, 0.16e-3, 0.24e-3, 0.32e-3, 0.40e-3)
    shots: int = 100_000
    repetitions: int = 200
    amplitudes: tuple[float, ...] = (0.4, 0.8, 1.2, 1.6, 2.0)
    slope: float = 29.81
    intercept: float = 1.74
    rabi_omega: float = 2 * math.pi * 1e3
    trace_samples: int = 400
    trace_shots: int | None = 100_000


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    model: ModelSpec = ModelSpec()
    constants: Constants = Constants()
    grid: GridSpec = GridSpec()
    sweep: SweepSpec | None = None
    unitary: UnitarySpec = UnitarySpec()
    tomography: TomographySpec = TomographySpec()
    seed: int = 0
    workers: int = 1

    def with_overrides(self, seed: int | None = None, samples: int | None = None) -> "ScenarioConfig":
        out = self
        if seed is not None:
            out = replace(out, seed=int(seed))
        if samples is not None:
            if samples < 3:
                raise ConfigError("--grid needs at least 3 samples")
            out = replace(out, grid=replace(out.grid, samples=int(samples)))
        return out

    def sweep_points(self) -> list[dict[str, float]]:
        if self.sweep is None:
            return [{}]
        return [{self.sweep.parameter: v} for v in self.sweep.values]

    def build(self, **overrides):
        """(model, rho0) for one sweep point."""
        return build_model(self, **overrides)


# -- model resolution --------------------------------------------------------

_PRESET_CONSTANTS = {
    "dephasing_qubit", "linear_gamma", "energy_eigenbasis_dephasing", "bitflip_conjugate", "closed_unitary",
}


def build_model(cfg: ScenarioConfig, **overrides) -> tuple[LindbladModel, Any]:
    spec = cfg.model
    tau = float(overrides.pop("tau_dec", cfg.grid.tau_dec))
    if spec.inline is not None:
        return _build_inline(cfg, spec.inline, tau, overrides)
    params = dict(spec.params)
    params.update(overrides)
    entry = models.PRESETS.get(spec.preset)
    if entry is None:
        raise ConfigError(f"unknown preset {spec.preset!r}; known: {', '.join(sorted(models.PRESETS))}")
    if spec.preset in _PRESET_CONSTANTS:
        params.setdefault("hbar_omega", cfg.constants.hbar_omega)
        params.setdefault("beta", cfg.constants.beta)
        params.setdefault("tau_dec", tau)
    elif "t_max" not in params:
        params["t_max"] = tau
    try:
        return entry.build(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for preset {spec.preset!r}: {exc}") from exc


def _build_inline(cfg, inline: InlineModel, tau, overrides):
    H = models.pauli_hamiltonian(inline.hamiltonian)
    dim = H.shape[0]
    dis = []
    for d in inline.dissipators:
        rate = d.gamma
        if "gamma0" in overrides:
            g0 = float(overrides["gamma0"])
            rate = replace(rate, gamma0=g0, value=g0 if rate.kind == "constant" else rate.value)
        dis.append(Dissipator(models.pauli_hamiltonian(d.jump), rate.build(tau)))
    model = LindbladModel(dim, H, tuple(dis), (0.0, tau), hbar=cfg.constants.hbar, name=cfg.name)
    if inline.initial == "thermal":
        rho = thermal_state(H, cfg.constants.beta)
    elif inline.initial in ("ground", "excited"):
        w, V = np.linalg.eigh(H)
        k = V[:, 0] if inline.initial == "ground" else V[:, -1]
        rho = np.outer(k, k.conj())
    elif inline.initial == "mixed":
        rho = np.eye(dim) / dim
    else:
        raise ConfigError(f"unknown initial state {inline.initial!r}")
    return model, vectorize(rho, model.basis)


# -- parsing -------------------------------------------------------------

def _take(d: dict, key: str, kind, default, where: str):
    if key not in d:
        return default
    v = d[key]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(v).__name__}")
    return v


def _floats(v, where: str, positive: bool = False) -> tuple[float, ...]:
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"{where}: expected a list of numbers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{where}: non-numeric entry {x!r}")
        x = float(x)
        if not math.isfinite(x) or (positive and x <= 0):
            raise ConfigError(f"{where}: entry {x!r} must be finite{' and positive' if positive else ''}")
        out.append(x)
    return tuple(out)


def _check_keys(d: dict, allowed: set[str], where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _coeffs(d, where) -> dict[str, float]:
    if not isinstance(d, dict) or not d:
        raise ConfigError(f"{where}: expected a table of Pauli coefficients")
    out = {}
    for k, v in d.items():
        if set(k) - set("ixyz"):
            raise ConfigError(f"{where}: bad Pauli label {k!r}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}.{k}: coefficient must be a number")
        out[k] = float(v)
    if len({len(k) for k in out}) != 1:
        raise ConfigError(f"{where}: Pauli labels of different lengths")
    return out


def _parse_rate(d, where) -> RateSpec:
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        if not d >= 0:
            raise ConfigError(f"{where}: negative dephasing rate")
        return RateSpec("constant", value=float(d))
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a number or a table")
    _check_keys(d, {"kind", "value", "gamma0", "tau", "times", "values"}, where)
    kind = _take(d, "kind", str, "constant", where)
    spec = RateSpec(kind, _take(d, "value", float, 0.0, where), _take(d, "gamma0", float, 0.0, where),
                    _take(d, "tau", float, None, where),
                    _floats(d.get("times", []), f"{where}.times"), _floats(d.get("values", []), f"{where}.values"))
    if kind not in ("constant", "linear_ramp", "table"):
        raise ConfigError(f"{where}.kind: unknown rate kind {kind!r}")
    if kind == "table" and (len(spec.times) < 2 or len(spec.times) != len(spec.values)):
        raise ConfigError(f"{where}: table needs matching times/values with at least 2 entries")
    if min((spec.value, spec.gamma0) + spec.values) < 0:
        raise ConfigError(f"{where}: negative dephasing rate")
    return spec


def _parse_model(d, where="model") -> ModelSpec:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected a table")
    _check_keys(d, {"preset", "params", "inline"}, where)
    params = d.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}.params: expected a table")
    inline = None
    if "inline" in d:
        il = d["inline"]
        _check_keys(il, {"hamiltonian", "dissipators", "initial"}, f"{where}.inline")
        if "hamiltonian" not in il:
            raise ConfigError(f"{where}.inline: missing hamiltonian")
        dis = []
        for i, e in enumerate(il.get("dissipators", [])):
            w = f"{where}.inline.dissipators[{i}]"
            _check_keys(e, {"jump", "gamma"}, w)
            if "jump" not in e:
                raise ConfigError(f"{w}: missing jump")
            dis.append(DissipatorSpec(_coeffs(e["jump"], f"{w}.jump"), _parse_rate(e.get("gamma", 0.0), f"{w}.gamma")))
        inline = InlineModel(_coeffs(il["hamiltonian"], f"{where}.inline.hamiltonian"), tuple(dis),
                             _take(il, "initial", str, "thermal", f"{where}.inline"))
        preset = None
    else:
        preset = _take(d, "preset", str, "linear_gamma", where)
        if preset not in models.PRESETS:
            raise ConfigError(f"{where}.preset: unknown preset {preset!r}")
    return ModelSpec(preset, dict(params), inline)


def parse_config(data: dict) -> ScenarioConfig:
    top = {"name", "seed", "workers", "model", "constants", "grid", "sweep", "unitary", "tomography"}
    _check_keys(data, top, "config")
    cfg = ScenarioConfig(name=_take(data, "name", str, "scenario", "config"),
                         seed=_take(data, "seed", int, 0, "config"),
                         workers=max(1, _take(data, "workers", int, 1, "config")))
    if "model" in data:
        cfg = replace(cfg, model=_parse_model(data["model"]))
    if "constants" in data:
        c = data["constants"]
        _check_keys(c, {"hbar_ev_s", "kb_ev_per_k", "hbar_omega", "beta", "beta_inv"}, "constants")
        beta = _take(c, "beta", float, BETA_REF, "constants")
        if "beta_inv" in c:
            beta = 1.0 / _take(c, "beta_inv", float, 1.0 / BETA_REF, "constants")
        cons = Constants(_take(c, "hbar_ev_s", float, HBAR_EV_S, "constants"),
                         _take(c, "kb_ev_per_k", float, KB_EV_PER_K, "constants"),
                         _take(c, "hbar_omega", float, HBAR_OMEGA_REF, "constants"), beta)
        if min(cons.hbar_ev_s, cons.kb_ev_per_k, cons.beta) <= 0:
            raise ConfigError("constants must be positive")
        cfg = replace(cfg, constants=cons)
    if "grid" in data:
        g = data["grid"]
        _check_keys(g, {"tau_dec", "samples", "tau_values"}, "grid")
        grid = GridSpec(_take(g, "tau_dec", float, 1e-3, "grid"), _take(g, "samples", int, 201, "grid"),
                        _floats(g.get("tau_values", []), "grid.tau_values", positive=True))
        if grid.tau_dec <= 0 or grid.samples < 3:
            raise ConfigError("grid: tau_dec must be positive and samples >= 3")
        cfg = replace(cfg, grid=grid)
    if "sweep" in data:
        s = data["sweep"]
        _check_keys(s, {"parameter", "values"}, "sweep")
        cfg = replace(cfg, sweep=SweepSpec(_take(s, "parameter", str, "gamma0", "sweep"),
                                           _floats(s.get("values", []), "sweep.values")))
        if cfg.sweep.parameter in ("gamma0", "tau_dec") and any(v < 0 for v in cfg.sweep.values):
            raise ConfigError("sweep.values: negative entries")
    if "unitary" in data:
        u = data["unitary"]
        _check_keys(u, {"random", "bitflip", "identity"}, "unitary")
        cfg = replace(cfg, unitary=UnitarySpec(_take(u, "random", int, 0, "unitary"),
                                               _take(u, "bitflip", bool, True, "unitary"),
                                               _take(u, "identity", bool, True, "unitary")))
    if "tomography" in data:
        t = data["tomography"]
        keys = set(TomographySpec.__dataclass_fields__)
        _check_keys(t, keys, "tomography")
        kw = {}
        for k in ("times", "amplitudes"):
            if k in t:
                kw[k] = _floats(t[k], f"tomography.{k}", positive=True)
        for k in ("shots", "repetitions", "trace_samples"):
            if k in t:
                kw[k] = _take(t, k, int, None, "tomography")
        for k in ("slope", "intercept", "rabi_omega"):
            if k in t:
                kw[k] = _take(t, k, float, None, "tomography")
        if "trace_shots" in t:
            kw["trace_shots"] = _take(t, "trace_shots", int, None, "tomography") or None
        cfg = replace(cfg, tomography=TomographySpec(**kw))
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


# -- builtin scenarios -------------------------------------------------------

_FIG_TAUS = tuple(float(x) for x in np.linspace(0.06e-3, 3e-3, 50))


def builtin(name: str) -> ScenarioConfig:
    sweep = SweepSpec("gamma0", GAMMA0_GRID)
    ramp = ModelSpec("linear_gamma")
    table = {
        "fig2": ScenarioConfig("fig2", ramp, grid=GridSpec(3e-3, 201, _FIG_TAUS), sweep=sweep),
        "fig3": ScenarioConfig("fig3", ramp, grid=GridSpec(3e-3, 201, _FIG_TAUS), sweep=sweep),
        "table1": ScenarioConfig("table1", ramp, grid=GridSpec(1e-3, 101, tuple(np.linspace(0.3e-3, 3e-3, 10))),
                                 sweep=sweep),
        "theorem1": ScenarioConfig("theorem1", ramp, unitary=UnitarySpec(random=50)),
        "qpt": ScenarioConfig("qpt", ModelSpec("qpt_channel"), grid=GridSpec(0.4e-3, 101)),
        "calibration": ScenarioConfig("calibration", ModelSpec("rabi_decay")),
        "energy_basis": ScenarioConfig("energy_basis", ModelSpec("energy_eigenbasis_dephasing"),
                                       grid=GridSpec(1e-3, 201)),
        "zero_gamma": ScenarioConfig("zero_gamma", ModelSpec("dephasing_qubit", {"gamma0": 0.0}),
                                     grid=GridSpec(1e-3, 101)),
    }
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; builtin: {', '.join(sorted(table))}") from None


BUILTIN_SCENARIOS = ("fig2", "fig3", "table1", "theorem1", "qpt", "calibration", "energy_basis", "zero_gamma")
