"""Scenario configuration.

A scenario is one JSON or YAML document.  Physical quantities carry their
unit in the key name (``T1_fs``, ``window_eV``) and every key is checked, so
a misspelt or unit-less field fails loudly instead of taking a default.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ValidationError
from .pulses import T_OVER_FACTOR

MODES = ("uncontrolled", "optimize", "diagnose", "simplify")


@dataclass
class SystemSpec:
    """Where the material system comes from: an archive, or the generator."""

    archive: str | None = None
    n_alpha: int = 2048
    n_q: int = 176
    energy_window_eV: tuple = (4.68, 4.96)
    widths_eV: Any = 0.01
    centers_eV: list | None = None
    center_jitter: float = 0.2
    dipole_range: tuple = (0.5, 1.5)
    cutoff_widths: float | None = None
    E_g_eV: float = 0.0


@dataclass
class PulseSpec:
    alpha_fs: float
    center_eV: float
    amplitude: float = 1.0


def _default_pulses():
    return [PulseSpec(0.1, 4.84), PulseSpec(1.0, 4.84), PulseSpec(20.0, 4.84)]


@dataclass
class ScenarioConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    mode: str = "optimize"
    window_eV: tuple = (4.68, 4.96)
    N_A: int = 128
    T1_fs: float = 150.0
    T2_fs: float = 250.0
    alpha_fs: float = 21.0
    t_min_fs: float | None = None
    t_max_fs: float | None = None
    t_steps: int = 401
    out_dir: str = "out"
    seed: int = 0
    workers: int = 1
    scale_factor: float = 1.0
    K_cond_max: float = 1e12
    basis_cond_max: float = 1e8
    pulses: list = field(default_factory=_default_pulses)
    diagnose_windows_eV: list | None = None
    N_S: int | None = None
    N_R_values: list | None = None

    @property
    def t_over(self) -> float:
        return T_OVER_FACTOR * self.alpha_fs

    def time_grid(self) -> np.ndarray:
        lo = -self.t_over if self.t_min_fs is None else self.t_min_fs
        hi = self.T2_fs + 50.0 if self.t_max_fs is None else self.t_max_fs
        return np.linspace(lo, hi, self.t_steps)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, raw, where):
    if not isinstance(raw, dict):
        raise ValidationError(f"{where} must be a mapping", field=where)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError(f"unknown key(s) in {where}: {', '.join(unknown)}",
                              field=f"{where}.{unknown[0]}")
    return cls(**raw)


def from_dict(raw: dict) -> ScenarioConfig:
    raw = dict(raw or {})
    system = _build(SystemSpec, raw.pop("system", {}) or {}, "system")
    pulses = raw.pop("pulses", None)
    cfg = _build(ScenarioConfig, raw, "config")
    cfg.system = system
    if pulses is not None:
        if not isinstance(pulses, list):
            raise ValidationError("pulses must be a list", field="pulses")
        cfg.pulses = [_build(PulseSpec, p, f"pulses[{i}]") for i, p in enumerate(pulses)]
    validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}", field="config") from None
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot parse config {path}: {exc}", field="config") from None
    return from_dict(raw or {})


def _pair(cfg_obj, name):
    v = getattr(cfg_obj, name)
    try:
        lo, hi = (float(x) for x in v)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a pair of numbers", field=name) from None
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValidationError(f"{name} must satisfy low < high", field=name)
    setattr(cfg_obj, name, (lo, hi))


def _positive(obj, name, integer=False):
    v = getattr(obj, name)
    ok = isinstance(v, (int, np.integer)) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok or not np.isfinite(v) or v <= 0:
        kind = "a positive integer" if integer else "a positive number"
        raise ValidationError(f"{name} must be {kind}, got {v!r}", field=name)


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Field-level checks; raises :class:`ValidationError` naming the field."""
    if cfg.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}", field="mode")
    _pair(cfg, "window_eV")
    for name in ("T1_fs", "T2_fs", "alpha_fs", "K_cond_max", "basis_cond_max"):
        _positive(cfg, name)
    for name in ("N_A", "t_steps", "workers"):
        _positive(cfg, name, integer=True)
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool) or cfg.seed < 0:
        raise ValidationError("seed must be a non-negative integer", field="seed")
    if not cfg.T2_fs > cfg.T1_fs:
        raise ValidationError("T2_fs must exceed T1_fs", field="T2_fs")
    if cfg.mode in ("optimize", "simplify") and cfg.N_A < 2:
        raise ValidationError("N_A must be at least 2 to leave any phase freedom", field="N_A")
    if not np.isfinite(cfg.scale_factor) or cfg.scale_factor == 0:
        raise ValidationError("scale_factor must be finite and non-zero", field="scale_factor")
    t = cfg.time_grid()
    if cfg.mode != "uncontrolled" and (t[0] > -cfg.t_over + 1e-9 or t[-1] < cfg.T2_fs):
        raise ValidationError(
            f"time grid [{t[0]}, {t[-1]}] fs must cover [-t_over, T2] = "
            f"[{-cfg.t_over:.4g}, {cfg.T2_fs}] fs",
            field="t_min_fs",
        )

    s = cfg.system
    if s.archive is None:
        _pair(s, "energy_window_eV")
        _pair(s, "dipole_range")
        _positive(s, "n_alpha", integer=True)
        _positive(s, "n_q", integer=True)
        if s.cutoff_widths is not None:
            _positive(s, "cutoff_widths")
    for i, p in enumerate(cfg.pulses):
        for name in ("alpha_fs", "amplitude"):
            try:
                _positive(p, name)
            except ValidationError as exc:
                raise ValidationError(str(exc), field=f"pulses[{i}].{name}") from None

    if cfg.N_S is not None:
        _positive(cfg, "N_S", integer=True)
        if cfg.N_A % cfg.N_S:
            raise ValidationError("N_S must divide N_A", field="N_S")
    if cfg.N_R_values is not None:
        if not all(isinstance(n, int) and 1 <= n <= cfg.N_A for n in cfg.N_R_values):
            raise ValidationError("N_R_values must be integers in [1, N_A]", field="N_R_values")
    if cfg.diagnose_windows_eV is not None:
        for w in cfg.diagnose_windows_eV:
            if len(w) != 2 or not float(w[1]) > float(w[0]):
                raise ValidationError("each diagnose window must be [E_L, E_H]",
                                      field="diagnose_windows_eV")
    return cfg
