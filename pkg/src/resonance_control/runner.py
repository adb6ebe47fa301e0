"""End-to-end scenarios: each ``run_*`` takes a config and fills an output directory.

Every run writes ``manifest.json`` with the config echo, library versions,
seed and the SHA-256 of each file produced.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import warnings
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .control import (relative_control, scale_solution, synthesize_field,
                      write_solutions_csv)
from .diagnostics import (correlation_report, report_markdown, write_report_csv)
from .dynamics import (doorway_coefficients, population, population_c,
                       population_trace)
from .errors import CoarseGrainingWarning, NumericalError, ValidationError
from .pulses import (GaussianBasis, GaussianPulse, ShapedField, basis_condition, fmt,
                     uniform_basis, write_spectrum_csv, write_time_csv)
from .simplify import (achieved_ratio, local_average, retention_sweep, smooth_expand,
                       write_retention_csv)
from .system import (bin_system, generate_synthetic, identity_binning, load_archive,
                     save_archive, uniform_centers)

RATIO_CHECK = 1e-6


@dataclass
class RunResult:
    out_dir: Path
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


class _Run:
    def __init__(self, cfg: ScenarioConfig, command: str, plots: bool):
        self.cfg = cfg
        self.command = command
        self.plots = plots
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.result = RunResult(self.out)

    def path(self, name) -> Path:
        p = self.out / name
        self.result.outputs.append(p)
        return p

    def plot(self, name, fn, *args, **kw):
        if self.plots:
            fn(self.path(name), *args, **kw)

    def finish(self) -> RunResult:
        if self.result.summary:
            with self.path("summary.json").open("w") as fh:
                json.dump(self.result.summary, fh, indent=2, sort_keys=True)
        write_manifest(self.out / "manifest.json", self.cfg, self.command, self.result.outputs)
        return self.result


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("numpy", "scipy", "matplotlib", "pyyaml", "artifact"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, cfg: ScenarioConfig, command: str, outputs) -> Path:
    path = Path(path)
    doc = {
        "command": command,
        "seed": cfg.seed,
        "workers": cfg.workers,
        "config": cfg.to_dict(),
        "versions": _versions(),
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=list) + "\n")
    return path


# --- system ------------------------------------------------------------------

def build_system(cfg: ScenarioConfig):
    """Load the configured archive or draw the seeded synthetic system."""
    s = cfg.system
    if s.archive is not None:
        try:
            data = Path(s.archive).read_bytes()
        except OSError as exc:
            raise ValidationError(f"cannot read archive {s.archive}: {exc}",
                                  field="system.archive") from None
        return load_archive(data)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = s.energy_window_eV
    if s.centers_eV is None:
        spacing = (hi - lo) / s.n_q
        centers = uniform_centers(s.n_q, (lo, hi))
        centers = centers + rng.uniform(-s.center_jitter, s.center_jitter, s.n_q) * spacing
        centers = np.clip(centers, lo, hi)
    else:
        centers = np.asarray(s.centers_eV, float)
    dipoles = rng.uniform(*s.dipole_range, s.n_q)
    return generate_synthetic(s.n_alpha, s.n_q, (lo, hi), s.widths_eV, centers, dipoles,
                              seed=cfg.seed, cutoff_widths=s.cutoff_widths, E_g=s.E_g_eV)


def run_generate(cfg: ScenarioConfig, *, plots: bool = True) -> RunResult:
    run = _Run(cfg, "generate", plots)
    sys = build_system(cfg)
    run.path("system.json").write_bytes(save_archive(sys, {"seed": cfg.seed,
                                                           "system": cfg.to_dict()["system"]}))
    run.result.summary = {"n_alpha": sys.n_alpha, "n_q": sys.n_q, "span_eV": list(sys.span())}
    return run.finish()


# --- uncontrolled ------------------------------------------------------------

def run_uncontrolled(cfg: ScenarioConfig, *, plots: bool = True) -> RunResult:
    """Single-Gaussian drives on the unbinned kernel, plus the delta-pulse reference."""
    run = _Run(cfg, "propagate", plots)
    sys = build_system(cfg)
    full = identity_binning(sys)
    t = cfg.time_grid()
    traces, envelopes = {}, {}
    with run.path("populations_uncontrolled.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pulse", "alpha_fs", "center_eV", "t_fs", "P_S2", "P_S1_remainder",
                    "field_envelope"])
        for i, p in enumerate(cfg.pulses):
            omega = (p.center_eV - sys.E_g) / sys.hbar
            basis = GaussianBasis((GaussianPulse(p.amplitude, p.alpha_fs, omega),))
            f = ShapedField(basis, [1.0], full.omega_A)
            rows = population_trace(f, full, t, workers=cfg.workers)
            for r in rows:
                w.writerow([i, fmt(p.alpha_fs), fmt(p.center_eV), *map(fmt, r)])
            label = f"alpha={p.alpha_fs:g} fs, {p.center_eV:g} eV"
            traces[label], envelopes[label] = rows[:, 1], rows[:, 3]

    tc = t[t >= 0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGrainingWarning)
        pc = population_c(doorway_coefficients(sys), sys, tc, workers=cfg.workers)
    with run.path("reference_doorway.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_fs", "P_S2"])
        w.writerows([[fmt(a), fmt(b)] for a, b in zip(tc, pc)])

    from .plotting import plot_populations
    run.plot("populations_uncontrolled.png", plot_populations, t, traces,
             envelopes=envelopes, title="single Gaussian pulses")
    run.result.summary = {"pulses": len(cfg.pulses), "t_points": int(t.size)}
    return run.finish()


# --- optimize ----------------------------------------------------------------

@dataclass
class Optimized:
    binned: object
    basis: GaussianBasis
    solutions: list
    fields: list
    ratios: np.ndarray


def optimize(cfg: ScenarioConfig, sys=None) -> Optimized:
    """Solve the relative problem and check every eigenpair by propagation."""
    sys = build_system(cfg) if sys is None else sys
    binned = bin_system(sys, cfg.window_eV, cfg.N_A)
    basis = uniform_basis(binned.omega_A, cfg.alpha_fs)
    sols = relative_control(binned, cfg.T1_fs, cfg.T2_fs, cond_threshold=cfg.K_cond_max,
                            t_over=basis.t_over)
    fields = [synthesize_field(s, binned, basis, cfg.basis_cond_max) for s in sols]
    ratios = np.array([achieved_ratio(f, binned, cfg.T1_fs, cfg.T2_fs) for f in fields])
    lams = np.array([s.lam for s in sols])
    err = np.abs(ratios / lams - 1)
    if np.max(err) > RATIO_CHECK:
        k = int(np.argmax(err))
        raise NumericalError(
            f"propagated ratio {ratios[k]:.6e} misses lambda {lams[k]:.6e} "
            f"(relative error {err[k]:.2e} > {RATIO_CHECK:g})"
        )
    return Optimized(binned, basis, sols, fields, ratios)


def run_optimize(cfg: ScenarioConfig, *, plots: bool = True) -> RunResult:
    run = _Run(cfg, "optimize", plots)
    opt = optimize(cfg)
    b, sols = opt.binned, opt.solutions
    s_min = sols[0]
    s_max = scale_solution(sols[-1], cfg.scale_factor)
    f_min = opt.fields[0]
    f_max = synthesize_field(s_max, b, opt.basis, cfg.basis_cond_max)

    write_solutions_csv(run.path("solutions.csv"), sols, b)
    for name, f in (("min", f_min), ("max", f_max)):
        write_spectrum_csv(run.path(f"field_{name}_spectrum.csv"), b.omega_A, f.spectrum(),
                           extra={"bin": range(b.n_bins), "E_eV": b.E_A})

    t = cfg.time_grid()
    p_min = population(f_min, b, t, workers=cfg.workers, warn=False)
    p_max = population(f_max, b, t, workers=cfg.workers, warn=False)
    env_min, env_max = np.abs(f_min.time_profile(t)), np.abs(f_max.time_profile(t))
    with run.path("populations_controlled.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_fs", "P_min", "P_max_scaled", "envelope_min", "envelope_max_scaled"])
        for row in zip(t, p_min, p_max, env_min, env_max):
            w.writerow(list(map(fmt, row)))
    write_time_csv(run.path("field_min_time.csv"), t, f_min.time_profile(t))
    write_time_csv(run.path("field_max_time.csv"), t, f_max.time_profile(t))

    from .plotting import plot_field_spectrum, plot_populations
    run.plot("populations_controlled.png", plot_populations, t,
             {"min ratio": p_min, f"max ratio x {cfg.scale_factor:g}": p_max},
             envelopes={"min": env_min, "max": env_max},
             title="optimised populations", marks=(cfg.T1_fs, cfg.T2_fs))
    run.plot("field_spectra.png", plot_field_spectrum, b.E_A,
             {"min": f_min.spectrum(), "max": f_max.spectrum()})

    lams = np.array([s.lam for s in sols])
    run.result.summary = {
        "lambda_min": float(lams[0]),
        "lambda_max": float(lams[-1]),
        "cond_K_T1": s_min.cond_K_T1,
        "cond_B": basis_condition(opt.basis, b.omega_A),
        "t_over_fs": opt.basis.t_over,
        "max_ratio_error": float(np.max(np.abs(opt.ratios / lams - 1))),
        "scale_factor": cfg.scale_factor,
    }
    return run.finish()


# --- diagnose / simplify -----------------------------------------------------

def run_diagnose(cfg: ScenarioConfig, *, plots: bool = True) -> RunResult:
    run = _Run(cfg, "diagnose", plots)
    sys = build_system(cfg)
    windows = cfg.diagnose_windows_eV or [cfg.window_eV]
    reports = correlation_report(sys, windows, cfg.T1_fs, cfg.T2_fs, cfg.N_A, cfg.K_cond_max)
    write_report_csv(run.path("measures.csv"), reports)
    run.path("measures.md").write_text(report_markdown(reports))
    from .plotting import plot_measures
    run.plot("measures.png", plot_measures, reports)
    run.result.summary = {"windows": len(reports),
                          "control_range": [r.control_range for r in reports]}
    return run.finish()


def default_n_r(n_a: int) -> list:
    step = max(1, n_a // 16)
    values = list(range(step, n_a + 1, step))
    return values if values[-1] == n_a else values + [n_a]


def run_simplify(cfg: ScenarioConfig, *, plots: bool = True) -> RunResult:
    run = _Run(cfg, "simplify", plots)
    opt = optimize(cfg)
    b = opt.binned
    s_min, s_max = opt.solutions[0], opt.solutions[-1]
    f_min, f_max = opt.fields[0], opt.fields[-1]
    n_s = cfg.N_S or max(1, cfg.N_A // 2)
    span0 = s_max.lam - s_min.lam

    rows = []
    for method, fn in (("local_average", lambda f: local_average(f, n_s)),
                       ("smooth_expand", lambda f: smooth_expand(local_average(f, n_s), n_s))):
        lo = achieved_ratio(fn(f_min), b, cfg.T1_fs, cfg.T2_fs)
        hi = achieved_ratio(fn(f_max), b, cfg.T1_fs, cfg.T2_fs)
        rows.append([method, n_s, lo, hi, 1 - abs(hi - lo) / span0])
    with run.path("averaging.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "N_S", "achieved_min_ratio", "achieved_max_ratio",
                    "span_reduction"])
        for r in rows:
            w.writerow([r[0], r[1], *map(fmt, r[2:])])

    n_r = cfg.N_R_values or default_n_r(cfg.N_A)
    table = retention_sweep(b, s_min, s_max, n_r, cfg.alpha_fs, workers=cfg.workers)
    write_retention_csv(run.path("retention.csv"), table)
    from .plotting import plot_retention
    run.plot("retention.png", plot_retention, table, s_min.lam, s_max.lam)
    run.result.summary = {
        "lambda_min": s_min.lam,
        "lambda_max": s_max.lam,
        "span_reduction": {r[0]: r[4] for r in rows},
    }
    return run.finish()


RUNNERS = {
    "generate": run_generate,
    "propagate": run_uncontrolled,
    "optimize": run_optimize,
    "diagnose": run_diagnose,
    "simplify": run_simplify,
}
