"""Simplified versions of optimal fields and how much control they keep.

Three reductions are offered: averaging neighbouring bins into a step-like
field, re-expanding that step field in a coarse Gaussian basis, and keeping
only the largest spectral amplitudes.  Retention is always judged by full
propagation of the simplified field.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .control import ControlSolution, relative_control, synthesize_field
from .dynamics import population
from .errors import ValidationError
from .pulses import ShapedField, fmt, solve_d, uniform_basis
from .system import BinnedSystem, bin_system

TIE_RTOL = 1e-10


def _groups(n, n_s, name="N_S"):
    if n_s < 1 or n % n_s:
        raise ValidationError(f"{name}={n_s} must divide the number of bins {n}", field=name)
    return np.arange(n).reshape(n_s, n // n_s)


def _step_values(values, n_s):
    """Per super-bin: mean amplitude and circular mean phase."""
    g = _groups(values.size, n_s)
    amp = np.abs(values)[g].mean(axis=1)
    unit = np.exp(1j * np.angle(values))[g].mean(axis=1)
    return amp * np.exp(1j * np.angle(unit)), g


def local_average(field: ShapedField, n_s: int) -> ShapedField:
    """Step-like field: each of ``n_s`` contiguous groups of bins shares one value.

    Amplitudes are averaged arithmetically and phases as the argument of the
    mean unit phasor.  The step target is re-expanded in the original basis.
    """
    values = field.spectrum()
    if n_s == values.size:
        return field
    step, g = _step_values(values, n_s)
    target = np.repeat(step, g.shape[1])
    return solve_d(field.basis, field.omega_grid, target)


def smooth_expand(field: ShapedField, n_s: int) -> ShapedField:
    """Re-express a field with ``n_s`` Gaussians centred on the super-bins.

    The coarse pulses are ``N_A / n_s`` times broader in frequency, and their
    coefficients reproduce the super-bin averages at the super-bin centres.
    The returned field is still probed on the original bin grid.
    """
    values = field.spectrum()
    step, g = _step_values(values, n_s)
    coarse_grid = field.omega_grid[g].mean(axis=1)
    alpha = float(np.mean(field.basis.alpha)) * n_s / values.size
    coarse = solve_d(uniform_basis(coarse_grid, alpha, float(np.mean(field.basis.eps))),
                     coarse_grid, step)
    return ShapedField(coarse.basis, coarse.d, field.omega_grid)


def truncate_amplitudes(field: ShapedField, n_r: int) -> ShapedField:
    """Zero all but the ``n_r`` largest bin amplitudes, phases untouched.

    Ties, judged to a relative tolerance of ``TIE_RTOL``, are resolved
    toward the lower bin index.
    """
    values = field.spectrum()
    n = values.size
    if not 1 <= n_r <= n:
        raise ValidationError(f"N_R must lie in [1, {n}]", field="N_R")
    if n_r == n:
        return field
    amp = np.abs(values)
    # snap round-off differences so near-equal amplitudes count as ties
    rank = np.round(amp / max(amp.max(), np.finfo(float).tiny) / TIE_RTOL)
    keep = np.argsort(-rank, kind="stable")[:n_r]
    target = np.zeros_like(values)
    target[keep] = values[keep]
    return solve_d(field.basis, field.omega_grid, target)


def achieved_ratio(field: ShapedField, binned: BinnedSystem, T1: float, T2: float) -> float:
    return float(population(field, binned, T2) / population(field, binned, T1))


@dataclass(frozen=True)
class RetentionRow:
    N_R: int
    achieved_min: float
    achieved_max: float
    fresh_min: float
    fresh_max: float


def retention_sweep(binned: BinnedSystem, sol_min: ControlSolution, sol_max: ControlSolution,
                    n_r_values, basis_alpha: float, *, workers: int = 1) -> list[RetentionRow]:
    """Truncation sweep over ``n_r_values``.

    For each N_R the truncated min and max fields are propagated, and the same
    window is re-binned into N_R bins and solved afresh for comparison.
    """
    T1, T2 = sol_min.T1, sol_min.T2
    basis = uniform_basis(binned.omega_A, basis_alpha)
    f_min = synthesize_field(sol_min, binned, basis)
    f_max = synthesize_field(sol_max, binned, basis)

    def row(n_r):
        fresh = relative_control(bin_system(binned.parent, binned.window, n_r), T1, T2)
        return RetentionRow(
            int(n_r),
            achieved_ratio(truncate_amplitudes(f_min, n_r), binned, T1, T2),
            achieved_ratio(truncate_amplitudes(f_max, n_r), binned, T1, T2),
            fresh[0].lam,
            fresh[-1].lam,
        )

    n_r_values = [int(n) for n in n_r_values]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, n_r_values))
    return [row(n) for n in n_r_values]


def write_retention_csv(path, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N_R", "achieved_min_ratio", "achieved_max_ratio",
                    "fresh_solve_min", "fresh_solve_max"])
        for r in rows:
            w.writerow([r.N_R, *map(fmt, (r.achieved_min, r.achieved_max,
                                          r.fresh_min, r.fresh_max))])
    return path
