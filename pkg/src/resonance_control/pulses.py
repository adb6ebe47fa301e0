"""Gaussian pulse basis and analytic finite-time Fourier transforms.

A basis pulse is the analytic signal

    eps_a(t) = eps / (2 sqrt(pi) alpha) * exp(-(t / (2 alpha))**2 - i omega_a t)

whose transform accumulated up to time ``t`` has a closed form in terms of
the Faddeeva function ``W(z) = exp(-z**2) erfc(-i z)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sl
from scipy.special import wofz

from .errors import IllConditionedError, ValidationError

T_OVER_FACTOR = 4.0 * np.sqrt(2.0 * np.log(2.0))
DEFAULT_BASIS_COND = 1e8
SOLVE_RESIDUAL = 1e-10


def faddeeva(z):
    """W(z) = exp(-z^2) erfc(-iz), vectorised.  Backed by ``scipy.special.wofz``."""
    return wofz(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class GaussianPulse:
    eps: float
    alpha: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError("pulse width alpha must be positive", field="alpha")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValidationError("pulse amplitude eps must be positive", field="eps")
        if not np.isfinite(self.omega):
            raise ValidationError("pulse frequency must be finite", field="omega")

    @property
    def t_over(self) -> float:
        return T_OVER_FACTOR * self.alpha


@dataclass(frozen=True)
class GaussianBasis:
    pulses: tuple

    def __post_init__(self):
        pulses = tuple(self.pulses)
        if not pulses:
            raise ValidationError("a basis needs at least one pulse", field="pulses")
        object.__setattr__(self, "pulses", pulses)

    def __len__(self):
        return len(self.pulses)

    @property
    def eps(self) -> np.ndarray:
        return np.array([p.eps for p in self.pulses])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([p.alpha for p in self.pulses])

    @property
    def omega(self) -> np.ndarray:
        return np.array([p.omega for p in self.pulses])

    @property
    def t_over(self) -> float:
        """Time after which every pulse is considered over (max over the basis)."""
        return T_OVER_FACTOR * float(self.alpha.max())


def uniform_basis(omega_grid, alpha: float, eps: float = 1.0) -> GaussianBasis:
    """One pulse per grid frequency, all with the same width and amplitude."""
    return GaussianBasis(tuple(GaussianPulse(eps, alpha, float(w)) for w in np.ravel(omega_grid)))


def _ftft(eps, alpha, omega_a, omega, t):
    x = alpha * (omega - omega_a)
    y = t / (2.0 * alpha)
    z = x + 1j * y
    # exp(-x^2) * exp(z^2) = exp(-y^2 + 2ixy); evaluating the product this way
    # and reflecting W into the upper half plane keeps every factor bounded.
    phase = np.exp(-(y**2) + 2j * x * y)
    late = y >= 0
    w = 0.5 * eps * phase * wofz(np.where(late, z, -z))
    return np.where(late, eps * np.exp(-(x**2)) - w, w)


def ftft_gaussian(p: GaussianPulse, omega, t):
    """Finite-time transform  int_{-inf}^{t} eps_a(t') exp(i omega t') dt'."""
    omega, t = np.broadcast_arrays(np.asarray(omega, float), np.asarray(t, float))
    out = _ftft(p.eps, p.alpha, p.omega, omega, t)
    return out[()] if out.ndim == 0 else out


def spectrum_gaussian(p: GaussianPulse, omega):
    """Infinite-time transform eps * exp(-alpha^2 (omega - omega_a)^2)."""
    omega = np.asarray(omega, float)
    return p.eps * np.exp(-((p.alpha * (omega - p.omega)) ** 2)) + 0j


def basis_matrix(basis: GaussianBasis, omega_grid, t=None) -> np.ndarray:
    """``B[A, a] = eps_a(omega_A, t)``; ``t=None`` (or inf) gives the t -> inf limit.

    The grid may be longer than the basis (e.g. one pulse probed on every
    bin); only :func:`solve_d` needs ``B`` square.
    """
    w = np.asarray(omega_grid, float)[:, None]
    eps, alpha, om = basis.eps[None, :], basis.alpha[None, :], basis.omega[None, :]
    if t is None or np.isposinf(t):
        return eps * np.exp(-((alpha * (w - om)) ** 2)) + 0j
    return _ftft(eps, alpha, om, w, np.full_like(w, float(t)))


def basis_condition(basis: GaussianBasis, omega_grid) -> float:
    B = basis_matrix(basis, omega_grid)
    if B.shape[0] != B.shape[1]:
        raise ValidationError("basis size must equal the grid length", field="omega_grid")
    with np.errstate(all="ignore"):
        return float(np.linalg.cond(B))


@dataclass(frozen=True, eq=False)
class ShapedField:
    """Control field as a d-weighted sum of basis pulses, probed on ``omega_grid``."""

    basis: GaussianBasis
    d: np.ndarray
    omega_grid: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=complex)
        grid = np.array(self.omega_grid, dtype=float)
        if d.shape != (len(self.basis),):
            raise ValidationError("d must have one coefficient per basis pulse", field="d")
        if not np.all(np.isfinite(d)):
            raise ValidationError("d contains non-finite values", field="d")
        d.setflags(write=False)
        grid.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "omega_grid", grid)

    @property
    def t_over(self) -> float:
        return self.basis.t_over

    def spectrum(self, t=None) -> np.ndarray:
        """Spectral amplitudes at the grid, accumulated up to ``t`` (None: pulse over)."""
        return basis_matrix(self.basis, self.omega_grid, t) @ self.d

    def time_profile(self, t_grid) -> np.ndarray:
        return field_time_profile(self, t_grid)


def solve_d(basis: GaussianBasis, omega_grid, target, cond_threshold: float = DEFAULT_BASIS_COND
            ) -> ShapedField:
    """Expansion coefficients reproducing ``target`` at the grid after the pulse."""
    target = np.asarray(target, dtype=complex)
    B = basis_matrix(basis, omega_grid)
    n = B.shape[0]
    if B.shape != (n, n) or target.shape != (n,):
        raise ValidationError(
            "solve_d needs as many basis pulses as grid points and target values",
            field="omega_grid",
        )
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > cond_threshold:
        raise IllConditionedError("basis matrix B", cond, cond_threshold)
    lu = sl.lu_factor(B)
    d = sl.lu_solve(lu, target)
    d = d + sl.lu_solve(lu, target - B @ d)
    scale = np.max(np.abs(target)) if target.size else 0.0
    residual = np.max(np.abs(B @ d - target)) if target.size else 0.0
    if residual > SOLVE_RESIDUAL * scale:
        raise IllConditionedError("basis matrix B (residual check)", cond, cond_threshold)
    return ShapedField(basis, d, omega_grid)


def field_time_profile(field: ShapedField, t_grid) -> np.ndarray:
    """eps_p(t) = sum_a d_a eps_a(t) sampled on ``t_grid``."""
    t = np.asarray(t_grid, float)[..., None]
    b = field.basis
    pulses = (b.eps / (2 * np.sqrt(np.pi) * b.alpha)) * np.exp(
        -((t / (2 * b.alpha)) ** 2) - 1j * b.omega * t
    )
    return pulses @ field.d


def write_spectrum_csv(path, omega, values, extra: dict[str, Sequence] | None = None) -> Path:
    """Columns: [extra...], omega_rad_fs, re, im, abs, arg."""
    return _write_complex_csv(path, "omega_rad_fs", omega, values, extra)


def write_time_csv(path, t, values, extra: dict[str, Sequence] | None = None) -> Path:
    """Columns: [extra...], t_fs, re, im, abs, arg."""
    return _write_complex_csv(path, "t_fs", t, values, extra)


def _write_complex_csv(path, axis_name, axis, values, extra):
    path = Path(path)
    values = np.asarray(values, complex)
    extra = extra or {}
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*extra, axis_name, "re", "im", "abs", "arg"])
        for i, (x, v) in enumerate(zip(np.asarray(axis, float), values)):
            w.writerow([*(fmt(col[i]) for col in extra.values()),
                        *map(fmt, (x, v.real, v.imag, abs(v), np.angle(v)))])
    return path


def fmt(v) -> str:
    """Shortest round-trip text for numbers; ``str`` for anything else."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
