"""Coarse-grained propagation kernels and S2 population evaluation.

Two pathways are covered:

* already excited: a resonance superposition ``c`` evolves under
  ``M^c(t) = R^dag diag(tau(t)) R`` and ``P(t) = |M^c c|^2``;
* laser driven (binned): ``M(t) = R_A^dag diag(tau_A(t) mu_A)`` acts on the
  spectral amplitudes of the field in each bin, ``P(t) = |M(t) eps(t)|^2``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CoarseGrainingWarning, ValidationError
from .pulses import ShapedField
from .system import BinnedSystem, ResonanceSystem

# warn beyond this fraction of 2 hbar / Delta
VALIDITY_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class TauFactors:
    values: np.ndarray
    t: float
    valid: bool


@dataclass(frozen=True, eq=False)
class KernelMatrices:
    M: np.ndarray
    K: np.ndarray
    t: float
    kind: str


def _tau_alpha(E, Delta, hbar, t):
    # np.sinc(x) = sin(pi x) / (pi x)
    return np.exp(-1j * E * t / hbar) * np.sinc(Delta * t / (2 * np.pi * hbar))


def _check_validity(Delta, hbar, t, warn=True):
    limit = VALIDITY_FRACTION * 2 * hbar / np.max(Delta)
    ok = bool(abs(t) <= limit)
    if not ok and warn:
        warnings.warn(
            f"t = {t:g} fs exceeds the coarse-graining validity bound {limit:.4g} fs",
            CoarseGrainingWarning,
            stacklevel=3,
        )
    return ok


def tau(system: ResonanceSystem | BinnedSystem, t: float, *, warn: bool = True) -> TauFactors:
    """Bin propagator weights at time ``t``.

    For a :class:`ResonanceSystem` this is ``exp(-i E t/hbar) sinc(Delta t/2hbar)``
    per coarse-grained state; for a :class:`BinnedSystem` the member average.
    """
    t = float(t)
    if isinstance(system, BinnedSystem):
        parent = system.parent
        members = np.concatenate(system.members)
        owner = np.repeat(np.arange(system.n_bins), [m.size for m in system.members])
        per_state = _tau_alpha(parent.E_alpha[members], parent.Delta_alpha[members], parent.hbar, t)
        n = np.bincount(owner, minlength=system.n_bins)
        values = (np.bincount(owner, per_state.real, system.n_bins)
                  + 1j * np.bincount(owner, per_state.imag, system.n_bins)) / n
        valid = _check_validity(parent.Delta_alpha[members], parent.hbar, t, warn)
    else:
        values = _tau_alpha(system.E_alpha, system.Delta_alpha, system.hbar, t)
        valid = _check_validity(system.Delta_alpha, system.hbar, t, warn)
    return TauFactors(values, t, valid)


def _hermitian(M):
    K = M.conj().T @ M
    return 0.5 * (K + K.conj().T)


def build_Mc(sys: ResonanceSystem, t: float, *, warn: bool = True) -> KernelMatrices:
    """Resonance-to-resonance propagator ``M^c`` and ``K^c = M^c^dag M^c``."""
    tv = tau(sys, t, warn=warn).values
    M = sys.R.conj().T @ (tv[:, None] * sys.R)
    return KernelMatrices(M, _hermitian(M), float(t), "c")


def build_Me(binned: BinnedSystem, t: float, *, warn: bool = True) -> KernelMatrices:
    """Laser-driven kernel on the bins: ``M = R_A^dag diag(tau_A) diag(mu_A)``."""
    tv = tau(binned, t, warn=warn).values
    M = binned.R_A.conj().T * (tv * binned.mu_A)[None, :]
    return KernelMatrices(M, _hermitian(M), float(t), "laser")


def _check_grid(field: ShapedField, binned: BinnedSystem):
    if field.omega_grid.shape != (binned.n_bins,):
        raise ValidationError(
            f"field grid has {field.omega_grid.size} points, system has {binned.n_bins} bins",
            field="omega_grid",
        )


def field_amplitudes(field: ShapedField, t: float) -> np.ndarray:
    """Spectral amplitudes at time ``t``: finite-time before t_over, final after."""
    return field.spectrum(None if t >= field.t_over else t)


def _population_at(field, binned, t, warn):
    M = build_Me(binned, t, warn=warn).M
    return float(np.sum(np.abs(M @ field_amplitudes(field, t)) ** 2))


def _sweep(fn, times, workers):
    times = np.asarray(times, float)
    if times.ndim == 0:
        return fn(float(times))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(fn, times.tolist()))
    else:
        out = [fn(t) for t in times.tolist()]
    return np.array(out)


def population(field: ShapedField, binned: BinnedSystem, t, *, workers: int = 1, warn: bool = True):
    """S2 population ``d^dag B^dag(t) K(t) B(t) d`` at one time or an array of times."""
    _check_grid(field, binned)
    return _sweep(lambda s: _population_at(field, binned, s, warn), t, workers)


def population_c(c, sys: ResonanceSystem, t, *, workers: int = 1, warn: bool = True):
    """S2 population ``c^dag K^c(t) c`` for a prepared resonance superposition."""
    c = np.asarray(c, complex)
    if c.shape != (sys.n_q,):
        raise ValidationError(f"c must have length N_Q={sys.n_q}", field="c")
    return _sweep(lambda s: float(np.sum(np.abs(build_Mc(sys, s, warn=warn).M @ c) ** 2)), t, workers)


def excited_norm(field: ShapedField, binned: BinnedSystem, t, *, workers: int = 1):
    """Total excited-state norm, summing member states incoherently per bin.

    Each coarse-grained state in bin A receives the bin amplitude; the norm is
    sum_A |eps_A(t)|^2 sum_{alpha in A} |mu_alpha|^2.
    """
    _check_grid(field, binned)
    mu2 = np.abs(binned.parent.mu_alpha) ** 2
    weight = np.array([mu2[m].sum() for m in binned.members])
    return _sweep(
        lambda s: float(np.sum(weight * np.abs(field_amplitudes(field, s)) ** 2)), t, workers
    )


def population_trace(field: ShapedField, binned: BinnedSystem, t_grid, *, workers: int = 1):
    """Rows of (t, P_S2, P_S1 remainder, |eps_p(t)|) over ``t_grid``."""
    t_grid = np.asarray(t_grid, float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGrainingWarning)
        p2 = population(field, binned, t_grid, workers=workers)
        norm = excited_norm(field, binned, t_grid, workers=workers)
    env = np.abs(field.time_profile(t_grid))
    return np.column_stack([t_grid, p2, norm - p2, env])


def doorway_coefficients(sys: ResonanceSystem) -> np.ndarray:
    """Resonance amplitudes prepared by a delta pulse: c_k = (i/hbar) <k|mu|g>."""
    return 1j / sys.hbar * sys.mu_kappa
