"""Absolute and relative weak-field control of the S2 population.

Absolute control maximises (or nulls) ``P_S2(T)`` at a fixed pulse energy;
for a single resonance the kernel is rank one and the spectrum is analytic.
Relative control optimises ``P_S2(T2) / P_S2(T1)``, which is the Hermitian
definite generalized eigenproblem ``K(T2) v = lambda K(T1) v``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.linalg as sl

from .dynamics import KernelMatrices, build_Me
from .errors import IllConditionedError, ValidationError
from .pulses import GaussianBasis, ShapedField, fmt, solve_d
from .system import BinnedSystem

DEFAULT_K_COND = 1e12
RANK1_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ControlSolution:
    """One optimal field.  ``field_vector`` holds the spectral amplitude per bin."""

    lam: float
    field_vector: np.ndarray
    kind: str
    T1: float
    T2: float | None = None
    cond_K_T1: float = float("nan")
    E0: float | None = None
    scale: complex = 1.0

    @property
    def unit_vector(self) -> np.ndarray:
        return self.field_vector / np.linalg.norm(self.field_vector)


def phase_fix(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate ``v`` so its first non-negligible component is real and positive."""
    v = np.asarray(v, complex)
    big = np.flatnonzero(np.abs(v) > tol * np.max(np.abs(v)))
    if big.size == 0:
        return v
    return v * (abs(v[big[0]]) / v[big[0]])


def _sort_key(lam, v):
    return (lam, *np.column_stack([v.real, v.imag]).ravel().tolist())


def _as_matrix(K):
    K = K.K if isinstance(K, KernelMatrices) else np.asarray(K, complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError("kernel must be a square matrix", field="K")
    return K


def absolute_control(K, E0: float) -> list[ControlSolution]:
    """Analytic spectrum of a rank-one kernel ``K = m m^dag``.

    One field reaches ``lambda = trace(K)``; the ``N - 1`` fields orthogonal
    to ``m`` leave S2 empty at the target time.  Field vectors carry the
    pulse-energy normalisation ``sqrt(2 pi E0)``.
    """
    T = K.t if isinstance(K, KernelMatrices) else float("nan")
    K = _as_matrix(K)
    if not (np.isfinite(E0) and E0 > 0):
        raise ValidationError("E0 must be positive", field="E0")
    diag = np.real(np.diag(K))
    trace = float(diag.sum())
    if trace <= 0:
        raise ValidationError("kernel has zero trace", field="K")
    ev = sl.eigvalsh(0.5 * (K + K.conj().T))
    if K.shape[0] > 1 and ev[-2] > RANK1_TOL * trace:
        raise ValidationError(
            f"kernel is not rank one (second eigenvalue {ev[-2]:.3e}, trace {trace:.3e}); "
            "use relative_control for overlapping resonances",
            field="K",
        )
    j = int(np.argmax(diag))
    m = K[:, j] / np.sqrt(diag[j])
    m_hat = m / np.linalg.norm(m)
    null = sl.null_space(m_hat.conj()[None, :])

    amp = np.sqrt(2 * np.pi * E0)
    pairs = [(trace, phase_fix(m_hat))] + [(0.0, phase_fix(null[:, k])) for k in range(null.shape[1])]
    pairs.sort(key=lambda p: _sort_key(*p))
    return [ControlSolution(lam, amp * v, "absolute", T, E0=E0, scale=amp) for lam, v in pairs]


def kernel_condition(K: np.ndarray) -> float:
    ev = sl.eigvalsh(K)
    if ev[0] <= 0:
        return float("inf")
    return float(ev[-1] / ev[0])


def solve_relative(K1, K2, cond_threshold: float = DEFAULT_K_COND):
    """Eigenpairs of the pencil (K2, K1) with unit-norm, phase-fixed vectors.

    Returns ``(lams, vecs, cond)`` sorted by lambda, then by eigenvector.
    """
    K1, K2 = _as_matrix(K1), _as_matrix(K2)
    if K1.shape != K2.shape:
        raise ValidationError("K(T1) and K(T2) differ in shape", field="K")
    K1 = 0.5 * (K1 + K1.conj().T)
    K2 = 0.5 * (K2 + K2.conj().T)
    cond = kernel_condition(K1)
    if not cond <= cond_threshold:
        raise IllConditionedError("K(T1)", cond, cond_threshold)
    lams, vecs = sl.eigh(K2, K1)
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    pairs = sorted(
        ((float(l), phase_fix(vecs[:, k])) for k, l in enumerate(lams)),
        key=lambda p: _sort_key(*p),
    )
    return np.array([p[0] for p in pairs]), np.column_stack([p[1] for p in pairs]), cond


def relative_control(binned: BinnedSystem, T1: float, T2: float, *,
                     cond_threshold: float = DEFAULT_K_COND, t_over: float | None = None
                     ) -> list[ControlSolution]:
    """Fields extremising ``P_S2(T2) / P_S2(T1)`` on the binned kernel, sorted by lambda."""
    if not T2 > T1:
        raise ValidationError("T2 must exceed T1", field="T2")
    if t_over is not None and T1 < t_over:
        raise ValidationError(f"T1 = {T1} fs precedes the pulse end t_over = {t_over:.4g} fs",
                              field="T1")
    K1 = build_Me(binned, T1).K
    K2 = build_Me(binned, T2).K
    lams, vecs, cond = solve_relative(K1, K2, cond_threshold)
    return [ControlSolution(l, vecs[:, k], "relative", float(T1), float(T2), cond)
            for k, l in enumerate(lams)]


def scale_solution(sol: ControlSolution, factor) -> ControlSolution:
    """Multiply the field by ``factor``; populations scale by |factor|^2, lambda is unchanged."""
    if factor == 0 or not np.isfinite(factor):
        raise ValidationError("scale factor must be finite and non-zero", field="factor")
    return replace(sol, field_vector=sol.field_vector * factor, scale=sol.scale * factor)


def synthesize_field(sol: ControlSolution, binned: BinnedSystem, basis: GaussianBasis,
                     cond_threshold: float | None = None) -> ShapedField:
    """Expand the bin amplitudes of ``sol`` in a Gaussian pulse basis."""
    kw = {} if cond_threshold is None else {"cond_threshold": cond_threshold}
    return solve_d(basis, binned.omega_A, sol.field_vector, **kw)


def write_solutions_csv(path, solutions, binned: BinnedSystem) -> Path:
    """Long format: one row per (solution, bin) with lambda, condition and amplitude/phase."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["solution", "kind", "lambda", "cond_K_T1", "bin", "E_eV",
                    "omega_rad_fs", "re", "im", "abs", "arg"])
        for i, s in enumerate(solutions):
            for A, v in enumerate(s.field_vector):
                w.writerow([i, s.kind, *map(fmt, (s.lam, s.cond_K_T1)), A,
                            *map(fmt, (binned.E_A[A], binned.omega_A[A], v.real, v.imag,
                                       abs(v), np.angle(v)))])
    return path
