"""Hadamard non-diagonality measures and the overlap/controllability report.

Determinants of realistic kernels underflow long before the measures lose
meaning (a value of 1e-4 raised to the 128th power), so everything here is
evaluated as a logarithm and only exponentiated at the end.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sl

from .control import DEFAULT_K_COND, solve_relative
from .dynamics import build_Me
from .errors import ValidationError
from .pulses import fmt
from .system import ResonanceSystem, bin_system

OFFDIAG_TOL = 1e-14
HERMITIAN_TOL = 1e-12


def _check_hermitian(K, name="K"):
    K = np.asarray(K, complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValidationError(f"{name} must be square", field=name)
    scale = max(np.max(np.abs(K)), np.finfo(float).tiny)
    if np.max(np.abs(K - K.conj().T)) > HERMITIAN_TOL * scale:
        raise ValidationError(f"{name} is not Hermitian", field=name)
    d = np.real(np.diag(K))
    if np.any(d <= 0):
        raise ValidationError(f"{name} has a non-positive diagonal entry", field=name)
    return 0.5 * (K + K.conj().T), d


def log_hadamard(K) -> float:
    """log[det(K) / prod(diag K)] for Hermitian PSD ``K`` (``-inf`` if singular)."""
    K, d = _check_hermitian(K)
    off = K - np.diag(np.diag(K))
    if np.linalg.norm(off) < OFFDIAG_TOL * np.linalg.norm(K):
        return 0.0
    s = 1.0 / np.sqrt(d)
    E = s[:, None] * off * s[None, :]
    ev = sl.eigvalsh(E)
    # eigenvalues of the correlation matrix are 1 + ev
    if np.any(ev <= -1.0):
        return float("-inf")
    return float(np.sum(np.log1p(ev)))


def hadamard(K) -> float:
    """det(K) / det(diag K), in (0, 1]; exactly 1 for a diagonal matrix."""
    return float(np.exp(log_hadamard(K)))


def _logdet_hpd(K, name):
    try:
        c = sl.cholesky(K, lower=True)
    except sl.LinAlgError:
        raise ValidationError(f"{name} is singular or indefinite", field=name) from None
    return 2.0 * float(np.sum(np.log(np.real(np.diag(c))))), c


def log_hadamard_R(K_T1, K_T2) -> tuple[float, complex]:
    """Logarithms of the ratio-kernel measures (H_R, H_C).

    With ``R = K1^-1 K2`` and ``det R = det K2 / det K1``::

        H_R = det(R) / (prod diag(K1^-1) * prod diag(K2))
        H_C = det(R) / prod diag(R)

    ``H_R`` is real; ``H_C`` is complex in general.
    """
    K1, d1 = _check_hermitian(K_T1, "K_T1")
    K2, d2 = _check_hermitian(K_T2, "K_T2")
    if K1.shape != K2.shape:
        raise ValidationError("K_T1 and K_T2 differ in shape", field="K_T2")
    ld1, c1 = _logdet_hpd(K1, "K_T1")
    ld2, _ = _logdet_hpd(K2, "K_T2")
    inv1 = sl.cho_solve((c1, True), np.eye(K1.shape[0]))
    R = sl.cho_solve((c1, True), K2)
    log_HR = ld2 - np.sum(np.log(d2)) - np.sum(np.log(np.real(np.diag(inv1)))) - ld1
    log_HC = (ld2 - ld1) - np.sum(np.log(np.diag(R).astype(complex)))
    return float(log_HR), complex(log_HC)


def hadamard_R(K_T1, K_T2) -> tuple[float, complex]:
    log_HR, log_HC = log_hadamard_R(K_T1, K_T2)
    return float(np.exp(log_HR)), complex(np.exp(log_HC))


def overlap_matrix(sys: ResonanceSystem, window) -> np.ndarray:
    """Omega[k, k'] = sum over states in ``window`` of |<k|a>| |<a|k'>|."""
    E_L, E_H = (float(v) for v in window)
    inside = (sys.E_alpha >= E_L) & (sys.E_alpha <= E_H)
    if not inside.any():
        raise ValidationError(f"no coarse-grained states in [{E_L}, {E_H}] eV", field="window")
    a = np.abs(sys.R[inside])
    return a.T @ a


@dataclass(frozen=True)
class MeasureReport:
    E_L: float
    E_H: float
    N_A: int
    H_Omega: float
    H_K_T1: float
    H_K_T2: float
    H_R_R: float
    abs_H_C_R: float
    lambda_min: float
    lambda_max: float

    @property
    def control_range(self) -> float:
        return self.lambda_max / self.lambda_min


def _root(log_value, n):
    return float(np.exp(log_value / n))


def measure_window(sys: ResonanceSystem, window, T1: float, T2: float, N_A: int,
                   cond_threshold: float = DEFAULT_K_COND) -> MeasureReport:
    omega = overlap_matrix(sys, window)
    # resonances with no support in the window do not take part
    keep = np.diag(omega) > 0
    omega = omega[np.ix_(keep, keep)]
    sign, _ = np.linalg.slogdet(omega)
    if sign <= 0:
        warnings.warn(f"overlap determinant is not positive in window {tuple(window)}",
                      RuntimeWarning, stacklevel=2)
    b = bin_system(sys, window, N_A)
    K1, K2 = build_Me(b, T1).K, build_Me(b, T2).K
    lams, _, _ = solve_relative(K1, K2, cond_threshold)
    log_HR, log_HC = log_hadamard_R(K1, K2)
    return MeasureReport(
        float(window[0]), float(window[1]), int(N_A),
        H_Omega=_root(log_hadamard(omega), N_A),
        H_K_T1=_root(log_hadamard(K1), N_A),
        H_K_T2=_root(log_hadamard(K2), N_A),
        H_R_R=_root(log_HR, N_A),
        abs_H_C_R=_root(log_HC.real, N_A),
        lambda_min=float(lams[0]),
        lambda_max=float(lams[-1]),
    )


def correlation_report(sys: ResonanceSystem, windows, T1: float, T2: float, N_A: int,
                       cond_threshold: float = DEFAULT_K_COND) -> list[MeasureReport]:
    """One :class:`MeasureReport` per energy window, measures as their 1/N_A power."""
    return [measure_window(sys, w, T1, T2, N_A, cond_threshold) for w in windows]


REPORT_LABELS = {
    "E_L": "E_L (eV)",
    "E_H": "E_H (eV)",
    "N_A": "N_A",
    "H_Omega": "H(Omega)^(1/N_A)",
    "H_K_T1": "H(K(T1))^(1/N_A)",
    "H_K_T2": "H(K(T2))^(1/N_A)",
    "H_R_R": "H_R(R)^(1/N_A)",
    "abs_H_C_R": "|H_C(R)|^(1/N_A)",
    "lambda_min": "lambda_min",
    "lambda_max": "lambda_max",
}


def write_report_csv(path, reports) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(REPORT_LABELS))
        for r in reports:
            w.writerow([fmt(v) for v in asdict(r).values()])
    return path


def report_markdown(reports) -> str:
    """Transposed table: one row per measure, one column per window."""
    head = ["quantity"] + [f"[{r.E_L:.3f}, {r.E_H:.3f}]" for r in reports]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for key, label in list(REPORT_LABELS.items())[3:]:
        cells = [f"{getattr(r, key):.3e}" for r in reports]
        lines.append("| " + " | ".join([label, *cells]) + " |")
    return "\n".join(lines) + "\n"
