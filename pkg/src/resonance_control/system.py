"""Material-system data model: coarse-grained states, resonances and bins.

Energies are in eV, times in fs and angular frequencies in rad/fs.  The
overlap matrix ``R[alpha, kappa]`` holds <alpha_bar|kappa>, where the
coarse-grained states already carry the sqrt(rho * Delta) density weight.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ArchiveError, ValidationError

HBAR_EV_FS = 0.6582119569
ARCHIVE_FORMAT = "resonance-system"
ARCHIVE_VERSION = 1


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _require_finite(name, a):
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains NaN or infinite values", field=name)


@dataclass(frozen=True, eq=False)
class ResonanceSystem:
    """Coarse-grained states, their overlaps with resonances and the dipoles.

    Parameters
    ----------
    E_alpha : (N_alpha,) array
        Coarse-grained state energies, strictly increasing.
    Delta_alpha : (N_alpha,) array
        Energy width of each coarse-graining bin.
    R : (N_alpha, N_Q) complex array
        ``R[alpha, kappa] = <alpha_bar|kappa>``.
    mu_kappa : (N_Q,) complex array
        Transition dipoles ``<kappa|mu|g>``.
    E_g : float
        Ground-state energy.
    hbar : float
        Reduced Planck constant in eV fs.
    """

    E_alpha: np.ndarray
    Delta_alpha: np.ndarray
    R: np.ndarray
    mu_kappa: np.ndarray
    E_g: float = 0.0
    hbar: float = HBAR_EV_FS

    def __post_init__(self):
        E = _frozen(self.E_alpha, float)
        D = _frozen(self.Delta_alpha, float)
        R = _frozen(self.R, complex)
        mu = _frozen(self.mu_kappa, complex)
        for name, a in (("E_alpha", E), ("Delta_alpha", D), ("R", R), ("mu_kappa", mu)):
            _require_finite(name, a)
        if not np.isfinite(self.E_g):
            raise ValidationError("E_g must be finite", field="E_g")
        if not (np.isfinite(self.hbar) and self.hbar > 0):
            raise ValidationError("hbar must be finite and positive", field="hbar")
        if E.ndim != 1 or E.size == 0:
            raise ValidationError("E_alpha must be a non-empty 1-d array", field="E_alpha")
        if np.any(np.diff(E) <= 0):
            raise ValidationError("E_alpha must be strictly increasing", field="E_alpha")
        if D.shape != E.shape or np.any(D <= 0):
            raise ValidationError(
                "Delta_alpha must match E_alpha and be positive", field="Delta_alpha"
            )
        if R.ndim != 2 or R.shape[0] != E.size:
            raise ValidationError(
                f"R must have shape (N_alpha, N_Q) with N_alpha={E.size}", field="R"
            )
        n_alpha, n_q = R.shape
        if not 1 <= n_q <= n_alpha:
            raise ValidationError("need N_alpha >= N_Q >= 1", field="R")
        if mu.shape != (n_q,):
            raise ValidationError(f"mu_kappa must have length N_Q={n_q}", field="mu_kappa")
        if np.any(np.all(R == 0, axis=0)):
            raise ValidationError("every resonance column of R needs a nonzero entry", field="R")
        object.__setattr__(self, "E_alpha", E)
        object.__setattr__(self, "Delta_alpha", D)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "mu_kappa", mu)
        object.__setattr__(self, "E_g", float(self.E_g))
        object.__setattr__(self, "hbar", float(self.hbar))

    @property
    def n_alpha(self) -> int:
        return self.R.shape[0]

    @property
    def n_q(self) -> int:
        return self.R.shape[1]

    @property
    def mu_alpha(self) -> np.ndarray:
        """Doorway dipoles (i/hbar) <alpha_bar|mu|g> = (i/hbar) sum_k R[alpha,k] mu_k."""
        return 1j / self.hbar * (self.R @ self.mu_kappa)

    @property
    def omega_alpha(self) -> np.ndarray:
        return (self.E_alpha - self.E_g) / self.hbar

    def column_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.R) ** 2, axis=0)

    def span(self) -> tuple[float, float]:
        """Energy interval covered by the coarse-graining cells."""
        return (
            float(self.E_alpha[0] - 0.5 * self.Delta_alpha[0]),
            float(self.E_alpha[-1] + 0.5 * self.Delta_alpha[-1]),
        )


@dataclass(frozen=True, eq=False)
class BinnedSystem:
    """Second-level aggregation of coarse-grained states into N_A bins.

    ``R_A[A, kappa]`` is the sum of member overlaps and ``mu_A`` the doorway
    dipole of the aggregated state, (i/hbar) sum_k R_A[A, k] mu_k.
    """

    bin_edges: np.ndarray
    E_A: np.ndarray
    members: tuple
    R_A: np.ndarray
    mu_A: np.ndarray
    parent: ResonanceSystem = field(repr=False)

    @property
    def n_bins(self) -> int:
        return self.R_A.shape[0]

    @property
    def n_q(self) -> int:
        return self.R_A.shape[1]

    @property
    def omega_A(self) -> np.ndarray:
        return (self.E_A - self.parent.E_g) / self.parent.hbar

    @property
    def window(self) -> tuple[float, float]:
        return float(self.bin_edges[0]), float(self.bin_edges[-1])

    def Q_A(self) -> np.ndarray:
        return self.R_A @ self.R_A.conj().T


def _as_n(name, values, n, dtype=float):
    a = np.asarray(values, dtype=dtype)
    if a.ndim == 0:
        a = np.full(n, a, dtype=dtype)
    if a.shape != (n,):
        raise ValidationError(f"{name} must be a scalar or have length {n}", field=name)
    return a


def generate_synthetic(
    n_alpha: int,
    n_q: int,
    energy_window: tuple[float, float],
    widths,
    centers,
    dipole_magnitudes=1.0,
    seed: int = 0,
    *,
    cutoff_widths: float | None = None,
    E_g: float = 0.0,
    hbar: float = HBAR_EV_FS,
) -> ResonanceSystem:
    """Seeded stand-in for a partitioned vibronic calculation.

    The coarse-grained states sit at the centres of ``n_alpha`` equal cells
    spanning ``energy_window``.  Each resonance column has the Lorentzian
    weight ``(G/2pi) / ((E - E_k)^2 + (G/2)^2)``, normalised to unit norm,
    and a uniformly random phase per entry.

    With ``cutoff_widths`` set, entries further than ``cutoff_widths * G``
    from the centre are zeroed (the nearest state is always kept), which
    gives the disjoint supports of truly isolated resonances.
    """
    lo, hi = (float(v) for v in energy_window)
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise ValidationError("energy_window must satisfy E_low < E_high", field="energy_window")
    if n_alpha < 1 or n_q < 1:
        raise ValidationError("n_alpha and n_q must be positive", field="n_q")
    if n_q > n_alpha:
        raise ValidationError("n_q must not exceed n_alpha", field="n_q")
    widths = _as_n("widths", widths, n_q)
    centers = _as_n("centers", centers, n_q)
    dipoles = _as_n("dipole_magnitudes", dipole_magnitudes, n_q, complex)
    if np.any(~np.isfinite(widths)) or np.any(widths <= 0):
        raise ValidationError("all widths must be positive", field="widths")
    if np.any(centers < lo) or np.any(centers > hi):
        raise ValidationError("resonance centers must lie inside energy_window", field="centers")
    if cutoff_widths is not None and cutoff_widths <= 0:
        raise ValidationError("cutoff_widths must be positive", field="cutoff_widths")

    delta = (hi - lo) / n_alpha
    E = lo + delta * (np.arange(n_alpha) + 0.5)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_alpha, n_q))

    detuning = E[:, None] - centers[None, :]
    weight = (widths / (2 * np.pi)) / (detuning**2 + (widths / 2) ** 2)
    if cutoff_widths is not None:
        outside = np.abs(detuning) > cutoff_widths * widths
        outside[np.argmin(np.abs(detuning), axis=0), np.arange(n_q)] = False
        weight[outside] = 0.0
    amp = np.sqrt(weight)
    amp /= np.linalg.norm(amp, axis=0)
    R = amp * np.exp(1j * phases)
    return ResonanceSystem(E, np.full(n_alpha, delta), R, dipoles, E_g=E_g, hbar=hbar)


def bin_system(sys: ResonanceSystem, window: tuple[float, float], n_A: int) -> BinnedSystem:
    """Group the coarse-grained states inside ``window`` into ``n_A`` equal bins."""
    E_L, E_H = (float(v) for v in window)
    if n_A < 1:
        raise ValidationError("n_A must be at least 1", field="n_A")
    if not E_H > E_L:
        raise ValidationError("window must satisfy E_L < E_H", field="window")
    lo, hi = sys.span()
    tol = 1e-9 * max(1.0, abs(hi))
    if E_L < lo - tol or E_H > hi + tol:
        raise ValidationError(
            f"window [{E_L}, {E_H}] lies outside the state grid [{lo}, {hi}]", field="window"
        )
    edges = np.linspace(E_L, E_H, n_A + 1)
    E = sys.E_alpha
    inside = (E >= E_L) & (E <= E_H)
    index = np.searchsorted(edges, E, side="right") - 1
    index[E == E_H] = n_A - 1

    members = []
    for A in range(n_A):
        m = np.flatnonzero(inside & (index == A))
        if m.size == 0:
            raise ValidationError(
                f"bin {A} [{edges[A]:.6g}, {edges[A + 1]:.6g}] eV contains no states",
                field="n_A",
            )
        m.setflags(write=False)
        members.append(m)

    R_A = np.array([sys.R[m].sum(axis=0) for m in members])
    mu_A = 1j / sys.hbar * (R_A @ sys.mu_kappa)
    E_A = 0.5 * (edges[:-1] + edges[1:])
    return BinnedSystem(
        _frozen(edges, float),
        _frozen(E_A, float),
        tuple(members),
        _frozen(R_A, complex),
        _frozen(mu_A, complex),
        sys,
    )


def identity_binning(sys: ResonanceSystem) -> BinnedSystem:
    """One bin per coarse-grained state: the unbinned laser-driven kernel."""
    E = sys.E_alpha
    edges = np.append(E - 0.5 * sys.Delta_alpha, E[-1] + 0.5 * sys.Delta_alpha[-1])
    members = []
    for i in range(sys.n_alpha):
        m = np.array([i])
        m.setflags(write=False)
        members.append(m)
    return BinnedSystem(
        _frozen(edges, float),
        _frozen(E, float),
        tuple(members),
        _frozen(sys.R, complex),
        _frozen(sys.mu_alpha, complex),
        sys,
    )


# --- archive -----------------------------------------------------------------

def _cplx(a):
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _uncplx(name, raw):
    a = np.asarray(raw, dtype=float)
    if a.ndim == 0 or a.shape[-1] != 2:
        raise ArchiveError(f"{name} must be stored as [re, im] pairs", field=name)
    return a[..., 0] + 1j * a[..., 1]


def save_archive(sys: ResonanceSystem, metadata: Mapping | None = None) -> bytes:
    """Serialise ``sys`` to a JSON document (complex numbers as [re, im])."""
    doc = {
        "format": ARCHIVE_FORMAT,
        "version": ARCHIVE_VERSION,
        "E_g": sys.E_g,
        "hbar": sys.hbar,
        "E_alpha": sys.E_alpha.tolist(),
        "Delta_alpha": sys.Delta_alpha.tolist(),
        "R": _cplx(sys.R),
        "mu_kappa": _cplx(sys.mu_kappa),
        "generator": dict(metadata) if metadata else None,
    }
    return json.dumps(doc, allow_nan=False).encode("utf-8")


def load_archive(data: bytes | str, *, with_metadata: bool = False):
    """Inverse of :func:`save_archive`; validates version and numeric content."""
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ArchiveError(f"archive is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != ARCHIVE_FORMAT:
        raise ArchiveError("not a resonance-system archive", field="format")
    if doc.get("version") != ARCHIVE_VERSION:
        raise ArchiveError(
            f"archive version {doc.get('version')!r} is not supported "
            f"(expected {ARCHIVE_VERSION})",
            field="version",
        )
    missing = [k for k in ("E_alpha", "Delta_alpha", "R", "mu_kappa") if k not in doc]
    if missing:
        raise ArchiveError(f"archive is missing fields: {', '.join(missing)}", field=missing[0])
    try:
        sys = ResonanceSystem(
            np.asarray(doc["E_alpha"], dtype=float),
            np.asarray(doc["Delta_alpha"], dtype=float),
            _uncplx("R", doc["R"]),
            _uncplx("mu_kappa", doc["mu_kappa"]),
            E_g=float(doc.get("E_g", 0.0)),
            hbar=float(doc.get("hbar", HBAR_EV_FS)),
        )
    except ArchiveError:
        raise
    except ValidationError as exc:
        raise ArchiveError(str(exc), field=exc.field) from exc
    except (TypeError, ValueError) as exc:
        raise ArchiveError(f"malformed numeric payload: {exc}") from exc
    norms = sys.column_norms()
    if np.any(np.abs(norms - 1.0) > 1e-6):
        warnings.warn(
            f"resonance column norms deviate from 1 (range {norms.min():.4g}..{norms.max():.4g})",
            stacklevel=2,
        )
    if with_metadata:
        return sys, doc.get("generator")
    return sys


def uniform_centers(n_q: int, window: Sequence[float]) -> np.ndarray:
    """Resonance centres at the midpoints of ``n_q`` equal slices of ``window``."""
    lo, hi = window
    return lo + (hi - lo) * (np.arange(n_q) + 0.5) / n_q
