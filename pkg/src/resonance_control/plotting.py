"""Report figures.  Everything renders off-screen to files next to the CSVs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings, so reruns give the same bytes
_SAVE_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_SAVE_META)
    plt.close(fig)
    return path


def plot_populations(path, t, traces: dict, *, envelopes: dict | None = None,
                     title: str = "", logy: bool = False, marks=()) -> Path:
    """P_S2(t) curves, with optional field envelopes in a lower panel."""
    rows = 2 if envelopes else 1
    fig, axes = plt.subplots(rows, 1, figsize=(7, 3.2 * rows), sharex=True, squeeze=False)
    ax = axes[0, 0]
    for label, y in traces.items():
        ax.plot(t, y, label=label, lw=1.2)
    if logy:
        ax.set_yscale("log")
    for m in marks:
        ax.axvline(m, color="0.6", ls=":", lw=0.8)
    ax.set_ylabel(r"$P_{S_2}(t)$")
    ax.set_title(title)
    ax.legend(fontsize=8, frameon=False)
    if envelopes:
        ax2 = axes[1, 0]
        for label, y in envelopes.items():
            ax2.plot(t, y, label=label, lw=1.0)
        ax2.set_ylabel(r"$|\varepsilon_p(t)|$")
        ax2.legend(fontsize=8, frameon=False)
    axes[-1, 0].set_xlabel("t (fs)")
    return _save(fig, path)


def plot_field_spectrum(path, energy, fields: dict, title: str = "") -> Path:
    """Amplitude and phase per bin for each field."""
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for label, v in fields.items():
        v = np.asarray(v)
        a1.plot(energy, np.abs(v), "o-", ms=3, lw=1, label=label)
        a2.plot(energy, np.angle(v), "o", ms=3, label=label)
    a1.set_ylabel("amplitude")
    a2.set_ylabel("phase (rad)")
    a2.set_xlabel("E (eV)")
    a1.set_title(title)
    a1.legend(fontsize=8, frameon=False)
    return _save(fig, path)


def plot_retention(path, rows, lam_min: float, lam_max: float) -> Path:
    n = [r.N_R for r in rows]
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6, 5.5), sharex=True)
    a1.semilogy(n, [r.achieved_min for r in rows], "o-", label="truncated")
    a1.semilogy(n, [r.fresh_min for r in rows], "s--", label=r"fresh, $N_A = N_R$")
    a1.axhline(lam_min, color="0.5", ls=":", label=r"$\lambda_{min}$")
    a1.set_ylabel("min ratio")
    a1.legend(fontsize=8, frameon=False)
    a2.semilogy(n, [r.achieved_max for r in rows], "o-", label="truncated")
    a2.semilogy(n, [r.fresh_max for r in rows], "s--", label=r"fresh, $N_A = N_R$")
    a2.axhline(lam_max, color="0.5", ls=":", label=r"$\lambda_{max}$")
    a2.set_ylabel("max ratio")
    a2.set_xlabel(r"$N_R$")
    return _save(fig, path)


def plot_measures(path, reports) -> Path:
    """Control range against the overlap measure, one point per window."""
    h = [r.H_Omega for r in reports]
    rng = [r.control_range for r in reports]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogy(h, rng, "o")
    ax.set_xlabel(r"$H(\Omega)^{1/N_A}$")
    ax.set_ylabel(r"$\lambda_{max} / \lambda_{min}$")
    return _save(fig, path)
