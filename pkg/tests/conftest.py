import json
import warnings
from collections import OrderedDict
from pathlib import Path

import numpy as np
import pytest

from resonance_control.config import from_dict
from resonance_control.errors import CoarseGrainingWarning
from resonance_control.runner import build_system
from resonance_control.system import bin_system, generate_synthetic

ROOT = Path(__file__).resolve().parents[1]
DEMO_CONFIG = ROOT / "configs" / "demo.json"

# grid used by the small synthetic systems: 16 bins of 12 meV, 8 states per bin
N_A = 16
W_A = 0.012
E_L = 4.70
E_H = E_L + N_A * W_A
ALPHA = 30.0
T1, T2 = 150.0, 250.0


@pytest.fixture(autouse=True)
def _quiet_coarse_graining():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoarseGrainingWarning)
        yield


def overlapping_system(seed=0, width=0.01, n_q=N_A, per_bin=8, cutoff=2.0):
    """Resonances near each bin centre, jittered by up to 20% of a bin."""
    rng = np.random.default_rng(seed)
    centers = E_L + (E_H - E_L) * (np.arange(n_q) + 0.5) / n_q
    centers = centers + rng.uniform(-0.2, 0.2, n_q) * (E_H - E_L) / n_q
    mu = rng.uniform(0.5, 1.5, n_q)
    return generate_synthetic(N_A * per_bin, n_q, (E_L, E_H), width, centers, mu,
                              seed=seed, cutoff_widths=cutoff)


@pytest.fixture(scope="session")
def demo_config():
    return from_dict(json.loads(DEMO_CONFIG.read_text()))


@pytest.fixture(scope="session")
def demo_system(demo_config):
    return build_system(demo_config)


@pytest.fixture(scope="session")
def demo_binned(demo_system):
    return bin_system(demo_system, (E_L, E_H), N_A)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting ----------------------------------------------------

_results = OrderedDict()


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            item.user_properties.append(("criterion", m.kwargs["criterion"]))
            item.user_properties.append(("title", m.kwargs["title"]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _results[report.nodeid] = (props["criterion"], props["title"], report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    groups = OrderedDict()
    for crit, title, outcome in _results.values():
        key = "".join(ch for ch in crit if ch.isdigit())
        groups.setdefault(key, []).append((crit, title, outcome))
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(groups, key=int):
        parts = groups[key]
        ok = all(o == "passed" for _, _, o in parts)
        tr.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}")
        if len(parts) > 1 or not ok:
            for crit, title, outcome in parts:
                tr.write_line(f"    {crit:<4} {outcome.upper():<7} {title}")
        else:
            tr.write_line(f"    {parts[0][1]}")
