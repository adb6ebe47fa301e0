import csv

import numpy as np
import pytest

from conftest import ALPHA, N_A, T1, T2
from resonance_control.control import relative_control, synthesize_field
from resonance_control.errors import ValidationError
from resonance_control.pulses import basis_matrix, solve_d, uniform_basis
from resonance_control.simplify import (achieved_ratio, local_average, retention_sweep,
                                        smooth_expand, truncate_amplitudes, write_retention_csv)


@pytest.fixture(scope="module")
def sols(demo_binned):
    return relative_control(demo_binned, T1, T2)


@pytest.fixture(scope="module")
def basis(demo_binned):
    return uniform_basis(demo_binned.omega_A, ALPHA)


def _field(demo_binned, basis, values):
    return solve_d(basis, demo_binned.omega_A, values)


def test_identity_limits(demo_binned, basis, sols):
    f = synthesize_field(sols[-1], demo_binned, basis)
    assert local_average(f, N_A) is f
    assert truncate_amplitudes(f, N_A) is f


def test_constant_field_is_unchanged_by_averaging(demo_binned, basis):
    f = _field(demo_binned, basis, np.full(N_A, 0.3 - 0.4j))
    for n_s in (1, 2, 4, 8):
        np.testing.assert_allclose(local_average(f, n_s).spectrum(), f.spectrum(), atol=1e-12)


def test_averaging_produces_steps(demo_binned, basis, rng):
    f = _field(demo_binned, basis, rng.normal(size=N_A) + 1j * rng.normal(size=N_A))
    v = local_average(f, 4).spectrum().reshape(4, 4)
    np.testing.assert_allclose(v, v[:, :1].repeat(4, axis=1), atol=1e-12)


def test_phase_mean_is_circular_across_the_branch_cut(demo_binned, basis):
    values = np.tile(np.exp(1j * np.array([np.pi - 0.1, -np.pi + 0.1])), N_A // 2)
    out = local_average(_field(demo_binned, basis, values), 1).spectrum()
    np.testing.assert_allclose(np.abs(np.angle(out)), np.pi, atol=1e-10)
    np.testing.assert_allclose(np.abs(out), 1.0, atol=1e-10)


def test_divisibility_is_checked(demo_binned, basis):
    f = _field(demo_binned, basis, np.ones(N_A))
    with pytest.raises(ValidationError) as info:
        local_average(f, 5)
    assert info.value.field == "N_S"


def test_smooth_expand_matches_super_bin_values_at_their_centres(demo_binned, basis):
    f = _field(demo_binned, basis, np.full(N_A, 2.0 + 0j))
    s = smooth_expand(f, 4)
    assert len(s.basis.pulses) == 4
    np.testing.assert_array_equal(s.omega_grid, f.omega_grid)
    centres = f.omega_grid.reshape(4, 4).mean(axis=1)
    np.testing.assert_allclose(basis_matrix(s.basis, centres) @ s.d, 2.0, rtol=1e-10)


def test_truncation_keeps_the_largest_and_is_idempotent(demo_binned, basis, sols):
    f = synthesize_field(sols[-1], demo_binned, basis)
    t = truncate_amplitudes(f, 5)
    v = t.spectrum()
    assert np.count_nonzero(np.abs(v) > 1e-10 * np.abs(v).max()) == 5
    order = np.argsort(-np.abs(f.spectrum()), kind="stable")[:5]
    np.testing.assert_allclose(v[order], f.spectrum()[order], rtol=1e-9)
    np.testing.assert_allclose(truncate_amplitudes(t, 5).spectrum(), v, atol=1e-12)


def test_truncation_ties_prefer_low_bins(demo_binned, basis):
    f = _field(demo_binned, basis, np.ones(N_A))
    v = truncate_amplitudes(f, 3).spectrum()
    np.testing.assert_allclose(np.abs(v[:3]), 1.0, atol=1e-10)
    np.testing.assert_allclose(v[3:], 0.0, atol=1e-10)
    with pytest.raises(ValidationError):
        truncate_amplitudes(f, 0)


def test_full_retention_row_reproduces_the_optimum(demo_binned, sols, tmp_path):
    rows = retention_sweep(demo_binned, sols[0], sols[-1], [N_A], ALPHA)
    r = rows[0]
    assert r.achieved_min == pytest.approx(sols[0].lam, rel=1e-8)
    assert r.achieved_max == pytest.approx(sols[-1].lam, rel=1e-8)
    assert r.fresh_min == pytest.approx(sols[0].lam, rel=1e-12)
    assert r.fresh_max == pytest.approx(sols[-1].lam, rel=1e-12)
    path = write_retention_csv(tmp_path / "r.csv", rows)
    assert next(csv.reader(path.open()))[0] == "N_R"


def test_truncated_ratios_stay_inside_the_bracket(demo_binned, sols, basis):
    f = synthesize_field(sols[-1], demo_binned, basis)
    for n_r in (2, 6, 12):
        r = achieved_ratio(truncate_amplitudes(f, n_r), demo_binned, T1, T2)
        assert sols[0].lam * (1 - 1e-9) <= r <= sols[-1].lam * (1 + 1e-9)


def test_sweep_is_worker_independent(demo_binned, sols):
    a = retention_sweep(demo_binned, sols[0], sols[-1], [4, 8], ALPHA, workers=1)
    b = retention_sweep(demo_binned, sols[0], sols[-1], [4, 8], ALPHA, workers=2)
    assert a == b
