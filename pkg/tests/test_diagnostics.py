import csv

import numpy as np
import pytest
from scipy.stats import unitary_group

from conftest import E_H, E_L, N_A, T1, T2, overlapping_system
from resonance_control.diagnostics import (REPORT_LABELS, MeasureReport, correlation_report,
                                           hadamard, hadamard_R, log_hadamard, measure_window,
                                           overlap_matrix, report_markdown, write_report_csv)
from resonance_control.dynamics import build_Me
from resonance_control.errors import ValidationError
from resonance_control.system import generate_synthetic


def _hpd(rng, n=5):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return A.conj().T @ A + 0.2 * np.eye(n)


def test_two_by_two_value():
    assert hadamard([[1.0, 0.5], [0.5, 1.0]]) == pytest.approx(0.75, rel=1e-15)


def test_diagonal_is_exactly_one():
    assert hadamard(np.diag([3.0, 1e-30, 7.0])) == 1.0


def test_matches_direct_determinant(rng):
    K = _hpd(rng)
    ref = np.linalg.det(K).real / np.prod(np.diag(K).real)
    assert hadamard(K) == pytest.approx(ref, rel=1e-12)
    assert 0 < hadamard(K) <= 1


def test_singular_matrix_gives_zero():
    v = np.array([1.0, 1j, 2.0])
    assert log_hadamard(np.outer(v, v.conj())) == -np.inf


@pytest.mark.parametrize("K", [
    [[1.0, 2.0], [0.0, 1.0]],
    [[1.0, 0.0], [0.0, 0.0]],
    [[-1.0, 0.0], [0.0, 1.0]],
    np.ones(3),
])
def test_invalid_inputs_raise(K):
    with pytest.raises(ValidationError):
        hadamard(K)


def test_diagonal_scaling_invariance(rng):
    K = _hpd(rng)
    D = np.diag(rng.uniform(0.1, 10, 5) * np.exp(1j * rng.random(5)))
    assert hadamard(D.conj().T @ K @ D) == pytest.approx(hadamard(K), rel=1e-11)


def test_unitary_mixing_of_a_diagonal_lowers_the_measure(rng):
    U = unitary_group.rvs(4, random_state=7)
    K = U @ np.diag([1.0, 2.0, 3.0, 4.0]) @ U.conj().T
    assert hadamard(K) < 1.0
    # the determinant itself is unitarily invariant
    assert np.linalg.det(K).real == pytest.approx(24.0, rel=1e-12)


def test_ratio_measures_trivial_cases(rng):
    K = _hpd(rng)
    HR, HC = hadamard_R(K, K)
    # R = I
    assert HC == pytest.approx(1.0)
    inv = np.linalg.inv(K)
    ref = 1.0 / (np.prod(np.diag(inv).real) * np.prod(np.diag(K).real))
    assert HR == pytest.approx(ref, rel=1e-10)
    D1, D2 = np.diag([1.0, 2.0, 4.0]), np.diag([3.0, 1.0, 0.5])
    assert hadamard_R(D1, D2) == pytest.approx((1.0, 1.0))


def test_ratio_measure_matches_direct_formula(rng):
    K1, K2 = _hpd(rng), _hpd(rng)
    R = np.linalg.solve(K1, K2)
    det_R = np.linalg.det(R)
    HR, HC = hadamard_R(K1, K2)
    assert HC == pytest.approx(det_R / np.prod(np.diag(R)), rel=1e-10)
    ref = det_R.real / (np.prod(np.diag(np.linalg.inv(K1)).real) * np.prod(np.diag(K2).real))
    assert HR == pytest.approx(ref, rel=1e-10)


def test_ratio_measure_rejects_singular_T1():
    with pytest.raises(ValidationError):
        hadamard_R(np.array([[1.0, 1.0], [1.0, 1.0]]) + 0j, np.eye(2))


def test_overlap_matrix_explicit_sum():
    s = overlapping_system(seed=2, n_q=3)
    om = overlap_matrix(s, (E_L, E_H))
    a = np.abs(s.R)
    ref = np.array([[sum(a[i, k] * a[i, l] for i in range(s.n_alpha)) for l in range(3)]
                    for k in range(3)])
    np.testing.assert_allclose(om, ref, rtol=1e-13)
    np.testing.assert_allclose(np.diag(om), 1.0, rtol=1e-13)
    with pytest.raises(ValidationError):
        overlap_matrix(s, (1.0, 2.0))


def test_disjoint_resonances_have_unit_overlap_measure():
    s = generate_synthetic(400, 4, (4.0, 6.0), 0.01, [4.3, 4.8, 5.3, 5.8], seed=1,
                           cutoff_widths=5.0)
    assert hadamard(overlap_matrix(s, (4.0, 6.0))) == 1.0


def test_kernel_measure_is_time_independent(demo_binned):
    # K(t) differs between times only by a diagonal congruence
    h1 = log_hadamard(build_Me(demo_binned, T1).K)
    h2 = log_hadamard(build_Me(demo_binned, T2).K)
    assert h1 == pytest.approx(h2, rel=1e-9)


def test_measure_window_report(demo_system):
    r = measure_window(demo_system, (E_L, E_H), T1, T2, N_A)
    assert isinstance(r, MeasureReport)
    assert 0 < r.H_Omega <= 1 and 0 < r.H_K_T1 <= 1
    assert r.lambda_min < 1 < r.lambda_max
    assert r.control_range == pytest.approx(r.lambda_max / r.lambda_min)


def test_report_outputs(tmp_path, demo_system):
    reports = correlation_report(demo_system, [(E_L, E_H), (E_L, E_L + 8 * 0.012)], T1, T2, 8)
    path = write_report_csv(tmp_path / "m.csv", reports)
    rows = list(csv.reader(path.open()))
    assert rows[0] == list(REPORT_LABELS)
    assert len(rows) == 3
    md = report_markdown(reports)
    assert md.count("\n") == 2 + len(REPORT_LABELS) - 3
    assert "H(Omega)^(1/N_A)" in md
