import warnings

import numpy as np
import pytest

from conftest import ALPHA, E_H, E_L, N_A, T1, overlapping_system
from resonance_control.dynamics import (build_Mc, build_Me, doorway_coefficients,
                                        excited_norm, field_amplitudes, population,
                                        population_c, population_trace, tau)
from resonance_control.errors import CoarseGrainingWarning, ValidationError
from resonance_control.pulses import solve_d, uniform_basis
from resonance_control.system import bin_system, generate_synthetic


def _field(binned, d=None, alpha=ALPHA):
    basis = uniform_basis(binned.omega_A, alpha)
    target = np.ones(binned.n_bins, complex) if d is None else d
    return solve_d(basis, binned.omega_A, target)


def _isolated():
    # four well separated narrow resonances with disjoint supports
    return generate_synthetic(400, 4, (4.0, 6.0), 0.01, [4.3, 4.8, 5.3, 5.8],
                              [1.0, 0.7, 1.2, 0.9], seed=2, cutoff_widths=5.0)


def test_tau_is_one_at_time_zero(demo_system, demo_binned):
    np.testing.assert_array_equal(tau(demo_system, 0.0).values, 1.0)
    np.testing.assert_allclose(tau(demo_binned, 0.0).values, 1.0, rtol=0, atol=1e-15)


def test_tau_vanishes_at_the_first_sinc_zero(demo_system):
    d = demo_system.Delta_alpha[0]
    t = 2 * np.pi * demo_system.hbar / d
    assert abs(tau(demo_system, t, warn=False).values[0]) < 1e-15


def test_binned_tau_is_the_member_mean(demo_system, demo_binned):
    t = 40.0
    per_state = tau(demo_system, t).values
    ref = np.array([per_state[m].mean() for m in demo_binned.members])
    np.testing.assert_allclose(tau(demo_binned, t).values, ref, rtol=1e-13)


def test_tau_warns_beyond_validity(demo_system):
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = tau(demo_system, 1e5)
    assert not out.valid
    assert any(issubclass(x.category, CoarseGrainingWarning) for x in w)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert tau(demo_system, 1e5, warn=False).valid is False


def test_Mc_is_identity_at_time_zero_for_orthonormal_columns():
    s = _isolated()
    np.testing.assert_allclose(build_Mc(s, 0.0).M, np.eye(4), atol=1e-14)


def test_Mc_is_diagonal_for_isolated_resonances():
    M = build_Mc(_isolated(), 120.0).M
    np.testing.assert_array_equal(M - np.diag(np.diag(M)), 0.0)


def test_Mc_matches_the_explicit_sum():
    s = overlapping_system(seed=5, n_q=4)
    t = 75.0
    tv = tau(s, t).values
    ref = np.zeros((4, 4), complex)
    for k in range(4):
        for l in range(4):
            ref[k, l] = sum(np.conj(s.R[a, k]) * tv[a] * s.R[a, l] for a in range(s.n_alpha))
    np.testing.assert_allclose(build_Mc(s, t).M, ref, rtol=1e-12, atol=1e-14)


def test_laser_kernel_matches_the_overlap_form(demo_binned):
    t = T1
    km = build_Me(demo_binned, t)
    g = tau(demo_binned, t).values * demo_binned.mu_A
    ref = np.conj(g)[:, None] * demo_binned.Q_A() * g[None, :]
    np.testing.assert_allclose(km.K, ref, rtol=1e-12, atol=1e-14 * np.abs(ref).max())
    np.testing.assert_array_equal(km.K, km.K.conj().T)
    assert np.linalg.eigvalsh(km.K).min() > -1e-12 * np.abs(km.K).max()


def test_single_resonance_kernel_has_rank_one():
    s = generate_synthetic(N_A * 8, 1, (E_L, E_H), 0.05, [4.8])
    K = build_Me(bin_system(s, (E_L, E_H), N_A), 60.0).K
    ev = np.linalg.eigvalsh(K)
    assert ev[-2] < 1e-12 * ev[-1]


def test_zero_field_gives_zero_population(demo_binned):
    f = _field(demo_binned, np.zeros(N_A, complex))
    assert population(f, demo_binned, 50.0) == 0.0
    assert excited_norm(f, demo_binned, 50.0) == 0.0


def test_population_vanishes_before_the_pulse(demo_binned):
    f = _field(demo_binned)
    assert population(f, demo_binned, -3 * f.t_over) < 1e-20


def test_population_uses_final_amplitudes_after_t_over(demo_binned):
    f = _field(demo_binned)
    np.testing.assert_array_equal(field_amplitudes(f, f.t_over + 1), f.spectrum())
    np.testing.assert_array_equal(field_amplitudes(f, 1e9), f.spectrum())


def test_population_is_phase_independent_for_diagonal_kernels():
    s = _isolated()
    c = np.array([1.0, 0.5, 2.0, 0.3])
    rng = np.random.default_rng(0)
    phased = c * np.exp(2j * np.pi * rng.random(4))
    t = np.array([0.0, 80.0, 160.0])
    np.testing.assert_allclose(population_c(phased, s, t), population_c(c, s, t), rtol=1e-13)


def test_doorway_coefficients(demo_system):
    np.testing.assert_allclose(doorway_coefficients(demo_system),
                               1j / demo_system.hbar * demo_system.mu_kappa)
    with pytest.raises(ValidationError):
        population_c(np.ones(3), demo_system, 0.0)


def test_workers_do_not_change_results(demo_binned):
    f = _field(demo_binned)
    t = np.linspace(-100, 300, 41)
    np.testing.assert_array_equal(population(f, demo_binned, t, workers=1),
                                  population(f, demo_binned, t, workers=4))


def test_grid_mismatch_is_rejected(demo_binned):
    basis = uniform_basis(demo_binned.omega_A[:8], ALPHA)
    f = solve_d(basis, demo_binned.omega_A[:8], np.ones(8))
    with pytest.raises(ValidationError) as info:
        population(f, demo_binned, 0.0)
    assert info.value.field == "omega_grid"


def test_trace_columns_are_consistent(demo_binned):
    f = _field(demo_binned)
    t = np.linspace(-150, 300, 31)
    rows = population_trace(f, demo_binned, t)
    assert rows.shape == (31, 4)
    np.testing.assert_array_equal(rows[:, 0], t)
    np.testing.assert_allclose(rows[:, 1] + rows[:, 2], excited_norm(f, demo_binned, t), rtol=1e-12)
    np.testing.assert_allclose(rows[:, 3], np.abs(f.time_profile(t)))
