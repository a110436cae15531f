import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from nsplab.reference import determinant_defect, expm_2x2, green_oracle_errors, green_sample
from nsplab.semigroup import (
    CROSSING_TOL,
    DispersionSymbol,
    apply_semigroup,
    b_value,
    eigenvalues,
    generator_matrix,
    green_entries,
    green_matrix,
    heat_smoothing_sup,
    q_inverse,
    q_inverse_matrix,
    q_matrix,
    q_transform,
    radicand,
    tilde_b_value,
    verify_high_freq_damping,
)
from nsplab.spectral import CutoffParams, SpectralField, make_grid

from oracles import mp_expm_2x2


def crossing_radius(eps):
    return np.sqrt((1 + np.sqrt(1 + 4 * eps**2)) / (2 * eps**2))


@pytest.mark.parametrize("kw", [dict(variant="proton"), dict(epsilon=0.0), dict(epsilon=1.5)])
def test_symbol_validation(kw):
    with pytest.raises(ValueError):
        DispersionSymbol(**{"variant": "electron", "epsilon": 0.1, **kw})


def test_longdouble_reference_matches_scipy_at_moderate_norm(rng):
    M = rng.standard_normal((200, 2, 2)) * 3
    ref = expm(M)
    np.testing.assert_allclose(expm_2x2(M), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


@pytest.mark.parametrize("variant", ["electron", "ion"])
def test_green_matrix_against_scaling_and_squaring(variant):
    eps, r, t = green_sample(2000, seed=7, n_eps=10)
    err = green_oracle_errors(green_matrix, eps, r, t, variant)
    assert err.max() <= 1e-10


@pytest.mark.parametrize("eps", [1e-3, 0.05, 1.0])
def test_green_matrix_at_crossing_against_mpmath(eps):
    pytest.importorskip("mpmath")
    sym = DispersionSymbol("electron", eps)
    rc = crossing_radius(eps)
    for dr in (0.0, 1e-9, -1e-9):
        r = rc * (1 + dr)
        for t in (0.3, 2.0):
            ref = mp_expm_2x2(-t * generator_matrix(np.array(r), sym))
            G = green_matrix(t, r, sym)
            assert np.abs(G - ref).max() <= 1e-11 * np.abs(ref).max()


def test_series_branch_is_used_near_crossing():
    eps = 0.1
    sym = DispersionSymbol("electron", eps)
    r = crossing_radius(eps) * (1 + 1e-9)
    assert abs(radicand(r, sym)) < CROSSING_TOL


def test_green_solves_the_linear_ode():
    sym = DispersionSymbol("electron", 0.2)
    r = np.array([0.1, 1.0, 3.0, crossing_radius(0.2), 8.0])
    t, h = 1.3, 1e-4
    dG = (green_matrix(t + h, r, sym) - green_matrix(t - h, r, sym)) / (2 * h)
    rhs = -generator_matrix(r, sym) @ green_matrix(t, r, sym)
    np.testing.assert_allclose(dG, rhs, atol=1e-6)


def test_green_at_zero_time_is_identity():
    sym = DispersionSymbol("electron", 0.3)
    G = green_matrix(0.0, np.linspace(0, 20, 50), sym)
    np.testing.assert_allclose(G, np.broadcast_to(np.eye(2), G.shape), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0.0, 30.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_semigroup_property(eps, r, t, s):
    sym = DispersionSymbol("electron", eps)
    lhs = green_matrix(t + s, r, sym)
    rhs = green_matrix(t, r, sym) @ green_matrix(s, r, sym)
    assert np.abs(lhs - rhs).max() <= 1e-11 * max(1.0, np.abs(green_matrix(t, r, sym)).max() ** 2)


def test_determinant_identity_on_oracle_sample():
    eps, r, t = green_sample(3000, seed=3, n_eps=10)
    worst = max(float(determinant_defect(t[eps == e], r[eps == e], float(e)).max()) for e in np.unique(eps))
    assert worst <= 1e-12


def test_b_value_branches():
    sym = DispersionSymbol("electron", 0.5)
    assert b_value(0.0, sym) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        b_value(10.0, sym)
    with pytest.raises(ValueError):
        tilde_b_value(0.1, sym)
    assert tilde_b_value(10.0, sym) > 0


@pytest.mark.parametrize("variant", ["electron", "ion"])
@pytest.mark.parametrize("eps", [1e-2, 0.3])
def test_q_diagonalises_the_generator(variant, eps):
    sym = DispersionSymbol(variant, eps)
    r = np.array([0.2, 1.0, 2.5])
    Q, Qi = q_matrix(r, sym), q_inverse_matrix(r, sym)
    np.testing.assert_allclose(Qi @ Q, np.broadcast_to(np.eye(2), Q.shape), atol=1e-12)
    lp, lm = eigenvalues(r, sym)
    D = Qi @ (-generator_matrix(r, sym)) @ Q
    np.testing.assert_allclose(D[..., 0, 0], lm, atol=1e-12)
    np.testing.assert_allclose(D[..., 1, 1], lp, atol=1e-12)
    np.testing.assert_allclose(D[..., 0, 1], 0, atol=1e-12)


def test_ion_zero_mode_uses_identity():
    sym = DispersionSymbol("ion", 0.1)
    np.testing.assert_allclose(q_matrix(np.array([0.0]), sym)[0], np.eye(2))
    np.testing.assert_allclose(q_inverse_matrix(np.array([0.0]), sym)[0], np.eye(2))


def test_q_transform_roundtrip_and_support_check(rng):
    g = make_grid(2, 16, 30.0)
    eps = 0.05
    params = CutoffParams(eps)
    low = (np.sqrt(eps / params.kappa0) * g.xi_abs <= 1).astype(float)
    V = SpectralField(g, rng.standard_normal((2,) + g.shape) * low + 0j, "stack")
    sym = DispersionSymbol("electron", eps)
    R = q_transform(V, sym, params)
    np.testing.assert_allclose(q_inverse(R, sym, params).coeffs, V.coeffs, atol=1e-12)
    with pytest.raises(ValueError):
        q_transform(SpectralField(g, np.ones((2,) + g.shape, dtype=complex), "stack"), sym, params)


def test_apply_semigroup_composes_and_rejects_negative_time(rng):
    g = make_grid(2, 16)
    V = SpectralField(g, rng.standard_normal((2,) + g.shape) + 0j, "stack")
    sym = DispersionSymbol("electron", 0.1)
    two = apply_semigroup(0.4, apply_semigroup(0.6, V, sym), sym)
    np.testing.assert_allclose(two.coeffs, apply_semigroup(1.0, V, sym).coeffs, atol=1e-13)
    with pytest.raises(ValueError):
        apply_semigroup(-1.0, V, sym)
    with pytest.raises(ValueError):
        apply_semigroup(1.0, SpectralField(g, V.coeffs[:1], "stack"), sym)


def test_high_frequency_damping_small_sweep():
    res = verify_high_freq_damping([1e-2, 1.0], np.linspace(0, 200, 101), np.geomspace(1e-2, 1e3, 400))
    assert res["passed"] and res["sup"] <= 3


def test_damping_bound_fails_for_a_too_fast_rate():
    res = verify_high_freq_damping([1.0], np.linspace(0, 200, 101), np.geomspace(1e-2, 1e3, 400), rate=0.5)
    assert not res["passed"]


@pytest.mark.parametrize("k", [1, 2])
def test_heat_smoothing_bounded(k):
    v = heat_smoothing_sup([1e-2, 1e-1, 1.0], np.linspace(0, 100, 201), np.geomspace(1e-2, 1e2, 400), k)
    assert np.isfinite(v) and v < 2.0
