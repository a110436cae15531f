import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplab.phase import (
    BilinearOperator,
    PhaseFamily,
    _derivative_tensors,
    bilinear_apply,
    divided_symbol,
    normal_form_identity_check,
    normal_form_symbol,
    phase_value,
    quantity_A,
    quantity_A_expanded,
    reciprocal_phase_bound_scan,
    symbol_derivative_scan,
)
from nsplab.solver import normal_form_trajectory
from nsplab.spectral import forward_transform, make_grid

from oracles import brute_pair_sum

vec = st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))


@settings(max_examples=60, deadline=None)
@given(vec, vec, st.floats(1e-3, 0.1))
def test_quantity_A_closed_and_expanded_forms_agree(xi, eta, eps):
    xi, eta = np.array(xi), np.array(eta)
    assert quantity_A(xi, eta, eps) == pytest.approx(quantity_A_expanded(xi, eta, eps), rel=1e-10, abs=1e-10)


def test_phase_symmetry_and_sign():
    fam = PhaseFamily("electron", 0.01)
    xi, eta = np.array([0.5, 0.2, 0.0]), np.array([-0.3, 0.4, 0.1])
    assert phase_value(1, 1, xi, eta, fam) == pytest.approx(phase_value(1, 1, eta, xi, fam))
    assert phase_value(1, 1, xi, eta, fam) > 0
    assert phase_value(2, 2, xi, eta, fam) < 0


def test_normal_form_symbol_is_finite_on_support():
    fam = PhaseFamily("electron", 0.1)
    z = np.random.default_rng(0).uniform(-1, 1, (500, 3))
    e = np.random.default_rng(1).uniform(-1, 1, (500, 3))
    assert np.all(np.isfinite(normal_form_symbol(z, e, fam)))
    assert np.all(np.isfinite(divided_symbol(1, 2, 2, fam)(z, e)))


def test_phase_scan_small_grid():
    res = reciprocal_phase_bound_scan(30, [1e-2, 1.0])
    for row in res["per_epsilon"]:
        for lvl in row["levels"]:
            assert lvl["min_phi11"] > 0
            assert lvl["min_A"] >= res["A_bound"]


def test_derivative_tensors_exact_on_quadratics():
    rng = np.random.default_rng(4)
    Q = rng.standard_normal((6, 6))
    Q = Q + Q.T
    lin = rng.standard_normal(6)
    F = lambda x: (0.5 * np.einsum("pi,ij,pj->p", x, Q, x) + x @ lin)[:, None]
    x0 = rng.standard_normal((5, 6))
    f0, g, H = _derivative_tensors(F, x0, np.full(5, 1e-2))
    np.testing.assert_allclose(g[:, 0], x0 @ Q + lin, atol=1e-8)
    np.testing.assert_allclose(H[:, 0], np.broadcast_to(Q, (5, 6, 6)), atol=1e-6)


def test_symbol_derivative_scan_runs_small():
    res = symbol_derivative_scan(10, [0.1], pairs=((1, 1),))
    row = res["per_epsilon"][0]
    assert all(np.all(np.isfinite(v)) for lvl in row["levels"] for k, v in lvl.items() if k.startswith("phi"))


def test_bilinear_with_unit_symbol_is_dealiased_product(rng):
    g = make_grid(2, 16, 5.0)
    f = g.dealias(forward_transform(g, rng.standard_normal(g.shape)).coeffs)
    h = g.dealias(forward_transform(g, rng.standard_normal(g.shape)).coeffs)
    op = BilinearOperator(g, lambda z, e: np.ones(z.shape[:-1]))
    phys = lambda c: np.fft.ifftn(c).real * g.npoints
    ref = g.dealias(np.fft.fftn(phys(f) * phys(h)) / g.npoints)
    np.testing.assert_allclose(op.apply_coeffs(f, h), ref, atol=1e-13)


def test_bilinear_against_brute_pair_sum(rng):
    g = make_grid(2, 8, 3.0)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    h = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f, h = g.dealias(f), g.dealias(h)
    sym = lambda z, e: 1.0 + z[..., 0] * e[..., 1] - 2j * np.sum(z * z, axis=-1)
    op = BilinearOperator(g, sym)
    np.testing.assert_allclose(op.apply_coeffs(f, h), brute_pair_sum(g, sym, f, h), atol=1e-12)


def test_bilinear_budget_and_grid_checks(rng):
    g = make_grid(2, 32)
    with pytest.raises(ValueError):
        BilinearOperator(g, lambda z, e: 1.0, budget=1000)
    g2 = make_grid(2, 8)
    f = forward_transform(g2, rng.standard_normal(g2.shape))
    other = forward_transform(make_grid(2, 8, 3.0), rng.standard_normal(g2.shape))
    with pytest.raises(ValueError):
        bilinear_apply(lambda z, e: 1.0, f, other)


@pytest.fixture(scope="module")
def nf_trajectory():
    g = make_grid(2, 16, 4 * np.pi)
    return g, normal_form_trajectory(g, 1e-5, 0.5, 128, delta0=0.05)


def test_normal_form_identity_converges_at_second_order(nf_trajectory):
    g, tr = nf_trajectory
    res = normal_form_identity_check(tr["times"], tr["R"], tr["B"], g, 1e-5, levels=(32, 64, 128))
    for pair in res.values():
        assert all(abs(o - 2.0) < 0.2 for o in pair["orders"])
        assert pair["levels"][-1]["residual"] < 1e-4


def test_normal_form_identity_rejects_incompatible_levels(nf_trajectory):
    g, tr = nf_trajectory
    with pytest.raises(ValueError):
        normal_form_identity_check(tr["times"], tr["R"], tr["B"], g, 1e-5, levels=(48,))
