from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplab.energy import (
    decay_report,
    derivative_weight,
    dissipation_EN,
    energy_EN,
    energy_inequality_residual,
    eps_delta_r_decay_check,
    interpolation_gap,
    linear_dissipation_rate,
    multi_indices,
    neg_sobolev_track,
    perturb_energy_components,
    perturb_energy_report,
    time_derivative,
    write_csv,
    write_json,
)
from nsplab.solver import NSPSystem, make_initial_data, split_initial_data
from nsplab.spectral import make_grid

GRID = make_grid(2, 16, 4 * np.pi)


@pytest.mark.parametrize("dim,N", [(1, 3), (2, 3), (3, 2), (3, 4)])
def test_multi_index_count(dim, N):
    assert len(multi_indices(dim, N)) == comb(N + dim, dim)
    assert len(multi_indices(dim, N, exact=True)) == comb(N + dim - 1, dim - 1)


def test_derivative_weight_brute_force():
    g = make_grid(2, 8, 3.0)
    kx, ky = g.wavevector[0], g.wavevector[1]
    brute = sum(kx ** (2 * a) * ky ** (2 * b) for a in range(3) for b in range(3) if a + b <= 2)
    np.testing.assert_allclose(derivative_weight(g, 2), np.broadcast_to(brute, g.shape))


def test_energy_of_zero_state_is_zero():
    y = np.zeros((3,) + GRID.shape, dtype=complex)
    assert energy_EN(GRID, y, 3) == 0.0
    assert dissipation_EN(GRID, y, 3, 0.1) == 0.0


def test_single_mode_kinetic_energy():
    a = 0.3
    y = np.zeros((3,) + GRID.shape, dtype=complex)
    y[1, 2, 0] = y[1, -2, 0] = a / 2          # u_x = a cos(xi x)
    assert energy_EN(GRID, y, 0) == pytest.approx(0.5 * GRID.volume * a**2 / 2, rel=1e-13)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.floats(0.01, 1.0))
def test_density_weight_equivalence(seed, size):
    data = make_initial_data(GRID, size, 0.1, seed)
    full, _, _ = split_initial_data(data)
    rho_max = np.abs(np.fft.ifftn(full[0]).real * GRID.npoints).max()
    full = full.copy()
    full[0] *= min(1.0, (1 / 6) / rho_max)
    weighted = energy_EN(GRID, full, 2)
    flat = energy_EN(GRID, full, 2, linear=True)
    assert 5 / 6 * flat - 1e-15 <= weighted <= 7 / 6 * flat + 1e-15


def test_time_derivative_exact_on_quartics():
    t = np.linspace(0, 1, 11)
    f = 1 + t - 2 * t**2 + 0.5 * t**3 + 3 * t**4
    df = 1 - 4 * t + 1.5 * t**2 + 12 * t**3
    np.testing.assert_allclose(time_derivative(t, f), df, atol=1e-11)


def test_time_derivative_errors():
    with pytest.raises(ValueError):
        time_derivative([0, 1, 2], [0, 1, 2])
    with pytest.raises(ValueError):
        time_derivative([0, 1, 2, 3, 5], [0, 1, 2, 3, 4])


@pytest.fixture(scope="module")
def linear_run():
    eps = 0.1
    data = make_initial_data(GRID, 0.05, eps, 1)
    _, main0, _ = split_initial_data(data)
    ts, ys = NSPSystem(GRID, eps, "main", nonlinear=False).run(main0, 0.5, 0.005)
    return eps, ts, ys


def test_linear_energy_decay_equals_per_mode_dissipation(linear_run):
    eps, ts, ys = linear_run
    E = [energy_EN(GRID, y, 3, linear=True) for y in ys]
    dE = time_derivative(ts, E)
    rate = np.array([linear_dissipation_rate(GRID, y, 3, eps) for y in ys])
    np.testing.assert_allclose(-dE, rate, rtol=1e-8)


def test_linear_residual_is_nonpositive(linear_run):
    eps, ts, ys = linear_run
    led = energy_inequality_residual(ts, ys, GRID, 3, eps, linear=True)
    assert max(led.extra["numerator"]) <= 1e-12 * max(led.energy)
    assert max(led.residual) <= 0 and led.c_fit == 0.0
    assert all(v >= 0 for v in led.energy + led.dissipation)


def test_residual_of_zero_trajectory_is_zero():
    ys = [np.zeros((3,) + GRID.shape, dtype=complex)] * 6
    led = energy_inequality_residual(np.arange(6) * 0.1, ys, GRID, 2, 0.1)
    assert led.residual == [0.0] * 6


@pytest.fixture(scope="module")
def split_run():
    eps = 0.2
    data = make_initial_data(GRID, 0.1, eps, 3, k_band=2.0)
    _, m, p = split_initial_data(data)
    ts, ys = NSPSystem(GRID, eps, "split").run(np.concatenate([m, p]), 1.0, 0.02, record_every=5)
    return eps, ts, ys


def test_perturbation_report_sandwich_and_cauchy_schwarz(split_run):
    eps, ts, ys = split_run
    rep = perturb_energy_report(ts, ys, GRID, eps)
    assert rep.sandwich_ok and rep.cauchy_schwarz_ok
    assert all(0.5 * e <= m <= 2 * e for e, m in zip(rep.E_M, rep.modified))
    assert all(np.all(np.isfinite(v)) for v in rep.residuals.values())


def test_perturbation_energy_of_zero_perturbation(split_run):
    eps, ts, ys = split_run
    d = GRID.dim
    zero = [np.concatenate([y[:1 + d], np.zeros_like(y[1 + d:])]) for y in ys]
    comps = perturb_energy_components(GRID, zero[0], 3)
    assert comps["E_M"] == 0.0 and comps["cross"] == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_cross_term_cauchy_schwarz(seed):
    rng = np.random.default_rng(seed)
    d = make_initial_data(GRID, 0.1, 0.5, seed)
    y = np.concatenate([d["rho"][None], d["u_pot"], rng.uniform(0.1, 2) * d["rho"][None], d["u_pot"] + d["u_sol"]])
    c = perturb_energy_components(GRID, y, 3)
    assert abs(c["cross"]) <= c["n_HM"] * c["v_HM"] * (1 + 1e-12)


def test_interpolation_is_equality_on_single_mode():
    c = np.zeros(GRID.shape, dtype=complex)
    c[3, 1] = c[-3, -1] = 0.2
    assert abs(interpolation_gap(GRID, c, 0.4)) <= 1e-14


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.49))
def test_interpolation_inequality_holds(seed, s):
    c = make_initial_data(GRID, 1.0, 0.1, seed)["rho"]
    assert interpolation_gap(GRID, c, s) <= 1e-10


def test_neg_sobolev_track(split_run):
    eps, ts, ys = split_run
    res = neg_sobolev_track(ts, ys, GRID, 0.4)
    assert res["finite"] and res["interpolation_ok"]
    assert res["sup"] <= 2 * res["E0"] + res["C_recorded"]
    with pytest.raises(ValueError):
        neg_sobolev_track(ts, ys, GRID, 0.6)
    bad = [y.copy() for y in ys]
    bad[0][3, 0, 0] = 1.0        # mean of n
    with pytest.raises(ValueError):
        neg_sobolev_track(ts, bad, GRID, 0.4)


def test_eps_laplacian_check_on_zero_trajectory():
    R = np.zeros((5, 2) + GRID.shape, dtype=complex)
    res = eps_delta_r_decay_check(np.linspace(0, 1, 5), R, GRID, 0.1)
    assert res["sup_first"] == 0.0 and res["sup_second"] == 0.0


def test_decay_report_labels_torus_fits():
    t = np.linspace(1, 300, 300)
    out = decay_report(t, {"a": t**-1.125}, {"a": 1.125})
    assert out[0]["fitted_exponent"] == pytest.approx(1.125)
    assert out[0]["label"] == "qualitative (finite box)"


def test_ledger_writers(tmp_path):
    write_csv(tmp_path / "x.csv", ["t", "v"], [[0.0, 1.0], [0.5, 0.25]])
    assert (tmp_path / "x.csv").read_text().splitlines() == ["t,v", "0,1", "0.5,0.25"]
    write_json(tmp_path / "x.json", {"a": 1})
    assert '"schema": "nsplab/1"' in (tmp_path / "x.json").read_text()
