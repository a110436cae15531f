import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplab.semigroup import DispersionSymbol, apply_semigroup
from nsplab.solver import (
    DensityFloorError,
    FluidState,
    NSPSystem,
    SplitPair,
    curl_diagnostic,
    desymmetrize,
    load_checkpoint,
    make_initial_data,
    nonlinear_V,
    poisson_solve,
    rhs_full,
    rhs_main,
    rhs_perturb,
    run_splitting_consistency,
    save_checkpoint,
    split_initial_data,
    step,
    symmetrize,
)
from nsplab.spectral import SpectralField, leray_project, make_grid, sobolev_norm

GRID = make_grid(2, 16, 4 * np.pi)


def state_from(data, eps, grid=GRID, variant="electron", include_sol=True):
    u = data["u_pot"] + (data["u_sol"] if include_sol else 0)
    return FluidState(grid, data["rho"], u, variant, eps)


@pytest.mark.parametrize("variant", ["electron", "ion"])
def test_poisson_solution_satisfies_equation(variant, rng):
    data = make_initial_data(GRID, 0.1, 0.1, 0)
    rho = data["rho"]
    phi = poisson_solve(rho, GRID, variant)
    lap = -GRID.xi_sq * phi
    lhs = lap - phi if variant == "ion" else lap
    np.testing.assert_allclose(lhs, rho, atol=1e-15)


def test_electron_poisson_requires_neutrality():
    rho = np.zeros(GRID.shape, dtype=complex)
    rho[0, 0] = 1e-3
    with pytest.raises(ValueError):
        poisson_solve(rho, GRID)
    poisson_solve(rho, GRID, "ion")


def test_initial_data_sizes_and_structure():
    eps, d0 = 0.2, 0.05
    data = make_initial_data(GRID, d0, eps, 11)
    f = lambda c, rank: sobolev_norm(SpectralField(GRID, c, rank), 3)
    assert f(data["rho"], "scalar") == pytest.approx(d0)
    assert f(data["u_pot"], "vector") == pytest.approx(d0)
    assert f(data["u_sol"], "vector") == pytest.approx(d0 * eps)
    assert data["rho"][0, 0] == 0 and np.all(data["u_pot"][:, 0, 0] == 0)
    sol, _ = leray_project(SpectralField(GRID, data["u_sol"], "vector"))
    np.testing.assert_allclose(sol.coeffs, data["u_sol"], atol=1e-16)
    assert SpectralField(GRID, data["rho"]).is_hermitian()


def test_initial_data_is_seeded():
    a = make_initial_data(GRID, 0.05, 0.1, 5)
    b = make_initial_data(GRID, 0.05, 0.1, 5)
    c = make_initial_data(GRID, 0.05, 0.1, 6)
    np.testing.assert_array_equal(a["rho"], b["rho"])
    assert not np.array_equal(a["rho"], c["rho"])


def test_viscous_factor_decays_modes_exactly():
    eps, h = 0.3, 0.7
    sys_ = NSPSystem(GRID, eps, "main")
    y = np.zeros((3,) + GRID.shape, dtype=complex)
    k = (2, 1)
    xi = np.array([GRID.wavevector[0][k[0], 0], GRID.wavevector[1][0, k[1]]])
    xi2 = xi @ xi
    y[1:, k[0], k[1]] = xi / np.sqrt(xi2)              # divergence direction
    out = sys_.viscous_factor(y, h)
    np.testing.assert_allclose(out[1:, k[0], k[1]], y[1:, k[0], k[1]] * np.exp(-2 * eps * xi2 * h), rtol=1e-14)
    y[1:, k[0], k[1]] = np.array([-xi[1], xi[0]]) / np.sqrt(xi2)   # solenoidal direction
    out = sys_.viscous_factor(y, h)
    np.testing.assert_allclose(out[1:, k[0], k[1]], y[1:, k[0], k[1]] * np.exp(-eps * xi2 * h), rtol=1e-14)


def test_linear_solver_matches_semigroup():
    eps = 0.1
    data = make_initial_data(GRID, 0.05, eps, 1)
    _, main0, _ = split_initial_data(data)
    sys_ = NSPSystem(GRID, eps, "main", nonlinear=False)
    _, ys = sys_.run(main0, 2.0, 0.01, record_every=200)
    V0 = symmetrize(FluidState.from_packed(GRID, main0, "electron", eps)).stacked()
    V = symmetrize(FluidState.from_packed(GRID, ys[-1], "electron", eps)).stacked()
    Ve = apply_semigroup(2.0, V0, DispersionSymbol("electron", eps))
    assert sobolev_norm(V - Ve, 3) <= 1e-9 * sobolev_norm(Ve, 3)


def test_time_stepping_is_fourth_order():
    eps = 0.05
    data = make_initial_data(GRID, 0.2, eps, 2)
    full0, _, _ = split_initial_data(data)
    sys_ = NSPSystem(GRID, eps, "full")
    ref = sys_.run(full0, 0.5, 0.5 / 160)[1][-1]
    errs = [np.abs(sys_.run(full0, 0.5, 0.5 / m)[1][-1] - ref).max() for m in (10, 20)]
    assert np.log2(errs[0] / errs[1]) == pytest.approx(4.0, abs=0.3)


def test_full_tendency_equals_main_plus_perturbation():
    eps = 0.2
    data = make_initial_data(GRID, 0.1, eps, 4)
    rho, upot, usol = data["rho"], data["u_pot"], data["u_sol"]
    full = rhs_full(FluidState(GRID, rho, upot + usol, "electron", eps))
    main = FluidState(GRID, rho, upot, "electron", eps)
    total = rhs_main(main) + rhs_perturb((np.zeros_like(rho), usol), main)
    np.testing.assert_allclose(total, full, atol=1e-14 * np.abs(full).max())


def test_splitting_consistency_short_run():
    res = run_splitting_consistency(GRID, 0.1, 0.2, 0.02, delta0=0.05, seed=3)
    assert res["max_deviation"] <= 1e-12


@pytest.mark.parametrize("variant", ["electron", "ion"])
def test_main_flow_stays_irrotational(variant):
    eps = 0.1
    data = make_initial_data(GRID, 0.1, eps, 8)
    _, main0, _ = split_initial_data(data)
    _, ys = NSPSystem(GRID, eps, "main", variant).run(main0, 0.5, 0.01, record_every=10)
    assert max(curl_diagnostic((GRID, y[1:])) for y in ys) <= 1e-12


@pytest.mark.parametrize("variant", ["electron", "ion"])
def test_symmetrize_roundtrip(variant):
    data = make_initial_data(GRID, 0.1, 0.1, 9)
    st_ = FluidState(GRID, data["rho"], data["u_pot"], variant, 0.1)
    back = desymmetrize(symmetrize(st_), variant, 0.1)
    np.testing.assert_allclose(back.rho, st_.rho, atol=1e-16)
    np.testing.assert_allclose(back.u, st_.u, atol=1e-16)


def test_symmetrize_rejects_charged_density():
    rho = np.zeros(GRID.shape, dtype=complex)
    rho[0, 0] = 0.1
    with pytest.raises(ValueError):
        symmetrize(FluidState(GRID, rho, np.zeros((2,) + GRID.shape, dtype=complex)))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 4.0))
def test_nonlinearity_is_quadratic(scale):
    data = make_initial_data(GRID, 0.05, 0.1, 10)
    st1 = FluidState(GRID, data["rho"], data["u_pot"], "electron", 0.1)
    st2 = FluidState(GRID, scale * data["rho"], scale * data["u_pot"], "electron", 0.1)
    b1, b2 = nonlinear_V(st1), nonlinear_V(st2)
    np.testing.assert_allclose(b2, scale**2 * b1, atol=1e-12 * scale**2 * np.abs(b1).max())


def test_density_floor_violation_raises():
    rho = np.zeros(GRID.shape, dtype=complex)
    rho[1, 0] = rho[-1, 0] = -0.48    # physical minimum 1 - 0.96
    state = FluidState(GRID, rho, np.zeros((2,) + GRID.shape, dtype=complex), "electron", 0.1)
    with pytest.raises(DensityFloorError):
        rhs_main(state)


def test_cfl_guard():
    data = make_initial_data(GRID, 0.05, 0.1, 0)
    state = state_from(data, 0.1)
    with pytest.raises(ValueError):
        step(state, 5.0)
    nxt = step(state, 0.01)
    assert nxt.t == pytest.approx(0.01)


def test_step_on_split_pair_advances_both_parts():
    data = make_initial_data(GRID, 0.05, 0.1, 0)
    main = FluidState(GRID, data["rho"], data["u_pot"], "electron", 0.1)
    pair = SplitPair(main, np.zeros_like(data["rho"]), data["u_sol"])
    nxt = step(pair, 0.01)
    full = step(FluidState(GRID, data["rho"], data["u_pot"] + data["u_sol"], "electron", 0.1), 0.01, kind="full")
    np.testing.assert_allclose(nxt.total().u, full.u, atol=1e-15)


def test_run_rejects_incommensurate_time():
    sys_ = NSPSystem(GRID, 0.1, "main")
    with pytest.raises(ValueError):
        sys_.run(np.zeros((3,) + GRID.shape, dtype=complex), 1.0, 0.3)


@pytest.mark.parametrize("split", [False, True])
def test_checkpoint_roundtrip_is_bit_exact(tmp_path, split):
    data = make_initial_data(GRID, 0.05, 0.1, 0)
    state = FluidState(GRID, data["rho"], data["u_pot"], "ion", 0.1, 1.25)
    if split:
        state = SplitPair(state, 0.5 * data["rho"], data["u_sol"])
    path = tmp_path / "ck.npz"
    save_checkpoint(path, state)
    back = load_checkpoint(path)
    if split:
        assert back.n.tobytes() == state.n.tobytes() and back.v.tobytes() == state.v.tobytes()
        back, state = back.main, state.main
    assert back.rho.tobytes() == state.rho.tobytes()
    assert back.u.tobytes() == state.u.tobytes()
    assert (back.variant, back.epsilon, back.t, back.grid) == (state.variant, state.epsilon, state.t, state.grid)


def test_unknown_system_kind():
    with pytest.raises(ValueError):
        NSPSystem(GRID, 0.1, "other")
    with pytest.raises(ValueError):
        NSPSystem(GRID, 0.1, "main", "positron")
