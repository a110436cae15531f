"""Acceptance suite: every criterion at its stated tolerance.

Each test records one ``criterion N: PASS|FAIL  detail`` line, printed in the
terminal summary, then asserts.  Campaigns run once per module through the
same ``run`` entry point the CLI uses, from the configs in ``demos/configs``.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nsplab.experiments import load_config, run
from nsplab.solver import make_initial_data, run_splitting_consistency
from nsplab.spectral import make_grid

CONFIGS = Path(__file__).resolve().parents[1] / "demos" / "configs"

pytestmark = pytest.mark.slow


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def campaign(tmp_path_factory, name):
    out = tmp_path_factory.mktemp(name)
    t0 = time.perf_counter()
    manifest = run(load_config(CONFIGS / f"{name}.ini"), out)
    return manifest, time.perf_counter() - t0


@pytest.fixture(scope="module")
def semigroup(tmp_path_factory):
    return campaign(tmp_path_factory, "semigroup")


@pytest.fixture(scope="module")
def dispersive(tmp_path_factory):
    return {d: campaign(tmp_path_factory, f"dispersive_d{d}") for d in (2, 3)}


@pytest.fixture(scope="module")
def phase(tmp_path_factory):
    return campaign(tmp_path_factory, "phase")


@pytest.fixture(scope="module")
def splitting(tmp_path_factory):
    return campaign(tmp_path_factory, "splitting")


@pytest.fixture(scope="module")
def splitting_3d():
    t0 = time.perf_counter()
    g = make_grid(3, 32, 4 * np.pi)
    data = make_initial_data(g, 0.01, 0.1, 0)
    res = run_splitting_consistency(g, 0.1, 1.0, 0.01, data)
    irr = run_splitting_consistency(g, 0.1, 1.0, 0.01, dict(data, u_sol=np.zeros_like(data["u_sol"])))
    return res["max_deviation"], irr["max_deviation"], time.perf_counter() - t0


@pytest.fixture(scope="module")
def energy(tmp_path_factory):
    return campaign(tmp_path_factory, "energy")


@pytest.fixture(scope="module")
def ion(tmp_path_factory):
    return campaign(tmp_path_factory, "ion")


def test_criterion_01_green_oracle(semigroup):
    s = semigroup[0]["summary"]
    ok = s["green_max_rel_err"] <= 1e-10 and s["green_time_s"] < 10
    record(1, ok, f"max rel err {s['green_max_rel_err']:.2e} over 10^4 triples in {s['green_time_s']:.2f} s")


def test_criterion_02_determinant_identity(semigroup):
    s = semigroup[0]["summary"]
    record(2, s["determinant_max_err"] <= 1e-12, f"max defect {s['determinant_max_err']:.2e}")


def test_criterion_03_high_frequency_damping(semigroup):
    m = semigroup[0]
    s = m["summary"]
    ok = m["criteria"]["3"] and s["damping_sup"] <= 3 and s["damping_time_s"] < 30
    record(3, ok, f"sup {s['damping_sup']:.3f} in {s['damping_time_s']:.1f} s")


def test_criterion_04_dispersive_rate(dispersive):
    parts, ok = [], True
    for d, (m, wall) in dispersive.items():
        s = m["summary"]
        exps = {k: v for k, v in s.items() if k.startswith("exponent_eps")}
        good = all(abs(x - d / 2) <= 0.15 for x in exps.values()) and s["exponent_spread"] < 0.10 and wall < 300
        ok &= good
        parts.append(f"d={d}: " + ", ".join(f"{k.removeprefix('exponent_')}={v:.3f}" for k, v in exps.items())
                     + f" spread {s['exponent_spread']:.3f} ({wall:.0f} s)")
    record(4, ok, "; ".join(parts))


def test_criterion_05_hessian_bound(dispersive):
    m, wall = dispersive[3]
    h = m["summary"]["hessian_min"]
    record(5, m["criteria"]["5"] and h >= 1 / 400, f"min det {h:.4e} >= {1 / 400:.4e}")


def test_criterion_06_phase_bounds(phase):
    m, wall = phase
    s = m["summary"]
    ok = m["criteria"]["6"] and s["min_A"] >= 1 - 32 * (1 / 200) ** 2 and wall < 300
    record(6, ok, f"min A {s['min_A']:.6f}, C* max {s['C_star_max']:.3f} ({wall:.0f} s, both scans)")


def test_criterion_07_symbol_derivatives(phase):
    m, wall = phase
    s = m["summary"]
    ok = m["criteria"]["7"] and wall < 600
    record(7, ok, f"refinement change {s['derivative_refinement_change']:.3f}")


def test_criterion_08_normal_form_identity(splitting):
    m, wall = splitting
    r = m["summary"]["normal_form_residual_256"]
    record(8, m["criteria"]["8"] and r < 1e-4, f"worst residual at 256 nodes {r:.2e}, orders within 2.0 +- 0.2")


def test_criterion_09_linear_exactness(splitting):
    e = splitting[0]["summary"]["linear_rel_err"]
    record(9, e <= 1e-8, f"H^3 relative error at t=10 {e:.2e}")


def test_criterion_10_splitting_consistency(splitting, splitting_3d):
    s = splitting[0]["summary"]
    d3, d3_irr, wall3 = splitting_3d
    total = splitting[1] + wall3
    ok = (s["splitting_deviation"] <= 1e-6 and s["splitting_deviation_irrotational"] <= 1e-10
          and d3 <= 1e-5 and d3_irr <= 1e-10 and total < 1200)
    record(10, ok, f"2D 64^2 {s['splitting_deviation']:.1e} (irrot {s['splitting_deviation_irrotational']:.1e}), "
                   f"3D 32^3 {d3:.1e} (irrot {d3_irr:.1e})")


def test_criterion_11_irrotationality(splitting):
    c = splitting[0]["summary"]["curl_max"]
    record(11, c <= 1e-8, f"max curl ratio to T=2 {c:.2e}")


def test_criterion_12_perturbation_energy(energy):
    m = energy[0]
    ratios = {k.removeprefix("perturb_ratio_"): v for k, v in m["summary"].items() if k.startswith("perturb_ratio")}
    ok = m["criteria"]["12"] and all(v <= 8 for v in ratios.values())
    record(12, ok, "sup ratios " + ", ".join(f"{k}: {v:.3f}" for k, v in ratios.items())
           + "; residuals finite, refinement-stable")


def test_criterion_13_negative_sobolev(energy):
    m = energy[0]
    record(13, m["criteria"]["13"], "sup E_-s <= 2 E_-s(0) + C_recorded; interpolation gap <= 1e-10")


def test_criterion_14_ion_dispersion(ion):
    m, wall = ion
    s = m["summary"]
    ok = m["criteria"]["14"] and wall < 300
    exps = ", ".join(f"{k.removeprefix('ion_exponent_')}={v:.3f}" for k, v in s.items() if k.startswith("ion_exponent"))
    zeros = ", ".join(f"{k.removeprefix('b2_zero_count_')}={v}" for k, v in s.items() if k.startswith("b2_zero"))
    record(14, ok, f"min b' {s['min_b1']:.6f}; b'' zero counts {zeros}; decay exponents {exps}")


def test_criterion_15_eps_laplacian_decay(energy):
    m = energy[0]
    spread = m["summary"]["eps_lap_spread"]
    record(15, m["criteria"]["15"] and spread < 2, f"spread of sup (1+t)|eps Lap chi R| {spread:.3f}")
