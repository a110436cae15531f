"""Configuration-driven campaigns, manifests, sweeps and plot data.

A campaign turns a validated :class:`ExperimentConfig` into CSV/JSON
artifacts in its output directory and a dictionary of per-criterion
verdicts.  :func:`run` wraps a campaign and writes the manifest atomically.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import os
import tempfile
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dispersive import gaussian_profile, hessian_det_scan, ion_b_properties, ion_decay_scan, sup_norm_scan
from .energy import (
    energy_inequality_residual,
    eps_delta_r_decay_check,
    linear_R_trajectory,
    neg_sobolev_track,
    perturb_energy_report,
    write_csv,
    write_json,
)
from .phase import normal_form_identity_check, reciprocal_phase_bound_scan, symbol_derivative_scan
from .reference import determinant_defect, green_oracle_errors, green_sample
from .semigroup import DispersionSymbol, apply_semigroup, green_matrix, verify_high_freq_damping
from .solver import (
    FluidState,
    NSPSystem,
    curl_diagnostic,
    make_initial_data,
    normal_form_trajectory,
    run_splitting_consistency,
    split_initial_data,
    symmetrize,
)
from .spectral import SpectralField, make_grid, profile_hash, sobolev_norm

log = logging.getLogger(__name__)

KINDS = ("semigroup-verify", "dispersive-scan", "phase-scan", "splitting-run", "energy-campaign", "ion-suite")
SWEEP_AXES = ("epsilon", "kappa0", "n")

__all__ = [
    "KINDS",
    "SWEEP_AXES",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "CAMPAIGNS",
    "run",
    "sweep",
    "emit_plots",
    "refinement_stable",
]


class ConfigError(ValueError):
    """Validation failure naming the offending field."""

    def __init__(self, fieldname: str, reason: str):
        super().__init__(f"{fieldname}: {reason}")
        self.field = fieldname
        self.reason = reason


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_DEFAULT_EPS = {
    "semigroup-verify": [1e-3, 1e-2, 1e-1, 1.0],
    "dispersive-scan": [1e-3, 1e-2, 1e-1, 1.0],
    "phase-scan": [1e-3, 1e-2, 1e-1, 1.0],
    "splitting-run": [0.1],
    "energy-campaign": [0.05, 0.2, 1.0],
    "ion-suite": [1e-3, 1e-2, 1e-1, 1.0],
}

_KIND_DEFAULTS = {
    "energy-campaign": {"T": 10.0, "dt": 0.02},
}


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    dim: int = 2
    n: int = 32
    box_length: float = 4 * np.pi
    dealias_fraction: float = 2.0 / 3.0
    epsilon: list = field(default_factory=list)
    kappa0: float = 1.0 / 200.0
    delta0: float = 0.01
    s: float = 0.4
    p: float = 8.0
    sigma: int = 5
    N: int = 12
    M: int = 3
    T: float = 1.0
    dt: float = 0.01
    variant: str = "electron"
    theorem_mode: bool = False
    quick: bool = False
    tolerances: dict = field(default_factory=dict)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {', '.join(KINDS)}")
        try:
            make_grid(self.dim, self.n, self.box_length, self.dealias_fraction)
        except ValueError as exc:
            raise ConfigError("grid", str(exc)) from None
        if not self.epsilon:
            raise ConfigError("epsilon", "at least one value is required")
        for e in self.epsilon:
            if not (np.isfinite(e) and 0 < e <= 1):
                raise ConfigError("epsilon", f"{e} is outside (0, 1]")
        if not 0 < self.kappa0 <= 0.25:
            raise ConfigError("kappa0", "must lie in (0, 1/4]")
        if not self.delta0 > 0:
            raise ConfigError("delta0", "must be positive")
        if not 0 < self.s < 0.5:
            raise ConfigError("s", "must lie in (0, 1/2)")
        if not self.p >= 2:
            raise ConfigError("p", "must be at least 2")
        if not (self.T > 0 and self.dt > 0):
            raise ConfigError("T", "T and dt must be positive")
        if abs(round(self.T / self.dt) * self.dt - self.T) > 1e-9 * self.T:
            raise ConfigError("dt", "T must be an integer multiple of dt")
        if self.variant not in ("electron", "ion"):
            raise ConfigError("variant", "must be electron or ion")
        if self.M < 1:
            raise ConfigError("M", "must be at least 1")
        if self.theorem_mode:
            if self.sigma < 5:
                raise ConfigError("sigma", "theorem mode needs sigma >= 5")
            if self.N < self.sigma + 7:
                raise ConfigError("N", f"theorem mode needs N >= sigma + 7 = {self.sigma + 7} "
                                       "(main-flow regularity hypothesis)")
        return self

    @property
    def grid(self):
        return make_grid(self.dim, self.n, self.box_length, self.dealias_fraction)

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def canonical(self) -> dict:
        d = asdict(self)
        d["epsilon"] = [float(e) for e in self.epsilon]
        return d

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def load_config(source, seed: int | None = None) -> ExperimentConfig:
    """Read an INI-style config from a path or a string and validate it.

    Sections: ``[experiment]`` (kind, seed, theorem_mode, quick), ``[grid]``
    (dim, n, box_length, dealias_fraction), ``[physics]`` (epsilon list,
    kappa0, delta0, s, p, sigma, N, M, T, dt, variant) and optional
    ``[tolerances]``.  ``seed`` overrides the file.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if isinstance(source, (str, os.PathLike)) and Path(source).is_file():
        cp.read(source)
    elif isinstance(source, str) and "[" in source:
        cp.read_string(source)
    else:
        raise ConfigError("config", f"cannot read {source!r}")
    if not cp.has_section("experiment") or "kind" not in cp["experiment"]:
        raise ConfigError("kind", "missing [experiment] kind")
    ex = cp["experiment"]
    kind = ex["kind"].strip()
    kw = {"kind": kind, **_KIND_DEFAULTS.get(kind, {})}
    try:
        kw["seed"] = ex.getint("seed", 0)
        kw["theorem_mode"] = ex.getboolean("theorem_mode", False)
        kw["quick"] = ex.getboolean("quick", False)
        if cp.has_section("grid"):
            g = cp["grid"]
            for k, conv in (("dim", int), ("n", int), ("box_length", float), ("dealias_fraction", float)):
                if k in g:
                    kw[k] = conv(g[k])
        if cp.has_section("physics"):
            ph = cp["physics"]
            for k, conv in (("kappa0", float), ("delta0", float), ("s", float), ("p", float), ("sigma", int),
                            ("N", int), ("M", int), ("T", float), ("dt", float), ("variant", str)):
                if k in ph:
                    kw[k] = conv(ph[k].strip())
            if "epsilon" in ph:
                kw["epsilon"] = _floats(ph["epsilon"])
        if cp.has_section("tolerances"):
            kw["tolerances"] = {k: float(v) for k, v in cp["tolerances"].items()}
    except ValueError as exc:
        raise ConfigError("config", str(exc)) from None
    if "epsilon" not in kw:
        kw["epsilon"] = list(_DEFAULT_EPS.get(kind, [0.1]))
    if seed is not None:
        kw["seed"] = int(seed)
    return ExperimentConfig(**kw).validate()


def refinement_stable(a: float, b: float, floor: float = 1e-3, band=(0.8, 1.25)) -> bool:
    """Two fitted constants agree within ``band`` or both sit below ``floor``."""
    if not (np.isfinite(a) and np.isfinite(b)):
        return False
    if max(abs(a), abs(b)) <= floor:
        return True
    if min(a, b) <= 0:
        return False
    return band[0] <= a / b <= band[1]


def _series(t, values, predicted=None) -> dict:
    return {"t": [float(x) for x in t], "value": [float(x) for x in values],
            "predicted": None if predicted is None else [float(x) for x in predicted]}


# ---------------------------------------------------------------------------
# campaigns
# ---------------------------------------------------------------------------


def campaign_semigroup(cfg: ExperimentConfig, out: Path) -> dict:
    t0 = time.perf_counter()
    eps, r, t = green_sample(10_000, cfg.seed)
    err = green_oracle_errors(green_matrix, eps, r, t)
    oracle_time = time.perf_counter() - t0
    det_err = 0.0
    for e in np.unique(eps):
        idx = eps == e
        det_err = max(det_err, float(np.max(determinant_defect(t[idx], r[idx], float(e)))))
    t0 = time.perf_counter()
    tg = np.linspace(0, 200, 401 if not cfg.quick else 101)
    xg = np.geomspace(1e-2, 1e4, 2001 if not cfg.quick else 401)
    damp = verify_high_freq_damping(cfg.epsilon, tg, xg, cfg.kappa0)
    damp_time = time.perf_counter() - t0
    write_csv(out / "damping.csv", ["epsilon", "sup_G1", "sup_G2", "sup_G3"],
              [[row["epsilon"], row["sup_G1"], row["sup_G2"], row["sup_G3"]] for row in damp["per_epsilon"]])
    crit = {
        "1": bool(err.max() <= cfg.tol("green_rel", 1e-10) and oracle_time < 10),
        "2": bool(det_err <= cfg.tol("determinant", 1e-12)),
        "3": bool(damp["passed"] and damp_time < 30),
    }
    summary = {"green_max_rel_err": float(err.max()), "green_time_s": oracle_time,
               "determinant_max_err": det_err, "damping_sup": damp["sup"], "damping_time_s": damp_time}
    return {"criteria": crit, "summary": summary, "series": {}}


def campaign_dispersive(cfg: ExperimentConfig, out: Path) -> dict:
    d = cfg.dim if cfg.dim in (2, 3) else 3
    prof = gaussian_profile(1.0, d)
    t_list = np.geomspace(10, 200, 10)
    rows, series, exps = [], {}, []
    for e in cfg.epsilon:
        fit = sup_norm_scan(prof, e, cfg.kappa0, t_list)
        exps.append(fit.fitted_exponent)
        rows.append([e, fit.fitted_exponent, fit.predicted, fit.residual])
        series[f"sup_d{d}_eps{e:g}"] = _series(t_list, fit.values,
                                               fit.values[0] * (t_list / t_list[0]) ** (-fit.predicted))
    write_csv(out / "decay_fits.csv", ["epsilon", "fitted_exponent", "predicted", "rms_residual"], rows)
    tol = cfg.tol("exponent", 0.15)
    spread = float(max(exps) - min(exps))
    hess = hessian_det_scan(np.geomspace(1e-6, 1.0, 25), 1e-3, 3)
    write_json(out / "hessian.json", hess)
    crit = {"4": bool(all(abs(x - d / 2) <= tol for x in exps) and spread < cfg.tol("spread", 0.10)),
            "5": bool(hess["passed"])}
    summary = {f"exponent_eps{e:g}": x for e, x in zip(cfg.epsilon, exps)}
    summary.update({"exponent_spread": spread, "hessian_min": hess["min_det"]})
    return {"criteria": crit, "summary": summary, "series": series}


def campaign_phase(cfg: ExperimentConfig, out: Path) -> dict:
    n_phase = 40 if cfg.quick else 100
    n_deriv = 16 if cfg.quick else 32
    ph = reciprocal_phase_bound_scan(n_phase, cfg.epsilon, cfg.kappa0)
    write_json(out / "phase_bounds.json", ph)
    dv = symbol_derivative_scan(n_deriv, cfg.epsilon, cfg.kappa0)
    write_json(out / "symbol_derivatives.json", dv)
    summary = {"min_A": min(l["min_A"] for r in ph["per_epsilon"] for l in r["levels"]),
               "C_star_max": max(l["C_star"] for r in ph["per_epsilon"] for l in r["levels"]),
               "derivative_refinement_change": max(r["refinement_change"] for r in dv["per_epsilon"])}
    return {"criteria": {"6": bool(ph["passed"]), "7": bool(dv["passed"])}, "summary": summary, "series": {}}


def campaign_splitting(cfg: ExperimentConfig, out: Path) -> dict:
    grid = cfg.grid
    eps = cfg.epsilon[0]
    crit, summary, series = {}, {}, {}
    # splitting consistency with a solenoidal part of size delta0 * eps
    data = make_initial_data(grid, cfg.delta0, eps, cfg.seed)
    res = run_splitting_consistency(grid, eps, cfg.T, cfg.dt, data)
    irr = dict(data, u_sol=np.zeros_like(data["u_sol"]))
    res_irr = run_splitting_consistency(grid, eps, cfg.T, cfg.dt, irr)
    crit["10"] = bool(res["max_deviation"] <= cfg.tol("splitting", 1e-6 if grid.dim == 2 else 1e-5)
                      and res_irr["max_deviation"] <= cfg.tol("splitting_irrotational", 1e-10))
    summary.update({"splitting_deviation": res["max_deviation"],
                    "splitting_deviation_irrotational": res_irr["max_deviation"]})
    series["splitting_deviation"] = _series(res["times"], res["deviation"])
    # irrotationality of the main flow
    _, main0, _ = split_initial_data(data)
    sys_ = NSPSystem(grid, eps, "main")
    T_curl = max(2.0, cfg.T)
    ts, ys = sys_.run(main0, T_curl, cfg.dt, record_every=max(1, int(round(0.1 / cfg.dt))))
    curls = [curl_diagnostic((grid, y[1:])) for y in ys]
    crit["11"] = bool(max(curls) <= cfg.tol("curl", 1e-8))
    summary["curl_max"] = float(max(curls))
    write_csv(out / "curl.csv", ["t", "curl_ratio"], zip(map(float, ts), curls))
    # linear exactness against the semigroup
    lin = NSPSystem(grid, eps, "main", nonlinear=False)
    T_lin, dt_lin = 10.0, 1e-2
    _, yl = lin.run(main0, T_lin, dt_lin, record_every=int(T_lin / dt_lin))
    V0 = symmetrize(FluidState.from_packed(grid, main0, "electron", eps)).stacked()
    Vt = symmetrize(FluidState.from_packed(grid, yl[-1], "electron", eps)).stacked()
    Ve = apply_semigroup(T_lin, V0, DispersionSymbol("electron", eps))
    lin_err = sobolev_norm(Vt - Ve, 3) / sobolev_norm(Ve, 3)
    crit["9"] = bool(lin_err <= cfg.tol("linear", 1e-8))
    summary["linear_rel_err"] = float(lin_err)
    # normal-form identity on a 2D 32^2 trajectory with chi = 1 everywhere
    if grid.dim == 2:
        g2 = make_grid(2, 32, 4 * np.pi)
        tr = normal_form_trajectory(g2, 1e-5, 1.0, 256, delta0=0.05, seed=cfg.seed)
        nf = normal_form_identity_check(tr["times"], tr["R"], tr["B"], g2, 1e-5,
                                        pairs=((1, 1), (1, 2), (2, 1), (2, 2)))
        write_json(out / "normal_form.json", nf)
        worst = max(v["levels"][-1]["residual"] for v in nf.values())
        orders = [o for v in nf.values() for o in v["orders"]]
        crit["8"] = bool(worst < cfg.tol("normal_form", 1e-4) and all(abs(o - 2) <= 0.2 for o in orders))
        summary["normal_form_residual_256"] = float(worst)
    return {"criteria": crit, "summary": summary, "series": series}


def _energy_run(grid, eps, cfg, dt):
    data = make_initial_data(grid, cfg.delta0, eps, cfg.seed, k_band=2.0)
    _, m, p = split_initial_data(data)
    sys_ = NSPSystem(grid, eps, "split")
    every = max(1, int(round(0.1 / dt)))
    return sys_.run(np.concatenate([m, p]), cfg.T, dt, record_every=every)


def campaign_energy(cfg: ExperimentConfig, out: Path) -> dict:
    grid = cfg.grid
    rows, series = [], {}
    ok12, ok13 = True, True
    summary = {}
    for eps in cfg.epsilon:
        ts, ys = _energy_run(grid, eps, cfg, cfg.dt)
        rep = perturb_energy_report(ts, ys, grid, eps, cfg.M)
        ns = neg_sobolev_track(ts, ys, grid, cfg.s)
        fine = make_grid(grid.dim, 2 * grid.n, grid.box_length, grid.dealias_fraction)
        ts2, ys2 = _energy_run(fine, eps, cfg, cfg.dt / 2)
        rep2 = perturb_energy_report(ts2, ys2, fine, eps, cfg.M)
        ratio = max(rep.perturb_norm) / (cfg.delta0 * eps)
        stable = all(refinement_stable(rep.c_fit[k], rep2.c_fit[k]) for k in rep.c_fit)
        finite = all(np.all(np.isfinite(v)) for v in rep.residuals.values())
        ok12 &= bool(ratio <= 8 and stable and finite and rep.sandwich_ok and rep.cauchy_schwarz_ok)
        ok13 &= bool(ns["finite"] and ns["interpolation_ok"] and ns["sup"] <= 2 * ns["E0"] + ns["C_recorded"])
        rows.append([eps, ratio, rep.c_fit["order"], rep.c_fit["cross"], rep.c_fit["modified"],
                     rep2.c_fit["order"], rep2.c_fit["cross"], rep2.c_fit["modified"],
                     ns["E0"], ns["sup"], ns["C_recorded"], ns["interpolation_max_gap"]])
        series[f"perturb_norm_eps{eps:g}"] = _series(ts, np.array(rep.perturb_norm) / (cfg.delta0 * eps))
        series[f"neg_sobolev_eps{eps:g}"] = _series(ts, ns["E_neg"])
        d = grid.dim
        led = energy_inequality_residual(ts, [y[:1 + d] for y in ys], grid, cfg.M, eps)
        write_csv(out / f"energy_main_eps{eps:g}.csv", ["t", "E_N", "dissipation", "majorant", "residual"], led.rows())
        series[f"energy_main_eps{eps:g}"] = _series(ts, led.energy)
        summary[f"perturb_ratio_eps{eps:g}"] = float(ratio)
    write_csv(out / "perturb_energy.csv",
              ["epsilon", "sup_ratio", "cfit_order", "cfit_cross", "cfit_modified", "cfit_order_fine",
               "cfit_cross_fine", "cfit_modified_fine", "Eneg0", "Eneg_sup", "C_recorded", "interp_gap"], rows)
    # linear eps Laplacian decay of the diagonal variables
    sups = []
    for eps in [e for e in (1e-2, 1e-1, 1.0)]:
        sups.append(_eps_lap_run(eps, cfg.kappa0)["sup_first"])
    spread = max(sups) / min(sups)
    summary["eps_lap_spread"] = float(spread)
    return {"criteria": {"12": bool(ok12), "13": bool(ok13), "15": bool(spread < 2 and np.all(np.isfinite(sups)))},
            "summary": summary, "series": series}


def _eps_lap_run(eps: float, kappa0: float, k: float = 2.0, n: int = 64, T: float = 100.0) -> dict:
    """Linear run with data Gaussian in the scaled frequency ``sqrt(eps/kappa0) |xi|``."""
    support = 2.0 * np.sqrt(kappa0 / eps)
    grid = make_grid(2, n, 2 * np.pi / (support / 16))
    prof = np.exp(-(eps / kappa0) * grid.xi_sq)
    V0 = SpectralField(grid, np.stack([prof, 0.5 * prof]).astype(complex), "stack")
    times = np.linspace(0, T, 201)
    R = linear_R_trajectory(grid, V0, eps, times, kappa0)
    nrm = np.sqrt(grid.volume * np.sum(np.abs(R[0]) ** 2 * (1 + grid.xi_sq) ** k))
    return eps_delta_r_decay_check(times, R, grid, eps, kappa0, k=k, normalise=nrm)


def campaign_ion(cfg: ExperimentConfig, out: Path) -> dict:
    props = ion_b_properties(cfg.epsilon, cfg.kappa0)
    write_json(out / "ion_b.json", props)
    prof = gaussian_profile(1.0, 3)
    t_list = np.geomspace(10, 200, 10)
    fits, series = [], {}
    eps_decay = [1e-2] if cfg.quick else cfg.epsilon
    for e in eps_decay:
        fit = ion_decay_scan(prof, e, cfg.kappa0, t_list)
        fits.append(fit.fitted_exponent)
        series[f"ion_sup_eps{e:g}"] = _series(t_list, fit.values,
                                              fit.values[0] * (t_list / t_list[0]) ** (-4.0 / 3.0))
    write_csv(out / "ion_decay.csv", ["epsilon", "fitted_exponent"], zip(eps_decay, fits))
    ok = props["passed"] and all(abs(x - 4.0 / 3.0) <= cfg.tol("ion_exponent", 0.2) for x in fits)
    summary = {"min_b1": props["min_b1"], **{f"ion_exponent_eps{e:g}": x for e, x in zip(eps_decay, fits)}}
    summary.update({f"b2_zero_count_eps{row['epsilon']:g}": len(row["b2_zeros"]) for row in props["per_epsilon"]})
    return {"criteria": {"14": bool(ok)}, "summary": summary, "series": series}


CAMPAIGNS = {
    "semigroup-verify": campaign_semigroup,
    "dispersive-scan": campaign_dispersive,
    "phase-scan": campaign_phase,
    "splitting-run": campaign_splitting,
    "energy-campaign": campaign_energy,
    "ion-suite": campaign_ion,
}


# ---------------------------------------------------------------------------
# run / sweep / plots
# ---------------------------------------------------------------------------


def _atomic_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
    os.replace(tmp, path)


def run(cfg: ExperimentConfig, out, strict: bool = False) -> dict:
    """Execute a campaign and write ``manifest.json`` plus ``series.json`` to ``out``."""
    cfg.validate()
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            result = CAMPAIGNS[cfg.kind](cfg, out)
        except Exception as exc:
            raise RuntimeError(f"{cfg.kind} run failed: {exc}") from exc
    warn_msgs = sorted({str(w.message) for w in caught})
    wall = time.perf_counter() - t0
    _atomic_json(out / "series.json", {"schema": "nsplab-series/1", "series": result["series"]})
    passed = all(result["criteria"].values())
    if strict and warn_msgs:
        passed = False
    manifest = {
        "schema": "nsplab-manifest/1",
        "kind": cfg.kind,
        "config_hash": cfg.hash(),
        "config": cfg.canonical(),
        "code_version": __version__,
        "profile_hash": profile_hash(),
        "wall_time_s": wall,
        "criteria": result["criteria"],
        "summary": result["summary"],
        "warnings": warn_msgs,
        "strict": strict,
        "passed": bool(passed),
        "series_file": "series.json",
    }
    _atomic_json(out / "manifest.json", manifest)
    return manifest


def _sweep_one(args):
    cfg, out, strict = args
    return run(cfg, out, strict)


def sweep(cfg: ExperimentConfig, axis: str, values, out, workers: int = 1, strict: bool = False) -> dict:
    """Independent runs along one axis and a uniformity report."""
    values = list(values)
    if not values:
        raise ConfigError("axis", "sweep axis values must not be empty")
    if axis not in SWEEP_AXES:
        raise ConfigError("axis", f"must be one of {', '.join(SWEEP_AXES)}")
    out = Path(out)
    jobs = []
    for v in values:
        if axis == "epsilon":
            c = replace(cfg, epsilon=[float(v)])
        elif axis == "kappa0":
            c = replace(cfg, kappa0=float(v))
        else:
            c = replace(cfg, n=int(v))
        c.validate()
        jobs.append((c, out / f"{axis}={v:g}" if isinstance(v, float) else out / f"{axis}={v}", strict))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            manifests = list(pool.map(_sweep_one, jobs))
    else:
        manifests = [_sweep_one(j) for j in jobs]
    keys = sorted({k for m in manifests for k in m["summary"]})
    uniformity = {}
    for k in keys:
        vals = [m["summary"][k] for m in manifests if k in m["summary"]]
        uniformity[k] = {"min": float(min(vals)), "max": float(max(vals))}
    report = {"schema": "nsplab-sweep/1", "axis": axis, "values": [float(v) for v in values],
              "runs": [str(j[1]) for j in jobs], "uniformity": uniformity,
              "passed": all(m["passed"] for m in manifests)}
    _atomic_json(out / "sweep.json", report)
    return report


_GP_TEMPLATE = """set logscale xy
set xlabel 't'
set ylabel '{name}'
plot '{dat}' using 1:2 with linespoints title '{name}'{guide}
"""


def emit_plots(manifest_path, out=None) -> list:
    """Write gnuplot data (``t value [predicted]``) and a script per series."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = manifest_path.parent
    series_file = base / manifest.get("series_file", "series.json")
    if not series_file.is_file():
        raise FileNotFoundError(f"missing series file {series_file}")
    with open(series_file) as fh:
        series = json.load(fh)["series"]
    if not series:
        warnings.warn("manifest holds no series; nothing to plot")
        return []
    out = Path(out) if out else base / "plots"
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, s in sorted(series.items()):
        t, v, pred = s["t"], s["value"], s.get("predicted")
        if len(t) != len(v) or (pred is not None and len(pred) != len(t)):
            raise ValueError(f"series {name} has inconsistent lengths")
        dat = out / f"{name}.dat"
        with open(dat, "w") as fh:
            fh.write("# t value" + (" predicted\n" if pred is not None else "\n"))
            for i in range(len(t)):
                row = f"{t[i]:.10g} {v[i]:.10g}"
                if pred is not None:
                    row += f" {pred[i]:.10g}"
                fh.write(row + "\n")
        guide = f", '{dat.name}' using 1:3 with lines dt 2 title 'predicted slope'" if pred is not None else ""
        (out / f"{name}.gp").write_text(_GP_TEMPLATE.format(name=name, dat=dat.name, guide=guide))
        written.append(str(dat))
    return written
