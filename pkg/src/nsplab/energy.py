"""Energy functionals, inequality residuals and decay bookkeeping.

All functions read stored trajectories (lists of packed spectral states as
produced by :class:`nsplab.solver.NSPSystem`) and never call the solver.
Time derivatives use fourth-order finite differences on the stored samples.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dispersive import fit_decay
from .semigroup import DispersionSymbol, apply_semigroup, q_inverse_matrix
from .solver import poisson_solve
from .spectral import Grid, SpectralField, chi_scaled, divergence_coeffs, gradient_coeffs

__all__ = [
    "multi_indices",
    "derivative_weight",
    "energy_EN",
    "dissipation_EN",
    "linear_dissipation_rate",
    "norm_U",
    "w1inf",
    "time_derivative",
    "EnergyLedger",
    "energy_inequality_residual",
    "PerturbEnergy",
    "perturb_energy_report",
    "interpolation_gap",
    "neg_sobolev_track",
    "decay_report",
    "linear_R_trajectory",
    "eps_delta_r_decay_check",
    "write_csv",
    "write_json",
]


# ---------------------------------------------------------------------------
# multi-index weights
# ---------------------------------------------------------------------------


def multi_indices(dim: int, order: int, exact: bool = False) -> list:
    """All multi-indices with ``|alpha| <= order`` (or ``== order``)."""
    out = []
    for a in itertools.product(range(order + 1), repeat=dim):
        s = sum(a)
        if (s == order) if exact else (s <= order):
            out.append(a)
    return out


def derivative_weight(grid: Grid, order: int, exact: bool = False) -> np.ndarray:
    """``sum_alpha xi^(2 alpha)`` over the multi-indices of :func:`multi_indices`."""
    w = np.zeros(grid.shape)
    for a in multi_indices(grid.dim, order, exact):
        term = np.ones(grid.shape)
        for i, ai in enumerate(a):
            term = term * grid.wavevector[i] ** (2 * ai)
        w = w + term
    return w


def _dalpha(grid: Grid, c: np.ndarray, alpha) -> np.ndarray:
    m = np.ones(grid.shape, dtype=complex)
    for i, ai in enumerate(alpha):
        m = m * (1j * grid.wavevector[i]) ** ai
    return m * c


def _phys(grid: Grid, c: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(c, axes=tuple(range(-grid.dim, 0))).real * grid.npoints


def _parseval(grid: Grid, c: np.ndarray, w=1.0) -> float:
    return float(grid.volume * np.sum(np.abs(c) ** 2 * w))


def _potential_weight(grid: Grid, variant: str) -> np.ndarray:
    """``|xi|^2`` for ``grad phi`` (electron) or ``<xi>^2`` (ion)."""
    return grid.xi_sq if variant == "electron" else 1.0 + grid.xi_sq


def _weighted_velocity(grid, u, weight_phys, alphas, extra_grad=False) -> float:
    dv = grid.volume / grid.npoints
    total = 0.0
    for a in alphas:
        for comp in u:
            d = _dalpha(grid, comp, a)
            if extra_grad:
                for j in range(grid.dim):
                    f = _phys(grid, 1j * grid.wavevector[j] * d)
                    total += float(np.sum(weight_phys * f * f) * dv)
            else:
                f = _phys(grid, d)
                total += float(np.sum(weight_phys * f * f) * dv)
    return total


# ---------------------------------------------------------------------------
# main-system energy
# ---------------------------------------------------------------------------


def _unpack(grid, y):
    d = grid.dim
    return y[0], y[1:1 + d]


def energy_EN(grid: Grid, y: np.ndarray, N: int, variant: str = "electron",
              linear: bool = False) -> float:
    """``sum_{|alpha|<=N} int |d rho|^2/2 + |d grad phi|^2/2 + rho |d u|^2/2``.

    ``y`` is a packed ``(rho, u)`` state.  With ``linear=True`` the density
    weight in the kinetic term is replaced by 1.
    """
    rho, u = _unpack(grid, y)
    W = derivative_weight(grid, N)
    phi = poisson_solve(rho, grid, variant)
    e = 0.5 * _parseval(grid, rho, W) + 0.5 * _parseval(grid, phi, W * _potential_weight(grid, variant))
    if linear:
        e += 0.5 * sum(_parseval(grid, c, W) for c in u)
    else:
        e += 0.5 * _weighted_velocity(grid, u, 1.0 + _phys(grid, rho), multi_indices(grid.dim, N))
    return e


def dissipation_EN(grid: Grid, y: np.ndarray, N: int, epsilon: float, linear: bool = False) -> float:
    """``eps sum_{|alpha|<=N} int rho |d grad u|^2``."""
    rho, u = _unpack(grid, y)
    if linear:
        W = derivative_weight(grid, N) * grid.xi_sq
        return epsilon * sum(_parseval(grid, c, W) for c in u)
    return epsilon * _weighted_velocity(grid, u, 1.0 + _phys(grid, rho), multi_indices(grid.dim, N),
                                        extra_grad=True)


def linear_dissipation_rate(grid: Grid, y: np.ndarray, N: int, epsilon: float) -> float:
    """Exact ``-dE_N/dt`` along the linear main flow: ``eps sum (|xi|^2 |u|^2 + |xi.u|^2)``."""
    _, u = _unpack(grid, y)
    W = derivative_weight(grid, N)
    div = divergence_coeffs(grid, u)
    return epsilon * (sum(_parseval(grid, c, W * grid.xi_sq) for c in u) + _parseval(grid, div, W))


def norm_U(grid: Grid, y: np.ndarray, s: float, variant: str = "electron") -> float:
    """``|(rho, grad phi, u)|_{H^s}``."""
    rho, u = _unpack(grid, y)
    js = (1.0 + grid.xi_sq) ** s
    phi = poisson_solve(rho, grid, variant)
    tot = _parseval(grid, rho, js) + _parseval(grid, phi, js * _potential_weight(grid, variant))
    tot += sum(_parseval(grid, c, js) for c in u)
    return float(np.sqrt(tot))


def w1inf(grid: Grid, c: np.ndarray) -> float:
    """``|f|_inf + |grad f|_inf`` for a scalar or vector coefficient array."""
    comps = c if c.ndim == grid.dim + 1 else c[None]
    vals = np.stack([_phys(grid, x) for x in comps])
    grads = np.stack([_phys(grid, g) for x in comps for g in gradient_coeffs(grid, x)])
    return float(np.max(np.sqrt(np.sum(vals**2, axis=0))) + np.max(np.sqrt(np.sum(grads**2, axis=0))))


def time_derivative(times, values) -> np.ndarray:
    """Fourth-order finite differences on uniform samples (one-sided at the ends)."""
    t = np.asarray(times, dtype=float)
    f = np.asarray(values, dtype=float)
    if len(t) < 5:
        raise ValueError("time sampling too coarse: need at least five samples")
    h = np.diff(t)
    if np.max(np.abs(h - h[0])) > 1e-9 * max(abs(h[0]), 1e-300):
        raise ValueError("time samples must be uniform")
    h = h[0]
    d = np.empty_like(f)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


@dataclass
class EnergyLedger:
    times: list
    energy: list
    dissipation: list
    majorant: list
    residual: list
    c_fit: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def rows(self):
        for row in zip(self.times, self.energy, self.dissipation, self.majorant, self.residual):
            yield row


def energy_inequality_residual(times, states, grid: Grid, N: int, epsilon: float,
                               variant: str = "electron", linear: bool = False) -> EnergyLedger:
    """Residual ``r(t) = (dE_N/dt + D) / ((|u|_{W^1,inf} + |rho|_{W^1,inf}) |U|^2_{H^N})``.

    ``c_fit`` is ``max(sup r, 0)``; a zero state gives ``r = 0``.
    """
    E = np.array([energy_EN(grid, y, N, variant, linear) for y in states])
    D = np.array([dissipation_EN(grid, y, N, epsilon, linear) for y in states])
    dE = time_derivative(times, E)
    maj = []
    for y in states:
        rho, u = _unpack(grid, y)
        maj.append((w1inf(grid, u) + w1inf(grid, rho)) * norm_U(grid, y, N, variant) ** 2)
    maj = np.array(maj)
    num = dE + D
    r = np.where(maj > 0, num / np.where(maj > 0, maj, 1.0), 0.0)
    return EnergyLedger(list(map(float, times)), E.tolist(), D.tolist(), maj.tolist(), r.tolist(),
                        float(max(np.max(r), 0.0)), {"numerator": num.tolist(), "N": N})


# ---------------------------------------------------------------------------
# perturbation energy
# ---------------------------------------------------------------------------


@dataclass
class PerturbEnergy:
    times: list
    E_M: list
    cross: list
    modified: list
    sandwich_hypothesis: list
    sandwich_ok: bool
    cauchy_schwarz_ok: bool
    residuals: dict
    c_fit: dict
    damped_integral: float
    budget_terms: dict
    perturb_norm: list

    def to_dict(self) -> dict:
        return asdict(self)


def _split_unpack(grid, y):
    d = grid.dim
    return y[0], y[1:1 + d], y[1 + d], y[2 + d:]


def _hs(grid, c, s):
    js = (1.0 + grid.xi_sq) ** s
    comps = c if c.ndim == grid.dim + 1 else c[None]
    return float(np.sqrt(sum(_parseval(grid, x, js) for x in comps)))


def _hdot_sq(grid, c, s):
    a = grid.xi_abs
    w = np.where(a > 0, np.where(a > 0, a, 1.0) ** (2 * s), 0.0 if s != 0 else 1.0)
    comps = c if c.ndim == grid.dim + 1 else c[None]
    return sum(_parseval(grid, x, w) for x in comps)


def perturb_energy_components(grid: Grid, y: np.ndarray, M: int, variant: str = "electron") -> dict:
    """``E_M``, its per-order pieces and the cross term ``X`` for one split state."""
    rho, u, n, v = _split_unpack(grid, y)
    psi = poisson_solve(n, grid, variant)
    pw = _potential_weight(grid, variant)
    rho_phys = 1.0 + _phys(grid, rho)
    per_order = []
    for k in range(M + 1):
        Wk = derivative_weight(grid, k, exact=True)
        e = 0.5 * (_parseval(grid, n, Wk) + _parseval(grid, psi, Wk * pw))
        e += 0.5 * _weighted_velocity(grid, v, rho_phys, multi_indices(grid.dim, k, exact=True))
        per_order.append(e)
    Wc = derivative_weight(grid, M - 1)
    gn = gradient_coeffs(grid, n)
    X = float(grid.volume * np.sum(Wc * np.real(sum(np.conj(gn[i]) * v[i] for i in range(grid.dim)))))
    return {"E_M": float(sum(per_order)), "per_order": per_order, "cross": X,
            "n_HM": _hs(grid, n, M), "v_HM": _hs(grid, v, M)}


def perturb_energy_report(times, states, grid: Grid, epsilon: float, M: int = 3,
                          variant: str = "electron", delta: float | None = None,
                          C2: float = 1.0, C7: float = 0.125) -> PerturbEnergy:
    """Perturbation energies, the modified energy and inequality residuals.

    Residuals are ``LHS / majorant`` for the three inequalities:

    ``order``   ``dE_M/dt + eps/2 sum_k |grad v|^2_{Hdot^k}``
    ``cross``   ``dX/dt + 1/2 sum_{k<M} (|n|^2_{Hdot^k} + |n|^2_{Hdot^{k+1}})``
    ``modified`` ``dE~_M/dt + C7 eps |(n, grad v)|^2_{H^M}``

    Each majorant collects the structural right-hand-side terms (products
    of the main and perturbation sizes plus the linear exchange terms);
    the fitted constants are the suprema of the ratios.
    """
    t = np.asarray(times, dtype=float)
    comps = [perturb_energy_components(grid, y, M, variant) for y in states]
    E = np.array([c["E_M"] for c in comps])
    X = np.array([c["cross"] for c in comps])
    if delta is None:
        delta = max(_hs(grid, y[0], M + 2) + _hs(grid, y[1:1 + grid.dim], M + 2) for y in states)
    coef = 8.0 * C2 * delta * epsilon
    Et = E + coef * X
    hyp = coef * np.abs(X) <= 0.5 * E + 1e-300
    sand = bool(np.all((0.5 * E - 1e-14 * E <= Et) & (Et <= 2 * E + 1e-14 * E) | ~hyp))
    cs = bool(np.all([abs(c["cross"]) <= c["n_HM"] * c["v_HM"] * (1 + 1e-12) + 1e-300 for c in comps]))

    grad_v_dot, n_dot, damp, maj1, maj2, pnorm = [], [], [], [], [], []
    for y in states:
        rho, u, n, v = _split_unpack(grid, y)
        gv = sum(_hdot_sq(grid, v, k + 1) for k in range(M + 1))
        grad_v_dot.append(gv)
        n_dot.append(sum(_hdot_sq(grid, n, k) + _hdot_sq(grid, n, k + 1) for k in range(M)))
        nv_HM = _hs(grid, n, M) ** 2 + _hs(grid, v, M + 1) ** 2
        damp.append(nv_HM)
        big = _hs(grid, rho, M + 2) + _hs(grid, u, M + 2) + _hs(grid, n, M + 2) + _hs(grid, v, M + 2)
        pert = _hs(grid, n, M + 1) + _hs(grid, v, M + 1)
        src = epsilon * (_hs(grid, rho, M + 2) + _hs(grid, n, M + 2)) * (_hs(grid, u, M + 2) + _hs(grid, v, M + 2))
        maj1.append(big * pert**2 + src * pert)
        maj2.append(big * pert**2 + src * pert + _hs(grid, v, M + 1) ** 2 + epsilon * _hs(grid, v, M + 2) * _hs(grid, n, M))
        psi = poisson_solve(n, grid, variant)
        pnorm.append(np.sqrt(_hs(grid, n, 3) ** 2 + _hs(grid, gradient_coeffs(grid, psi), 3) ** 2 + _hs(grid, v, 3) ** 2))
    grad_v_dot, n_dot, damp = map(np.array, (grad_v_dot, n_dot, damp))
    maj1, maj2 = np.array(maj1), np.array(maj2)
    maj3 = maj1 + coef * maj2

    lhs = {
        "order": time_derivative(t, E) + 0.5 * epsilon * grad_v_dot,
        "cross": time_derivative(t, X) + 0.5 * n_dot,
        "modified": time_derivative(t, Et) + C7 * epsilon * damp,
    }
    majs = {"order": maj1, "cross": maj2, "modified": maj3}
    residuals, cfit = {}, {}
    for k in lhs:
        m = majs[k]
        r = np.where(m > 0, lhs[k] / np.where(m > 0, m, 1.0), 0.0)
        residuals[k] = r.tolist()
        cfit[k] = float(max(np.max(r), 0.0))
    h = t[1] - t[0] if len(t) > 1 else 0.0
    damped = float(C7 * epsilon * h * (0.5 * damp[0] + damp[1:-1].sum() + 0.5 * damp[-1])) if len(t) > 1 else 0.0
    budget = {"E_M0": float(E[0]), "delta_cubed_eps_sq": float(delta**3 * epsilon**2), "delta": float(delta),
              "C2": C2, "C7": C7}
    return PerturbEnergy(t.tolist(), E.tolist(), X.tolist(), Et.tolist(), hyp.tolist(), sand, cs,
                         residuals, cfit, damped, budget, [float(x) for x in pnorm])


# ---------------------------------------------------------------------------
# negative Sobolev tracking
# ---------------------------------------------------------------------------


def _remove_mean(grid, c):
    out = np.array(c, copy=True)
    idx = (Ellipsis,) + (0,) * grid.dim
    mean = np.abs(out[idx]).max() if out[idx].size else 0.0
    out[idx] = 0.0
    return out, float(mean)


def interpolation_gap(grid: Grid, c: np.ndarray, s: float) -> float:
    """``|f|_{L^2} - |f|_{Hdot^-s}^{1/(1+s)} |f|_{Hdot^1}^{s/(1+s)}`` relative to ``|f|_{L^2}``.

    Non-positive up to rounding for mean-zero ``f``.
    """
    l2 = np.sqrt(_hdot_sq(grid, c, 0))
    if l2 == 0:
        return 0.0
    neg = np.sqrt(_hdot_sq(grid, c, -s))
    pos = np.sqrt(_hdot_sq(grid, c, 1))
    return float((l2 - neg ** (1 / (1 + s)) * pos ** (s / (1 + s))) / l2)


def neg_sobolev_track(times, states, grid: Grid, s: float, variant: str = "electron",
                      mean_tol: float = 1e-12) -> dict:
    """``E_{-s} = |n|^2_{Hdot^-s} + |grad psi|^2_{Hdot^-s} + |v|^2_{Hdot^-s}`` along a split run.

    The mean of ``n`` must vanish (it is conserved).  The mean of ``v`` is
    not conserved by the advection terms; it is removed before the norm is
    taken and its largest size is reported as ``v_mean_removed``.
    """
    if not 0 < s < 0.5:
        raise ValueError("s must lie in (0, 1/2)")
    series, gaps, vmean = [], [], 0.0
    for y in states:
        _, _, n, v = _split_unpack(grid, y)
        scale = max(float(np.max(np.abs(n))), 1e-300)
        if abs(n[(0,) * grid.dim]) > mean_tol * scale and abs(n[(0,) * grid.dim]) > 1e-300:
            raise ValueError("density perturbation has a nonzero mean")
        psi = poisson_solve(n, grid, variant)
        gpsi = gradient_coeffs(grid, psi)
        v0, m = _remove_mean(grid, v)
        vmean = max(vmean, m)
        series.append(_hdot_sq(grid, n, -s) + _hdot_sq(grid, gpsi, -s) + _hdot_sq(grid, v0, -s))
        gaps.append(max(interpolation_gap(grid, f, s) for f in (n, gpsi, v0)))
    series = np.array(series)
    e0, sup = float(series[0]), float(series.max())
    return {
        "times": list(map(float, times)),
        "E_neg": series.tolist(),
        "E0": e0,
        "sup": sup,
        "C_recorded": max(0.0, sup - 2 * e0),
        "self_consistency": float((sup - e0) / np.sqrt(sup)) if sup > 0 else 0.0,
        "finite": bool(np.all(np.isfinite(series))),
        "interpolation_max_gap": float(max(gaps)),
        "interpolation_ok": bool(max(gaps) <= 1e-10),
        "v_mean_removed": vmean,
        "s": s,
    }


# ---------------------------------------------------------------------------
# decay fitting and the eps-Laplacian estimates
# ---------------------------------------------------------------------------


def decay_report(times, series: dict, predicted: dict, window=(10.0, 200.0), torus: bool = True,
                 min_decades: float = 0.5) -> list:
    """Fit ``(1+t)^{-a}`` exponents for each named series."""
    out = []
    for name, vals in series.items():
        fit = fit_decay(times, vals, window=window, predicted=predicted.get(name), min_decades=min_decades)
        d = fit.to_dict()
        d["name"] = name
        d["label"] = "qualitative (finite box)" if torus else "whole space"
        out.append(d)
    return out


def linear_R_trajectory(grid: Grid, V0: SpectralField, epsilon: float, times,
                        kappa0: float = 1.0 / 200.0) -> np.ndarray:
    """``R(t) = Q^{-1} chi V(t)`` for the exact linear flow, shape ``(T, 2) + grid.shape``."""
    sym = DispersionSymbol("electron", epsilon)
    qi = q_inverse_matrix(grid.xi_abs, sym)
    chi = chi_scaled(grid.xi_abs, epsilon, kappa0)
    out = []
    for t in times:
        V = apply_semigroup(float(t), V0, sym).coeffs * chi
        out.append(np.einsum("...ij,j...->i...", qi, V))
    return np.array(out)


def eps_delta_r_decay_check(times, R, grid: Grid, epsilon: float, kappa0: float = 1.0 / 200.0,
                            k: float = 2.0, p: float = 8.0, normalise: float | None = None) -> dict:
    """``sup_t (1+t) |eps Lap chi R|_{H^k}`` and the squared-Laplacian analogue.

    ``R`` has shape ``(T, 2) + grid.shape``; ``normalise`` divides both
    suprema (e.g. by a data norm) when given.
    """
    t = np.asarray(times, dtype=float)
    chi = chi_scaled(grid.xi_abs, epsilon, kappa0)
    eD = -epsilon * grid.xi_sq
    js = (1.0 + grid.xi_sq) ** k
    one, two = [], []
    for Rt in R:
        one.append(np.sqrt(sum(_parseval(grid, eD * chi * r, js) for r in Rt)))
        two.append(np.sqrt(sum(_parseval(grid, eD * eD * chi * r, js) for r in Rt)))
    one, two = np.array(one), np.array(two)
    rate = 1.5 * (1 - 2 / p)
    s1 = float(np.max((1 + t) * one))
    s2 = float(np.max((1 + t) ** rate * two))
    if normalise:
        s1, s2 = s1 / normalise, s2 / normalise
    return {"epsilon": epsilon, "sup_first": s1, "sup_second": s2,
            "finite": bool(np.isfinite(s1) and np.isfinite(s2)), "k": k, "p": p,
            "series_first": one.tolist(), "times": t.tolist()}


# ---------------------------------------------------------------------------
# ledgers
# ---------------------------------------------------------------------------


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in r])


def write_json(path, payload: dict, schema: str = "nsplab/1") -> None:
    data = {"schema": schema, **payload}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=float)
