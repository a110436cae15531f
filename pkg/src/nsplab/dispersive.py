"""Whole-space radial propagator and the pointwise dispersion checks.

For radial data ``F(|xi|)`` the low-frequency propagator at ``(t, x)`` reduces
to a one-dimensional oscillatory integral

    u(t, x) = (2 pi)^{-d} int_0^inf e^{i t b(r)} chi(r) F(r) K_d(|x| r) r^{d-1} dr

with ``K_d`` the Fourier transform of the unit-sphere surface measure, so that
``u(0, 0) = (2 pi)^{-d} int chi F dxi`` matches the Fourier-series convention
of :mod:`nsplab.spectral`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from scipy import special
from scipy.optimize import brentq, minimize_scalar

from .semigroup import DispersionSymbol, radicand
from .spectral import chi_scaled

__all__ = [
    "sphere_kernel",
    "RadialProfile",
    "gaussian_profile",
    "DecayFit",
    "fit_decay",
    "b_derivatives",
    "propagator_point",
    "propagator_points",
    "sup_norm_scan",
    "hessian_det",
    "hessian_det_scan",
    "hessian_lower_bound",
    "ion_b_properties",
    "ion_decay_scan",
]

# 15-point Kronrod nodes on [0, 1] (symmetric half) and weights; the embedded
# 7-point Gauss rule uses every other node.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG_FULL = np.zeros(15)
_WG_FULL[1:7:2] = _WG[:3]
_WG_FULL[7] = _WG[3]
_WG_FULL[8:15] = _WG_FULL[6::-1]


def sphere_kernel(d: int, s):
    """Fourier transform of the unit-sphere measure in ``R^d`` at radius ``s``.

    ``(2 pi)^{d/2} s^{-(d-2)/2} J_{(d-2)/2}(s)``; equals ``4 pi sin(s)/s`` for
    ``d = 3`` and ``2 pi J_0(s)`` for ``d = 2``.  At ``s = 0`` it is the sphere
    area.
    """
    s = np.asarray(s, dtype=float)
    if d == 3:
        return 4.0 * np.pi * np.sinc(s / np.pi)
    if d == 2:
        return 2.0 * np.pi * special.j0(s)
    raise ValueError("sphere_kernel supports d in {2, 3}")


@dataclass
class RadialProfile:
    """Radial Fourier profile ``F(r)`` with a nominal extent used for tail checks."""

    func: Callable
    dim: int = 3
    extent: float = 10.0
    label: str = "custom"

    def __call__(self, r):
        return self.func(np.asarray(r, dtype=float))

    def tail_constant(self) -> float:
        """Smallest ``C`` with ``|F(r)| <= C (1 + r)^{-10}`` on ``[0, 2 extent]``."""
        r = np.linspace(0.0, 2.0 * self.extent, 4001)
        return float(np.max(np.abs(self(r)) * (1.0 + r) ** 10))

    def check_tail(self, rel: float = 1e-12) -> bool:
        """True when the profile is negligible beyond ``extent``."""
        r = np.linspace(self.extent, 2.0 * self.extent, 501)
        scale = np.max(np.abs(self(np.linspace(0.0, self.extent, 501))))
        return bool(np.max(np.abs(self(r))) <= rel * scale)


def gaussian_profile(width: float = 1.0, dim: int = 3) -> RadialProfile:
    """``F(r) = exp(-r^2 / (2 width^2))``."""
    return RadialProfile(lambda r: np.exp(-0.5 * (r / width) ** 2), dim, 12.0 * width,
                         f"gaussian(width={width})")


# ---------------------------------------------------------------------------
# derivatives of b through g = b^2
# ---------------------------------------------------------------------------


def _g_derivs(r, sym: DispersionSymbol):
    r = np.asarray(r, dtype=float)
    e2 = sym.epsilon**2
    if sym.variant == "electron":
        g = radicand(r, sym)
        g1_over_r = 2.0 - 4.0 * e2 * r * r
        g2 = 2.0 - 12.0 * e2 * r * r
        g3 = -24.0 * e2 * r
    else:
        q = 1.0 + r * r
        g = radicand(r, sym)
        g1_over_r = 2.0 + 2.0 / q**2 - 4.0 * e2 * r * r
        g2 = 2.0 + 2.0 / q**2 - 8.0 * r * r / q**3 - 12.0 * e2 * r * r
        g3 = -24.0 * r / q**3 + 48.0 * r**3 / q**4 - 24.0 * e2 * r
    return g, g1_over_r, g2, g3


def b_derivatives(r, sym: DispersionSymbol) -> dict:
    """``b``, ``b'``, ``b'/r``, ``b''`` and ``b'''`` in closed form.

    Uses ``g = b^2``: ``b' = g'/(2b)``, ``b'' = (g'' - 2 b'^2)/(2b)`` and
    ``b''' = (g''' - 6 b' b'')/(2b)``.  Requires a positive radicand.
    """
    r = np.asarray(r, dtype=float)
    g, g1r, g2, g3 = _g_derivs(r, sym)
    if np.any(g <= 0):
        raise ValueError("b is not real and positive on the requested range")
    b = np.sqrt(g)
    b1_over_r = g1r / (2.0 * b)
    b1 = b1_over_r * r
    b2 = (g2 - 2.0 * b1 * b1) / (2.0 * b)
    b3 = (g3 - 6.0 * b1 * b2) / (2.0 * b)
    return {"b": b, "b1": b1, "b1_over_r": b1_over_r, "b2": b2, "b3": b3}


# ---------------------------------------------------------------------------
# oscillatory quadrature
# ---------------------------------------------------------------------------


def _support_radius(profile: RadialProfile, epsilon: float, kappa0: float) -> float:
    cut = 2.0 * np.sqrt(kappa0 / epsilon)
    return float(min(cut, profile.extent))


def _integrand(r, t, xs, profile, sym, kappa0):
    d = profile.dim
    b = np.sqrt(radicand(r, sym))
    amp = chi_scaled(r, sym.epsilon, kappa0) * profile(r) * r ** (d - 1)
    base = np.exp(1j * t * b) * amp / (2.0 * np.pi) ** d
    return base[..., None] * sphere_kernel(d, r[..., None] * xs)


def _panel_edges(r_max: float, t: float, x_max: float, sym: DispersionSymbol, cap: float) -> np.ndarray:
    rr = np.linspace(0.0, r_max, 257)
    slope = np.max(np.abs(b_derivatives(rr[1:], sym)["b1"])) if r_max > 0 else 0.0
    freq = max(abs(t) * slope, abs(x_max), 1e-12)
    width = min(cap * np.pi / (4.0 * freq), r_max)
    npan = max(int(np.ceil(r_max / width)), 4)
    return np.linspace(0.0, r_max, npan + 1)


def _gk_adaptive(f, edges: np.ndarray, tol: float, max_panels: int):
    """Adaptive panelwise Gauss-Kronrod; ``f`` maps nodes ``(P, 15)`` to ``(P, 15, M)``."""
    total = None
    err_total = None
    pending = np.stack([edges[:-1], edges[1:]], axis=1)
    span = edges[-1] - edges[0]
    used = len(pending)
    while len(pending):
        a, b = pending[:, 0], pending[:, 1]
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        nodes = mid[:, None] + half[:, None] * _NODES[None, :]
        vals = f(nodes)
        k = np.einsum("j,pjm->pm", _WK, vals) * half[:, None]
        g = np.einsum("j,pjm->pm", _WG_FULL, vals) * half[:, None]
        err = np.max(np.abs(k - g), axis=1)
        ok = err <= tol * (b - a) / span
        acc = k[ok].sum(axis=0)
        eacc = err[ok].sum()
        total = acc if total is None else total + acc
        err_total = eacc if err_total is None else err_total + eacc
        bad = pending[~ok]
        if len(bad) == 0:
            break
        used += len(bad)
        if used > max_panels:
            raise RuntimeError("oscillatory quadrature did not converge within the panel cap")
        m = 0.5 * (bad[:, 0] + bad[:, 1])
        pending = np.concatenate([np.stack([bad[:, 0], m], 1), np.stack([m, bad[:, 1]], 1)])
    return total, err_total


def propagator_points(t: float, xs, profile: RadialProfile, epsilon: float,
                      kappa0: float = 1.0 / 200.0, variant: str = "electron",
                      tol: float = 1e-9, width_cap: float = 1.0, chunk: int = 64,
                      max_panels: int = 400000) -> np.ndarray:
    """Propagator values at a batch of radii ``|x|``.

    Panels have width at most ``width_cap * pi / (4 max(|t b'|, |x|))`` before
    adaptive bisection driven by the Kronrod-Gauss difference.
    """
    sym = DispersionSymbol(variant, epsilon)
    xs = np.atleast_1d(np.abs(np.asarray(xs, dtype=float)))
    order = np.argsort(xs)
    out = np.empty(xs.shape, dtype=complex)
    r_max = _support_radius(profile, epsilon, kappa0)
    for start in range(0, len(xs), chunk):
        idx = order[start:start + chunk]
        xc = xs[idx]
        edges = _panel_edges(r_max, t, float(xc.max()), sym, width_cap)
        f = lambda nodes: _integrand(nodes, t, xc, profile, sym, kappa0)
        val, _ = _gk_adaptive(f, edges, tol, max_panels)
        out[idx] = val
    return out


def propagator_point(t: float, x: float, profile: RadialProfile, epsilon: float,
                     kappa0: float = 1.0 / 200.0, variant: str = "electron", **kw) -> complex:
    """Single evaluation of the radial propagator at ``(t, |x|)``."""
    return complex(propagator_points(t, [x], profile, epsilon, kappa0, variant, **kw)[0])


# ---------------------------------------------------------------------------
# decay fits
# ---------------------------------------------------------------------------


@dataclass
class DecayFit:
    """Least-squares power-law fit ``value ~ C t^{-exponent}`` on a window."""

    times: list
    values: list
    fitted_exponent: float
    fit_window: list
    residual: float
    predicted: float | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def delta(self) -> float | None:
        return None if self.predicted is None else self.fitted_exponent - self.predicted

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = [float(v) for v in self.times]
        d["values"] = [float(v) for v in self.values]
        d["delta"] = self.delta
        return d


def fit_decay(times, values, window=(10.0, 200.0), predicted=None, label="",
              min_decades: float = 0.5) -> DecayFit:
    """Fit ``log value = c - exponent * log t`` on ``window``.

    Raises
    ------
    ValueError
        If the window spans less than ``min_decades`` decades or holds fewer
        than three samples.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    if np.log10(hi / lo) < min_decades:
        raise ValueError("fit window shorter than half a decade")
    sel = (times >= lo) & (times <= hi) & (values > 0)
    if sel.sum() < 3:
        raise ValueError("not enough samples inside the fit window")
    lt, lv = np.log(times[sel]), np.log(values[sel])
    coef, res, *_ = np.polyfit(lt, lv, 1, full=True)
    rms = float(np.sqrt(res[0] / sel.sum())) if len(res) else 0.0
    return DecayFit(list(times), list(values), float(-coef[0]), [float(lo), float(hi)], rms,
                    predicted, label)


def _sup_over_x(t, profile, epsilon, kappa0, variant, n_coarse, margin, tol):
    x_hi = 3.0 * max(t, 1.0) * (1.0 + margin)
    xs = np.linspace(0.0, x_hi, n_coarse)
    # denser samples around the group-velocity range
    r_max = _support_radius(profile, epsilon, kappa0)
    sym = DispersionSymbol(variant, epsilon)
    rr = np.linspace(1e-6, r_max, 64)
    v = np.abs(b_derivatives(rr, sym)["b1"]) * t
    xs = np.unique(np.concatenate([xs, np.linspace(0.0, min(v.max() * 1.1 + 1, x_hi), n_coarse)]))
    vals = np.abs(propagator_points(t, xs, profile, epsilon, kappa0, variant, tol=tol))
    best = float(vals.max())
    dx = np.diff(xs).max()
    for i in np.argsort(vals)[-3:]:
        lo, hi = max(xs[i] - dx, 0.0), min(xs[i] + dx, x_hi)
        res = minimize_scalar(
            lambda x: -abs(propagator_point(t, x, profile, epsilon, kappa0, variant, tol=tol)),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-3 * max(dx, 1e-3)})
        best = max(best, -float(res.fun))
    return best


def sup_norm_scan(profile: RadialProfile, epsilon: float, kappa0: float = 1.0 / 200.0,
                  t_list=None, variant: str = "electron", window=(10.0, 200.0),
                  n_coarse: int = 160, margin: float = 0.05, tol: float = 1e-9,
                  predicted: float | None = None) -> DecayFit:
    """Approximate ``sup_x |u(t, x)|`` for each ``t`` and fit the decay exponent."""
    if t_list is None:
        t_list = np.geomspace(window[0], window[1], 10)
    t_list = np.asarray(t_list, dtype=float)
    if len(t_list) < 8 or np.any(np.diff(t_list) <= 0):
        raise ValueError("t_list must be increasing with at least 8 points")
    if np.log10(t_list[-1] / t_list[0]) < 1.0:
        raise ValueError("t_list must span at least one decade")
    sups = [_sup_over_x(t, profile, epsilon, kappa0, variant, n_coarse, margin, tol) for t in t_list]
    if predicted is None:
        predicted = profile.dim / 2.0 if variant == "electron" else 4.0 / 3.0
    fit = fit_decay(t_list, sups, window, predicted,
                    f"{variant} d={profile.dim} eps={epsilon:g}")
    fit.meta = {"epsilon": epsilon, "kappa0": kappa0, "dim": profile.dim, "variant": variant,
                "profile": profile.label}
    return fit


def ion_decay_scan(profile: RadialProfile, epsilon: float, kappa0: float = 1.0 / 200.0,
                   t_list=None, **kw) -> DecayFit:
    """Same as :func:`sup_norm_scan` with the ion dispersion relation (``d = 3``)."""
    if profile.dim != 3:
        raise ValueError("ion decay scan is defined for d = 3")
    return sup_norm_scan(profile, epsilon, kappa0, t_list, variant="ion", predicted=4.0 / 3.0, **kw)


# ---------------------------------------------------------------------------
# stationary-phase ingredients
# ---------------------------------------------------------------------------


def hessian_lower_bound(d: int) -> float:
    """Lower bound ``1 / (2^{d+1} 5^{(d+1)/2})`` for the phase Hessian."""
    return 1.0 / (2.0 ** (d + 1) * 5.0 ** ((d + 1) / 2.0))


def hessian_det(r, epsilon: float, d: int, variant: str = "electron"):
    """Determinant of the Hessian of ``xi -> b(|xi|)``: ``(b'/r)^{d-1} b''``."""
    bd = b_derivatives(r, DispersionSymbol(variant, epsilon))
    return bd["b1_over_r"] ** (d - 1) * bd["b2"]


def hessian_det_scan(eps_grid, kappa0: float = 1e-3, d: int = 3, n_r: int = 4001) -> dict:
    """Minimum Hessian determinant over ``{|xi| <= 2, eps |xi|^2 <= 2 kappa0}``."""
    bound = hessian_lower_bound(d)
    rows = []
    for eps in eps_grid:
        r_max = min(2.0, np.sqrt(2.0 * kappa0 / eps))
        r = np.linspace(0.0, r_max, n_r)
        det = hessian_det(r, eps, d)
        rows.append({"epsilon": float(eps), "r_max": float(r_max), "min_det": float(det.min()),
                     "argmin_r": float(r[np.argmin(det)])})
    m = min(row["min_det"] for row in rows)
    return {"dim": d, "kappa0": kappa0, "bound": bound, "min_det": m, "per_epsilon": rows,
            "passed": bool(m >= bound)}


def _sign_changes(f, lo, hi, n=20001, xtol=1e-8):
    x = np.linspace(lo, hi, n)
    y = f(x)
    idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    return [brentq(f, x[i], x[i + 1], xtol=xtol) for i in idx]


def ion_b_properties(eps_grid, kappa0: float = 1.0 / 200.0, search=(1.0, 10.0),
                     b1_floor: float = 1.0 / (2.0 * np.sqrt(2.0)), iota: float = 0.25) -> dict:
    """Pointwise properties of the ion dispersion relation.

    For each ``epsilon`` this reports

    * the minimum of ``b'`` on the cutoff range ``[0, sqrt(2 kappa0/eps)]``;
    * every sign change of ``b''`` inside ``search`` (restricted to where ``b``
      is real), located by bisection;
    * the minimum of ``b'''`` on ``[r0 - iota, r0 + iota]`` around each zero.

    The verdict for an ``epsilon`` requires exactly one sign change, a
    positive ``b'''`` floor on its interval, and ``min b' >= b1_floor``.
    """
    rows = []
    for eps in eps_grid:
        sym = DispersionSymbol("ion", float(eps))
        r_cut = float(np.sqrt(2.0 * kappa0 / eps))
        rr = np.linspace(1e-9, r_cut, 4001)
        rr = rr[radicand(rr, sym) > 0]
        min_b1 = float(b_derivatives(rr, sym)["b1"].min())
        lo, hi = search
        xs = np.linspace(lo, hi, 20001)
        real = radicand(xs, sym) > 0
        hi_real = float(xs[real][-1]) if real.any() else lo
        zeros = []
        if hi_real > lo:
            f = lambda r: b_derivatives(r, sym)["b2"]
            zeros = _sign_changes(f, lo, hi_real)
        floors = []
        for r0 in zeros:
            seg = np.linspace(max(r0 - iota, 1e-9), min(r0 + iota, hi_real), 401)
            floors.append(float(b_derivatives(seg, sym)["b3"].min()))
        ok = (len(zeros) == 1 and floors[0] > 0 and min_b1 >= b1_floor - 1e-9)
        rows.append({
            "epsilon": float(eps), "r_cut": r_cut, "min_b1": min_b1, "real_up_to": hi_real,
            "b2_zeros": zeros, "b3_floor": floors, "inside_cutoff": [z <= r_cut for z in zeros],
            "passed": bool(ok),
        })
    return {"kappa0": kappa0, "search": list(search), "b1_floor": b1_floor,
            "min_b1": min(r["min_b1"] for r in rows), "per_epsilon": rows,
            "passed": all(r["passed"] for r in rows)}
