"""Closed-form linear semigroup of the symmetrised system.

In the variables ``V = (h, c)`` the linearised flow is ``dV/dt + A V = 0`` with
the per-mode matrix

    A(xi) = [[0, w], [-w, 2 a]],   a = epsilon |xi|^2,

where ``w = <xi>`` for electrons and ``w = p(|xi|)`` for ions.  The
eigenvalues of ``-A`` are ``-a +/- i b`` with ``b^2 = w^2 - a^2`` (the
"radicand").  Where the radicand is negative the flow is overdamped and the
trigonometric forms turn into hyperbolic ones; both are evaluated through a
single pair of functions of the radicand so the matrix stays continuous
through the eigenvalue crossing.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from .spectral import CutoffParams, SpectralField, chi_scaled

__all__ = [
    "DispersionSymbol",
    "CROSSING_TOL",
    "symbol_weight",
    "radicand",
    "b_value",
    "tilde_b_value",
    "eigenvalues",
    "green_entries",
    "green_matrix",
    "generator_matrix",
    "apply_semigroup",
    "q_matrix",
    "q_inverse_matrix",
    "q_transform",
    "q_inverse",
    "verify_high_freq_damping",
    "heat_smoothing_sup",
]

#: radicand magnitude below which the series forms replace cos/sinc
CROSSING_TOL = 1e-6
_SERIES_TERMS = 8


@dataclass(frozen=True)
class DispersionSymbol:
    """Dispersion relation of the electron or ion linearisation."""

    variant: str = "electron"
    epsilon: float = 0.1

    def __post_init__(self):
        if self.variant not in ("electron", "ion"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")


def _as_r(xi) -> np.ndarray:
    """Accept either ``|xi|`` values or a stacked array of vectors (last axis)."""
    return np.abs(np.asarray(xi, dtype=float))


def ion_p(r):
    """Ion coupling symbol ``r sqrt((2 + r^2) / (1 + r^2))``."""
    r = np.asarray(r, dtype=float)
    return r * np.sqrt((2.0 + r * r) / (1.0 + r * r))


def symbol_weight(r, sym: DispersionSymbol):
    """Off-diagonal weight ``w``: ``<xi>`` (electron) or ``p(|xi|)`` (ion)."""
    r = _as_r(r)
    if sym.variant == "electron":
        return np.sqrt(1.0 + r * r)
    return ion_p(r)


def radicand(r, sym: DispersionSymbol):
    """``w^2 - (epsilon r^2)^2`` evaluated as a product to limit cancellation."""
    r = _as_r(r)
    w = symbol_weight(r, sym)
    a = sym.epsilon * r * r
    return (w - a) * (w + a)


def b_value(r, sym: DispersionSymbol):
    """Dispersion relation ``b = sqrt(radicand)`` in the oscillatory regime.

    Raises
    ------
    ValueError
        If the radicand is negative somewhere (use :func:`tilde_b_value`).
    """
    d = radicand(r, sym)
    if np.any(d < 0):
        raise ValueError("negative radicand: overdamped regime, use tilde_b_value")
    return np.sqrt(d)


def tilde_b_value(r, sym: DispersionSymbol):
    """``sqrt(-radicand)`` in the overdamped regime."""
    d = radicand(r, sym)
    if np.any(d > 0):
        raise ValueError("positive radicand: oscillatory regime, use b_value")
    return np.sqrt(-d)


def eigenvalues(r, sym: DispersionSymbol):
    """Eigenvalues ``(lambda_plus, lambda_minus)`` of ``-A(xi)``.

    Oscillatory regime: ``-a +/- i b``.  Overdamped regime: ``-a -/+ b~``
    so that ``lambda_plus`` is the more strongly damped root.
    """
    r = _as_r(r)
    a = sym.epsilon * r * r
    d = radicand(r, sym)
    s = np.sqrt(np.abs(d))
    lp = np.where(d >= 0, -a + 1j * s, -a - s + 0j)
    lm = np.where(d >= 0, -a - 1j * s, -a + s + 0j)
    return lp, lm


def _cos_sinc(d, t):
    """Return ``(e^{-at}``-free) ``cos(sqrt(d) t)`` and ``sin(sqrt(d) t)/sqrt(d)``.

    Valid for either sign of ``d``.  Only used where ``|d| t^2`` is small, so the
    hyperbolic branch cannot overflow here.
    """
    x = -d * t * t
    c = np.zeros_like(x)
    s = np.zeros_like(x)
    for k in range(_SERIES_TERMS - 1, -1, -1):
        c = c * x + 1.0 / factorial(2 * k)
        s = s * x + 1.0 / factorial(2 * k + 1)
    return c, s * t


def green_entries(t, r, sym: DispersionSymbol):
    """Entries ``(G1, G2, G3)`` of ``exp(-t A(xi))``.

    ``t`` and ``r`` broadcast against each other.  The matrix is
    ``[[G1, -G2], [G2, G3]]``.
    """
    t = np.asarray(t, dtype=float)
    r = _as_r(r)
    t, r = np.broadcast_arrays(t, r)
    a = sym.epsilon * r * r
    w = symbol_weight(r, sym)
    d = radicand(r, sym)
    cos_part = np.empty(t.shape)
    sinc_part = np.empty(t.shape)

    series = (np.abs(d) < CROSSING_TOL) & (np.abs(d) * t * t <= 0.25)
    osc = (d > 0) & ~series
    damp = (d <= 0) & ~series

    if np.any(series):
        c, s = _cos_sinc(d[series], t[series])
        e = np.exp(-a[series] * t[series])
        cos_part[series] = e * c
        sinc_part[series] = e * s
    if np.any(osc):
        b = np.sqrt(d[osc])
        tt = t[osc]
        e = np.exp(-a[osc] * tt)
        cos_part[osc] = e * np.cos(b * tt)
        sinc_part[osc] = e * np.sin(b * tt) / b
    if np.any(damp):
        bt = np.sqrt(-d[damp])
        tt = t[damp]
        slow = np.exp((bt - a[damp]) * tt)
        m1 = -np.expm1(-2.0 * bt * tt)
        cos_part[damp] = slow * (1.0 - 0.5 * m1)
        with np.errstate(invalid="ignore", divide="ignore"):
            sinc_part[damp] = np.where(bt > 0, slow * m1 / (2.0 * np.where(bt > 0, bt, 1.0)), tt * slow)

    g1 = cos_part + a * sinc_part
    g3 = cos_part - a * sinc_part
    g2 = w * sinc_part
    return g1, g2, g3


def green_matrix(t, r, sym: DispersionSymbol) -> np.ndarray:
    """Assembled ``exp(-t A)`` with shape ``broadcast(t, r).shape + (2, 2)``."""
    g1, g2, g3 = green_entries(t, r, sym)
    return np.stack([np.stack([g1, -g2], -1), np.stack([g2, g3], -1)], -2)


def generator_matrix(r, sym: DispersionSymbol) -> np.ndarray:
    """The matrix ``A(xi)`` itself, shape ``r.shape + (2, 2)``."""
    r = _as_r(r)
    w = symbol_weight(r, sym)
    a = sym.epsilon * r * r
    z = np.zeros_like(r)
    return np.stack([np.stack([z, w], -1), np.stack([-w, 2 * a], -1)], -2)


def apply_semigroup(t: float, V: SpectralField, sym: DispersionSymbol) -> SpectralField:
    """Exact linear evolution ``exp(-t A(D)) V`` of a stacked ``(h, c)`` field."""
    if V.coeffs.shape[0] != 2:
        raise ValueError("expected a stacked (h, c) field")
    if t < 0:
        raise ValueError("t must be non-negative")
    g1, g2, g3 = green_entries(t, V.grid.xi_abs, sym)
    h, c = V.coeffs
    return V.with_coeffs(np.stack([g1 * h - g2 * c, g2 * h + g3 * c]), "stack")


# ---------------------------------------------------------------------------
# diagonalisation on low frequencies
# ---------------------------------------------------------------------------


def q_matrix(r, sym: DispersionSymbol) -> np.ndarray:
    """Eigenvector matrix ``Q = [[1, 1], [-lambda_-/w, -lambda_+/w]]``."""
    r = _as_r(r)
    lp, lm = eigenvalues(r, sym)
    w = symbol_weight(r, sym)
    safe = np.where(w > 0, w, 1.0)
    one = np.ones_like(lp)
    q = np.stack([np.stack([one, one], -1), np.stack([-lm / safe, -lp / safe], -1)], -2)
    if sym.variant == "ion":
        q[w == 0] = np.eye(2)
    return q


def q_inverse_matrix(r, sym: DispersionSymbol) -> np.ndarray:
    """``Q^{-1} = [[lambda_+, w], [-lambda_-, -w]] / (2 i b)``."""
    r = _as_r(r)
    lp, lm = eigenvalues(r, sym)
    w = symbol_weight(r, sym) + 0j
    den = lp - lm  # equals 2 i b in the oscillatory regime
    safe = np.where(den != 0, den, 1.0)
    qi = np.stack([np.stack([lp, w], -1), np.stack([-lm, -w], -1)], -2) / safe[..., None, None]
    if sym.variant == "ion":
        qi[np.real(w) == 0] = np.eye(2)
    return qi


def _low_support(V: SpectralField, params: CutoffParams, tol: float):
    w = chi_scaled(V.grid.xi_abs, params.epsilon, params.kappa0)
    support = w > 0
    outside = np.sum(np.abs(V.coeffs[:, ~support]) ** 2)
    total = np.sum(np.abs(V.coeffs) ** 2)
    if outside > tol**2 * max(total, 1e-300):
        raise ValueError("field carries energy outside the low-frequency cutoff support")
    return support


def _apply_matrix(m: np.ndarray, c: np.ndarray, support: np.ndarray) -> np.ndarray:
    out = np.zeros(c.shape, dtype=complex)
    cs = c[:, support]
    ms = m[support]
    out[0, support] = ms[:, 0, 0] * cs[0] + ms[:, 0, 1] * cs[1]
    out[1, support] = ms[:, 1, 0] * cs[0] + ms[:, 1, 1] * cs[1]
    return out


def q_transform(V: SpectralField, sym: DispersionSymbol, params: CutoffParams | None = None,
                tol: float = 1e-12) -> SpectralField:
    """Diagonal variables ``R = Q^{-1} V`` of a low-frequency field."""
    params = params or CutoffParams(sym.epsilon)
    support = _low_support(V, params, tol)
    qi = q_inverse_matrix(V.grid.xi_abs, sym)
    return V.with_coeffs(_apply_matrix(qi, V.coeffs, support), "stack")


def q_inverse(R: SpectralField, sym: DispersionSymbol, params: CutoffParams | None = None,
              tol: float = 1e-12) -> SpectralField:
    """Back-transform ``V = Q R``."""
    params = params or CutoffParams(sym.epsilon)
    support = _low_support(R, params, tol)
    q = q_matrix(R.grid.xi_abs, sym)
    return R.with_coeffs(_apply_matrix(q, R.coeffs, support), "stack")


# ---------------------------------------------------------------------------
# damping and smoothing scans
# ---------------------------------------------------------------------------


def verify_high_freq_damping(eps_grid, t_grid, xi_grid, kappa0: float = 1.0 / 200.0,
                             rate: float | None = None, bound: float = 3.0,
                             variant: str = "electron") -> dict:
    """Supremum of ``|(1 - chi) G_j(t, xi)| exp(rate t)`` over the grids.

    ``rate`` defaults to ``kappa0 / 4``.  Returns per-entry and overall
    suprema plus the verdict against ``bound``.
    """
    rate = kappa0 / 4.0 if rate is None else rate
    t = np.asarray(t_grid, dtype=float)[:, None]
    r = np.asarray(xi_grid, dtype=float)[None, :]
    per_eps = []
    overall = 0.0
    for eps in eps_grid:
        sym = DispersionSymbol(variant, float(eps))
        high = 1.0 - chi_scaled(r, eps, kappa0)
        g = green_entries(t, r, sym)
        growth = np.exp(rate * t)
        sups = [float(np.max(np.abs(high * gj) * growth)) for gj in g]
        d = radicand(r, sym)
        per_eps.append({
            "epsilon": float(eps),
            "sup_G1": sups[0], "sup_G2": sups[1], "sup_G3": sups[2],
            "overdamped_points": int(np.sum(d < 0)),
        })
        overall = max(overall, *sups)
    return {
        "kappa0": kappa0,
        "rate": rate,
        "bound": bound,
        "sup": overall,
        "per_epsilon": per_eps,
        "passed": bool(overall <= bound),
    }


def heat_smoothing_sup(eps_grid, t_grid, xi_grid, k: int, kappa0: float = 1.0 / 200.0) -> float:
    """``sup |exp(-eps t xi^2) (eps xi^2)^k chi(xi)| (1 + t)^k`` over the grids."""
    t = np.asarray(t_grid, dtype=float)[:, None]
    r = np.asarray(xi_grid, dtype=float)[None, :]
    out = 0.0
    for eps in eps_grid:
        a = eps * r * r
        v = np.exp(-a * t) * a**k * chi_scaled(r, eps, kappa0) * (1.0 + t) ** k
        out = max(out, float(v.max()))
    return out
