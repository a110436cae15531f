"""Slow, independent reference computations used for verification.

These deliberately avoid the closed forms used elsewhere in the package.
"""

from __future__ import annotations

import numpy as np

from .semigroup import DispersionSymbol, generator_matrix, green_entries

__all__ = ["expm_2x2", "green_sample", "green_oracle_errors", "determinant_defect"]


def expm_2x2(M: np.ndarray, terms: int = 24) -> np.ndarray:
    """Matrix exponential of a stack of 2x2 matrices by scaling and squaring.

    Works in ``np.longdouble``: each matrix is scaled by ``2^-s`` so its
    row-sum norm is at most 1/2, a truncated Taylor series is summed and
    the result squared ``s`` times.  Returns float64.
    """
    A = np.asarray(M, dtype=np.longdouble)
    nrm = np.max(np.sum(np.abs(A), axis=-1), axis=-1)
    s = np.where(nrm > 0.5, np.ceil(np.log2(np.maximum(nrm, 1e-300) / 0.5)), 0).astype(int)
    scale = np.ldexp(np.ones_like(nrm), -s)
    B = A * scale[..., None, None]
    eye = np.broadcast_to(np.eye(2, dtype=np.longdouble), A.shape)
    E = eye.copy()
    term = eye.copy()
    for k in range(1, terms + 1):
        term = np.matmul(term, B) / k
        E = E + term
    for i in range(int(s.max()) if s.size else 0):
        sq = np.matmul(E, E)
        E = np.where((i < s)[..., None, None], sq, E)
    return E.astype(float)


def green_sample(n: int = 10_000, seed: int = 0, n_eps: int = 50, crossing_fraction: float = 0.2,
                 at_max: float = 600.0, t_max: float = 50.0):
    """Sample of ``(epsilon, |xi|, t)`` triples for the Green-matrix oracle.

    ``epsilon`` takes ``n_eps`` log-spaced values in ``[1e-3, 1]``.  A
    fraction of the frequencies sits within a relative ``1e-7 / r_c^2`` of
    the crossing radius ``r_c`` where the radicand vanishes.  Times are
    capped so that ``eps |xi|^2 t <= at_max`` keeps the entries above the
    underflow threshold.
    """
    rng = np.random.default_rng(seed)
    eps_values = np.geomspace(1e-3, 1.0, n_eps)
    eps = eps_values[rng.integers(0, n_eps, n)]
    r = 10 ** rng.uniform(-2, 2, n)
    m = int(crossing_fraction * n)
    e = eps[:m]
    rc = np.sqrt((1 + np.sqrt(1 + 4 * e**2)) / (2 * e**2))
    r[:m] = rc * (1 + rng.uniform(-1, 1, m) * 1e-7 / rc**2)
    u = rng.uniform(0, 1, n)
    t = u * np.minimum(t_max, at_max / (eps * r * r))
    return eps, r, t


def green_oracle_errors(green_fn, eps, r, t, variant: str = "electron") -> np.ndarray:
    """Norm-wise relative error of ``green_fn(t, r, sym)`` against :func:`expm_2x2`."""
    G = np.empty((len(eps), 2, 2))
    A = np.empty((len(eps), 2, 2))
    for e in np.unique(eps):
        idx = eps == e
        sym = DispersionSymbol(variant, float(e))
        G[idx] = green_fn(t[idx], r[idx], sym)
        A[idx] = generator_matrix(r[idx], sym)
    E = expm_2x2(-t[:, None, None] * A)
    return np.max(np.abs(G - E), axis=(1, 2)) / np.max(np.abs(E), axis=(1, 2))


def determinant_defect(t, r, epsilon: float, variant: str = "electron") -> np.ndarray:
    """Defect of ``G1 G3 + G2^2 = exp(-2 eps r^2 t)`` on its floating-point scale.

    The defect is divided by ``max(exp(-2 eps r^2 t), max|G|^2)``: when the
    entries are much larger than the determinant (overdamped modes, or
    ``w / b`` large near the crossing) the products cancel and no float64
    evaluation can do better than ``u max|G|^2``.  The scaling is applied in
    log space so nothing over- or underflows.
    """
    g1, g2, g3 = green_entries(t, r, DispersionSymbol(variant, epsilon))
    log_ref = -2.0 * epsilon * np.asarray(r) ** 2 * np.asarray(t)
    m = np.maximum(np.maximum(np.abs(g1), np.abs(g2)), np.abs(g3))
    with np.errstate(divide="ignore"):
        log_scale = np.maximum(0.5 * log_ref, np.log(m))
    k = np.exp(-log_scale)
    g1, g2, g3 = g1 * k, g2 * k, g3 * k
    out = np.abs(g1 * g3 + g2**2 - np.exp(log_ref - 2.0 * log_scale))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite determinant defect")
    return out
