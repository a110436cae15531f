"""Phase functions, normal-form symbols, bilinear operators and the
time integration-by-parts identity.

Notation: for an output frequency ``xi = zeta + eta`` the phase is

    phi_jk(zeta, eta) = (-1)^{j+1} b(zeta) + (-1)^{k+1} b(eta) - b(zeta + eta),

and the normal-form symbol is
``m(zeta, eta) = chi~(zeta) chi~(eta) chi~(zeta + eta) <zeta + eta> / (2 i b(zeta + eta))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .semigroup import DispersionSymbol, radicand
from .spectral import Grid, SpectralField, chi_scaled, chi_tilde_scaled

__all__ = [
    "PhaseFamily",
    "b_of",
    "phase_value",
    "quantity_A",
    "quantity_A_expanded",
    "normal_form_symbol",
    "divided_symbol",
    "reciprocal_phase_bound_scan",
    "symbol_derivative_scan",
    "BilinearOperator",
    "bilinear_apply",
    "normal_form_identity_check",
]


@dataclass(frozen=True)
class PhaseFamily:
    variant: str = "electron"
    epsilon: float = 0.1
    kappa0: float = 1.0 / 200.0

    @property
    def symbol(self) -> DispersionSymbol:
        return DispersionSymbol(self.variant, self.epsilon)


def _norm(v):
    v = np.asarray(v, dtype=float)
    return np.sqrt(np.sum(v * v, axis=-1))


def b_of(v, fam: PhaseFamily):
    """``b`` evaluated on vectors (last axis holds the components)."""
    return np.sqrt(radicand(_norm(v), fam.symbol))


def phase_value(j: int, k: int, xi, eta, fam: PhaseFamily):
    """``phi_jk(xi, eta)`` for vectors ``xi``, ``eta`` (last axis)."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    sj = 1.0 if j == 1 else -1.0
    sk = 1.0 if k == 1 else -1.0
    return sj * b_of(xi, fam) + sk * b_of(eta, fam) - b_of(xi + eta, fam)


def quantity_A(xi, eta, epsilon: float):
    """``(b(xi) + b(eta))^2 - b(xi + eta)^2`` (electron)."""
    fam = PhaseFamily("electron", epsilon)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return (b_of(xi, fam) + b_of(eta, fam)) ** 2 - b_of(xi + eta, fam) ** 2


def quantity_A_expanded(xi, eta, epsilon: float):
    """Expanded form ``1 + 2 b b - 2 xi.eta - eps^2 (|xi|^4 + |eta|^4 - |xi+eta|^4)``."""
    fam = PhaseFamily("electron", epsilon)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    s = xi + eta
    n4 = lambda v: np.sum(v * v, axis=-1) ** 2
    return (1.0 + 2.0 * b_of(xi, fam) * b_of(eta, fam) - 2.0 * np.sum(xi * eta, axis=-1)
            - epsilon**2 * (n4(xi) + n4(eta) - n4(s)))


def normal_form_symbol(zeta, eta, fam: PhaseFamily):
    """Electron multiplier ``m(zeta, eta)``."""
    s = np.asarray(zeta, dtype=float) + np.asarray(eta, dtype=float)
    a, b, c = _norm(zeta), _norm(eta), _norm(s)
    cut = (chi_tilde_scaled(a, fam.epsilon, fam.kappa0) * chi_tilde_scaled(b, fam.epsilon, fam.kappa0)
           * chi_tilde_scaled(c, fam.epsilon, fam.kappa0))
    return cut * np.sqrt(1.0 + c * c) / (2j * b_of(s, fam))


def divided_symbol(j: int, k: int, power: int, fam: PhaseFamily):
    """Callable ``(zeta, eta) -> m / phi_jk^power``."""
    def f(zeta, eta):
        return normal_form_symbol(zeta, eta, fam) / phase_value(j, k, zeta, eta, fam) ** power
    return f


# ---------------------------------------------------------------------------
# rotation-reduced scans
# ---------------------------------------------------------------------------


def _pair_grid(n: int, radius: float):
    """Pairs ``xi = (r1, 0, 0)``, ``eta = r2 (cos t, sin t, 0)`` on an ``n^3`` grid.

    The cosine axis is clustered near +-1 so near-parallel configurations are
    well represented.
    """
    r = np.linspace(0.0, radius, n)
    u = np.linspace(-1.0, 1.0, n)
    cos_t = np.sin(0.5 * np.pi * u)
    r1, r2, c = np.meshgrid(r, r, cos_t, indexing="ij")
    s = np.sqrt(np.clip(1.0 - c * c, 0.0, None))
    xi = np.stack([r1, np.zeros_like(r1), np.zeros_like(r1)], -1)
    eta = np.stack([r2 * c, r2 * s, np.zeros_like(r2)], -1)
    return xi.reshape(-1, 3), eta.reshape(-1, 3)


def _triple_support(xi, eta, fam):
    a = chi_tilde_scaled(_norm(xi), fam.epsilon, fam.kappa0)
    b = chi_tilde_scaled(_norm(eta), fam.epsilon, fam.kappa0)
    c = chi_tilde_scaled(_norm(xi + eta), fam.epsilon, fam.kappa0)
    return (a * b * c) > 0


def reciprocal_phase_bound_scan(n: int, eps_grid, kappa0: float = 1.0 / 200.0,
                                refine: float = 1.5, stability: float = 1.05) -> dict:
    """Phase positivity, the ``A`` bound and the reciprocal-phase constant.

    For each ``epsilon`` the ``n^3`` reduced grid and one refinement
    (``n * refine`` points per axis) are scanned over the triple support.
    ``C*`` is ``max (1/phi_11) / min(b(xi), b(eta), b(xi+eta))``.
    """
    a_bound = 1.0 - 32.0 * kappa0**2
    rows = []
    for eps in eps_grid:
        fam = PhaseFamily("electron", float(eps), kappa0)
        radius = 4.0 * np.sqrt(kappa0 / eps)
        levels = []
        for m in (n, int(round(n * refine))):
            xi, eta = _pair_grid(m, radius)
            keep = _triple_support(xi, eta, fam)
            xi, eta = xi[keep], eta[keep]
            phi = phase_value(1, 1, xi, eta, fam)
            A = quantity_A(xi, eta, eps)
            bmin = np.minimum(np.minimum(b_of(xi, fam), b_of(eta, fam)), b_of(xi + eta, fam))
            ratio = (1.0 / phi) / bmin
            levels.append({"points": int(keep.sum()), "grid": m, "min_phi11": float(phi.min()),
                           "min_A": float(A.min()), "C_star": float(ratio.max())})
        c0, c1 = levels[0]["C_star"], levels[1]["C_star"]
        change = max(c0, c1) / min(c0, c1)
        ok = (all(l["min_phi11"] > 0 for l in levels) and all(l["min_A"] >= a_bound for l in levels)
              and change < stability)
        rows.append({"epsilon": float(eps), "levels": levels, "refinement_change": float(change),
                     "passed": bool(ok)})
    return {"kappa0": kappa0, "A_bound": a_bound, "per_epsilon": rows,
            "passed": all(r["passed"] for r in rows)}


def _derivative_tensors(F, x0, h):
    """Values, gradients and Hessians by central differences.

    ``F`` maps points ``(P, D)`` to ``(P, S)`` (several symbols at once); the
    outputs have shapes ``(P, S)``, ``(P, S, D)`` and ``(P, S, D, D)``.
    """
    P, D = x0.shape
    f0 = F(x0)
    S = f0.shape[1]
    grad = np.zeros((P, S, D), dtype=f0.dtype)
    hess = np.zeros((P, S, D, D), dtype=f0.dtype)
    e = np.eye(D)
    hh = h[:, None]
    for i in range(D):
        step = h[:, None] * e[i]
        a, b = F(x0 + step), F(x0 - step)
        grad[:, :, i] = (a - b) / (2 * hh)
        hess[:, :, i, i] = (a - 2 * f0 + b) / hh**2
    for i, j in combinations_with_replacement(range(D), 2):
        if i == j:
            continue
        si, sj = h[:, None] * e[i], h[:, None] * e[j]
        v = (F(x0 + si + sj) - F(x0 + si - sj) - F(x0 - si + sj) + F(x0 - si - sj)) / (4 * hh * hh)
        hess[:, :, i, j] = hess[:, :, j, i] = v
    return f0, grad, hess


def _stacked_symbols(fam, pairs):
    def F(x):
        zeta, eta = x[:, :3] - x[:, 3:], x[:, 3:]
        m = normal_form_symbol(zeta, eta, fam)
        cols = []
        for power in (1, 2):
            for (j, k) in pairs:
                cols.append(m / phase_value(j, k, zeta, eta, fam) ** power)
        return np.stack(cols, axis=1)
    return F


def symbol_derivative_scan(n: int, eps_grid, kappa0: float = 1.0 / 200.0,
                           pairs=((1, 1), (1, 2), (2, 1), (2, 2)), refine: float = 1.5,
                           step_scale: float = 1e-4, stability: float = 1.10,
                           chunk: int = 20000) -> dict:
    """Finite-difference bounds on ``m/phi`` and ``m/phi^2`` up to total order 2.

    The symbol is composed as ``F(xi, eta) = (m/phi)(xi - eta, eta)`` and
    differentiated in all six coordinates with step ``step_scale * <xi>``.
    For each order the Frobenius norm of the derivative tensor (rotation
    invariant, so the reduced pair grid covers all configurations) is divided
    by ``min(<xi>, <eta>, <xi - eta>)``, squared for the ``phi^2`` symbols.
    Repeating the differences with a doubled step flags non-convergence.
    """
    names = [f"phi{p}_{j}{k}" for p in (1, 2) for (j, k) in pairs]
    powers = np.array([1] * len(pairs) + [2] * len(pairs))
    jap = lambda v: np.sqrt(1.0 + np.sum(v * v, axis=-1))
    rows = []
    for eps in eps_grid:
        fam = PhaseFamily("electron", float(eps), kappa0)
        F = _stacked_symbols(fam, pairs)
        radius = 4.0 * np.sqrt(kappa0 / eps)
        per_level = []
        for m in (n, int(round(n * refine))):
            xi, eta = _pair_grid(m, radius)
            keep = (chi_tilde_scaled(_norm(xi), eps, kappa0) * chi_tilde_scaled(_norm(eta), eps, kappa0)
                    * chi_tilde_scaled(_norm(xi - eta), eps, kappa0)) > 0
            pts = np.concatenate([xi[keep], eta[keep]], axis=1)
            best = np.zeros((len(names), 3))
            fd_dev = 0.0
            for start in range(0, len(pts), chunk):
                x0 = pts[start:start + chunk]
                denom = np.minimum(np.minimum(jap(x0[:, :3]), jap(x0[:, 3:])), jap(x0[:, :3] - x0[:, 3:]))
                scale = denom[:, None] ** powers[None, :]
                h = step_scale * jap(x0[:, :3])
                f0, g, H = _derivative_tensors(F, x0, h)
                norms = [np.abs(f0), np.sqrt(np.sum(np.abs(g) ** 2, axis=-1)),
                         np.sqrt(np.sum(np.abs(H) ** 2, axis=(-2, -1)))]
                for o in range(3):
                    best[:, o] = np.maximum(best[:, o], np.max(norms[o] / scale, axis=0))
                if m != n:
                    _, _, H2 = _derivative_tensors(F, x0, 2 * h)
                    h2 = np.sqrt(np.sum(np.abs(H2) ** 2, axis=(-2, -1)))
                    top = norms[2] > 1e-3 * norms[2].max()
                    if top.any():
                        rel = np.abs(h2 - norms[2])[top] / norms[2][top]
                        fd_dev = max(fd_dev, float(rel.max()))
            level = {"grid": m, "points": int(len(pts))}
            level.update({nm: [float(v) for v in best[i]] for i, nm in enumerate(names)})
            if m != n:
                level["fd_step_deviation"] = fd_dev
            per_level.append(level)
        change = 1.0
        for nm in names:
            for a, b in zip(per_level[0][nm], per_level[1][nm]):
                if max(a, b) > 0:
                    change = max(change, max(a, b) / max(min(a, b), 1e-300))
        finite = all(np.all(np.isfinite(lvl[nm])) for lvl in per_level for nm in names)
        ok = finite and change < stability and per_level[-1]["fd_step_deviation"] < 0.05
        rows.append({"epsilon": float(eps), "levels": per_level, "refinement_change": float(change),
                     "passed": bool(ok)})
    return {"kappa0": kappa0, "stability": stability, "per_epsilon": rows,
            "passed": all(r["passed"] for r in rows)}


# ---------------------------------------------------------------------------
# bilinear operator
# ---------------------------------------------------------------------------


class BilinearOperator:
    """Direct pair-sum evaluation of ``T_s(f, g)`` on a grid.

    ``T_s(f, g)^(xi) = sum_eta s(xi - eta, eta) f^(xi - eta) g^(eta)`` with
    lattice measure one, which reduces to the pointwise product when
    ``s == 1``.  Only modes inside the dealias mask take part, so inputs are
    assumed dealiased and the output is dealiased.

    Parameters
    ----------
    grid : Grid
    symbol : callable
        ``symbol(zeta, eta)`` with vector arguments on the last axis.
    budget : int
        Maximum number of (output, input) pairs.
    """

    def __init__(self, grid: Grid, symbol, budget: int = 4_000_000):
        self.grid = grid
        mask = grid.dealias_mask
        idx = np.argwhere(mask)
        n_act = len(idx)
        if n_act * n_act > budget:
            raise ValueError(f"pair sum of {n_act}^2 exceeds the configured budget {budget}")
        ints = np.stack([grid.integers()[idx[:, i]] for i in range(grid.dim)], axis=1).astype(int)
        self._flat = np.ravel_multi_index(idx.T, grid.shape)
        diff = ints[:, None, :] - ints[None, :, :]
        n = grid.n
        valid = np.all((diff >= -n // 2) & (diff < n // 2), axis=-1)
        wrapped = np.mod(diff, n)
        lin = np.ravel_multi_index(tuple(np.moveaxis(wrapped, -1, 0)), grid.shape)
        valid &= mask.ravel()[lin]
        self._diff_index = np.where(valid, lin, 0)
        self._valid = valid
        zeta = diff * grid.dxi
        eta = np.broadcast_to(ints[None, :, :] * grid.dxi, diff.shape)
        with np.errstate(all="ignore"):
            s = np.asarray(symbol(zeta.astype(float), eta.astype(float)), dtype=complex)
        s = np.broadcast_to(s, valid.shape)
        if not np.all(np.isfinite(s[valid])):
            raise ValueError("symbol not finite on contributing pairs")
        self._matrix = np.where(valid, s, 0.0)

    def __call__(self, f, g):
        fc = f.coeffs if isinstance(f, SpectralField) else np.asarray(f)
        gc = g.coeffs if isinstance(g, SpectralField) else np.asarray(g)
        out = self.apply_coeffs(fc, gc)
        return SpectralField(self.grid, out) if isinstance(f, SpectralField) else out

    def apply_coeffs(self, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
        ff = fc.reshape(-1)[self._diff_index]
        gg = gc.reshape(-1)[self._flat]
        vals = np.einsum("ij,ij,j->i", self._matrix, ff, gg)
        out = np.zeros(self.grid.npoints, dtype=complex)
        out[self._flat] = vals
        return out.reshape(self.grid.shape)


def bilinear_apply(symbol, f: SpectralField, g: SpectralField, budget: int = 4_000_000) -> SpectralField:
    """One-shot :class:`BilinearOperator` evaluation."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return BilinearOperator(f.grid, symbol, budget)(f, g)


# ---------------------------------------------------------------------------
# integration-by-parts identity
# ---------------------------------------------------------------------------


def _trapezoid(values: np.ndarray, dt: float) -> np.ndarray:
    return dt * (0.5 * values[0] + values[1:-1].sum(axis=0) + 0.5 * values[-1])


def normal_form_identity_check(times, R, Btilde, grid: Grid, epsilon: float,
                               kappa0: float = 1.0 / 200.0, pairs=((1, 1),),
                               levels=(64, 128, 256)) -> dict:
    """Compare both sides of the two-level integration-by-parts identity.

    Parameters
    ----------
    times : array, shape (M+1,)
        Uniform nodes on ``[0, t]``.
    R, Btilde : arrays, shape (M+1, 2) + grid.shape
        Diagonal variables ``(r_1, r_2)`` and their sources, so that
        ``d r_j/ds = lambda_j r_j + B_j`` with ``lambda_1 = lambda_-`` and
        ``lambda_2 = lambda_+``.
    levels : tuple of int
        Node counts used for the time quadrature; each must divide ``M``.

    Returns
    -------
    dict
        Relative ``L^2`` residual ``|LHS - RHS| / |LHS|`` per level and pair,
        and the observed order between successive levels.
    """
    times = np.asarray(times, dtype=float)
    M = len(times) - 1
    for lv in levels:
        if M % lv:
            raise ValueError(f"trajectory with {M} intervals cannot be subsampled to {lv} nodes")
    if M < max(levels):
        raise ValueError("trajectory nodes insufficient for the requested quadrature levels")
    T = times[-1] - times[0]
    fam = PhaseFamily("electron", epsilon, kappa0)
    sym = fam.symbol
    from .semigroup import eigenvalues
    lp, lm = eigenvalues(grid.xi_abs, sym)
    lam = {1: lm, 2: lp}
    out_mult = chi_scaled(grid.xi_abs, epsilon, kappa0) * grid.dealias_mask
    eD = -epsilon * grid.xi_sq  # symbol of eps * Laplacian

    results = {}
    for (j, k) in pairs:
        T_m = BilinearOperator(grid, lambda z, e: normal_form_symbol(z, e, fam))
        T_1 = BilinearOperator(grid, divided_symbol(j, k, 1, fam))
        T_2 = BilinearOperator(grid, divided_symbol(j, k, 2, fam))
        rj, rk = R[:, j - 1], R[:, k - 1]
        bj, bk = Btilde[:, j - 1], Btilde[:, k - 1]
        lhs_int = np.empty(R.shape[:1] + grid.shape, dtype=complex)
        i1_int = np.empty_like(lhs_int)     # T_{m/phi}(r_j, r_k)
        i4_int = np.empty_like(lhs_int)     # T_{m/phi^2}(eps Lap r_j, r_k)
        rest_int = np.empty_like(lhs_int)   # terms without an outer eps Lap
        for n_ in range(M + 1):
            a, b = rj[n_], rk[n_]
            lhs_int[n_] = T_m.apply_coeffs(a, b)
            i1_int[n_] = T_1.apply_coeffs(a, b)
            i4_int[n_] = T_2.apply_coeffs(eD * a, b)
            i5 = T_1.apply_coeffs(bj[n_], b)
            i6 = T_1.apply_coeffs(a, eD * b)
            i7 = T_1.apply_coeffs(a, bk[n_])
            i445 = T_2.apply_coeffs(eD * eD * a + eD * bj[n_], b)
            i467 = T_2.apply_coeffs(eD * a, eD * b + bk[n_])
            rest_int[n_] = -1j * (i5 + i6 + i7) - i445 - i467
        remaining = (T - (times - times[0])).reshape((-1,) + (1,) * grid.dim)
        prop = np.exp(lam[1][None] * remaining)
        level_rows = []
        for lv in levels:
            st = M // lv
            sl = slice(None, None, st)
            dt = T / lv
            P = prop[sl]
            lhs = out_mult * _trapezoid(P * lhs_int[sl], dt)
            I1 = 1j * i1_int[-1]
            I2 = -1j * prop[0] * i1_int[0]
            I3 = 1j * eD * _trapezoid(P * i1_int[sl], dt)
            I41 = i4_int[-1]
            I42 = -prop[0] * i4_int[0]
            I43 = eD * _trapezoid(P * i4_int[sl], dt)
            rest = _trapezoid(P * rest_int[sl], dt)
            rhs = out_mult * (I1 + I2 + I3 + I41 + I42 + I43 + rest)
            num = np.sqrt(np.sum(np.abs(lhs - rhs) ** 2))
            den = np.sqrt(np.sum(np.abs(lhs) ** 2))
            level_rows.append({"nodes": lv, "residual": float(num / den) if den > 0 else 0.0,
                               "lhs_norm": float(den * np.sqrt(grid.volume))})
        orders = []
        for a, b in zip(level_rows[:-1], level_rows[1:]):
            if a["residual"] > 0 and b["residual"] > 0:
                orders.append(float(np.log2(a["residual"] / b["residual"])))
        results[f"{j}{k}"] = {"levels": level_rows, "orders": orders}
    return results
