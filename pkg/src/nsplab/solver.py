"""Pseudo-spectral integration of the scaled Navier-Stokes-Poisson systems.

Three systems share the same machinery:

``full``
    Primitive-variable electron (or ion) system with viscosity ``(eps/rho) L u``.
``main``
    Low-Mach "main" flow with viscosity ``eps L u`` and irrotational data.
``split``
    The main flow coupled with the perturbation ``(n, v)``; their sum
    reproduces the full system.

Here ``L u = Lap u + grad div u``.  Time stepping is the Lawson integrating-
factor RK4 scheme with the constant-coefficient viscous operator ``eps L``
treated exactly and everything else explicit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .semigroup import DispersionSymbol, eigenvalues, q_inverse_matrix, symbol_weight
from .spectral import (
    Grid,
    SpectralField,
    curl_coeffs,
    divergence_coeffs,
    forward_transform,
    gradient_coeffs,
    leray_project,
    make_grid,
    sobolev_norm,
)

__all__ = [
    "FluidState",
    "SplitPair",
    "SymmetrizedState",
    "DensityFloorError",
    "poisson_solve",
    "NSPSystem",
    "rhs_full",
    "rhs_main",
    "rhs_perturb",
    "step",
    "integrate",
    "make_initial_data",
    "split_initial_data",
    "run_splitting_consistency",
    "curl_diagnostic",
    "symmetrize",
    "desymmetrize",
    "nonlinear_V",
    "normal_form_trajectory",
    "save_checkpoint",
    "load_checkpoint",
    "DENSITY_FLOOR",
]

DENSITY_FLOOR = 0.1


class DensityFloorError(RuntimeError):
    """Raised when the physical density drops below the floor."""


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FluidState:
    """Spectral coefficients of ``rho - 1`` and ``u`` plus run metadata."""

    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    variant: str = "electron"
    epsilon: float = 0.1
    t: float = 0.0

    @property
    def phi(self) -> np.ndarray:
        return poisson_solve(self.rho, self.grid, self.variant)

    def packed(self) -> np.ndarray:
        return np.concatenate([self.rho[None], self.u])

    @classmethod
    def from_packed(cls, grid, y, variant, epsilon, t=0.0):
        return cls(grid, y[0], y[1:grid.dim + 1], variant, epsilon, t)

    def field(self, name: str) -> SpectralField:
        if name == "rho":
            return SpectralField(self.grid, self.rho)
        if name == "u":
            return SpectralField(self.grid, self.u, "vector")
        if name == "phi":
            return SpectralField(self.grid, self.phi)
        raise KeyError(name)


@dataclass(frozen=True)
class SplitPair:
    """Main flow and perturbation advanced together."""

    main: FluidState
    n: np.ndarray
    v: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return poisson_solve(self.n, self.main.grid, self.main.variant)

    def total(self) -> FluidState:
        return replace(self.main, rho=self.main.rho + self.n, u=self.main.u + self.v)

    def packed(self) -> np.ndarray:
        return np.concatenate([self.main.packed(), self.n[None], self.v])


@dataclass(frozen=True)
class SymmetrizedState:
    grid: Grid
    h: np.ndarray
    c: np.ndarray

    def stacked(self) -> SpectralField:
        return SpectralField(self.grid, np.stack([self.h, self.c]), "stack")


# ---------------------------------------------------------------------------
# elliptic solve and operators
# ---------------------------------------------------------------------------


def poisson_solve(rho: np.ndarray, grid: Grid, variant: str = "electron",
                  tol: float = 1e-12) -> np.ndarray:
    """Potential from the density perturbation.

    Electron: ``Lap phi = rho`` (requires a neutral density, zero mode of phi
    set to 0).  Ion: ``(Lap - 1) phi = rho``.
    """
    k2 = grid.xi_sq
    if variant == "ion":
        return -rho / (1.0 + k2)
    zero = rho[(0,) * grid.dim]
    scale = max(float(np.max(np.abs(rho))), 1e-300)
    if abs(zero) > tol * scale and abs(zero) > 1e-300:
        raise ValueError("electron Poisson solve needs a neutral (mean-zero) density")
    safe = np.where(k2 > 0, k2, 1.0)
    return np.where(k2 > 0, -rho / safe, 0.0)


def _viscous_L(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Symbol of ``Lap u + grad div u``."""
    div = divergence_coeffs(grid, u)
    return -grid.xi_sq * u + gradient_coeffs(grid, div)


def _potential_part(grid: Grid, u: np.ndarray) -> np.ndarray:
    a = grid.xi_sq
    safe = np.where(a > 0, a, 1.0)
    proj = sum(grid.wavevector[i] * u[i] for i in range(grid.dim)) / safe
    return np.stack([grid.wavevector[i] * proj for i in range(grid.dim)])


class _Physical:
    """Transform helper holding the grid and dealias mask."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.axes = tuple(range(-grid.dim, 0))
        self.N = grid.npoints

    def to_phys(self, c: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(c, axes=self.axes).real * self.N

    def to_spec(self, f: np.ndarray) -> np.ndarray:
        return self.grid.dealias(np.fft.fftn(f, axes=self.axes) / self.N)

    def grad_phys(self, c: np.ndarray) -> np.ndarray:
        return self.to_phys(gradient_coeffs(self.grid, c))

    def jacobian_phys(self, u: np.ndarray) -> np.ndarray:
        """``J[i, j] = d_j u_i`` on the collocation grid."""
        return np.stack([self.grad_phys(u[i]) for i in range(self.grid.dim)])


def _advect(J: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``(w . grad) a`` given ``J[i, j] = d_j a_i``."""
    return np.einsum("ij...,j...->i...", J, w)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


@dataclass
class NSPSystem:
    """One of the ``full``, ``main`` or ``split`` systems on a grid.

    Parameters
    ----------
    grid : Grid
    epsilon : float
        Viscosity scale.
    kind : {"full", "main", "split"}
    variant : {"electron", "ion"}
    nonlinear : bool
        When False only the linear terms are kept.
    irrotational_reduction : bool
        Replace ``eps L u`` by ``2 eps Lap u`` in the main system (exact for
        curl-free fields).
    floor : float
        Density floor; a breach raises :class:`DensityFloorError`.
    """

    grid: Grid
    epsilon: float
    kind: str = "main"
    variant: str = "electron"
    nonlinear: bool = True
    irrotational_reduction: bool = False
    floor: float = DENSITY_FLOOR
    _ph: _Physical = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("full", "main", "split"):
            raise ValueError(f"unknown system {self.kind!r}")
        if self.variant not in ("electron", "ion"):
            raise ValueError(f"unknown variant {self.variant!r}")
        self._ph = _Physical(self.grid)

    # -- layout -----------------------------------------------------------
    @property
    def nfields(self) -> int:
        d = self.grid.dim
        return 2 * (1 + d) if self.kind == "split" else 1 + d

    def _split(self, y):
        d = self.grid.dim
        return y[0], y[1:1 + d]

    # -- exact viscous factor -----------------------------------------------
    def viscous_factor(self, y: np.ndarray, h: float) -> np.ndarray:
        """Apply ``exp(h eps L)`` (or ``exp(2 h eps Lap)``) to all velocity blocks."""
        g = self.grid
        d = g.dim
        e1 = np.exp(-self.epsilon * g.xi_sq * h)
        e2 = np.exp(-2.0 * self.epsilon * g.xi_sq * h)
        out = y.copy()
        blocks = [slice(1, 1 + d)] if self.kind != "split" else [slice(1, 1 + d), slice(2 + d, 2 + 2 * d)]
        for b in blocks:
            u = y[b]
            if self.irrotational_reduction and self.kind == "main":
                out[b] = e2 * u
            else:
                pot = _potential_part(g, u)
                out[b] = e1 * (u - pot) + e2 * pot
        return out

    def linear_viscous(self, u: np.ndarray) -> np.ndarray:
        if self.irrotational_reduction and self.kind == "main":
            return -2.0 * self.epsilon * self.grid.xi_sq * u
        return self.epsilon * _viscous_L(self.grid, u)

    # -- tendencies -------------------------------------------------------
    def _check_density(self, rho_phys: np.ndarray):
        if not np.all(np.isfinite(rho_phys)):
            raise FloatingPointError("non-finite density in nonlinear products")
        if np.min(1.0 + rho_phys) < self.floor:
            raise DensityFloorError(f"density fell below the floor {self.floor}")

    def explicit(self, y: np.ndarray) -> np.ndarray:
        """Tendency without the exactly integrated viscous part."""
        if self.kind == "main":
            return self._explicit_main(y)
        if self.kind == "full":
            return self._explicit_full(y)
        return self._explicit_split(y)

    def tendency(self, y: np.ndarray) -> np.ndarray:
        """Full time derivative ``dy/dt``."""
        out = self.explicit(y)
        d = self.grid.dim
        out[1:1 + d] += self.linear_viscous(y[1:1 + d])
        if self.kind == "split":
            out[2 + d:] += self.epsilon * _viscous_L(self.grid, y[2 + d:])
        return out

    def _linear_part(self, rho, u):
        g = self.grid
        phi = poisson_solve(rho, g, self.variant)
        drho = -divergence_coeffs(g, u)
        du = -gradient_coeffs(g, rho) + gradient_coeffs(g, phi)
        return drho, du

    def _explicit_main(self, y):
        g, ph = self.grid, self._ph
        rho, u = self._split(y)
        drho, du = self._linear_part(rho, u)
        if self.nonlinear:
            r = ph.to_phys(rho)
            self._check_density(r)
            up = ph.to_phys(u)
            J = ph.jacobian_phys(u)
            drho = drho - divergence_coeffs(g, ph.to_spec(r * up))
            du = du - ph.to_spec(_advect(J, up))
        return np.concatenate([drho[None], du])

    def _explicit_full(self, y):
        g, ph = self.grid, self._ph
        rho, u = self._split(y)
        drho, du = self._linear_part(rho, u)
        if self.nonlinear:
            r = ph.to_phys(rho)
            self._check_density(r)
            up = ph.to_phys(u)
            J = ph.jacobian_phys(u)
            Lu = ph.to_phys(_viscous_L(g, u))
            drho = drho - divergence_coeffs(g, ph.to_spec(r * up))
            du = du - ph.to_spec(_advect(J, up)) + self.epsilon * ph.to_spec((1.0 / (1.0 + r) - 1.0) * Lu)
        return np.concatenate([drho[None], du])

    def _explicit_split(self, y):
        g, ph = self.grid, self._ph
        d = g.dim
        main = self._explicit_main(y[:1 + d])
        n, v = y[1 + d], y[2 + d:]
        rho, u = self._split(y)
        dn, dv = self._linear_part(n, v)
        if self.nonlinear:
            r = ph.to_phys(rho)
            npys = ph.to_phys(n)
            self._check_density(r + npys)
            up, vp = ph.to_phys(u), ph.to_phys(v)
            Ju, Jv = ph.jacobian_phys(u), ph.jacobian_phys(v)
            flux = r * vp + npys * up + npys * vp
            dn = dn - divergence_coeffs(g, ph.to_spec(flux))
            adv = _advect(Jv, up) + _advect(Ju, vp) + _advect(Jv, vp)
            Lsum = ph.to_phys(_viscous_L(g, u) + _viscous_L(g, v))
            src = (1.0 / (1.0 + r + npys) - 1.0) * Lsum
            dv = dv - ph.to_spec(adv) + self.epsilon * ph.to_spec(src)
        return np.concatenate([main, dn[None], dv])

    # -- stepping -----------------------------------------------------------
    def step(self, y: np.ndarray, dt: float) -> np.ndarray:
        """One Lawson integrating-factor RK4 step."""
        E = self.viscous_factor
        N = self.explicit
        h = dt
        k1 = N(y)
        ya = E(y + 0.5 * h * k1, 0.5 * h)
        k2 = N(ya)
        yh = E(y, 0.5 * h)
        k3 = N(yh + 0.5 * h * k2)
        k4 = N(E(y, h) + h * E(k3, 0.5 * h))
        return E(y + h / 6.0 * k1, h) + E(h / 3.0 * (k2 + k3), 0.5 * h) + h / 6.0 * k4

    def cfl_limit(self, y: np.ndarray, c_cfl: float = 0.5) -> float:
        g = self.grid
        d = g.dim
        umax = 0.0
        blocks = [y[1:1 + d]] if self.kind != "split" else [y[1:1 + d] + y[2 + d:]]
        for u in blocks:
            up = self._ph.to_phys(u)
            umax = max(umax, float(np.max(np.sqrt(np.sum(up**2, axis=0)))))
        dx = g.dx
        return c_cfl * min(dx / max(umax, 1e-300), dx, 1.0)

    def run(self, y0: np.ndarray, T: float, dt: float, record_every: int = 1,
            c_cfl: float = 0.5, check_cfl: bool = True):
        """Integrate to ``T``; returns ``(times, states)`` sampled every ``record_every`` steps."""
        nsteps = int(round(T / dt))
        if abs(nsteps * dt - T) > 1e-9 * max(T, 1.0):
            raise ValueError("T must be a multiple of dt")
        y = np.array(y0, dtype=complex)
        times, states = [0.0], [y.copy()]
        for i in range(1, nsteps + 1):
            if check_cfl and dt > self.cfl_limit(y, c_cfl):
                raise ValueError(f"CFL violation: dt={dt} exceeds limit {self.cfl_limit(y, c_cfl):.3g}")
            y = self.step(y, dt)
            if i % record_every == 0 or i == nsteps:
                times.append(i * dt)
                states.append(y.copy())
        return np.array(times), states


# ---------------------------------------------------------------------------
# functional wrappers
# ---------------------------------------------------------------------------


def _system_for(state: FluidState, kind: str, **kw) -> NSPSystem:
    return NSPSystem(state.grid, state.epsilon, kind, state.variant, **kw)


def rhs_full(state: FluidState, **kw) -> np.ndarray:
    """Tendency of ``(rho, u)`` under the full primitive-variable system."""
    return _system_for(state, "full", **kw).tendency(state.packed())


def rhs_main(state: FluidState, **kw) -> np.ndarray:
    """Tendency of ``(rho, u)`` under the main system."""
    return _system_for(state, "main", **kw).tendency(state.packed())


def rhs_perturb(perturb: tuple, main_state: FluidState, **kw) -> np.ndarray:
    """Tendency of the perturbation ``(n, v)`` driven by ``main_state``."""
    n, v = perturb
    sys_ = _system_for(main_state, "split", **kw)
    y = np.concatenate([main_state.packed(), np.asarray(n)[None], np.asarray(v)])
    d = main_state.grid.dim
    return sys_.tendency(y)[1 + d:]


def step(state, dt: float, scheme: str = "ifrk4", kind: str = "main", **kw):
    """Advance a :class:`FluidState` or :class:`SplitPair` by one step."""
    if scheme != "ifrk4":
        raise ValueError(f"unknown scheme {scheme!r}")
    if isinstance(state, SplitPair):
        m = state.main
        sys_ = NSPSystem(m.grid, m.epsilon, "split", m.variant, **kw)
        y = sys_.step(state.packed(), dt)
        d = m.grid.dim
        main = FluidState.from_packed(m.grid, y[:1 + d], m.variant, m.epsilon, m.t + dt)
        return SplitPair(main, y[1 + d], y[2 + d:])
    sys_ = _system_for(state, kind, **kw)
    if dt > sys_.cfl_limit(state.packed()):
        raise ValueError("CFL violation")
    y = sys_.step(state.packed(), dt)
    return FluidState.from_packed(state.grid, y, state.variant, state.epsilon, state.t + dt)


def integrate(state: FluidState, T: float, dt: float, kind: str = "main", record_every: int = 1, **kw):
    sys_ = _system_for(state, kind, **kw)
    return sys_.run(state.packed(), T, dt, record_every)


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------


def _random_band_limited(grid: Grid, rng, k_band: float, ncomp: int) -> np.ndarray:
    """Real random fields with a Gaussian spectral envelope cut at ``k_band``."""
    phys = rng.standard_normal((ncomp,) + grid.shape)
    c = np.fft.fftn(phys, axes=tuple(range(-grid.dim, 0))) / grid.npoints
    env = np.exp(-0.5 * grid.xi_sq / (0.5 * k_band) ** 2) * (grid.xi_abs <= k_band)
    c = c * env * grid.dealias_mask
    c[(slice(None),) + (0,) * grid.dim] = 0.0
    return c


def make_initial_data(grid: Grid, delta0: float, epsilon: float, seed: int = 0,
                      k_band: float | None = None, variant: str = "electron",
                      rho_size: float | None = None, pot_size: float | None = None,
                      sol_size: float | None = None, norm_s: float = 3.0) -> dict:
    """Seeded band-limited data sized in ``H^norm_s``.

    Returns a dict with ``rho``, ``u_pot`` (gradient part), ``u_sol``
    (divergence-free part) and the seed.  By default ``rho`` and ``u_pot``
    have size ``delta0`` and ``u_sol`` has size ``delta0 * epsilon``.
    """
    rng = np.random.default_rng(seed)
    if k_band is None:
        k_band = 0.25 * grid.dxi * grid.n / 2
    rho = _random_band_limited(grid, rng, k_band, 1)[0]
    u = _random_band_limited(grid, rng, k_band, grid.dim)
    usol, upot = leray_project(SpectralField(grid, u, "vector"))
    w = _random_band_limited(grid, rng, k_band, grid.dim)
    usol2, _ = leray_project(SpectralField(grid, w, "vector"))

    def scaled(c, size, rank):
        nrm = sobolev_norm(SpectralField(grid, c, rank), norm_s)
        return c * (size / nrm) if nrm > 0 else c

    rho = scaled(rho, delta0 if rho_size is None else rho_size, "scalar")
    upot = scaled(upot.coeffs, delta0 if pot_size is None else pot_size, "vector")
    usol = scaled(usol2.coeffs, delta0 * epsilon if sol_size is None else sol_size, "vector")
    return {"rho": rho, "u_pot": upot, "u_sol": usol, "seed": seed, "k_band": k_band}


def split_initial_data(data: dict) -> tuple:
    """``(full, main, perturb)`` packed initial vectors from :func:`make_initial_data`."""
    rho, upot, usol = data["rho"], data["u_pot"], data["u_sol"]
    full = np.concatenate([rho[None], upot + usol])
    main = np.concatenate([rho[None], upot])
    pert = np.concatenate([np.zeros_like(rho)[None], usol])
    return full, main, pert


# ---------------------------------------------------------------------------
# experiments built on the solver
# ---------------------------------------------------------------------------


def _h3_vec(grid, y, s=3.0):
    d = grid.dim
    rho, u = y[0], y[1:1 + d]
    return np.sqrt(sobolev_norm(SpectralField(grid, rho), s) ** 2
                   + sobolev_norm(SpectralField(grid, u, "vector"), s) ** 2)


def run_splitting_consistency(grid: Grid, epsilon: float, T: float, dt: float,
                              data: dict | None = None, delta0: float = 0.01, seed: int = 0,
                              variant: str = "electron", record_every: int = 1, s: float = 3.0) -> dict:
    """Integrate the full system and the split pair side by side.

    Returns the maximum over recorded times of
    ``|full - (main + perturb)|_{H^s} / |full|_{H^s}`` and the trajectories'
    norms.
    """
    if data is None:
        data = make_initial_data(grid, delta0, epsilon, seed, variant=variant)
    full0, main0, pert0 = split_initial_data(data)
    d = grid.dim
    full_sys = NSPSystem(grid, epsilon, "full", variant)
    split_sys = NSPSystem(grid, epsilon, "split", variant)
    tf, yf = full_sys.run(full0, T, dt, record_every)
    ts, ys = split_sys.run(np.concatenate([main0, pert0]), T, dt, record_every)
    devs, pert_norms = [], []
    for a, b in zip(yf, ys):
        total = b[:1 + d] + b[1 + d:]
        devs.append(_h3_vec(grid, a - total, s) / max(_h3_vec(grid, a, s), 1e-300))
        pert_norms.append(_h3_vec(grid, b[1 + d:], s))
    return {"max_deviation": float(max(devs)), "times": tf.tolist(), "deviation": devs,
            "perturb_norm": pert_norms, "seed": data.get("seed"), "T": T, "dt": dt,
            "grid": grid.metadata(), "epsilon": epsilon}


def curl_diagnostic(u) -> float:
    """``|curl u|_{L^2} / |u|_{L^2}`` computed spectrally."""
    if isinstance(u, SpectralField):
        grid, c = u.grid, u.coeffs
    else:
        grid, c = u
    w = curl_coeffs(grid, c)
    num = np.sqrt(np.sum(np.abs(w) ** 2))
    den = np.sqrt(np.sum(np.abs(c) ** 2))
    return float(num / max(den, 1e-300))


# ---------------------------------------------------------------------------
# symmetrised variables
# ---------------------------------------------------------------------------


def _weight(grid: Grid, variant: str) -> np.ndarray:
    """``<xi>`` (electron) or ``p(|xi|)`` (ion)."""
    return symbol_weight(grid.xi_abs, DispersionSymbol(variant, 1.0))


def _ion_h_factor(grid: Grid) -> np.ndarray:
    return np.sqrt(1.0 + 1.0 / (1.0 + grid.xi_sq))


def symmetrize(state: FluidState, tol: float = 1e-12) -> SymmetrizedState:
    """``h = <D>/|D| rho``, ``c = div/|D| u`` (ion: ``h = sqrt(1 + (1 - Lap)^{-1}) rho``)."""
    g = state.grid
    a = g.xi_abs
    safe = np.where(a > 0, a, 1.0)
    scale = max(float(np.max(np.abs(state.rho))), 1e-300)
    if state.variant == "electron":
        if abs(state.rho[(0,) * g.dim]) > tol * scale and abs(state.rho[(0,) * g.dim]) > 1e-300:
            raise ValueError("symmetrisation needs a mean-zero density")
        h = np.where(a > 0, np.sqrt(1.0 + g.xi_sq) / safe * state.rho, 0.0)
    else:
        h = _ion_h_factor(g) * state.rho
    c = np.where(a > 0, divergence_coeffs(g, state.u) / safe, 0.0)
    return SymmetrizedState(g, h, c)


def desymmetrize(V: SymmetrizedState, variant: str = "electron", epsilon: float = 0.1) -> FluidState:
    """Inverse of :func:`symmetrize` on mean-zero, curl-free states."""
    g = V.grid
    a = g.xi_abs
    safe = np.where(a > 0, a, 1.0)
    if variant == "electron":
        rho = np.where(a > 0, safe / np.sqrt(1.0 + g.xi_sq) * V.h, 0.0)
    else:
        rho = V.h / _ion_h_factor(g)
    # u = grad Lap^{-1} div u and div u = |D| c
    u = np.stack([np.where(a > 0, -1j * g.wavevector[i] / safe * V.c, 0.0) for i in range(g.dim)])
    return FluidState(g, rho, u, variant, epsilon)


def nonlinear_V(state: FluidState) -> np.ndarray:
    """``B(V, V) = dV/dt + A V`` from the main-system tendency (stacked ``(2,) + shape``)."""
    g = state.grid
    sys_ = NSPSystem(g, state.epsilon, "main", state.variant)
    dy = sys_.tendency(state.packed())
    dV = symmetrize(FluidState(g, dy[0], dy[1:], state.variant, state.epsilon)).stacked().coeffs
    V = symmetrize(state).stacked().coeffs
    w = _weight(g, state.variant)
    a = state.epsilon * g.xi_sq
    AV = np.stack([w * V[1], -w * V[0] + 2 * a * V[1]])
    return dV + AV


def normal_form_trajectory(grid: Grid, epsilon: float, T: float, nodes: int, delta0: float = 0.05,
                           seed: int = 0, k_band: float | None = None) -> dict:
    """Main-system trajectory in diagonal variables ``R`` with sources ``B~``.

    The solver runs with ``dt = T / nodes`` and every step is recorded.
    """
    data = make_initial_data(grid, delta0, epsilon, seed, k_band=k_band)
    _, main0, _ = split_initial_data(data)
    sys_ = NSPSystem(grid, epsilon, "main")
    times, ys = sys_.run(main0, T, T / nodes)
    sym = DispersionSymbol("electron", epsilon)
    qi = q_inverse_matrix(grid.xi_abs, sym)
    R, B = [], []
    for y in ys:
        st = FluidState.from_packed(grid, y, "electron", epsilon)
        V = symmetrize(st).stacked().coeffs
        Bv = nonlinear_V(st)
        R.append(np.einsum("...ij,j...->i...", qi, V))
        B.append(np.einsum("...ij,j...->i...", qi, Bv))
    return {"times": times, "R": np.array(R), "B": np.array(B), "seed": seed}


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, state, extra: dict | None = None) -> None:
    """Write a self-describing ``.npz`` checkpoint (bit-exact arrays)."""
    if isinstance(state, SplitPair):
        m = state.main
        arrays = {"rho": m.rho, "u": m.u, "n": state.n, "v": state.v}
    else:
        m = state
        arrays = {"rho": m.rho, "u": m.u}
    meta = {"grid": m.grid.metadata(), "variant": m.variant, "epsilon": m.epsilon, "t": m.t,
            "kind": "split" if isinstance(state, SplitPair) else "single", "extra": extra or {}}
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path):
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        g = make_grid(**meta["grid"])
        main = FluidState(g, z["rho"].copy(), z["u"].copy(), meta["variant"], meta["epsilon"], meta["t"])
        if meta["kind"] == "split":
            return SplitPair(main, z["n"].copy(), z["v"].copy())
        return main
