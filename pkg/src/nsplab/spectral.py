"""Periodic spectral grids, transforms, multipliers, cutoffs and norms.

Coefficient convention
----------------------
A physical sample array ``f`` on an ``n**d`` periodic grid of side ``L`` is
represented by Fourier-series coefficients ``c = fftn(f) / n**d`` so that

    f(x) = sum_k c_k exp(i xi_k . x),    xi_k = (2 pi / L) k.

With this convention ``||f||_{L^2}^2 = V * sum_k |c_k|^2`` where ``V = L**d``
is the box volume.  Coefficients are kept in FFT (unshifted) order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "CutoffParams",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "smooth_step",
    "chi",
    "chi_tilde",
    "chi_scaled",
    "chi_tilde_scaled",
    "profile_hash",
    "low_high_split",
    "littlewood_paley_symbol",
    "littlewood_paley_block",
    "norm",
    "lp_norm",
    "sobolev_norm",
    "homogeneous_norm",
    "besov_norm",
    "leray_project",
    "riesz",
    "riesz_adjoint",
    "NEUTRALITY_TOL",
]

NEUTRALITY_TOL = 1e-12


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, L)^d``.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1, 2 or 3.
    n : int
        Points per axis (a power of two, at least 8).
    box_length : float
        Period ``L`` along every axis.
    dealias_fraction : float
        Modes with any ``|k_i| > dealias_fraction * n / 2`` are removed
        by :meth:`dealias`.
    """

    dim: int
    n: int
    box_length: float
    dealias_fraction: float = 2.0 / 3.0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def volume(self) -> float:
        return float(self.box_length) ** self.dim

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @property
    def dxi(self) -> float:
        """Lattice spacing in frequency."""
        return 2.0 * np.pi / self.box_length

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    def integers(self) -> np.ndarray:
        """Integer lattice indices ``k`` along one axis in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @property
    def wavevector(self) -> list:
        """Broadcastable frequency components ``xi_i`` (FFT order)."""
        if "xi" not in self._cache:
            k1 = self.integers() * self.dxi
            comps = []
            for i in range(self.dim):
                shp = [1] * self.dim
                shp[i] = self.n
                comps.append(k1.reshape(shp))
            self._cache["xi"] = comps
        return self._cache["xi"]

    @property
    def xi_sq(self) -> np.ndarray:
        """``|xi|^2`` on the full lattice."""
        if "xi_sq" not in self._cache:
            s = np.zeros(self.shape)
            for c in self.wavevector:
                s = s + c**2
            self._cache["xi_sq"] = s
        return self._cache["xi_sq"]

    @property
    def xi_abs(self) -> np.ndarray:
        if "xi_abs" not in self._cache:
            self._cache["xi_abs"] = np.sqrt(self.xi_sq)
        return self._cache["xi_abs"]

    @property
    def dealias_mask(self) -> np.ndarray:
        """Boolean mask of retained modes."""
        if "mask" not in self._cache:
            kmax = self.dealias_fraction * self.n / 2.0
            k = np.abs(self.integers())
            m = np.ones(self.shape, dtype=bool)
            for i in range(self.dim):
                shp = [1] * self.dim
                shp[i] = self.n
                m = m & (k <= kmax).reshape(shp)
            self._cache["mask"] = m
        return self._cache["mask"]

    def coordinates(self) -> list:
        """Physical collocation coordinates as broadcastable arrays."""
        x1 = np.arange(self.n) * self.dx
        out = []
        for i in range(self.dim):
            shp = [1] * self.dim
            shp[i] = self.n
            out.append(x1.reshape(shp))
        return out

    def dealias(self, coeffs: np.ndarray) -> np.ndarray:
        """Zero coefficients outside the dealias mask (trailing axes are spatial)."""
        if self.dealias_fraction >= 1.0:
            return coeffs
        return coeffs * self.dealias_mask

    def metadata(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.n,
            "box_length": float(self.box_length),
            "dealias_fraction": float(self.dealias_fraction),
        }


def make_grid(dim: int, n: int, box_length: float = 2 * np.pi,
              dealias_fraction: float = 2.0 / 3.0) -> Grid:
    """Build a :class:`Grid` after validating its parameters.

    Raises
    ------
    ValueError
        If ``dim`` is not 1, 2 or 3, ``n`` is not a power of two >= 8,
        ``box_length`` is not positive or the dealias fraction is outside (0, 1].
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    n = int(n)
    if n < 8 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 8, got {n}")
    if not box_length > 0:
        raise ValueError("box_length must be positive")
    if not 0.0 < dealias_fraction <= 1.0:
        raise ValueError("dealias_fraction must lie in (0, 1]")
    return Grid(int(dim), n, float(box_length), float(dealias_fraction))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a scalar or vector field on a :class:`Grid`.

    Vector fields store components along the leading axis, so ``coeffs`` has
    shape ``(dim,) + grid.shape``.  Rank ``"stack"`` holds an arbitrary
    number of scalar fields, e.g. the pair ``(h, c)``.
    """

    grid: Grid
    coeffs: np.ndarray
    rank: str = "scalar"

    def __post_init__(self):
        if self.rank not in ("scalar", "vector", "stack"):
            raise ValueError(f"unknown rank {self.rank!r}")
        if self.rank == "stack":
            expected = (self.coeffs.shape[0],) + self.grid.shape
        else:
            expected = self.grid.shape if self.rank == "scalar" else (self.grid.dim,) + self.grid.shape
        if tuple(self.coeffs.shape) != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match {expected}")

    def with_coeffs(self, coeffs: np.ndarray, rank: str | None = None) -> "SpectralField":
        return SpectralField(self.grid, coeffs, rank or self.rank)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, a) -> "SpectralField":
        return self.with_coeffs(self.coeffs * a)

    __rmul__ = __mul__

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """True when the field represents a real physical function."""
        c = self.coeffs
        axes = tuple(range(c.ndim - self.grid.dim, c.ndim))
        flipped = np.roll(np.flip(c, axis=axes), 1, axis=axes)
        scale = max(np.max(np.abs(c)), 1e-300)
        return bool(np.max(np.abs(c - np.conj(flipped))) <= tol * scale)


def _spatial_axes(grid: Grid, arr: np.ndarray) -> tuple:
    return tuple(range(arr.ndim - grid.dim, arr.ndim))


def forward_transform(grid: Grid, samples: np.ndarray, rank: str | None = None) -> SpectralField:
    """Physical samples to coefficients.

    ``samples`` has shape ``grid.shape`` (scalar) or ``(dim,) + grid.shape``
    (vector).
    """
    samples = np.asarray(samples)
    if rank is None:
        rank = "scalar" if samples.shape == grid.shape else "vector"
    if rank == "stack":
        expected = samples.shape[:1] + grid.shape
    else:
        expected = grid.shape if rank == "scalar" else (grid.dim,) + grid.shape
    if samples.shape != expected:
        raise ValueError(f"sample shape {samples.shape} does not match grid {expected}")
    c = np.fft.fftn(samples, axes=_spatial_axes(grid, samples)) / grid.npoints
    return SpectralField(grid, c, rank)


def inverse_transform(f: SpectralField, real: bool | None = None) -> np.ndarray:
    """Coefficients to physical samples.

    Parameters
    ----------
    real : bool, optional
        Return the real part.  By default this is done when the field is
        Hermitian.
    """
    out = np.fft.ifftn(f.coeffs, axes=_spatial_axes(f.grid, f.coeffs)) * f.grid.npoints
    if real is None:
        real = f.is_hermitian(1e-10)
    return out.real if real else out


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


def _evaluate_symbol(symbol, grid: Grid) -> np.ndarray:
    if callable(symbol):
        return np.asarray(symbol(grid.wavevector))
    return np.asarray(symbol)


def apply_multiplier(symbol, f: SpectralField) -> SpectralField:
    """Apply a Fourier multiplier ``m(D)``.

    Parameters
    ----------
    symbol : callable or ndarray
        Either an array broadcastable to the lattice or a callable receiving
        the list of frequency components.  A matrix symbol has shape
        ``(p, q) + grid.shape`` and acts on fields stacked along axis 0.
    f : SpectralField
        Input field.  For matrix symbols ``f.coeffs`` has shape
        ``(q,) + grid.shape``.

    Raises
    ------
    ValueError
        If the symbol is non-finite at a lattice point where ``f`` is non-zero.
    """
    m = _evaluate_symbol(symbol, f.grid)
    c = f.coeffs
    nsp = f.grid.dim
    if m.ndim == nsp + 2:
        active = np.any(c != 0, axis=0)
        if not np.all(np.isfinite(m[..., active])):
            raise ValueError("symbol is not finite on the support of the field")
        out = np.einsum("pq...,q...->p...", m, c)
        rank = f.rank if out.shape[0] == c.shape[0] else "stack"
        return SpectralField(f.grid, out, rank)
    active = c != 0
    mb = np.broadcast_to(m, c.shape)
    if not np.all(np.isfinite(mb[active])):
        raise ValueError("symbol is not finite on the support of the field")
    with np.errstate(invalid="ignore"):
        out = np.where(active, mb * c, 0.0)
    return f.with_coeffs(out.astype(np.result_type(mb, c)))


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------


def smooth_step(s):
    """C-infinity step rising from 0 at ``s <= 0`` to 1 at ``s >= 1``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def _plateau(z, inner: float, outer: float):
    z = np.abs(np.asarray(z, dtype=float))
    return 1.0 - smooth_step((z - inner) / (outer - inner))


def chi(z):
    """Radial bump: 1 on ``|z| <= 1``, 0 on ``|z| >= 2``, smooth in between."""
    return _plateau(z, 1.0, 2.0)


def chi_tilde(z):
    """Wider bump: 1 on ``|z| <= 3``, 0 on ``|z| >= 4``."""
    return _plateau(z, 3.0, 4.0)


@dataclass(frozen=True)
class CutoffParams:
    """Viscosity ``epsilon`` and low-frequency threshold ``kappa0``."""

    epsilon: float
    kappa0: float = 1.0 / 200.0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0, 1]")
        if not self.kappa0 > 0:
            raise ValueError("kappa0 must be positive")

    @property
    def scale(self) -> float:
        """Factor ``sqrt(epsilon / kappa0)`` applied to ``|xi|``."""
        return float(np.sqrt(self.epsilon / self.kappa0))


def chi_scaled(xi_abs, epsilon: float, kappa0: float = 1.0 / 200.0):
    """Low-frequency cutoff ``chi(sqrt(epsilon/kappa0) |xi|)``.

    Equal to 1 where ``epsilon |xi|^2 <= kappa0`` and 0 where
    ``epsilon |xi|^2 >= 4 kappa0``.
    """
    return chi(np.sqrt(epsilon / kappa0) * np.asarray(xi_abs))


def chi_tilde_scaled(xi_abs, epsilon: float, kappa0: float = 1.0 / 200.0):
    return chi_tilde(np.sqrt(epsilon / kappa0) * np.asarray(xi_abs))


def profile_hash() -> str:
    """Short digest identifying the cutoff profiles used in this build.

    Computed from sampled values so that any change to the profile formulas
    changes the hash.
    """
    z = np.linspace(0.0, 5.0, 2001)
    data = np.concatenate([chi(z), chi_tilde(z)])
    return hashlib.sha256(np.round(data, 14).tobytes()).hexdigest()[:16]


def low_high_split(f: SpectralField, params: CutoffParams) -> tuple:
    """Return ``(chi f, f - chi f)`` for the scaled cutoff."""
    w = chi_scaled(f.grid.xi_abs, params.epsilon, params.kappa0)
    low = f.with_coeffs(f.coeffs * w)
    high = f.with_coeffs(f.coeffs - low.coeffs)
    return low, high


# ---------------------------------------------------------------------------
# Littlewood-Paley
# ---------------------------------------------------------------------------


def littlewood_paley_symbol(xi_abs, j: int):
    """Dyadic block symbol.

    Block 0 is ``chi(xi)``; block ``j >= 1`` is ``chi(xi / 2^j) - chi(xi / 2^(j-1))``,
    supported in ``2^(j-1) <= |xi| <= 2^(j+1)``.
    """
    if j < 0:
        raise ValueError("block index must be non-negative")
    xi_abs = np.asarray(xi_abs, dtype=float)
    if j == 0:
        return chi(xi_abs)
    return chi(xi_abs / 2.0**j) - chi(xi_abs / 2.0 ** (j - 1))


def littlewood_paley_block(f: SpectralField, j: int) -> SpectralField:
    return f.with_coeffs(f.coeffs * littlewood_paley_symbol(f.grid.xi_abs, j))


def _max_block(grid: Grid) -> int:
    kmax = np.sqrt(grid.dim) * grid.dxi * grid.n / 2
    return int(np.ceil(np.log2(max(kmax, 1.0)))) + 1


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def _japanese(grid: Grid) -> np.ndarray:
    return np.sqrt(1.0 + grid.xi_sq)


def _pointwise_modulus(f: SpectralField) -> np.ndarray:
    vals = inverse_transform(f, real=False)
    if f.rank == "scalar":
        return np.abs(vals)
    return np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))


def lp_norm(f: SpectralField, p: float = 2.0) -> float:
    """``L^p`` norm from physical samples (midpoint quadrature)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    a = _pointwise_modulus(f)
    if np.isinf(p):
        return float(np.max(a))
    dv = f.grid.volume / f.grid.npoints
    return float((np.sum(a**p) * dv) ** (1.0 / p))


def sobolev_norm(f: SpectralField, s: float = 0.0) -> float:
    """``H^s`` norm from the weighted coefficient sum."""
    w = _japanese(f.grid) ** (2 * s)
    e = np.abs(f.coeffs) ** 2 * w
    return float(np.sqrt(f.grid.volume * np.sum(e)))


def _zero_mode(c: np.ndarray, grid: Grid) -> np.ndarray:
    idx = (Ellipsis,) + (0,) * grid.dim
    return c[idx]


def homogeneous_norm(f: SpectralField, s: float) -> float:
    """Homogeneous ``H^{s}`` norm, ``s`` may be negative.

    For ``s < 0`` the zero mode must vanish (relative tolerance
    :data:`NEUTRALITY_TOL`).
    """
    c = f.coeffs
    if s < 0:
        scale = max(float(np.max(np.abs(c))), 1e-300)
        if np.any(np.abs(_zero_mode(c, f.grid)) > NEUTRALITY_TOL * scale):
            raise ValueError("negative homogeneous norm requires a mean-zero field")
    a = f.grid.xi_abs
    with np.errstate(divide="ignore"):
        w = np.where(a > 0, a, 1.0) ** (2 * s)
    w = np.where(a > 0, w, 0.0 if s != 0 else 1.0)
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(c) ** 2 * w)))


def besov_norm(f: SpectralField, s: float, p: float, r: float) -> float:
    """Besov ``B^s_{p,r}`` norm from dyadic block sums."""
    vals = []
    for j in range(_max_block(f.grid) + 1):
        blk = littlewood_paley_block(f, j)
        vals.append(2.0 ** (j * s) * lp_norm(blk, p))
    vals = np.asarray(vals)
    if np.isinf(r):
        return float(vals.max())
    return float(np.sum(vals**r) ** (1.0 / r))


def norm(f: SpectralField, kind: str, s: float = 0.0, p: float = 2.0, r: float = 2.0) -> float:
    """Dispatch to a named norm.

    ``kind`` is one of ``"L"`` (``L^p``), ``"H"`` (``H^s``), ``"W"`` (``W^{s,p}``),
    ``"Hdot"`` (homogeneous, ``s`` may be negative) or ``"B"`` (``B^s_{p,r}``).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if kind == "L":
        return lp_norm(f, p)
    if kind == "H":
        return sobolev_norm(f, s)
    if kind == "W":
        g = f.with_coeffs(f.coeffs * _japanese(f.grid) ** s)
        return lp_norm(g, p)
    if kind == "Hdot":
        return homogeneous_norm(f, s)
    if kind == "B":
        return besov_norm(f, s, p, r)
    raise ValueError(f"unknown norm kind {kind!r}")


# ---------------------------------------------------------------------------
# projections and Riesz transforms
# ---------------------------------------------------------------------------


def _unit_wavevector(grid: Grid) -> list:
    a = grid.xi_abs
    safe = np.where(a > 0, a, 1.0)
    return [np.where(a > 0, c / safe, 0.0) for c in grid.wavevector]


def leray_project(u: SpectralField) -> tuple:
    """Split a vector field into divergence-free and gradient parts.

    The zero mode is assigned wholly to the divergence-free part.
    """
    if u.rank != "vector":
        raise ValueError("Leray projection needs a vector field")
    e = _unit_wavevector(u.grid)
    proj = sum(e[i] * u.coeffs[i] for i in range(u.grid.dim))
    grad = np.stack([e[i] * proj for i in range(u.grid.dim)])
    return u.with_coeffs(u.coeffs - grad), u.with_coeffs(grad)


def riesz(f: SpectralField) -> SpectralField:
    """Vector Riesz transform with symbol ``i xi / |xi|`` (zero mode to 0)."""
    e = _unit_wavevector(f.grid)
    return SpectralField(f.grid, np.stack([1j * ei * f.coeffs for ei in e]), "vector")


def riesz_adjoint(v: SpectralField) -> SpectralField:
    """Adjoint ``-div / |D|`` of :func:`riesz`, symbol ``-i xi . / |xi|``."""
    e = _unit_wavevector(v.grid)
    c = sum(-1j * e[i] * v.coeffs[i] for i in range(v.grid.dim))
    return SpectralField(v.grid, c, "scalar")


# small helpers shared by the solver and diagnostics


def gradient_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    return np.stack([1j * k * c for k in grid.wavevector])


def divergence_coeffs(grid: Grid, v: np.ndarray) -> np.ndarray:
    return sum(1j * grid.wavevector[i] * v[i] for i in range(grid.dim))


def curl_coeffs(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Spectral curl; scalar vorticity in 2D, vector in 3D, zero in 1D."""
    k = grid.wavevector
    if grid.dim == 1:
        return np.zeros_like(v[:1])
    if grid.dim == 2:
        return (1j * k[0] * v[1] - 1j * k[1] * v[0])[None]
    return np.stack([
        1j * k[1] * v[2] - 1j * k[2] * v[1],
        1j * k[2] * v[0] - 1j * k[0] * v[2],
        1j * k[0] * v[1] - 1j * k[1] * v[0],
    ])
