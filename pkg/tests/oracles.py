"""Slow independent reference implementations used only by the tests."""

import numpy as np


def direct_dft(samples: np.ndarray, box_length: float = 2 * np.pi) -> np.ndarray:
    """Coefficients ``c_k = N^-1 sum_x f(x) exp(-i xi_k . x)`` by explicit summation."""
    shape = samples.shape
    d = len(shape)
    n = shape[0]
    k = np.fft.fftfreq(n, 1.0 / n)
    x = np.arange(n) * box_length / n
    xi = 2 * np.pi / box_length * k
    out = np.zeros(shape, dtype=complex)
    xs = np.meshgrid(*([x] * d), indexing="ij")
    for idx in np.ndindex(*shape):
        phase = sum(xi[idx[i]] * xs[i] for i in range(d))
        out[idx] = np.sum(samples * np.exp(-1j * phase)) / samples.size
    return out


def brute_pair_sum(grid, symbol, fc: np.ndarray, gc: np.ndarray) -> np.ndarray:
    """``T_s(f, g)^(xi) = sum_eta s(xi - eta, eta) f^(xi - eta) g^(eta)`` over dealiased modes."""
    mask = grid.dealias_mask
    n = grid.n
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = np.zeros(grid.shape, dtype=complex)
    modes = [idx for idx in np.ndindex(*grid.shape) if mask[idx]]
    for out_idx in modes:
        kxi = np.array([k[i] for i in out_idx])
        acc = 0.0j
        for in_idx in modes:
            keta = np.array([k[i] for i in in_idx])
            kz = kxi - keta
            if np.any(kz < -n // 2) or np.any(kz >= n // 2):
                continue
            z_idx = tuple(int(v) % n for v in kz)
            if not mask[z_idx]:
                continue
            s = symbol(kz[None].astype(float) * grid.dxi, keta[None].astype(float) * grid.dxi)
            acc += complex(np.ravel(s)[0]) * fc[z_idx] * gc[in_idx]
        out[out_idx] = acc
    return out


def lattice_propagator(t: float, x: float, profile, b_func, cutoff, dim: int, dxi: float, rmax: float) -> complex:
    """Riemann sum of ``(2 pi)^-d int e^{i t b} chi F e^{i xi . x} dxi`` over a cubic lattice.

    ``x`` is placed on the first axis.  Smooth compactly supported integrands
    make the lattice sum spectrally accurate.
    """
    m = int(np.ceil(rmax / dxi))
    ax = np.arange(-m, m + 1) * dxi
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    r = np.sqrt(sum(g * g for g in grids))
    vals = np.exp(1j * t * b_func(r)) * cutoff(r) * profile(r) * np.exp(1j * grids[0] * x)
    return complex(vals.sum() * dxi**dim / (2 * np.pi) ** dim)


def mp_expm_2x2(M, digits: int = 40):
    """High-precision matrix exponential through mpmath (tests only)."""
    import mpmath as mp

    mp.mp.dps = digits
    E = mp.expm(mp.matrix(M.tolist()))
    return np.array([[float(E[i, j]) for j in range(2)] for i in range(2)])
