"""Independent oracles shared by the test modules (no FFTs inside)."""

import itertools

import numpy as np


def direct_dft(grid, values):
    """h^3 sum_x f(x) exp(-i <xi, x>) by explicit summation over all x."""
    n, h = grid.n, grid.h
    k = np.fft.fftfreq(n, 1.0 / n)
    xi = 2 * np.pi * k / grid.length
    x = h * np.arange(n)
    E = np.exp(-1j * np.outer(xi, x))  # (mode, point)
    return h**3 * np.einsum("ai,bj,ck,...ijk->...abc", E, E, E, values)


def direct_convolution(grid, f, g, op=None):
    """(f * g)(x) = h^3 sum_y f(x - y) g(y); ``op`` combines the two values."""
    n = grid.n
    out = None
    for y in itertools.product(range(n), repeat=3):
        shifted = np.roll(f, shift=y, axis=(-3, -2, -1))  # f(x - y)
        gy = g[(...,) + y]
        term = op(shifted, gy) if op is not None else shifted * gy
        out = term if out is None else out + term
    return grid.cell_volume * out


def brute_bmo(values, p=1.0):
    """sup over all periodic cubes of (mean |u - u_Q|^p)^(1/p); plain loops."""
    v = values if values.ndim == 4 else values[None]
    n = v.shape[-1]
    best = 0.0
    for s in range(1, n // 2 + 1):
        for c in itertools.product(range(n), repeat=3):
            idx = [(np.arange(s) + ci) % n for ci in c]
            blk = v[(slice(None),) + np.ix_(*idx)]
            mean = blk.reshape(v.shape[0], -1).mean(axis=1)
            dev = np.sqrt(np.sum(np.abs(blk - mean[:, None, None, None]) ** 2, axis=0))
            best = max(best, float(np.mean(dev**p) ** (1 / p)))
    return best
