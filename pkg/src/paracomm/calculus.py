"""Spectral differential operators, the gradient projection and mollification.

All multipliers use the Nyquist-zeroed frequencies ``grid.xi_tilde``.
Operators accept fields in either representation and return spectral fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .spectral import Grid3, ScalarField, VectorField, cross3

__all__ = [
    "WeylSplit",
    "gradient",
    "divergence",
    "curl",
    "project_G",
    "weyl_decompose",
    "mollify",
    "mollifier_hat",
    "band_limit",
    "band_shell",
    "standard_bump",
    "radial_kernel_hat",
]


def standard_bump(r):
    """exp(-1/(1-(2r)^2)) for r < 1/2, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 0.5
    out[inside] = np.exp(-1.0 / (1.0 - (2.0 * r[inside]) ** 2))
    return out


def radial_kernel_hat(grid: Grid3, func, scale: float) -> np.ndarray:
    """Transform of the sampled kernel x -> scale^-3 func(|x|/scale).

    The kernel is sampled in wrapped coordinates, so it is even on the lattice
    and its transform is real; the imaginary part is roundoff and dropped.
    """
    samples = func(grid.centered_radius / scale) / scale**3
    return sfft.fftn(samples).real * grid.cell_volume


def gradient(phi: ScalarField) -> VectorField:
    g = phi.grid
    ph = phi.to_spectral().values
    kx, ky, kz = g.xi_tilde
    return VectorField(g, np.stack([1j * kx * ph, 1j * ky * ph, 1j * kz * ph]), spectral=True)


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    vh = v.to_spectral().values
    kx, ky, kz = g.xi_tilde
    return ScalarField(g, 1j * (kx * vh[0] + ky * vh[1] + kz * vh[2]), spectral=True)


def curl(v: VectorField) -> VectorField:
    g = v.grid
    vh = v.to_spectral().values
    kx, ky, kz = g.xi_tilde
    xi = np.broadcast_arrays(kx, ky, kz)
    return VectorField(g, 1j * cross3(np.stack(xi), vh), spectral=True)


def _projection_coefficient(grid: Grid3, vh: np.ndarray) -> np.ndarray:
    """<v_hat, xi>/|xi|^2 per mode, zero where xi_tilde vanishes."""
    kx, ky, kz = grid.xi_tilde
    xi2 = grid.xi2
    dot = kx * vh[0] + ky * vh[1] + kz * vh[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(xi2 > 0, dot / np.where(xi2 > 0, xi2, 1.0), 0.0)
    return coef


def project_G(v: VectorField) -> VectorField:
    """Orthogonal projection onto gradients: xi <v_hat, xi> / |xi|^2."""
    g = v.grid
    vh = v.to_spectral().values
    coef = _projection_coefficient(g, vh)
    kx, ky, kz = g.xi_tilde
    return VectorField(g, np.stack([kx * coef, ky * coef, kz * coef]), spectral=True)


@dataclass(frozen=True)
class WeylSplit:
    """v = g_part + j_part + mean, with g_part in G and div j_part = 0."""

    g_part: VectorField
    j_part: VectorField
    mean: np.ndarray

    def recombine(self) -> VectorField:
        return self.g_part + self.j_part + VectorField.constant(self.g_part.grid, self.mean)


def weyl_decompose(v: VectorField) -> WeylSplit:
    g = v.grid
    vs = v.to_spectral()
    gp = project_G(vs)
    zero = np.zeros(g.shape, dtype=complex)
    zero[0, 0, 0] = 1.0
    mean_modes = vs.values[:, 0, 0, 0]
    jv = vs.values - gp.values - mean_modes[:, None, None, None] * zero
    return WeylSplit(gp, VectorField(g, jv, spectral=True), mean_modes / g.volume)


def band_limit(f, band: int):
    """Zero every mode with |wrap(k)|_inf > band."""
    fs = f.to_spectral()
    mask = fs.grid.band_mask(band)
    return fs._new(fs.values * mask, True)


def band_shell(f, lo: float, hi: float):
    """Keep only the modes with lo <= |wrap(k)|_2 <= hi."""
    fs = f.to_spectral()
    w = fs.grid.wrap.astype(float)
    r = np.sqrt(w[:, None, None] ** 2 + w[None, :, None] ** 2 + w[None, None, :] ** 2)
    return fs._new(fs.values * ((r >= lo) & (r <= hi)), True)


def mollifier_hat(grid: Grid3, eps: float) -> np.ndarray:
    """Transform of omega^eps, renormalized so that h^3 * sum(samples) = 1."""
    if not (2 * grid.h * (1 - 1e-12) <= eps <= grid.length / 8 * (1 + 1e-12)):
        raise ValueError(f"mollifier scale {eps!r} outside [2h, L/8] = [{2 * grid.h:g}, {grid.length / 8:g}]")
    w = radial_kernel_hat(grid, standard_bump, eps)
    return w / w[0, 0, 0]


def mollify(u, eps: float):
    """Convolution of ``u`` with the unit-mass bump of radius eps/2."""
    us = u.to_spectral()
    w = mollifier_hat(us.grid, eps)
    return us._new(us.values * w, True)
