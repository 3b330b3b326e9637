"""Littlewood-Paley test families built from a radial bump Theta.

For a scale t the family carries the spectral multipliers of

* Theta_t(x) = t^-3 Theta(x/t)          (DFT of the sampled kernel)
* Phi_t      = (Delta Theta)_t          -t^2 |xi|^2 Theta_t^
* Phi^a_t    = (grad d_a Theta)_t       -t^2 xi_a xi Theta_t^
* Psi_t      = (Phi * Phi)_t            (Phi_t^)^2
* (d Theta)_t                           i t xi Theta_t^

Derivative factors are applied in frequency space on top of the sampled
Theta_t, so the algebraic relations between them hold mode by mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .calculus import radial_kernel_hat, standard_bump
from .spectral import Grid3, ScalarField, VectorField, cross3

__all__ = [
    "RadialProfile",
    "DEFAULT_PROFILE",
    "TestFamily",
    "Calibration",
    "build_family",
    "calibration_constant",
    "convolve_family",
    "square_function_l2",
    "default_t_grid",
    "log_trapezoid_weights",
]


@dataclass(frozen=True)
class RadialProfile:
    """Real radial function supported in the ball |x| < radius."""

    func: Callable[[np.ndarray], np.ndarray]
    radius: float = 0.5
    name: str = "bump"
    quadrature_nodes: int = field(default=1000, compare=False)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < self.radius, self.func(r), 0.0)

    @cached_property
    def _nodes(self):
        x, w = roots_legendre(self.quadrature_nodes)
        r = 0.5 * self.radius * (x + 1.0)
        w = 0.5 * self.radius * w
        return r, w * self(r) * r * r

    def hat(self, s) -> np.ndarray:
        """Continuum 3-D transform as a function of |xi|.

        Theta^(s) = 4 pi int_0^R Theta(r) r^2 sin(s r)/(s r) dr, evaluated
        with Gauss-Legendre nodes on [0, R].
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        r, wr = self._nodes
        out = np.empty(s.shape)
        flat = s.ravel()
        res = out.ravel()
        for i in range(0, flat.size, 512):
            chunk = flat[i : i + 512]
            res[i : i + 512] = 4 * np.pi * (np.sinc(np.outer(chunk, r) / np.pi) @ wr)
        return out

    def phi_hat(self, s) -> np.ndarray:
        """Continuum transform of Delta Theta at |xi| = s."""
        s = np.asarray(s, dtype=float)
        return -(s**2) * self.hat(s)


DEFAULT_PROFILE = RadialProfile(standard_bump)


@lru_cache(maxsize=48)
def _theta_hat(grid: Grid3, t: float, profile: RadialProfile) -> np.ndarray:
    th = radial_kernel_hat(grid, profile, t)
    th.flags.writeable = False
    return th


@dataclass(frozen=True, eq=False)
class TestFamily:
    """Spectral multipliers of the dilated test functions at one scale t."""

    __test__ = False  # not a pytest class

    grid: Grid3
    t: float
    theta_hat: np.ndarray
    profile: RadialProfile = DEFAULT_PROFILE

    @cached_property
    def phi_hat(self) -> np.ndarray:
        return -(self.t**2) * self.grid.xi2 * self.theta_hat

    @cached_property
    def phi_alpha_hat(self) -> np.ndarray:
        """Array (alpha, component, n, n, n): -t^2 xi_alpha xi Theta_t^."""
        xi = np.stack(np.broadcast_arrays(*self.grid.xi_tilde))
        base = -(self.t**2) * self.theta_hat
        return np.stack([xi[a] * xi * base for a in range(3)])

    @cached_property
    def psi_hat(self) -> np.ndarray:
        return self.phi_hat**2

    @cached_property
    def dtheta_hat(self) -> np.ndarray:
        """i xi Theta_t^; the multiplier of (d Theta)_t is t times this."""
        xi = np.stack(np.broadcast_arrays(*self.grid.xi_tilde))
        return 1j * xi * self.theta_hat

    def phi_alpha_kernel(self, alpha: int) -> VectorField:
        return VectorField(self.grid, self.phi_alpha_hat[alpha], spectral=True)


def _check_scale(grid: Grid3, t: float) -> None:
    lo, hi = 2 * grid.h, grid.length / 4
    if not (lo * (1 - 1e-12) <= t <= hi * (1 + 1e-12)):
        raise ValueError(f"scale t={t!r} outside the resolvable range [2h, L/4] = [{lo:g}, {hi:g}]")


def build_family(grid: Grid3, t: float, profile: RadialProfile = DEFAULT_PROFILE) -> TestFamily:
    t = float(t)
    _check_scale(grid, t)
    return TestFamily(grid, t, _theta_hat(grid, t, profile), profile)


def default_t_grid(grid: Grid3, points: int = 64) -> np.ndarray:
    return np.geomspace(2 * grid.h, grid.length / 4, points)


def log_trapezoid_weights(t_points, dlog: float | None = None) -> np.ndarray:
    """Trapezoid weights for int f(t) dt/t on the nodes ``t_points``.

    A single node has no trapezoid; it then gets the weight ``dlog``.
    """
    lt = np.log(np.asarray(t_points, dtype=float))
    if lt.size == 1:
        if dlog is None:
            raise ValueError("a one-point quadrature needs an explicit log spacing")
        return np.array([float(dlog)])
    if np.any(np.diff(lt) <= 0):
        raise ValueError("t points must be strictly increasing")
    d = np.diff(lt)
    w = np.zeros_like(lt)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


@dataclass(frozen=True)
class Calibration:
    c: float
    error_estimate: float
    t_min: float
    t_max: float
    points: int
    tail_ratio: float


def calibration_constant(
    profile: RadialProfile = DEFAULT_PROFILE,
    xi_ref: float = 1.0,
    t_quadrature=None,
    tail_threshold: float = 1e-14,
) -> Calibration:
    """c = (int_0^inf Phi^(t xi)^2 dt/t)^(1/2) by log-trapezoid quadrature.

    The integrand at both end nodes must be below ``tail_threshold`` times
    its peak, so the truncated range carries the whole integral.
    """
    xi = abs(float(xi_ref))
    if xi == 0:
        raise ValueError("reference frequency must be nonzero")
    if t_quadrature is None:
        t_quadrature = np.geomspace(1e-4, 1e3, 2049) / xi
    t = np.asarray(t_quadrature, dtype=float)
    vals = profile.phi_hat(t * xi) ** 2
    peak = vals.max()
    tail = max(vals[0], vals[-1]) / peak
    if tail > tail_threshold:
        raise ValueError(f"quadrature range too narrow: tail/peak = {tail:.2e} > {tail_threshold:.0e}")
    full = float(vals @ log_trapezoid_weights(t))
    half = float(vals[::2] @ log_trapezoid_weights(t[::2]))
    c = float(np.sqrt(full))
    return Calibration(c, abs(np.sqrt(half) - c), float(t[0]), float(t[-1]), t.size, float(tail))


_WHICH = ("theta", "phi", "phi_alpha", "psi", "dtheta")


def convolve_family(family: TestFamily, f, which: str, alpha: int | None = None):
    """Convolve ``f`` with one member of the family (spectral multiplication).

    ``phi_alpha`` uses the vector convolution (a cross product of spectral
    coefficients) and needs a vector ``f`` and ``alpha``.  ``dtheta`` gives
    (d_alpha Theta)_t * f for a given ``alpha``, or all three partial
    derivatives of a scalar ``f`` stacked into a vector field.
    """
    if which not in _WHICH:
        raise ValueError(f"unknown family member {which!r}; expected one of {_WHICH}")
    if f.grid != family.grid:
        raise ValueError("field and family live on different grids")
    fh = f.to_spectral().values
    g = family.grid
    if which in ("theta", "phi", "psi"):
        m = {"theta": family.theta_hat, "phi": family.phi_hat, "psi": family.psi_hat}[which]
        return f._new(fh * m, True)
    if which == "phi_alpha":
        if not isinstance(f, VectorField) or alpha is None:
            raise ValueError("phi_alpha convolution needs a vector field and alpha")
        return VectorField(g, cross3(family.phi_alpha_hat[alpha], fh), spectral=True)
    mult = family.t * family.dtheta_hat
    if alpha is not None:
        return f._new(fh * mult[alpha], True)
    if isinstance(f, VectorField):
        raise ValueError("dtheta convolution of a vector field needs alpha")
    return VectorField(g, mult * fh, spectral=True)


def square_function_l2(
    u,
    t_grid=None,
    profile: RadialProfile = DEFAULT_PROFILE,
    mean_tol: float = 1e-12,
) -> float:
    """(int ||Phi_t * u||^2 dt/t)^(1/2) over ``t_grid`` by log-trapezoid."""
    g = u.grid
    if t_grid is None:
        t_grid = default_t_grid(g)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 64:
        raise ValueError(f"square function needs at least 64 scales, got {t_grid.size}")
    uh = u.to_spectral().values
    coeffs = uh.reshape(-1, *g.shape)
    energy = float(np.sum(np.abs(coeffs) ** 2))
    zero = float(np.sqrt(np.sum(np.abs(coeffs[:, 0, 0, 0]) ** 2)))
    if zero > mean_tol * max(np.sqrt(energy), 1e-300):
        raise ValueError("square_function_l2 needs a mean-zero field (the zero mode is invisible to Phi_t)")
    power = np.sum(np.abs(coeffs) ** 2, axis=0)
    norms2 = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        fam = build_family(g, t, profile)
        norms2[i] = np.sum(fam.phi_hat**2 * power) / g.volume
    return float(np.sqrt(norms2 @ log_trapezoid_weights(t_grid)))


def mode_plancherel_ratio(grid: Grid3, t_grid=None, profile: RadialProfile = DEFAULT_PROFILE) -> np.ndarray:
    """Per-mode (int Phi_t^(xi)^2 dt/t)^(1/2) / c on the whole lattice."""
    if t_grid is None:
        t_grid = default_t_grid(grid)
    w = log_trapezoid_weights(t_grid)
    acc = np.zeros(grid.shape)
    for wi, t in zip(w, t_grid):
        acc += wi * build_family(grid, t, profile).phi_hat ** 2
    return np.sqrt(acc) / calibration_constant(profile).c
