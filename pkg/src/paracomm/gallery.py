"""Seeded generators for coefficient fields u and test gradients f."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .bmo import CubeSpec
from .calculus import divergence, gradient, project_G
from .spectral import Grid3, ScalarField, VectorField, l2_norm

__all__ = [
    "GallerySpec",
    "CubeTestField",
    "KINDS",
    "random_divfree",
    "multiscale_divfree",
    "curl_free",
    "cube_test_field",
    "step_field",
    "single_mode",
]

KINDS = ("random-divfree", "multiscale-divfree", "curl-free", "cube-test-field", "step", "single-mode")


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _check_band(grid: Grid3, band: Optional[int]) -> int:
    if band is None:
        return grid.dealias_band
    if not 1 <= band <= grid.dealias_band:
        raise ValueError(f"band must lie in [1, n/3] = [1, {grid.dealias_band}], got {band}")
    return int(band)


def _gaussian_modes(grid: Grid3, rng, ncomp: int, band: int) -> np.ndarray:
    shape = (ncomp,) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c *= grid.band_mask(band)
    c[..., 0, 0, 0] = 0.0
    return c


def _normalize(f, amplitude: float):
    """Scale so that the RMS value ||f|| / L^(3/2) equals ``amplitude``."""
    rms = l2_norm(f) / f.grid.volume**0.5
    return f if rms == 0 else f * (amplitude / rms)


def _solenoidal(grid: Grid3, coeffs: np.ndarray, real: bool, amplitude: float) -> VectorField:
    v = VectorField(grid, coeffs, spectral=True)
    v = v - project_G(v)
    if real:
        v = v.real()
    return _normalize(v.to_physical(), amplitude)


def random_divfree(grid: Grid3, seed, band: Optional[int] = None, amplitude: float = 1.0, real: bool = True) -> VectorField:
    """Gaussian divergence-free field on |wrap(k)|_inf <= band, mean zero."""
    band = _check_band(grid, band)
    return _solenoidal(grid, _gaussian_modes(grid, _rng(seed), 3, band), real, amplitude)


def multiscale_divfree(
    grid: Grid3,
    seed,
    slope: float,
    band: Optional[int] = None,
    amplitude: float = 1.0,
    real: bool = True,
) -> VectorField:
    """Divergence-free field with coefficient magnitudes ~ |xi|^-slope.

    Shell-summed energy then scales like |xi|^(2 - 2 slope).
    """
    if not 0.5 <= slope <= 2.5:
        raise ValueError(f"spectral slope must lie in [0.5, 2.5], got {slope}")
    band = _check_band(grid, band)
    c = _gaussian_modes(grid, _rng(seed), 3, band)
    xi = grid.xi_abs
    with np.errstate(divide="ignore"):
        c *= np.where(xi > 0, xi, np.inf) ** (-slope)
    return _solenoidal(grid, c, real, amplitude)


def curl_free(grid: Grid3, seed, band: Optional[int] = None, amplitude: float = 1.0, real: bool = True) -> VectorField:
    """Gradient of a seeded band-limited random potential."""
    band = _check_band(grid, band)
    phi = ScalarField(grid, _gaussian_modes(grid, _rng(seed), 1, band)[0], spectral=True)
    if real:
        phi = phi.real()
    return _normalize(gradient(phi).to_physical(), amplitude)


def _smoothstep(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return a / (a + b)


def _smoothstep_prime(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = (s > 0) & (s < 1)
    sm = s[m]
    a = np.exp(-1.0 / sm)
    b = np.exp(-1.0 / (1.0 - sm))
    da = a / sm**2
    db = -b / (1.0 - sm) ** 2
    out[m] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


@dataclass(frozen=True)
class CubeTestField:
    """Gradient test field equal to e_beta near the cube Q.

    ``feb_deviation`` is max |f - e_beta| over the samples of the enlarged
    cube Q' (side (1+sqrt 3) l(Q)); ``norm_ratio`` is ||f||_L2 / |Q|^(1/2).
    """

    field: VectorField
    cube: CubeSpec
    beta: int
    method: str
    feb_deviation: float
    norm_ratio: float


def _enlarged_cube_mask(grid: Grid3, center, half_side) -> np.ndarray:
    d = [np.abs(grid.wrapped_offset(c)) <= half_side * (1 + 1e-12) for c in center]
    return d[0][:, None, None] & d[1][None, :, None] & d[2][None, None, :]


def cube_test_field(grid: Grid3, Q: CubeSpec, beta: int, method: str = "spectral") -> CubeTestField:
    """f = grad((x_beta - c_beta) chi) with chi = 1 on Q' and 0 off the
    concentric cube of side (2 + sqrt 3) l(Q).

    ``spectral`` differentiates the sampled potential in frequency space, so f
    lies exactly in the discrete gradient space while f = e_beta on Q' only
    holds up to the resolution of the cutoff ramp.  ``analytic`` samples the
    exact gradient: f = e_beta on Q' to roundoff, at the price of a small
    non-gradient component on the grid.
    """
    if beta not in (0, 1, 2):
        raise ValueError("beta indexes an axis: 0, 1 or 2")
    l = Q.length
    inner = (1 + np.sqrt(3)) * l / 2
    outer = (2 + np.sqrt(3)) * l / 2
    if 2 * inner > grid.length / 2 * (1 + 1e-12):
        raise ValueError(f"enlarged cube side {2 * inner:g} exceeds L/2 = {grid.length / 2:g}")
    center = Q.center
    d = [grid.wrapped_offset(c) for c in center]
    width = outer - inner
    ramps = [_smoothstep((outer - np.abs(di)) / width) for di in d]
    shape3 = [(slice(None), None, None), (None, slice(None), None), (None, None, slice(None))]
    chi = ramps[0][shape3[0]] * ramps[1][shape3[1]] * ramps[2][shape3[2]]
    xb = d[beta][shape3[beta]]
    if method == "spectral":
        f = gradient(ScalarField(grid, xb * chi)).to_physical().real()
    elif method == "analytic":
        dramps = [-np.sign(di) * _smoothstep_prime((outer - np.abs(di)) / width) / width for di in d]
        comps = []
        for gam in range(3):
            dchi = np.ones(grid.shape)
            for a in range(3):
                dchi = dchi * (dramps[a] if a == gam else ramps[a])[shape3[a]]
            comp = xb * dchi
            if gam == beta:
                comp = comp + chi
            comps.append(np.broadcast_to(comp, grid.shape))
        f = VectorField(grid, np.stack(comps))
    else:
        raise ValueError(f"unknown method {method!r}; expected 'spectral' or 'analytic'")
    mask = _enlarged_cube_mask(grid, center, inner)
    e = np.zeros(3)
    e[beta] = 1.0
    fv = f.values
    dev = float(np.max(np.abs(fv[:, mask] - e[:, None])))
    return CubeTestField(f, Q, beta, method, dev, l2_norm(f) / Q.volume**0.5)


def step_field(grid: Grid3, a: float, b: float, axis: int = 0) -> ScalarField:
    """``a`` on the half torus x_axis < L/2, ``b`` on the other half."""
    x = grid.coords[axis]
    vals = np.where(x < grid.length / 2, a, b)
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).astype(float))


def single_mode(grid: Grid3, k, amplitude=1.0, direction=None):
    """amplitude * exp(i <xi_k, x>) for the lattice index k (wrapped ints).

    With a ``direction`` 3-vector the result is that constant vector times
    the scalar mode.
    """
    k = np.asarray(k, dtype=int)
    xi = 2 * np.pi * k / grid.length
    x = grid.coords
    phase = np.exp(1j * (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]))
    s = amplitude * phase
    if direction is None:
        return ScalarField(grid, s)
    direction = np.asarray(direction, dtype=complex)
    return VectorField(grid, direction[:, None, None, None] * s[None])


@dataclass(frozen=True)
class GallerySpec:
    """Recipe for one gallery field; ``build`` is deterministic."""

    kind: str
    seed: int = 0
    band: Optional[int] = None
    slope: float = 1.5
    amplitude: float = 1.0
    cube_corner: tuple[int, int, int] = (0, 0, 0)
    cube_side: int = 2
    beta: int = 0
    step_values: tuple[float, float] = (0.0, 1.0)
    mode: tuple[int, int, int] = (1, 0, 0)
    real: bool = True
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gallery kind {self.kind!r}; expected one of {KINDS}")

    def build(self, grid: Grid3):
        k = self.kind
        if k == "random-divfree":
            return random_divfree(grid, self.seed, self.band, self.amplitude, self.real)
        if k == "multiscale-divfree":
            return multiscale_divfree(grid, self.seed, self.slope, self.band, self.amplitude, self.real)
        if k == "curl-free":
            return curl_free(grid, self.seed, self.band, self.amplitude, self.real)
        if k == "cube-test-field":
            Q = CubeSpec(grid, self.cube_corner, self.cube_side)
            return cube_test_field(grid, Q, self.beta).field
        if k == "step":
            return step_field(grid, *self.step_values)
        return single_mode(grid, self.mode, self.amplitude)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("extra")
        return {key: (list(v) if isinstance(v, tuple) else v) for key, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "GallerySpec":
        d = dict(d)
        for key in ("cube_corner", "step_values", "mode"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)


def divergence_ratio(u: VectorField) -> float:
    """|div u| / (max|xi| |u|): scale-free divergence check."""
    nu = l2_norm(u)
    if nu == 0:
        return 0.0
    return l2_norm(divergence(u)) / (np.sqrt(u.grid.xi2.max()) * nu)
