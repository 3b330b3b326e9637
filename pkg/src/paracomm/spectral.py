"""Periodic grid, field containers and the discrete Fourier transform.

Transform convention on the torus [0, L)^3 with spacing h = L/n::

    f_hat(xi) = h^3 * sum_x f(x) exp(-i <xi, x>)
    f(x)      = L^-3 * sum_xi f_hat(xi) exp(i <xi, x>)

so that the convolution (f*g)(x) = h^3 sum_y f(x-y) g(y) transforms to
f_hat * g_hat without extra factors, and ||f||^2 = L^-3 sum |f_hat|^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid3",
    "ScalarField",
    "VectorField",
    "RepresentationError",
    "GridMismatchError",
    "forward_transform",
    "inverse_transform",
    "l2_norm",
    "inner_product",
    "bilinear_form",
    "pointwise_cross",
    "cross3",
    "save_field",
    "load_field",
]

_AXES = (-3, -2, -1)


class RepresentationError(ValueError):
    """A field was handed over in the wrong (physical/spectral) representation."""


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


@dataclass(frozen=True)
class Grid3:
    """Cubic periodic grid with ``n`` points per axis on ``[0, length)^3``."""

    n: int = 64
    length: float = 2 * np.pi

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {n!r}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length!r}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def volume(self) -> float:
        return self.length**3

    @property
    def dealias_band(self) -> int:
        """Largest |wrap(k)|_inf kept by the 2/3 rule (n - 2K > K)."""
        return (self.n - 1) // 3

    @cached_property
    def wrap(self) -> np.ndarray:
        """Lattice indices mapped to (-n/2, n/2]."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def freq1d(self) -> np.ndarray:
        return 2 * np.pi * self.wrap / self.length

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable frequency components (n,1,1), (1,n,1), (1,1,n)."""
        k = self.freq1d
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def xi_tilde(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Frequency components with the Nyquist entries zeroed.

        Every derivative-type multiplier in the package is built from these,
        so discrete vector identities (curl grad = 0, ...) close exactly.
        """
        k = self.freq1d.copy()
        k[self.n // 2] = 0.0
        return (k[:, None, None], k[None, :, None], k[None, None, :])

    @cached_property
    def xi2(self) -> np.ndarray:
        """|xi_tilde|^2 on the full lattice."""
        kx, ky, kz = self.xi_tilde
        return kx**2 + ky**2 + kz**2

    @cached_property
    def xi_abs(self) -> np.ndarray:
        """|xi| (true frequencies, Nyquist included) on the full lattice."""
        kx, ky, kz = self.xi
        return np.sqrt(kx**2 + ky**2 + kz**2)

    @cached_property
    def wrap_max(self) -> np.ndarray:
        """max(|wrap(k)|) per lattice point."""
        w = np.abs(self.wrap)
        return np.maximum(np.maximum(w[:, None, None], w[None, :, None]), w[None, None, :])

    def band_mask(self, band: int) -> np.ndarray:
        return self.wrap_max <= band

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable physical coordinates x_j = j*h."""
        x = self.h * np.arange(self.n)
        return (x[:, None, None], x[None, :, None], x[None, None, :])

    @cached_property
    def centered_radius(self) -> np.ndarray:
        """Periodic distance |x| from the origin (wrapped coordinates)."""
        x = self.h * self.wrap.astype(float)
        return np.sqrt(x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2)

    def wrapped_offset(self, center: float) -> np.ndarray:
        """Signed periodic displacement x - center along one axis, in [-L/2, L/2)."""
        x = self.h * np.arange(self.n) - center
        return (x + self.length / 2) % self.length - self.length / 2


class _Field:
    ncomp = 1

    def __init__(self, grid: Grid3, values, spectral: bool = False):
        values = np.asarray(values)
        if not np.iscomplexobj(values):
            values = values.astype(np.complex128)
        elif values.dtype != np.complex128:
            values = values.astype(np.complex128)
        expected = self._expected_shape(grid)
        if values.shape != expected:
            raise ValueError(f"expected values of shape {expected}, got {values.shape}")
        values = values.view()
        values.flags.writeable = False
        self._grid = grid
        self._values = values
        self._spectral = bool(spectral)

    @classmethod
    def _expected_shape(cls, grid):
        return grid.shape

    @property
    def grid(self) -> Grid3:
        return self._grid

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def spectral(self) -> bool:
        return self._spectral

    @property
    def representation(self) -> str:
        return "spectral" if self._spectral else "physical"

    def _new(self, values, spectral):
        return type(self)(self._grid, values, spectral)

    def to_spectral(self):
        return self if self._spectral else forward_transform(self)

    def to_physical(self):
        return inverse_transform(self) if self._spectral else self

    def like(self, other):
        """``other`` converted to this field's representation."""
        _check_grid(self, other)
        return other.to_spectral() if self._spectral else other.to_physical()

    def is_real(self, rtol: float = 1e-13) -> bool:
        v = self.to_physical().values
        scale = np.max(np.abs(v), initial=0.0)
        return bool(np.max(np.abs(v.imag), initial=0.0) <= rtol * max(scale, 1e-300))

    def real(self):
        return self._new(self.to_physical().values.real, False)

    def conj(self):
        return self._new(self.to_physical().values.conj(), False)

    def __add__(self, other):
        if isinstance(other, _Field):
            if type(other) is not type(self):
                return NotImplemented
            return self._new(self._values + self.like(other).values, self._spectral)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, _Field):
            if type(other) is not type(self):
                return NotImplemented
            return self._new(self._values - self.like(other).values, self._spectral)
        return NotImplemented

    def __neg__(self):
        return self._new(-self._values, self._spectral)

    def __mul__(self, scalar):
        if np.ndim(scalar) != 0:
            return NotImplemented
        return self._new(self._values * scalar, self._spectral)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __repr__(self):
        return f"{type(self).__name__}(n={self._grid.n}, L={self._grid.length:g}, {self.representation})"


class ScalarField(_Field):
    """Complex scalar field on a :class:`Grid3`."""

    def mean(self) -> complex:
        if self._spectral:
            return complex(self._values[0, 0, 0] / self._grid.volume)
        return complex(self._values.mean())


class VectorField(_Field):
    """Complex 3-vector field; ``values`` has shape (3, n, n, n)."""

    ncomp = 3

    @classmethod
    def _expected_shape(cls, grid):
        return (3,) + grid.shape

    @classmethod
    def from_components(cls, components) -> "VectorField":
        components = list(components)
        if len(components) != 3:
            raise ValueError("a vector field needs exactly three components")
        first = components[0]
        for c in components[1:]:
            _check_grid(first, c)
        spectral = first.spectral
        vals = np.stack([(c.to_spectral() if spectral else c.to_physical()).values for c in components])
        return cls(first.grid, vals, spectral)

    @classmethod
    def constant(cls, grid: Grid3, vector) -> "VectorField":
        vector = np.asarray(vector, dtype=complex).reshape(3, 1, 1, 1)
        return cls(grid, np.broadcast_to(vector, (3,) + grid.shape).copy())

    def component(self, alpha: int) -> ScalarField:
        return ScalarField(self._grid, self._values[alpha], self._spectral)

    def components(self) -> list[ScalarField]:
        return [self.component(a) for a in range(3)]

    def mean(self) -> np.ndarray:
        if self._spectral:
            return self._values[:, 0, 0, 0] / self._grid.volume
        return self._values.mean(axis=(1, 2, 3))


Field = Union[ScalarField, VectorField]


def _check_grid(a: _Field, b: _Field) -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def forward_transform(f: Field) -> Field:
    """Physical samples -> spectral coefficients (h^3-scaled DFT)."""
    if f.spectral:
        raise RepresentationError("forward_transform expects a physical-space field")
    g = f.grid
    return f._new(sfft.fftn(f.values, axes=_AXES) * g.cell_volume, True)


def inverse_transform(f: Field) -> Field:
    """Spectral coefficients -> physical samples."""
    if not f.spectral:
        raise RepresentationError("inverse_transform expects a spectral field")
    g = f.grid
    return f._new(sfft.ifftn(f.values, axes=_AXES) / g.cell_volume, False)


def l2_norm(f: Field) -> float:
    """L2 norm h^3 sum |f|^2, summed over components, square-rooted."""
    g = f.grid
    v = f.values
    sq = float(np.vdot(v, v).real)
    if f.spectral:
        return float(np.sqrt(sq / g.volume))
    return float(np.sqrt(sq * g.cell_volume))


def inner_product(f: Field, g: Field) -> complex:
    """Sesquilinear L2 inner product  integral of <f, conj(g)>."""
    _check_grid(f, g)
    if type(f) is not type(g):
        raise TypeError("inner_product needs two scalar or two vector fields")
    gr = f.grid
    if f.spectral:
        return complex(np.vdot(f.like(g).values, f.values) / gr.volume)
    return complex(np.vdot(f.like(g).values, f.values) * gr.cell_volume)


def bilinear_form(u: VectorField, v: VectorField) -> ScalarField:
    """Pointwise <u, v> = sum_a u_a v_a, no conjugation."""
    _check_grid(u, v)
    a = u.to_physical().values
    b = v.to_physical().values
    return ScalarField(u.grid, np.einsum("a...,a...->...", a, b))


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product along the leading axis of two (3, ...) arrays."""
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def pointwise_cross(u: VectorField, v: VectorField) -> VectorField:
    """(u x v)(x) at every grid point."""
    _check_grid(u, v)
    return VectorField(u.grid, cross3(u.to_physical().values, v.to_physical().values))


# --- flat binary dump -------------------------------------------------------

_MAGIC = b"PCFD"
_HEADER = struct.Struct("<4sBIdBB")
_VERSION = 1


def save_field(path, f: Field) -> None:
    """Write ``f`` as header + little-endian complex64 payload.

    Header: magic, version, n, L, representation (0 physical, 1 spectral),
    component count.  Payload: row-major over (i, j, k) with the component
    index fastest, i.e. one value triple per grid point for vector fields.
    """
    g = f.grid
    vals = f.values if f.ncomp > 1 else f.values[None]
    payload = np.moveaxis(vals, 0, -1).astype("<c8", copy=False)
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, g.n, g.length, int(f.spectral), f.ncomp))
        fh.write(np.ascontiguousarray(payload).tobytes())


def load_field(path) -> Field:
    data = Path(path).read_bytes()
    magic, version, n, length, rep, ncomp = _HEADER.unpack_from(data)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError(f"{path}: not a field dump (magic={magic!r}, version={version})")
    if ncomp not in (1, 3):
        raise ValueError(f"{path}: unsupported component count {ncomp}")
    grid = Grid3(n, length)
    payload = np.frombuffer(data, dtype="<c8", offset=_HEADER.size)
    if payload.size != n**3 * ncomp:
        raise ValueError(f"{path}: truncated payload")
    vals = np.moveaxis(payload.reshape(n, n, n, ncomp), -1, 0).astype(np.complex128)
    if ncomp == 1:
        return ScalarField(grid, vals[0], bool(rep))
    return VectorField(grid, vals, bool(rep))
