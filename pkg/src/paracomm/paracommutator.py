"""The operator I_u f = P(u x f), its norm, and the lemma residual checks.

Products of fields are dealiased by the 2/3 rule: the grid product is
truncated to |wrap(k)|_inf <= grid.dealias_band.  For inputs inside that
band the truncated grid product coincides with the exact product there, so
Leibniz-type identities (div(u x f) = <curl u, f> - <u, curl f>) hold to
roundoff.  The operator norm is taken over the band-limited gradient space

    G_K = { grad phi : phi_hat supported on 0 < |wrap(k)|_inf <= K },

in the orthonormal coordinates f_hat(xi) = L^(3/2) c(xi) i xi / |xi|.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .calculus import curl, divergence, project_G
from .lp_family import DEFAULT_PROFILE, RadialProfile, TestFamily, build_family
from .spectral import Grid3, ScalarField, VectorField, bilinear_form, cross3, l2_norm

__all__ = [
    "OperatorNormEstimate",
    "LemmaResidual",
    "GradientBasis",
    "vector_convolve",
    "derived_fields",
    "apply_Iu",
    "apply_Iu_adjoint",
    "operator_norm_power",
    "dense_matrix_oracle",
    "check_lemma1",
    "check_lemma2",
    "check_lemma3",
]

log = logging.getLogger(__name__)

_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class OperatorNormEstimate:
    value: float
    iterations: int
    residual: float
    method: str
    converged: bool = True
    degenerate: bool = False
    restart_values: tuple[float, ...] = ()
    band: int | None = None


@dataclass(frozen=True)
class LemmaResidual:
    lemma: int
    t: float
    absolute: float
    relative: float
    lhs_norm: float
    rhs_norm: float
    warnings: tuple[str, ...] = field(default=())


def vector_convolve(a: VectorField, b: VectorField) -> VectorField:
    """(a ⋆ b)(x) = int a(x-y) x b(y) dy, computed as a_hat x b_hat."""
    if a.grid != b.grid:
        raise ValueError("vector_convolve: grid mismatch")
    return VectorField(a.grid, cross3(a.to_spectral().values, b.to_spectral().values), spectral=True)


def derived_fields(u: VectorField, family: TestFamily) -> list[VectorField]:
    """u^alpha_t = Phi^alpha_t ⋆ u for alpha = 1, 2, 3."""
    uh = u.to_spectral().values
    return [VectorField(u.grid, cross3(family.phi_alpha_hat[a], uh), spectral=True) for a in range(3)]


def _max_band(f) -> int:
    """Largest |wrap(k)|_inf carrying a non-negligible coefficient."""
    fh = f.to_spectral().values.reshape(-1, *f.grid.shape)
    mag = np.max(np.abs(fh), axis=0)
    scale = mag.max()
    if scale == 0:
        return 0
    return int(f.grid.wrap_max[mag > 1e-13 * scale].max())


def _dealiased_cross(u: VectorField, f: VectorField, dealias: bool) -> VectorField:
    w = cross3(u.to_physical().values, f.to_physical().values)
    wh = sfft.fftn(w, axes=_AXES) * u.grid.cell_volume
    if dealias:
        wh *= u.grid.band_mask(u.grid.dealias_band)
    return VectorField(u.grid, wh, spectral=True)


def _dealiased_dot(u: VectorField, f: VectorField, dealias: bool) -> ScalarField:
    s = bilinear_form(u, f).to_spectral()
    if dealias:
        return ScalarField(u.grid, s.values * u.grid.band_mask(u.grid.dealias_band), spectral=True)
    return s


def _check_in_G(f: VectorField, tol: float) -> None:
    nf = l2_norm(f)
    if nf == 0:
        return
    dev = l2_norm(f - project_G(f))
    if dev > tol * nf:
        raise ValueError(f"test field is not a gradient: |f - Pf|/|f| = {dev / nf:.2e} > {tol:.0e}")


def apply_Iu(u: VectorField, f: VectorField, dealias: bool = True, g_tol: float = 1e-6) -> VectorField:
    """I_u f = P(u x f) for f in G (spectral output)."""
    if u.grid != f.grid:
        raise ValueError("apply_Iu: grid mismatch")
    _check_in_G(f, g_tol)
    return project_G(_dealiased_cross(u, f, dealias))


def apply_Iu_adjoint(u: VectorField, g: VectorField, dealias: bool = True, g_tol: float = 1e-6) -> VectorField:
    """Adjoint of I_u on G: g -> -P(conj(u) x g)."""
    return -apply_Iu(u.conj(), g, dealias=dealias, g_tol=g_tol)


class GradientBasis:
    """Orthonormal coordinates on the band-limited gradient space G_K.

    ``real=True`` stores only the half spectrum (last axis k >= 0) and works
    with real fields through r2c/c2r transforms; vectors in that mode must
    be Hermitian, which every operation below preserves.
    """

    def __init__(self, grid: Grid3, band: int | None = None, real: bool = False):
        if band is None:
            band = grid.dealias_band
        if not 1 <= band <= grid.dealias_band:
            raise ValueError(f"band must lie in [1, {grid.dealias_band}], got {band}")
        self.grid = grid
        self.band = band
        self.real = real
        n = grid.n
        kx, ky, kz = grid.xi_tilde
        mask = grid.band_mask(band) & (grid.xi2 > 0)
        xi = np.stack(np.broadcast_arrays(kx, ky, kz)).astype(float)
        xi_abs = np.sqrt(grid.xi2)
        unit = np.where(mask, xi / np.where(mask, xi_abs, 1.0), 0.0)
        if real:
            sl = np.s_[..., : n // 2 + 1]
            mask = mask[sl]
            unit = unit[sl]
            weight = np.full(mask.shape, 2.0)
            weight[..., 0] = 1.0
            self.weight = weight * mask
        else:
            self.weight = mask.astype(float)
        self.mask = mask
        self.unit = unit
        self._scale = grid.volume**0.5

    @property
    def dimension(self) -> int:
        return int(self.grid.band_mask(self.band).sum() - 1)

    def norm(self, c: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.weight * np.abs(c) ** 2)))

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.sum(self.weight * a * np.conj(b)))

    def to_physical(self, c: np.ndarray) -> np.ndarray:
        fh = (1j * self._scale) * self.unit * c
        if self.real:
            return sfft.irfftn(fh, s=self.grid.shape, axes=_AXES) / self.grid.cell_volume
        return sfft.ifftn(fh, axes=_AXES) / self.grid.cell_volume

    def from_physical(self, w: np.ndarray) -> np.ndarray:
        """Coordinates of P(truncated w) for a physical vector array w."""
        if self.real:
            wh = sfft.rfftn(w, axes=_AXES)
        else:
            wh = sfft.fftn(w, axes=_AXES)
        wh *= self.grid.cell_volume
        return (-1j / self._scale) * np.sum(self.unit * wh, axis=0) * self.mask

    def random(self, rng: np.random.Generator) -> np.ndarray:
        if self.real:
            phi = rng.standard_normal(self.grid.shape)
            c = sfft.rfftn(phi) * self.mask
        else:
            c = (rng.standard_normal(self.mask.shape) + 1j * rng.standard_normal(self.mask.shape)) * self.mask
        return c / self.norm(c)

    def basis_fields(self) -> tuple[np.ndarray, np.ndarray]:
        """Full-lattice indices of the basis modes and their physical fields.

        Returns (modes, E) with E of shape (M, 3, n, n, n); E[m] has unit L2
        norm and equals L^(-3/2) (i xi/|xi|) exp(i <xi, x>).
        """
        g = self.grid
        mask = g.band_mask(self.band) & (g.xi2 > 0)
        modes = np.argwhere(mask)
        x = np.stack([a.ravel() for a in np.meshgrid(*(g.h * np.arange(g.n),) * 3, indexing="ij")])
        E = np.empty((len(modes), 3, g.n**3), dtype=complex)
        for m, idx in enumerate(modes):
            xi = g.freq1d[idx]
            phase = np.exp(1j * (xi @ x)) / self._scale
            E[m] = (1j * xi / np.linalg.norm(xi))[:, None] * phase[None, :]
        return modes, E.reshape(len(modes), 3, *g.shape)


class _IuOperator:
    """Matrix-free I_u in GradientBasis coordinates."""

    def __init__(self, u: VectorField, band: int | None = None):
        self.grid = u.grid
        up = u.to_physical().values
        self.real = bool(np.all(np.abs(up.imag) <= 1e-14 * max(np.abs(up).max(), 1e-300)))
        self.basis = GradientBasis(u.grid, band, real=self.real)
        if self.real:
            self.u = up.real.copy()
        else:
            self.u = up
        self.u_conj = np.conj(self.u)
        # below this the Rayleigh quotient is roundoff from an annihilating u
        self.zero_floor = (1e-12 * float(np.abs(up).max())) ** 2

    def apply(self, c: np.ndarray) -> np.ndarray:
        f = self.basis.to_physical(c)
        return self.basis.from_physical(cross3(self.u, f))

    def adjoint(self, c: np.ndarray) -> np.ndarray:
        f = self.basis.to_physical(c)
        return -self.basis.from_physical(cross3(self.u_conj, f))

    def normal(self, c: np.ndarray) -> np.ndarray:
        return self.adjoint(self.apply(c))


def _power_run(op: _IuOperator, c: np.ndarray, tol: float, max_iter: int):
    basis = op.basis
    rayleigh = []
    prev = None
    for it in range(1, max_iter + 1):
        w = op.normal(c)
        r = float(basis.inner(w, c).real)
        rayleigh.append(r)
        nw = basis.norm(w)
        if nw == 0.0:
            return 0.0, it, 0.0, True, rayleigh
        c = w / nw
        if it > 2 and max(rayleigh[-3:]) <= op.zero_floor:
            return r, it, 0.0, True, rayleigh
        if prev is not None and abs(r - prev) <= tol * abs(r):
            return r, it, abs(r - prev) / abs(r), True, rayleigh
        prev = r
    resid = abs(rayleigh[-1] - rayleigh[-2]) / abs(rayleigh[-1]) if len(rayleigh) > 1 else np.inf
    return rayleigh[-1], max_iter, resid, False, rayleigh


def operator_norm_power(
    u: VectorField,
    tol: float = 1e-8,
    max_iter: int = 2000,
    seed: int = 0,
    restarts: int = 3,
    band: int | None = None,
    return_history: bool = False,
):
    """Estimate ||I_u|| on G_K by power iteration on I_u^* I_u.

    Each restart starts from a seeded random gradient; the largest estimate
    is reported.  Restarts disagreeing by more than 10*tol flag a degenerate
    top of the spectrum (the value is still valid).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = _IuOperator(u, band)
    values, iters, resids, conv, hist = [], 0, [], True, []
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        lam, it, res, ok, h = _power_run(op, op.basis.random(rng), tol, max_iter)
        values.append(float(np.sqrt(max(lam, 0.0))))
        iters += it
        resids.append(res)
        conv &= ok
        hist.append(h)
        if not ok:
            log.warning("power iteration did not converge in %d steps (residual %.2e)", max_iter, res)
    best = int(np.argmax(values))
    vmax = values[best]
    degenerate = vmax > 0 and (vmax - min(values)) > 10 * tol * vmax
    est = OperatorNormEstimate(
        value=vmax,
        iterations=iters,
        residual=float(resids[best]),
        method="power-iteration",
        converged=conv,
        degenerate=bool(degenerate),
        restart_values=tuple(values),
        band=op.basis.band,
    )
    if return_history:
        return est, hist
    return est


def dense_matrix_oracle(u: VectorField, band: int | None = None):
    """Full matrix of I_u on the orthonormal gradient basis of G_K.

    Entries are assembled directly in physical space,
    M[j, m] = h^3 sum_x <u(x) x E_m(x), conj(E_j(x))>, without any FFT, and
    the norm is the largest singular value.  Limited to n <= 10.
    """
    g = u.grid
    if g.n > 10:
        raise ValueError(f"dense oracle is limited to n <= 10, got n={g.n}")
    basis = GradientBasis(g, band)
    modes, E = basis.basis_fields()
    up = u.to_physical().values
    UE = cross3(up[:, None], np.moveaxis(E, 1, 0))  # (3, M, n, n, n)
    UE = np.moveaxis(UE, 0, 1).reshape(len(modes), -1)
    M = g.cell_volume * (np.conj(E.reshape(len(modes), -1)) @ UE.T)
    sigma = float(np.linalg.svd(M, compute_uv=False)[0]) if M.size else 0.0
    est = OperatorNormEstimate(sigma, 0, 0.0, "dense-oracle", band=basis.band)
    return est, M


# --- lemma residuals ---------------------------------------------------------


def _residual(lemma, t, lhs, rhs, floor, warnings=()):
    a = l2_norm(lhs - rhs)
    nl, nr = l2_norm(lhs), l2_norm(rhs)
    rel = a / max(nl, nr, floor)
    return LemmaResidual(lemma, float(t), a, rel, nl, nr, tuple(warnings))


def _family(grid, t, profile, family):
    return family if family is not None else build_family(grid, t, profile)


def check_lemma1(
    u: VectorField,
    t: float,
    profile: RadialProfile = DEFAULT_PROFILE,
    floor: float = 1e-300,
    require_divfree: bool = True,
    family: TestFamily | None = None,
) -> LemmaResidual:
    """Psi_t * u + sum_a Phi^a_t ⋆ u^a_t for divergence-free u."""
    fam = _family(u.grid, t, profile, family)
    us = u.to_spectral()
    if require_divfree:
        nu = l2_norm(us)
        dv = l2_norm(divergence(us))
        scale = np.sqrt(u.grid.xi2.max())
        if nu > 0 and dv > 1e-10 * nu * scale:
            raise ValueError(f"check_lemma1 needs a divergence-free field (|div u| / (|xi|max |u|) = {dv / (nu * scale):.2e})")
    lhs = VectorField(u.grid, us.values * fam.psi_hat, spectral=True)
    rhs_vals = np.zeros_like(us.values)
    for a, ua in enumerate(derived_fields(us, fam)):
        rhs_vals -= cross3(fam.phi_alpha_hat[a], ua.values)
    return _residual(1, fam.t, lhs, VectorField(u.grid, rhs_vals, spectral=True), floor)


def check_lemma2(
    u: VectorField,
    t: float,
    profile: RadialProfile = DEFAULT_PROFILE,
    floor: float = 1e-300,
    family: TestFamily | None = None,
) -> LemmaResidual:
    """u^a_t - t (d_a Theta)_t * curl u, all three alpha stacked."""
    fam = _family(u.grid, t, profile, family)
    cu = curl(u).values
    mult = fam.t * fam.t * fam.dtheta_hat  # t * multiplier of (d Theta)_t
    lhs = np.concatenate([w.values for w in derived_fields(u, fam)])
    rhs = np.concatenate([mult[a] * cu for a in range(3)])
    g = u.grid
    # stacked as a 9-component field; norms via Plancherel
    diff = lhs - rhs
    a = float(np.sqrt(np.vdot(diff, diff).real / g.volume))
    nl = float(np.sqrt(np.vdot(lhs, lhs).real / g.volume))
    nr = float(np.sqrt(np.vdot(rhs, rhs).real / g.volume))
    return LemmaResidual(2, fam.t, a, a / max(nl, nr, floor), nl, nr)


def check_lemma3(
    u: VectorField,
    f: VectorField,
    t: float,
    profile: RadialProfile = DEFAULT_PROFILE,
    dealias: bool = True,
    floor: float = 1e-300,
    family: TestFamily | None = None,
) -> LemmaResidual:
    """Phi_t * I_u f - t (d Theta)_t * <curl u, f> for f in G."""
    fam = _family(u.grid, t, profile, family)
    warnings = []
    K = u.grid.dealias_band
    if _max_band(u) > K or _max_band(f) > K:
        warnings.append(f"inputs exceed the dealiasing band {K}; the identity is not exact")
    if not dealias:
        warnings.append("dealiasing disabled")
    iu = apply_Iu(u, f, dealias=dealias)
    lhs = VectorField(u.grid, iu.values * fam.phi_hat, spectral=True)
    s = _dealiased_dot(curl(u), f, dealias)
    rhs = VectorField(u.grid, fam.t * fam.t * fam.dtheta_hat * s.values, spectral=True)
    return _residual(3, fam.t, lhs, rhs, floor, warnings)
