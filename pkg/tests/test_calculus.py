import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paracomm.calculus import (
    band_limit,
    band_shell,
    curl,
    divergence,
    gradient,
    mollifier_hat,
    mollify,
    project_G,
    standard_bump,
    weyl_decompose,
)
from paracomm.spectral import Grid3, ScalarField, VectorField, bilinear_form, inner_product, l2_norm, pointwise_cross


def _rand_vec(grid, rng, band=None, real=True):
    v = rng.standard_normal((3,) + grid.shape)
    if not real:
        v = v + 1j * rng.standard_normal((3,) + grid.shape)
    f = VectorField(grid, v)
    if band is not None:
        f = band_limit(f, band).to_physical()
        if real:
            f = f.real()
    return f


def _rand_scalar(grid, rng, band=None):
    f = ScalarField(grid, rng.standard_normal(grid.shape))
    if band is not None:
        f = band_limit(f, band).to_physical().real()
    return f


def _rel(a, b):
    return l2_norm(a) / max(l2_norm(b), 1e-300)


class TestDifferentialOperators:
    def test_gradient_of_mode(self, grid8):
        x = grid8.coords
        phi = ScalarField(grid8, np.broadcast_to(np.sin(2 * x[0]) + np.cos(x[2]), grid8.shape))
        g = gradient(phi).to_physical().values
        np.testing.assert_allclose(g[0].real, np.broadcast_to(2 * np.cos(2 * x[0]), grid8.shape), atol=1e-12)
        np.testing.assert_allclose(g[2].real, np.broadcast_to(-np.sin(x[2]), grid8.shape), atol=1e-12)

    def test_curl_of_gradient(self, grid16, rng):
        phi = _rand_scalar(grid16, rng)
        g = gradient(phi)
        assert _rel(curl(g), g) <= 1e-12

    def test_div_of_curl(self, grid16, rng):
        v = _rand_vec(grid16, rng, real=False)
        c = curl(v)
        assert _rel(divergence(c), c) <= 1e-12

    def test_divcross_identity_truncated(self, grid16, rng):
        K = grid16.dealias_band
        u, f = _rand_vec(grid16, rng, K), _rand_vec(grid16, rng, K)
        lhs = band_limit(divergence(pointwise_cross(u, f)), K)
        rhs = band_limit(bilinear_form(curl(u), f), K) - band_limit(bilinear_form(u, curl(f)), K)
        assert _rel(lhs - rhs, lhs) <= 1e-11

    def test_divcross_identity_unaliased(self, grid32, rng):
        # product band 2 * 7 < 16 keeps every product mode on the lattice
        u, f = _rand_vec(grid32, rng, 7), _rand_vec(grid32, rng, 7)
        lhs = divergence(pointwise_cross(u, f))
        rhs = bilinear_form(curl(u), f) - bilinear_form(u, curl(f))
        assert _rel(lhs - rhs, lhs) <= 1e-11

    def test_outputs_spectral(self, grid8, rng):
        assert gradient(_rand_scalar(grid8, rng)).spectral
        assert divergence(_rand_vec(grid8, rng)).spectral


class TestProjection:
    def test_gradient_fixed_point(self, grid16, rng):
        g = gradient(_rand_scalar(grid16, rng))
        assert _rel(project_G(g) - g, g) <= 1e-12

    def test_kills_divfree(self, grid16, rng):
        v = _rand_vec(grid16, rng, real=False)
        j = v - project_G(v)
        j = j - VectorField.constant(grid16, j.to_physical().mean())
        assert _rel(project_G(j), j) <= 1e-12

    def test_kills_zero_mode(self, grid8):
        assert l2_norm(project_G(VectorField.constant(grid8, [1, 2, 3]))) == 0.0

    def test_uses_bilinear_form(self, grid8):
        # complex coefficients: P must not conjugate v_hat
        vals = np.zeros((3,) + grid8.shape, dtype=complex)
        vals[:, 1, 0, 0] = [1j, 0, 0]
        P = project_G(VectorField(grid8, vals, spectral=True)).values
        assert P[0, 1, 0, 0] == pytest.approx(1j)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_idempotent_selfadjoint_contractive(self, seed):
        g = Grid3(8, 2.5)
        r = np.random.default_rng(seed)
        v, w = _rand_vec(g, r, real=False), _rand_vec(g, r, real=False)
        pv = project_G(v)
        assert _rel(project_G(pv) - pv, pv) <= 1e-12
        a, b = inner_product(pv, w), inner_product(v, project_G(w))
        assert abs(a - b) <= 1e-12 * l2_norm(v) * l2_norm(w)
        assert l2_norm(pv) <= l2_norm(v) * (1 + 1e-14)

    def test_complement_is_divergence_free(self, grid16, rng):
        v = _rand_vec(grid16, rng)
        j = v - project_G(v)
        assert l2_norm(divergence(j)) <= 1e-12 * l2_norm(v) * np.sqrt(grid16.xi2.max())


class TestWeyl:
    def test_constant(self, grid8):
        s = weyl_decompose(VectorField.constant(grid8, [1.0, -1.0, 2.0]))
        np.testing.assert_allclose(s.mean, [1.0, -1.0, 2.0], rtol=1e-14)
        assert l2_norm(s.g_part) < 1e-13 and l2_norm(s.j_part) < 1e-13

    def test_pure_gradient(self, grid16, rng):
        g = gradient(_rand_scalar(grid16, rng))
        s = weyl_decompose(g)
        assert _rel(s.g_part - g, g) <= 1e-12
        assert _rel(s.j_part, g) <= 1e-12

    def test_random_split(self, grid16, rng):
        v = _rand_vec(grid16, rng, real=False)
        s = weyl_decompose(v)
        assert _rel(s.recombine() - v, v) <= 1e-12
        scale = np.sqrt(grid16.xi2.max()) * l2_norm(v)
        assert l2_norm(divergence(s.j_part)) <= 1e-12 * scale
        assert l2_norm(curl(s.g_part)) <= 1e-12 * scale
        # orthogonality against an explicit physical-space inner product
        gp, jp = s.g_part.to_physical().values, s.j_part.to_physical().values
        direct = np.sum(gp * np.conj(jp)) * grid16.cell_volume
        assert abs(direct) <= 1e-12 * l2_norm(v) ** 2


class TestMollifier:
    def test_bump(self):
        assert standard_bump(np.array([0.0]))[0] == pytest.approx(np.exp(-1))
        assert standard_bump(np.array([0.5, 0.7])).tolist() == [0.0, 0.0]

    def test_unit_mass(self, grid32):
        assert mollifier_hat(grid32, 3 * grid32.h)[0, 0, 0] == 1.0

    @pytest.mark.parametrize("eps_cells", [1.0, 5.0])
    def test_scale_range(self, grid32, eps_cells):
        with pytest.raises(ValueError):
            mollifier_hat(grid32, eps_cells * grid32.h)

    def test_constant_preserved(self, grid32):
        c = VectorField.constant(grid32, [1.5, -0.5, 2.0])
        m = mollify(c, 4 * grid32.h).to_physical()
        assert _rel(m - c, c) <= 1e-12

    def test_divergence_free_preserved(self, grid32, rng):
        v = _rand_vec(grid32, rng)
        u = (v - project_G(v)).to_physical()
        m = mollify(u, 3 * grid32.h)
        assert l2_norm(divergence(m)) <= 1e-12 * l2_norm(u) * np.sqrt(grid32.xi2.max())

    def test_contraction(self, grid32, rng):
        u = _rand_vec(grid32, rng)
        for cells in (2, 3, 4):
            assert l2_norm(mollify(u, cells * grid32.h)) <= l2_norm(u) * (1 + 1e-14)

    def test_convergence_monotone(self, rng):
        g = Grid3(64)
        u = _rand_vec(g, rng, band=4)
        eps = g.length / 8
        errs = []
        while eps >= 2 * g.h * (1 - 1e-12):
            errs.append(l2_norm(mollify(u, eps) - u))
            eps /= 2
        assert len(errs) == 3
        assert all(b < a for a, b in zip(errs, errs[1:]))


class TestBands:
    def test_band_limit(self, grid16, rng):
        f = band_limit(_rand_vec(grid16, rng), 3)
        assert np.all(f.values[:, grid16.wrap_max > 3] == 0)

    def test_band_shell(self, grid16, rng):
        f = band_shell(_rand_scalar(grid16, rng), 2.0, 3.0).values
        w = grid16.wrap.astype(float)
        r = np.sqrt(w[:, None, None] ** 2 + w[None, :, None] ** 2 + w[None, None, :] ** 2)
        assert np.all(f[(r < 2) | (r > 3)] == 0)
        assert np.any(f[(r >= 2) & (r <= 3)] != 0)
