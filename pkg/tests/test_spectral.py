import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paracomm.spectral import (
    Grid3,
    GridMismatchError,
    RepresentationError,
    ScalarField,
    VectorField,
    bilinear_form,
    forward_transform,
    inner_product,
    inverse_transform,
    l2_norm,
    load_field,
    pointwise_cross,
    save_field,
)

from .helpers import direct_convolution, direct_dft


def _random_scalar(grid, rng):
    return ScalarField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def _random_vector(grid, rng, real=False):
    v = rng.standard_normal((3,) + grid.shape)
    if not real:
        v = v + 1j * rng.standard_normal((3,) + grid.shape)
    return VectorField(grid, v)


class TestGrid3:
    def test_spacing_and_volume(self):
        g = Grid3(16, 4.0)
        assert g.h == 0.25
        assert g.volume == 64.0
        assert g.cell_volume == 0.25**3

    @pytest.mark.parametrize("n", [4, 6, 12, 20])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid3(n)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            Grid3(8, 0.0)

    def test_zero_frequency(self, grid8):
        assert all(np.all(x.ravel()[0] == 0) for x in grid8.xi)

    def test_frequencies_odd_except_nyquist(self, grid16):
        k = grid16.freq1d
        neg = (-np.arange(16)) % 16
        non_nyq = np.abs(grid16.wrap) != 8
        np.testing.assert_array_equal(k[neg][non_nyq], -k[non_nyq])

    def test_wrap_range(self, grid8):
        assert grid8.wrap.min() == -3 and grid8.wrap.max() == 4

    def test_xi_tilde_zeroes_nyquist(self, grid8):
        kx = grid8.xi_tilde[0].ravel()
        assert kx[4] == 0.0 and grid8.xi[0].ravel()[4] != 0.0

    def test_dealias_band(self):
        assert [Grid3(n).dealias_band for n in (8, 16, 32, 64)] == [2, 5, 10, 21]


class TestTransforms:
    def test_constant(self, grid8):
        fh = forward_transform(ScalarField(grid8, np.ones(grid8.shape))).values.copy()
        assert fh[0, 0, 0] == pytest.approx(grid8.volume, rel=1e-14)
        fh[0, 0, 0] = 0
        assert np.abs(fh).max() < 1e-12

    def test_pure_mode(self, grid8):
        k0 = (1, -2, 3)
        xi = 2 * np.pi * np.array(k0) / grid8.length
        x = grid8.coords
        f = ScalarField(grid8, np.exp(1j * (xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2])))
        fh = forward_transform(f).values.copy()
        idx = tuple(k % 8 for k in k0)
        assert fh[idx] == pytest.approx(grid8.volume, rel=1e-13)
        fh[idx] = 0
        assert np.abs(fh).max() < 1e-11

    def test_matches_direct_summation(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        fh = forward_transform(f).values.copy()
        oracle = direct_dft(grid8, f.values)
        assert np.linalg.norm(fh - oracle) / np.linalg.norm(oracle) < 1e-13

    def test_vector_matches_direct_summation(self, grid8, rng):
        v = _random_vector(grid8, rng)
        oracle = direct_dft(grid8, v.values)
        assert np.linalg.norm(forward_transform(v).values - oracle) / np.linalg.norm(oracle) < 1e-13

    def test_representation_errors(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        with pytest.raises(RepresentationError):
            inverse_transform(f)
        with pytest.raises(RepresentationError):
            forward_transform(f.to_spectral())

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), length=st.floats(0.5, 20.0))
    def test_roundtrip(self, seed, length):
        g = Grid3(8, length)
        f = _random_vector(g, np.random.default_rng(seed))
        back = inverse_transform(forward_transform(f))
        assert l2_norm(back - f) / l2_norm(f) <= 1e-12

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_plancherel(self, seed):
        g = Grid3(16, 3.0)
        f = _random_scalar(g, np.random.default_rng(seed))
        direct = g.cell_volume * np.sum(np.abs(f.values) ** 2)
        spectral = np.sum(np.abs(forward_transform(f).values) ** 2) / g.volume
        assert spectral == pytest.approx(direct, rel=1e-12)

    def test_convolution_theorem(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        g = _random_scalar(grid8, rng)
        conv = direct_convolution(grid8, f.values, g.values)
        lhs = forward_transform(ScalarField(grid8, conv)).values
        rhs = f.to_spectral().values * g.to_spectral().values
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-12


class TestFieldArithmetic:
    def test_values_read_only(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 1.0

    def test_mixed_representation_sum(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        s = f + f.to_spectral()
        assert l2_norm(s - f * 2) / l2_norm(f) < 1e-13

    def test_grid_mismatch(self, grid8, rng):
        f = _random_scalar(grid8, rng)
        g = _random_scalar(Grid3(8, 1.0), rng)
        with pytest.raises(GridMismatchError):
            inner_product(f, g)

    def test_vector_shape_check(self, grid8):
        with pytest.raises(ValueError):
            VectorField(grid8, np.zeros(grid8.shape))

    def test_mean(self, grid8):
        v = VectorField.constant(grid8, [1.0, 2.0, -3.0])
        np.testing.assert_allclose(v.mean(), [1.0, 2.0, -3.0], rtol=1e-14)


class TestNormsAndProducts:
    def test_norm_of_zero(self, grid8):
        assert l2_norm(ScalarField(grid8, np.zeros(grid8.shape))) == 0.0

    def test_norm_definition(self, grid8, rng):
        f = _random_vector(grid8, rng)
        expected = np.sqrt(grid8.cell_volume * np.sum(np.abs(f.values) ** 2))
        assert l2_norm(f) == pytest.approx(expected, rel=1e-14)
        assert l2_norm(f.to_spectral()) == pytest.approx(expected, rel=1e-13)

    def test_inner_product_direct_sum(self, grid8, rng):
        f, g = _random_vector(grid8, rng), _random_vector(grid8, rng)
        direct = 0j
        fv, gv = f.values.ravel(), g.values.ravel()
        for a, b in zip(fv, gv):
            direct += a * np.conj(b)
        direct *= grid8.cell_volume
        assert abs(inner_product(f, g) - direct) / abs(direct) <= 1e-13
        assert abs(inner_product(f.to_spectral(), g.to_spectral()) - direct) / abs(direct) <= 1e-13

    def test_bilinear_frame_orthogonality(self, grid8):
        e1 = VectorField.constant(grid8, [1, 0, 0])
        e2 = VectorField.constant(grid8, [0, 1, 0])
        assert np.all(bilinear_form(e1, e2).values == 0)

    def test_bilinear_has_no_conjugation(self, grid8, rng):
        u = _random_vector(grid8, rng)
        b = bilinear_form(u, u).values
        np.testing.assert_allclose(b, np.sum(u.values**2, axis=0), rtol=1e-14)

    def test_cross_frame(self, grid8):
        e1 = VectorField.constant(grid8, [1, 0, 0])
        e2 = VectorField.constant(grid8, [0, 1, 0])
        np.testing.assert_array_equal(pointwise_cross(e1, e2).values, VectorField.constant(grid8, [0, 0, 1]).values)

    def test_cross_self_and_orthogonality(self, grid8, rng):
        u, v = _random_vector(grid8, rng, real=True), _random_vector(grid8, rng, real=True)
        assert np.all(pointwise_cross(u, u).values == 0)
        w = pointwise_cross(u, v)
        assert np.abs(bilinear_form(w, u).values).max() < 1e-14


class TestSerialization:
    def test_roundtrip(self, tmp_path, grid8, rng):
        v = _random_vector(grid8, rng)
        p = tmp_path / "v.pcf"
        save_field(p, v)
        w = load_field(p)
        assert isinstance(w, VectorField) and w.grid == grid8 and not w.spectral
        np.testing.assert_allclose(w.values, v.values, rtol=1e-6, atol=1e-6)

    def test_layout(self, tmp_path, grid8):
        vals = np.zeros((3,) + grid8.shape, dtype=complex)
        vals[:, 0, 0, 1] = [1, 2, 3]
        p = tmp_path / "v.pcf"
        save_field(p, VectorField(grid8, vals, spectral=True))
        data = p.read_bytes()
        assert data[:4] == b"PCFD"
        payload = np.frombuffer(data, dtype="<c8", offset=19)
        # point (0, 0, 1) is the second triple in row-major order
        np.testing.assert_array_equal(payload[3:6], [1, 2, 3])

    def test_scalar_and_bad_magic(self, tmp_path, grid8, rng):
        f = _random_scalar(grid8, rng).to_spectral()
        p = tmp_path / "f.pcf"
        save_field(p, f)
        g = load_field(p)
        assert isinstance(g, ScalarField) and g.spectral
        p.write_bytes(b"XXXX" + p.read_bytes()[4:])
        with pytest.raises(ValueError):
            load_field(p)
