import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sizeshape.exceptions import DegenerateConfigurationError
from sizeshape.geometry import (
    decompose,
    euler_from_rotation,
    helmert_submatrix,
    helmertize,
    is_rotation,
    proper_svd,
    random_rotation,
    rotation_from_angle,
    rotation_from_euler,
    ss_distance,
    unhelmertize,
    wrap_euler,
)

seeds = st.integers(0, 2**32 - 1)


def rz(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def ry(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])


class TestHelmert:
    def test_k1(self):
        np.testing.assert_allclose(helmert_submatrix(1), [[-1 / np.sqrt(2), 1 / np.sqrt(2)]], atol=1e-15)

    def test_k2(self):
        expected = [[-1 / np.sqrt(2), 1 / np.sqrt(2), 0], [-1 / np.sqrt(6), -1 / np.sqrt(6), 2 / np.sqrt(6)]]
        np.testing.assert_allclose(helmert_submatrix(2), expected, atol=1e-15)

    @pytest.mark.parametrize("k", range(1, 21))
    def test_orthonormal_rows_sum_to_zero(self, k):
        h = helmert_submatrix(k)
        assert h.shape == (k, k + 1)
        np.testing.assert_allclose(h @ h.T, np.eye(k), atol=1e-12)
        np.testing.assert_allclose(h.sum(axis=1), 0.0, atol=1e-12)

    @pytest.mark.parametrize("bad", [0, -1, 2.5])
    def test_invalid_k(self, bad):
        with pytest.raises(ValueError):
            helmert_submatrix(bad)


class TestHelmertize:
    def test_constant_configuration_is_zero(self):
        np.testing.assert_allclose(helmertize(np.tile([3.0, -2.0], (4, 1))), 0.0, atol=1e-14)

    @given(seeds)
    def test_translation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(5, 3))
        t = rng.normal(scale=100, size=3)
        np.testing.assert_allclose(helmertize(x + t), helmertize(x), atol=1e-10)

    def test_triangle(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        # rows of H_2 applied by hand
        expected = np.array([[1 / np.sqrt(2), 0.0], [-1 / np.sqrt(6), 2 / np.sqrt(6)]])
        np.testing.assert_allclose(helmertize(tri), expected, atol=1e-15)

    def test_round_trip_with_centroid(self, rng):
        x = rng.normal(size=(4, 2))
        back = unhelmertize(helmertize(x), x.mean(axis=0))
        np.testing.assert_allclose(back, x, atol=1e-12)

    @pytest.mark.parametrize("shape", [(3, 4), (2, 2), (3, 3)])
    def test_dimension_errors(self, shape):
        # p must be 2 or 3 and k = rows - 1 >= p
        with pytest.raises(ValueError):
            helmertize(np.ones(shape))

    def test_non_finite(self):
        x = np.ones((4, 2))
        x[1, 1] = np.nan
        with pytest.raises(ValueError):
            helmertize(x)


class TestDecompose:
    def test_already_canonical(self):
        y = np.array([[3.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
        sas, r = decompose(y)
        np.testing.assert_allclose(sas.y, y, atol=1e-14)
        np.testing.assert_allclose(r, np.eye(2), atol=1e-14)

    @pytest.mark.parametrize("p", [2, 3])
    @given(seed=seeds)
    @settings(max_examples=50)
    def test_round_trip_and_invariants(self, p, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(p + 2, p))
        sas, r = decompose(x)
        assert is_rotation(r)
        np.testing.assert_allclose(sas.y @ r.T, x, atol=1e-8)
        s = sas.singular_values
        assert np.all(s >= 0) and np.all(np.diff(s) <= 0)
        np.testing.assert_allclose(np.linalg.eigvalsh(sas.y.T @ sas.y)[::-1], s**2, rtol=1e-10)

    @pytest.mark.parametrize("p", [2, 3])
    @given(seed=seeds)
    @settings(max_examples=50)
    def test_rotation_invariance(self, p, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(3, p))
        q = random_rotation(p, rng)
        np.testing.assert_allclose(decompose(x @ q.T)[0].y, decompose(x)[0].y, atol=1e-8)

    @pytest.mark.parametrize("p", [2, 3])
    def test_compose_round_trip(self, rng, p):
        y = decompose(rng.normal(size=(4, p)))[0].y
        r = random_rotation(p, rng)
        sas, r_hat = decompose(y @ r.T)
        np.testing.assert_allclose(sas.y, y, atol=1e-8)
        np.testing.assert_allclose(r_hat, r, atol=1e-8)

    def test_reflection_kept_in_y(self, rng):
        x = rng.normal(size=(3, 2))
        x_ref = x @ np.diag([1.0, -1.0])
        _, r = decompose(x_ref)
        assert np.linalg.det(r) == pytest.approx(1.0)
        # a reflected configuration is not a rotated copy of the original
        assert ss_distance(decompose(x)[0], decompose(x_ref)[0]) > 1e-3

    def test_rank_deficient(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(DegenerateConfigurationError):
            decompose(x)


class TestRotations:
    def test_angle_special_values(self):
        np.testing.assert_allclose(rotation_from_angle(0.0), np.eye(2))
        np.testing.assert_allclose(rotation_from_angle(np.pi / 2), [[0, -1], [1, 0]], atol=1e-15)

    @given(st.floats(-20, 20), st.floats(-20, 20))
    def test_angle_group_property(self, a, b):
        np.testing.assert_allclose(
            rotation_from_angle(a) @ rotation_from_angle(b), rotation_from_angle(a + b), atol=1e-12
        )

    def test_batched_angles(self):
        t = np.linspace(0, 7, 11)
        r = rotation_from_angle(t)
        assert r.shape == (11, 2, 2)
        assert all(is_rotation(x) for x in r)

    def test_euler_identity(self):
        np.testing.assert_allclose(rotation_from_euler(0, 0, 0), np.eye(3), atol=1e-15)

    @given(st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
    def test_gimbal(self, a, c):
        np.testing.assert_allclose(rotation_from_euler(a, 0.0, c), rz(a + c), atol=1e-12)

    @given(st.floats(0, 2 * np.pi), st.floats(0, np.pi), st.floats(0, 2 * np.pi))
    def test_euler_matches_product(self, a, b, c):
        r = rotation_from_euler(a, b, c)
        np.testing.assert_allclose(r, rz(a) @ ry(b) @ rz(c), atol=1e-12)
        np.testing.assert_allclose(r.T @ r, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    @given(st.floats(0.01, 2 * np.pi - 0.01), st.floats(1e-3, np.pi - 1e-3), st.floats(0.01, 2 * np.pi - 0.01))
    def test_euler_inverse(self, a, b, c):
        got = euler_from_rotation(rotation_from_euler(a, b, c))
        np.testing.assert_allclose(got, (a, b, c), atol=1e-7)

    @pytest.mark.parametrize("b", [0.0, np.pi])
    def test_euler_inverse_at_gimbal(self, b):
        r = rotation_from_euler(1.1, b, 0.7)
        np.testing.assert_allclose(rotation_from_euler(*euler_from_rotation(r)), r, atol=1e-12)

    @given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
    def test_wrap_preserves_rotation(self, a, b, c):
        wa, wb, wc = wrap_euler(a, b, c)
        assert 0 <= wa < 2 * np.pi and 0 <= wb <= np.pi and 0 <= wc < 2 * np.pi
        np.testing.assert_allclose(rz(wa) @ ry(wb) @ rz(wc), rz(a) @ ry(b) @ rz(c), atol=1e-10)

    @pytest.mark.parametrize("p", [2, 3])
    def test_random_rotation(self, rng, p):
        assert all(is_rotation(r) for r in random_rotation(p, rng, size=200))

    def test_proper_svd(self, rng):
        a = rng.normal(size=(50, 3, 3))
        u, s, vt = proper_svd(a)
        np.testing.assert_allclose(np.linalg.det(u), 1.0)
        np.testing.assert_allclose(np.linalg.det(vt), 1.0)
        np.testing.assert_allclose((u * s[:, None, :]) @ vt, a, atol=1e-12)

    def test_is_rotation_rejects_reflection(self):
        assert not is_rotation(np.diag([1.0, -1.0]))


class TestDistance:
    def test_zero_cases(self, rng):
        y = rng.normal(size=(3, 3))
        q = random_rotation(3, rng)
        assert ss_distance(y, y) == pytest.approx(0.0, abs=1e-12)
        assert ss_distance(y, y @ q) == pytest.approx(0.0, abs=1e-9)

    def test_grid_oracle(self, rng):
        y1, y2 = rng.normal(size=(3, 2)), rng.normal(size=(3, 2))
        theta = np.linspace(0, 2 * np.pi, 10**6, endpoint=False)
        c, s = np.cos(theta), np.sin(theta)
        # ||y1 R(t) - y2||^2 expanded in cos t and sin t
        a = y1.T @ y2
        sq = np.sum(y1**2) + np.sum(y2**2) - 2 * (c * (a[0, 0] + a[1, 1]) + s * (a[0, 1] - a[1, 0]))
        assert ss_distance(y1, y2) == pytest.approx(np.sqrt(sq.min()), abs=1e-6)

    def test_reflection_not_allowed(self, rng):
        # over O(p) the distance would be zero; over SO(p) it is not
        y = rng.normal(size=(4, 3))
        assert ss_distance(y, y @ np.diag([1, 1, -1.0])) > 1e-3

    @given(seeds)
    def test_symmetry_and_triangle(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.normal(size=(3, 4, 3))
        assert ss_distance(a, b) == pytest.approx(ss_distance(b, a), abs=1e-9)
        assert ss_distance(a, c) <= ss_distance(a, b) + ss_distance(b, c) + 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ss_distance(np.ones((3, 2)), np.ones((4, 2)))

    def test_accepts_size_and_shape(self, rng):
        x = rng.normal(size=(3, 2))
        assert ss_distance(decompose(x)[0], x) == pytest.approx(0.0, abs=1e-9)
