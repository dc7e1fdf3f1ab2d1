import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiff.linalg import TridiagonalSystem, build_system, thomas_solve

S_POINT_SOURCE = 3.13328534328875  # Gamma(1.5) * 0.02**0.5 / 0.04


def random_dominant(rng, n):
    sub = rng.uniform(-1, 1, n)
    sup = rng.uniform(-1, 1, n)
    sub[0] = sup[-1] = 0.0
    diag = (np.abs(sub) + np.abs(sup) + rng.uniform(0.01, 2.0, n)) * rng.choice([-1, 1], n)
    return TridiagonalSystem(sub, diag, sup, rng.standard_normal(n))


class TestBuild:
    def test_zero_rhs(self):
        sys_ = build_system(1.0, np.zeros(3), np.zeros(3), 0.0, 0.0)
        np.testing.assert_array_equal(sys_.diag, [3.0, 3.0, 3.0])
        np.testing.assert_array_equal(sys_.sub[1:], [-1.0, -1.0])
        np.testing.assert_array_equal(sys_.sup[:-1], [-1.0, -1.0])
        np.testing.assert_array_equal(thomas_solve(sys_), [0.0, 0.0, 0.0])

    def test_boundary_folding(self):
        sys_ = build_system(0.5, np.zeros(4), None, 2.0, 0.0)
        assert sys_.rhs[0] == 1.0 and sys_.rhs[-1] == 0.0

    def test_point_source_coefficient(self):
        s_n = math.gamma(1.5) * 1.0 * 0.02**0.5 / 0.2**2
        assert s_n == pytest.approx(S_POINT_SOURCE, rel=1e-13)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError, match="s_n"):
            build_system(0.0, np.zeros(3), None, 0.0, 0.0)
        with pytest.raises(ValueError, match="shape"):
            build_system(1.0, np.zeros(3), np.zeros(4), 0.0, 0.0)

    def test_inputs_untouched(self):
        m = np.ones(3)
        build_system(2.0, m, None, 5.0, 5.0)
        np.testing.assert_array_equal(m, 1.0)

    @given(st.floats(1e-8, 1e8), st.integers(1, 60))
    def test_always_dominant(self, s_n, size):
        assert build_system(s_n, np.zeros(size), None, 0.0, 0.0).is_diagonally_dominant()

    @settings(max_examples=50)
    @given(st.floats(1e-4, 1e4), st.integers(1, 50), st.integers(0, 2**32 - 1))
    def test_nonnegative_inverse(self, s_n, size, seed):
        rng = np.random.default_rng(seed)
        rhs = rng.uniform(0, 1, size) * (rng.random(size) < 0.5)
        x = thomas_solve(build_system(s_n, rhs, None, 0.0, 0.0))
        assert np.all(x >= -1e-15 * max(1.0, rhs.max(initial=0.0)))


class TestThomas:
    def test_identity(self):
        r = np.array([1.0, -2.0, 3.0])
        sys_ = TridiagonalSystem(np.zeros(3), np.ones(3), np.zeros(3), r)
        np.testing.assert_array_equal(thomas_solve(sys_), r)

    def test_three_by_three_against_dense(self):
        sys_ = TridiagonalSystem(
            np.array([0.0, -1.0, -1.0]),
            np.array([3.0, 3.0, 3.0]),
            np.array([-1.0, -1.0, 0.0]),
            np.array([1.0, 0.0, 1.0]),
        )
        dense = np.linalg.solve(sys_.to_dense(), sys_.rhs)
        np.testing.assert_allclose(thomas_solve(sys_), dense, rtol=1e-12)
        np.testing.assert_allclose(dense, [3 / 7, 2 / 7, 3 / 7], rtol=1e-14)

    def test_dense_oracle_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            sys_ = random_dominant(rng, int(rng.integers(1, 51)))
            a = sys_.to_dense()
            x = thomas_solve(sys_)
            ref = np.linalg.solve(a, sys_.rhs)
            assert np.max(np.abs(x - ref)) <= 1e-12 * max(np.max(np.abs(ref)), 1.0)
            assert np.max(np.abs(a @ x - sys_.rhs)) <= 1e-10 * np.max(np.abs(sys_.rhs))

    def test_input_not_modified(self):
        rng = np.random.default_rng(1)
        sys_ = random_dominant(rng, 10)
        before = [a.copy() for a in (sys_.sub, sys_.diag, sys_.sup, sys_.rhs)]
        thomas_solve(sys_)
        for a, b in zip(before, (sys_.sub, sys_.diag, sys_.sup, sys_.rhs)):
            np.testing.assert_array_equal(a, b)

    def test_accepts_lists(self):
        sys_ = TridiagonalSystem([0, 0], [2, 2], [0, 0], [4, 6])
        np.testing.assert_array_equal(thomas_solve(sys_), [2.0, 3.0])

    def test_small_pivot(self):
        sys_ = TridiagonalSystem(np.zeros(2), np.array([1e-16, 1.0]), np.zeros(2), np.ones(2))
        with pytest.raises(np.linalg.LinAlgError, match="row 0"):
            thomas_solve(sys_)
        sys_ = TridiagonalSystem(
            np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0]), np.ones(2)
        )
        with pytest.raises(np.linalg.LinAlgError, match="row 1"):
            thomas_solve(sys_)
