"""Operator norms, dual norms, and their upper-bound/pairing properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvcert import Norm, argmax_dual, dual_vector_norm, norm_p_to_inf, operator_norm

from conftest import ALL_NORMS


class TestNorm:
    def test_duals(self):
        assert Norm(1).dual.p == math.inf
        assert Norm(2).dual.p == 2.0
        assert Norm(math.inf).dual.p == 1.0

    def test_parse(self):
        assert Norm.parse("inf").p == math.inf
        assert Norm.parse("2") == Norm(2)
        with pytest.raises(ValueError):
            Norm.parse("3")

    def test_rejects_unsupported_p(self):
        with pytest.raises(ValueError):
            Norm(1.5)


class TestOperatorNorm:
    def test_identity_spectral(self):
        assert operator_norm(np.eye(3), Norm(2)) == pytest.approx(1.0, abs=1e-8)

    def test_diagonal_spectral(self):
        assert operator_norm(np.diag([3.0, -4.0]), Norm(2)) == pytest.approx(4.0, abs=1e-8)

    def test_random_matches_singular_value_oracle(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((8, 5))
        val = operator_norm(A, Norm(2))
        # lower bound: max over random unit vectors
        V = rng.standard_normal((5, 10**5))
        V /= np.linalg.norm(V, axis=0)
        lower = np.max(np.linalg.norm(A @ V, axis=0))
        exact = np.linalg.svd(A, compute_uv=False)[0]
        assert val >= lower
        assert val == pytest.approx(exact, abs=1e-8)

    def test_exact_one_and_inf(self):
        A = np.array([[1.0, -2.0], [3.0, 4.0]])
        assert operator_norm(A, Norm(1)) == 6.0          # max column abs sum
        assert operator_norm(A, Norm(math.inf)) == 7.0   # max row abs sum

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            operator_norm(np.array([[1.0, np.nan]]), Norm(2))

    def test_fast_mode_close_to_certified(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((12, 9))
        fast = operator_norm(A, Norm(2), mode="fast")
        cert = operator_norm(A, Norm(2), mode="certified")
        assert fast <= cert * (1 + 1e-6)
        assert fast == pytest.approx(cert, rel=1e-4)

    @pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
    def test_certified_upper_bound_property(self, norm):
        rng = np.random.default_rng(11)
        for _ in range(5):
            A = rng.standard_normal((rng.integers(2, 9), rng.integers(2, 9)))
            bound = operator_norm(A, norm)
            X = rng.standard_normal((A.shape[1], 10**4))
            ratios = np.linalg.norm(A @ X, ord=norm.p, axis=0) \
                / np.linalg.norm(X, ord=norm.p, axis=0)
            assert bound >= np.max(ratios)

    @pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
    def test_submultiplicative(self, norm):
        rng = np.random.default_rng(5)
        for _ in range(10):
            A = rng.standard_normal((4, 6))
            B = rng.standard_normal((6, 3))
            assert operator_norm(A @ B, norm) <= \
                operator_norm(A, norm) * operator_norm(B, norm) * (1 + 1e-9)


class TestRowNorms:
    def test_identity(self):
        assert norm_p_to_inf(np.eye(4), Norm(2)) == pytest.approx(1.0)

    def test_max_row_two_norm(self):
        A = np.array([[1.0, 1.0], [3.0, 0.0]])
        assert norm_p_to_inf(A, Norm(2)) == pytest.approx(3.0)

    def test_p1_vertex_enumeration_oracle(self):
        # ||A||_{1->inf} = max |entry|; the l1 ball's vertices are +-e_j
        rng = np.random.default_rng(13)
        A = rng.standard_normal((6, 4))
        val = norm_p_to_inf(A, Norm(1))
        vertices = np.vstack([np.eye(4), -np.eye(4)])
        oracle = max(np.max(np.abs(A @ v)) for v in vertices)
        assert val == pytest.approx(oracle, abs=1e-12)

    @pytest.mark.parametrize("norm", ALL_NORMS, ids=str)
    def test_dominates_sampled_quotients(self, norm):
        rng = np.random.default_rng(17)
        A = rng.standard_normal((5, 7))
        bound = norm_p_to_inf(A, norm)
        X = rng.standard_normal((7, 10**4))
        quot = np.max(np.abs(A @ X), axis=0) / np.linalg.norm(X, ord=norm.p, axis=0)
        assert bound >= np.max(quot)


class TestDualVectors:
    def test_examples(self):
        assert dual_vector_norm([3.0, 4.0], Norm(2)) == pytest.approx(5.0)
        assert dual_vector_norm([1.0, -2.0, 3.0], Norm(1)) == pytest.approx(3.0)
        assert dual_vector_norm([1.0, -2.0, 3.0], Norm(math.inf)) == pytest.approx(6.0)

    def test_argmax_examples(self):
        assert np.allclose(argmax_dual([0.0, 5.0], Norm(2)), [0.0, 1.0])
        assert np.allclose(argmax_dual([2.0, -3.0], Norm(math.inf)), [1.0, -1.0])
        assert np.allclose(argmax_dual([2.0, -3.0], Norm(1)), [0.0, -1.0])

    def test_zero_vector_degenerate(self):
        with pytest.raises(ValueError, match="zero vector"):
            argmax_dual(np.zeros(3), Norm(2))

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-100, 100), min_size=1, max_size=8),
        st.sampled_from([1.0, 2.0, math.inf]),
    )
    def test_dual_pairing(self, entries, p):
        v = np.asarray(entries)
        if not np.any(v != 0.0):
            return
        norm = Norm(p)
        d = argmax_dual(v, norm)
        assert np.linalg.norm(d, ord=norm.p) == pytest.approx(1.0, abs=1e-12)
        assert float(v @ d) == pytest.approx(dual_vector_norm(v, norm), abs=1e-12, rel=1e-12)
