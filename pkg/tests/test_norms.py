import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gen
from pnf.algebra import HomoPoly, PolyMap, TrigPoly, trig_mul
from pnf.norms import (algebra_constant, fischer_inner, graded_norm, hj_norm, hj_norms,
                       sufficient_c, two_n_norm)

TWO_PI = 2 * math.pi
COS = np.array([[0.5], [0.0], [0.5]])


def mono(alpha, coeff, nvars=2, dim=1):
    return PolyMap(nvars, dim, TWO_PI, {alpha: np.atleast_2d(np.asarray(coeff, dtype=complex))}, True)


class TestHj:
    def test_cos_l2(self):
        assert hj_norm(TrigPoly(TWO_PI, COS, True), 0) == pytest.approx(1 / math.sqrt(2), rel=1e-15)

    def test_cos_h1(self):
        assert hj_norm(TrigPoly(TWO_PI, COS, True), 1) == pytest.approx(1.0, rel=1e-15)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=4), st.floats(0, 5))
    def test_constant_is_euclidean(self, v, j):
        c = np.array([v], dtype=complex)
        assert hj_norm(c, j) == pytest.approx(float(np.linalg.norm(v)), rel=1e-14, abs=1e-300)

    def test_vectorised(self):
        rng = np.random.default_rng(0)
        a = np.stack([gen.trig_modes(rng, 3, 2) for _ in range(5)])
        assert np.allclose(hj_norms(a, 1.5), [hj_norm(x, 1.5) for x in a], rtol=1e-14)

    @given(st.integers(0, 2 ** 31), st.floats(0, 3))
    def test_monotone_in_j(self, seed, j):
        f = gen.trig_modes(np.random.default_rng(seed), 4, 2)
        assert hj_norm(f, j) <= hj_norm(f, j + 0.5) * (1 + 1e-14)


class TestGraded:
    def test_fischer_weights(self):
        assert two_n_norm(mono((1, 1), [[1.0]])) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
        assert two_n_norm(mono((2, 0), [[1.0]])) == 1.0
        both = mono((1, 1), [[1.0]]) + mono((2, 0), [[1.0]])
        assert two_n_norm(both) == pytest.approx(math.sqrt(1.5), rel=1e-15)

    def test_cos_square(self):
        assert graded_norm(mono((2, 0), COS), 0) == pytest.approx(1 / math.sqrt(2), rel=1e-15)

    def test_constant_pure_power(self):
        v = np.array([[3.0, -4.0]])
        assert graded_norm(mono((0, 5), v, dim=2), 2) == pytest.approx(5.0, rel=1e-15)

    def test_zero(self):
        assert graded_norm(PolyMap.zero(2, 2, TWO_PI), 1) == 0.0

    def test_rejects_mixed_degrees(self):
        with pytest.raises(ValueError):
            graded_norm(mono((2, 0), [[1.0]]) + mono((3, 0), [[1.0]]), 0)

    def test_fischer_inner_matches_norm(self):
        rng = np.random.default_rng(5)
        F = gen.homo(rng, 3, 2, 4, 2)
        assert fischer_inner(F, F).real / math.factorial(4) == pytest.approx(graded_norm(F, 0) ** 2,
                                                                              rel=1e-13)

    def test_monomials_orthogonal(self):
        assert fischer_inner(mono((2, 0), [[1.0]]), mono((1, 1), [[1.0]])) == 0


class TestAlgebraConstant:
    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_against_mpmath(self, ell):
        mpmath.mp.dps = 30
        s = mpmath.nsum(lambda k: (1 + k * k) ** (-ell), [-mpmath.inf, mpmath.inf])
        assert algebra_constant(ell) == pytest.approx(float(2 ** ell * mpmath.sqrt(s)), rel=1e-13)

    def test_closed_form_ell_1(self):
        ref = 2 * math.sqrt(math.pi / math.tanh(math.pi))
        assert algebra_constant(1) == pytest.approx(ref, rel=1e-14)
        assert algebra_constant(1) == pytest.approx(3.55153380664589048, rel=1e-14)

    def test_large_ell(self):
        for ell in (10, 20, 40):
            r = algebra_constant(ell) / 2 ** ell
            assert 1 < r < 1 + 2 ** (1 - ell)

    def test_rejects_small_index(self):
        with pytest.raises(ValueError):
            algebra_constant(0.5)

    @settings(max_examples=200)
    @given(st.integers(0, 2 ** 31), st.integers(1, 3))
    def test_product_inequality(self, seed, ell):
        rng = np.random.default_rng(seed)
        f = TrigPoly(TWO_PI, gen.trig_modes(rng, int(rng.integers(0, 8)), 1), True)
        g = TrigPoly(TWO_PI, gen.trig_modes(rng, int(rng.integers(0, 8)), 1), True)
        lhs = hj_norm(trig_mul(f, g), ell)
        assert lhs <= algebra_constant(ell) * hj_norm(f, ell) * hj_norm(g, ell) * (1 + 1e-12)


class TestSufficientC:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_analyticity_bound_on_diagonal(self, seed):
        rng = np.random.default_rng(seed)
        V = gen.homo(rng, 2, 2, 2, 2) + gen.homo(rng, 2, 2, 3, 1)
        rho = float(rng.uniform(0.3, 2.0))
        c = sufficient_c(V, rho, 1)
        for n in V.degrees():
            Vn = V.part(n)
            x = gen.sphere(rng, 2, float(rng.uniform(0.1, 2.0)))
            val = hj_norm(Vn.modes_at(x[None, :])[0], 1)
            assert val <= c * rho ** -n * np.linalg.norm(x) ** n * (1 + 1e-12)

    def test_zero_map(self):
        assert sufficient_c(PolyMap.zero(2, 2, TWO_PI), 1.0, 1) == 0.0

    def test_homogeneous_cast(self):
        rng = np.random.default_rng(9)
        F = gen.homo(rng, 2, 1, 3, 1)
        assert isinstance(F, HomoPoly) and sufficient_c(F, 1.0, 1) == graded_norm(F, 1)
