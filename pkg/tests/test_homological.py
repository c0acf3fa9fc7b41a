import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import gen
from pnf import fixtures
from pnf.algebra import HomoPoly, PolyMap, enumerate_indices, max_rel_diff, substitute_linear
from pnf.homological import (NonResonanceError, apply_forward, resonant_monomials, solve_coupling,
                             split_normal)
from pnf.norms import fischer_inner, graded_norm
from pnf.normalform import adjoint_kernel_residual
from pnf.spectrum import check_nonresonance, eigen_data, homological_constants
from pnf.system import SystemSpec

TWO_PI = 2 * math.pi
COS = np.array([[0.5], [0.0], [0.5]], dtype=complex)


def basic(L1=(-1.0,)):
    L1 = np.atleast_2d(L1)
    m = 1 + L1.shape[0]
    return SystemSpec(TWO_PI, [[0.0]], L1, PolyMap.zero(m, m, TWO_PI), c=1.0, rho=1.0,
                      eig0=(np.array([0.0]), np.eye(1)))


def eigen_monomial(sys, alpha, j):
    """``x^alpha e_j`` in eigen-coordinates, written in the original coordinates."""
    eig = eigen_data(sys)
    e = np.zeros((1, sys.m), dtype=complex)
    e[0, j] = 1.0
    G = PolyMap(sys.m, sys.m, sys.period, {alpha: e}, False)
    return HomoPoly.of(substitute_linear(G, eig.Pinv).apply_matrix(eig.P), sum(alpha))


class TestCoupling:
    def test_closed_form(self):
        F = HomoPoly(1, 1, TWO_PI, {(2,): COS}, True, degree=2)
        sol = solve_coupling(F, basic())
        for t in np.linspace(0, TWO_PI, 9):
            want = (math.cos(t) + math.sin(t)) / 2 * 0.3 ** 2
            assert sol.phi(np.array([0.3]), t)[0] == pytest.approx(want, abs=1e-15)
        assert sol.residual < 1e-15

    def test_zero(self):
        sol = solve_coupling(HomoPoly(1, 1, TWO_PI, {}, True, degree=3), basic())
        assert sol.phi.is_zero()

    def test_time_independent(self):
        rng = np.random.default_rng(1)
        L1 = gen.real_normal(rng, 2, False)
        s = basic(L1)
        F = gen.homo(rng, 1, 2, 3, 0)
        sol = solve_coupling(F, s)
        assert all(c.shape[0] == 1 for c in sol.phi.terms.values())
        want = -np.linalg.solve(L1, F.terms[(3,)][0])
        assert np.allclose(sol.phi.terms[(3,)][0], want, rtol=1e-13)

    def test_singular_solve_reported(self):
        L0 = np.array([[0.0, 1.0], [-1.0, 0.0]])
        s = SystemSpec(TWO_PI, L0, [[0.0]], PolyMap.zero(3, 3, TWO_PI), c=1.0, rho=1.0)
        F = HomoPoly(2, 1, TWO_PI, {(1, 1): np.array([[1.0]])}, True, degree=2)
        with pytest.raises(NonResonanceError):
            solve_coupling(F, s)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        s = gen.system(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)), float(rng.uniform(1, 8)))
        n = int(rng.integers(2, 6))
        F = gen.homo(rng, s.m0, s.m1, n, 3, s.period)
        sol = solve_coupling(F, s)
        assert graded_norm(HomoPoly.of(apply_forward(sol.phi, s) - F, n), 0) <= 1e-10 * graded_norm(F, 0)


class TestSplit:
    def test_hopf_cubic_resonance(self):
        s = fixtures.hopf()
        eig = eigen_data(s)
        jp = int(np.argmin(np.abs(eig.lam - 1j * math.sqrt(2))))
        alpha = (2, 1) if jp == 0 else (1, 2)
        F = eigen_monomial(s, alpha, jp)
        sol = split_normal(F, s)
        assert max_rel_diff(sol.normal, F) < 1e-13
        assert sol.phi.max_abs() < 1e-13

    def test_nonresonant_degree(self):
        s = fixtures.hopf()
        F = gen.homo(np.random.default_rng(2), 2, 2, 2, 2)
        sol = split_normal(F, s)
        assert sol.normal.is_zero()
        assert max_rel_diff(apply_forward(sol.phi, s, "normal"), F) < 1e-12

    @pytest.mark.parametrize("n,K", [(2, 1), (3, 2), (4, 3)])
    def test_resonant_count_brute_force(self, n, K):
        s = fixtures.hopf_1to1()
        lam = (1j, -1j)
        count = 0
        for a in enumerate_indices(2, n):
            for k, j in itertools.product(range(-K, K + 1), range(2)):
                if abs(a[0] * lam[0] + a[1] * lam[1] + 1j * k - lam[j]) < 1e-12:
                    count += 1
        assert len(resonant_monomials(s, n, K)) == count > 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 31), st.sampled_from(["hopf", "hopf_1to1"]))
    def test_split_bounds(self, seed, name):
        rng = np.random.default_rng(seed)
        s = fixtures.bundled(name)
        n, K = int(rng.integers(2, 5)), int(rng.integers(0, 4))
        F = gen.homo(rng, 2, 2, n, K)
        sol = split_normal(F, s)
        assert sol.residual < 1e-10
        for j in (0, 1, 2):
            assert graded_norm(sol.normal, j) <= graded_norm(F, j) * (1 + 1e-12)
        nr = check_nonresonance(s, 1.0, n, F.kmax, "normal", degree_min=n)
        eig = eigen_data(s)
        Cj = homological_constants(nr.gamma_eff, 1, eig.Lambda, s.period, s.ell, "normal")
        for j in range(s.ell + 2):
            assert graded_norm(sol.phi, j) <= Cj[j] * n ** (j + 1) * graded_norm(F, s.ell) * (1 + 1e-12)
        assert adjoint_kernel_residual(sol.normal, s.L) < 1e-10

    def test_phi_orthogonal_to_kernel(self):
        s = fixtures.hopf_1to1()
        rng = np.random.default_rng(7)
        F = gen.homo(rng, 2, 2, 3, 2)
        sol = split_normal(F, s)
        for a, k, j in resonant_monomials(s, 3, 2):
            M = eigen_monomial(s, a, j)
            M = M._new({b: np.pad(c, ((2 + k, 2 - k), (0, 0))) for b, c in M.terms.items()})
            assert abs(fischer_inner(M, sol.phi)) < 1e-12
