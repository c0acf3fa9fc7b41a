import math

import numpy as np
import pytest

from pnf import fixtures
from pnf.algebra import PolyMap, max_rel_diff, project, substitute_linear
from pnf.normalform import (adjoint_kernel_residual, build_phi_N, check_criteria, nf_remainder,
                            normalize, stirling_check)
from pnf.spectrum import default_tol_res, eigen_data


def autonomous_slice(V: PolyMap) -> PolyMap:
    return V._new({a: c[(c.shape[0] - 1) // 2][None, :] for a, c in V.terms.items()})


class TestBuild:
    def test_hopf_cubic_is_resonant_and_autonomous(self):
        s = fixtures.hopf()
        b = build_phi_N(s, 3)
        assert b.N.degrees() == [3]
        assert all(c.shape[0] == 1 for c in b.N.terms.values())
        eig = eigen_data(s)
        G = substitute_linear(b.N, eig.P).apply_matrix(eig.Pinv)
        tol = default_tol_res(eig)
        for a, c in G.terms.items():
            for j in np.nonzero(np.abs(c[0]) > 1e-12)[0]:
                assert abs(eig.divisor(a, 0, int(j), "normal")) <= tol
                assert abs(a[0] - a[1]) == 1

    def test_zero_field(self):
        s = fixtures.hopf().with_(V=PolyMap.zero(2, 2, 2 * math.pi))
        b = build_phi_N(s, 5)
        assert b.phi.is_zero() and b.N.is_zero()

    def test_solve_residuals(self):
        s = fixtures.hopf_1to1()
        b = build_phi_N(s, 4)
        assert all(r < 1e-10 for r in b.residuals)

    def test_autonomous_degeneration(self):
        s = fixtures.hopf()
        s = s.with_(V=autonomous_slice(s.V))
        b = build_phi_N(s, 5)
        for P in (b.phi, b.N):
            assert all(c.shape[0] == 1 for c in P.terms.values())


class TestRemainder:
    def test_identity_change_of_variables(self):
        s = fixtures.hopf()
        zero = PolyMap.zero(2, 2, s.period)
        rem = nf_remainder(s, zero, zero, 1)
        assert max_rel_diff(rem.R, project(s.V, 2, rem.D_max)) == 0

    @pytest.mark.parametrize("p", [2, 3, 4])
    def test_identities(self, p):
        s = fixtures.hopf_1to1()
        b = build_phi_N(s, p)
        rem = nf_remainder(s, b.phi, b.N, p)
        assert rem.R.min_degree == p + 1
        assert max(rem.neumann_residual, rem.conjugacy_residual) < 1e-10

    def test_wrong_normal_form_detected(self):
        s = fixtures.hopf()
        b = build_phi_N(s, 3)
        with pytest.raises(ArithmeticError):
            nf_remainder(s, b.phi, b.N * 0.5, 3)


class TestCriteria:
    def test_zero(self):
        assert check_criteria(PolyMap.zero(2, 2, 2 * math.pi), np.eye(2)) == 0

    def test_hopf(self):
        s = fixtures.hopf()
        N = build_phi_N(s, 3).N
        assert check_criteria(N, s.L) < 1e-10
        assert adjoint_kernel_residual(N, s.L) < 1e-12

    def test_corrupted(self):
        s = fixtures.hopf()
        N = build_phi_N(s, 3).N + PolyMap.monomial((3, 0), np.array([[0.0, 1.0]]), s.period)
        assert check_criteria(N, s.L) > 1e-3
        assert adjoint_kernel_residual(N, s.L) > 1e-3

    def test_time_sign_matters_off_mode_zero(self):
        # at 1:1 resonance the normal form keeps k != 0 terms; the commutation
        # identity holds with N evaluated at -t, while +t fails
        s = fixtures.hopf_1to1()
        N = normalize(s, 0.05, 3).N
        assert N.kmax > 0
        assert check_criteria(N, s.L) < 1e-9
        assert check_criteria(N, s.L, literal=True) > 1e-3

    def test_signs_agree_when_autonomous(self):
        s = fixtures.hopf()
        N = build_phi_N(s, 3).N
        assert abs(check_criteria(N, s.L) - check_criteria(N, s.L, literal=True)) < 1e-12


class TestDriver:
    def test_normalize_report(self):
        s = fixtures.hopf()
        r = normalize(s, 0.05)
        assert r.p == max(2, r.p_opt)
        assert r.certified_bound <= r.estimate
        assert r.kernel_residual < 1e-10

    def test_stirling_constant(self):
        r = normalize(fixtures.hopf(), 0.05, 3)
        assert stirling_check(r.constants) < 1e-12
