import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pnf import fixtures
from pnf.algebra import PolyMap, max_rel_diff
from pnf.norms import graded_norm, hj_norms
from pnf.spectrum import constants_graph
from pnf.uncouple import (build_phi, certified_sup_bound, compute_remainder, epsilon_split,
                          phi_bar, transform, uncouple, working_degree)
from pnf.verify import oracle_solve, sample_points

TWO_PI = 2 * math.pi


def c_of(t):
    return (math.cos(t) + math.sin(t)) / 2


def cubic_only():
    """``u1' = -u1 + u0^3 cos t``: nothing to remove at degree 2."""
    V = PolyMap(2, 2, TWO_PI, {(3, 0): np.array([[0, 0.5], [0, 0], [0, 0.5]], dtype=complex)}, True)
    return fixtures.uncouple_basic().with_(V=V)


class TestGraph:
    def test_phi2_closed_form(self):
        phi = build_phi(fixtures.uncouple_basic(), 2)
        for t in np.linspace(0, TWO_PI, 7):
            assert phi(np.array([1.0]), t)[0] == pytest.approx(c_of(t), abs=1e-15)

    def test_no_coupling_means_no_graph(self):
        V = PolyMap(2, 2, TWO_PI, {(2, 0): np.array([[1.0, 0.0]]), (1, 1): np.array([[0.0, 1.0]])}, True)
        s = fixtures.uncouple_basic().with_(V=V)
        assert build_phi(s, 6).is_zero()

    @pytest.mark.parametrize("name", ["uncouple_basic", "touze_amabili"])
    def test_p3_oracle(self, name):
        s = fixtures.bundled(name)
        assert max_rel_diff(oracle_solve(s, 3).phi, build_phi(s, 3)) < 1e-10


class TestRemainder:
    def test_p2_closed_form(self):
        s = fixtures.uncouple_basic()
        rem = compute_remainder(s, build_phi(s, 2), 2, 4)
        assert rem.R.degrees() == [3, 4]
        for t in np.linspace(0, TWO_PI, 7):
            x = np.array([1.0])
            assert rem.R.part(3)(x, t)[0] == pytest.approx(c_of(t), abs=1e-15)
            assert rem.R.part(4)(x, t)[0] == pytest.approx(c_of(t) ** 2, abs=1e-15)

    def test_zero_graph(self):
        s = cubic_only()
        rem = compute_remainder(s, build_phi(s, 2), 2)
        assert build_phi(s, 2).is_zero()
        want = s.V1.select(lambda a: a[1] == 0)
        assert max_rel_diff(rem.R, want._new({a[:1]: c for a, c in want.terms.items()}, nvars=1)) == 0

    def test_low_degrees_vanish(self):
        s = fixtures.uncouple_basic()
        for p in (2, 3, 5):
            R = compute_remainder(s, build_phi(s, p), p).R
            assert R.min_degree == p + 1

    def test_identity_failure_detected(self):
        s = fixtures.uncouple_basic()
        wrong = build_phi(s, 2) * 1.01
        with pytest.raises(ArithmeticError):
            compute_remainder(s, wrong, 2)

    def test_certified_single_term(self):
        R = PolyMap(1, 1, TWO_PI, {(3,): np.array([[0.5], [0.0], [0.5]])}, True)
        assert certified_sup_bound(R, 0.1, 1) == pytest.approx(graded_norm(R, 1) * 1e-3, rel=1e-14)
        assert certified_sup_bound(PolyMap.zero(1, 1, TWO_PI), 0.1, 1) == 0


class TestDegreeChoice:
    def rep(self, K=10.0):
        rep = constants_graph(fixtures.uncouple_basic(), 2.0)
        rep.K, rep.b = K, 1 / 3
        return rep

    def test_example(self):
        assert self.rep().p_opt(0.01) == 2

    def test_monotone(self):
        rep = constants_graph(fixtures.uncouple_basic(), 2.0)
        ps = [rep.p_opt(d) for d in np.geomspace(1e-2, 1e-12, 40)]
        assert all(a <= b for a, b in zip(ps, ps[1:])) and ps[-1] > ps[0]

    def test_boundary(self):
        assert self.rep().p_opt(1 / 20) == 1
        assert working_degree(1 / 20, self.rep()) == 2


class TestTransformed:
    def test_v1_part_vanishes_on_graph(self):
        s = fixtures.bundled("touze_amabili")
        tr = transform(s, build_phi(s, 3), 3)
        assert tr.V1.terms and all(any(a[s.m0:]) for a in tr.V1.terms)

    def test_zero_graph(self):
        s = cubic_only()
        tr = transform(s, PolyMap.zero(1, 1, TWO_PI), 2)
        assert max_rel_diff(tr.V0, s.V0) == 0
        assert max_rel_diff(tr.R._new(tr.R.terms, nvars=1), compute_remainder(
            s, PolyMap.zero(1, 1, TWO_PI), 2).R) == 0

    def test_sampled_difference_bound(self):
        s = fixtures.bundled("uncouple_basic")
        r = uncouple(s, 0.9 * constants_graph(s, 2.0).delta0)
        rep = r.constants
        tr = transform(s, r.phi, r.p)
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(500):
            u0 = rng.uniform(-1, 1, s.m0) * rep.delta0
            v1 = rng.uniform(-1, 1, s.m1) * rep.delta0
            val = hj_norms(tr.V1.modes_at(np.concatenate([u0, v1])[None, :]), s.ell)[0]
            bound = rep.M0 * np.linalg.norm(v1) * (np.linalg.norm(u0) + np.linalg.norm(v1))
            worst = max(worst, val / bound)
        assert worst <= 1.0

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.05, 0.99))
    def test_graph_is_small(self, frac):
        s = fixtures.bundled("uncouple_basic")
        delta = frac * constants_graph(s, 2.0).delta0
        r = uncouple(s, delta)
        full = phi_bar(r.phi, s)
        pts = sample_points(s.m0, delta, 50)
        vals = hj_norms(full.modes_at(pts), s.ell)
        assert np.all(vals <= 2 * np.linalg.norm(pts, axis=1) * math.sqrt(s.m0))


class TestEpsilon:
    def test_touze_amabili(self):
        base, eps = fixtures.touze_amabili_parts()
        sp = epsilon_split(base, eps, 4)
        assert sp.gap < 1e-10 and sp.autonomous_is_static and sp.time_dependence_carries_eps

    def test_no_parameter_terms(self):
        base, eps = fixtures.touze_amabili_parts()
        sp = epsilon_split(base, PolyMap.zero(eps.nvars, eps.dim, eps.period), 3)
        assert sp.phi_parameter.is_zero() and sp.gap < 1e-12

    def test_parameter_terms_must_carry_eps(self):
        base, eps = fixtures.touze_amabili_parts()
        bad = eps + PolyMap(5, 4, eps.period, {(2, 0, 0, 0, 0): np.array([[0, 1.0, 0, 0]])}, True)
        with pytest.raises(ValueError):
            epsilon_split(base, bad, 2)
