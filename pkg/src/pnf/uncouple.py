"""Polynomial graph ``u1 = Phi(u0, t)`` that decouples E1 from E0 up to a tiny remainder.

The change of variables ``u1 = v1 + Phi(u0, t)`` is built degree by degree.
Each degree solves one homological equation whose right-hand side only
involves lower degrees; the part of the transformed equation that cannot be
matched beyond degree ``p`` is the remainder ``R(u0, t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import PolyMap, compose, directional_derivative, max_rel_diff, project
from .homological import apply_forward, solve_coupling
from .norms import graded_norm, graded_norms, sufficient_c
from .spectrum import (ConstantsReport, EigenData, NonResonanceReport, check_nonresonance,
                       constants_graph, eigen_data, eigen_decompose)
from .system import SystemSpec

IDENTITY_TOL = 1e-10


def phi_bar(Phi: PolyMap, sys: SystemSpec) -> PolyMap:
    """``u0 -> (u0, Phi(u0, t))``."""
    return PolyMap.stack([PolyMap.identity(sys.m0, sys.period), Phi])


def full_degree(sys: SystemSpec, p: int) -> int:
    """Degree beyond which every term of the transformed equation vanishes."""
    p = max(p, 1)
    extra = p - 1 if not sys.V0.is_zero() else 0
    return sys.deg_V * p + extra


def coupling_expression(sys: SystemSpec, Phi: PolyMap, max_deg: int) -> PolyMap:
    """``V1(u0 + Phi) - D_{u0} Phi . V0(u0 + Phi)`` through ``max_deg``."""
    W = compose(sys.V, phi_bar(Phi, sys), max_deg)
    W0, W1 = W.components(range(sys.m0)), W.components(range(sys.m0, sys.m))
    if Phi.is_zero() or W0.is_zero():
        return W1
    return W1 - directional_derivative(Phi, W0, max_deg)


def _zero_phi(sys: SystemSpec) -> PolyMap:
    return PolyMap.zero(sys.m0, sys.m1, sys.period, real=sys.V.real)


def build_phi(sys: SystemSpec, p: int, eig: EigenData | None = None,
              residuals: list[float] | None = None) -> PolyMap:
    """The graph map ``Phi = Phi_2 + ... + Phi_p``.

    ``residuals`` (if given) collects the relative residual of every solve.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    eig = eig or eigen_data(sys)
    Phi = _zero_phi(sys)
    for n in range(2, p + 1):
        rhs = coupling_expression(sys, Phi, n).part(n)
        sol = solve_coupling(rhs, sys, eig)
        if residuals is not None:
            residuals.append(sol.residual)
        Phi = Phi + sol.phi
    return Phi


@dataclass
class Remainder:
    R: PolyMap
    identity_residual: float
    D_max: int


def compute_remainder(sys: SystemSpec, Phi: PolyMap, p: int, D_max: int | None = None,
                      tol: float = IDENTITY_TOL) -> Remainder:
    """``R = (Id - Pi_p)(V1(u0 + Phi) - D Phi . V0(u0 + Phi))`` through ``D_max``.

    Also checks the defining identity at degrees ``<= p`` and raises when its
    residual exceeds ``tol`` (relative per coefficient).
    """
    D = full_degree(sys, p) if D_max is None else D_max
    if D < p:
        raise ValueError("D_max must be at least p")
    E = coupling_expression(sys, Phi, D)
    low = project(E, 0, p) - apply_forward(Phi, sys, "graph")
    scale = max(1.0, E.max_abs())
    resid = low.max_abs() / scale
    if resid > tol:
        raise ArithmeticError(f"defining identity fails: residual {resid:.3e}")
    return Remainder(project(E, p + 1, D), resid, D)


def choose_p_opt(delta: float, report: ConstantsReport) -> int:
    """``ceil((2 delta K)^-b)``, the degree minimising the remainder estimate."""
    return report.p_opt(delta)


def working_degree(delta: float, report: ConstantsReport) -> int:
    """Degree actually used: the optimal one, never below 2.

    Inside the guaranteed range the optimal degree is already at least 2;
    the floor only matters for radii where no estimate is claimed.
    """
    return max(2, report.p_opt(delta))


def certified_sup_bound(R: PolyMap, delta: float, ell: int) -> float:
    """``sum_n ||R_n||_n delta^n``, an upper bound for ``sup_{|u0|<=delta} |R(u0,.)|_{H^ell}``."""
    return float(sum(v * delta ** n for n, v in graded_norms(R, ell).items()))


@dataclass
class Transformed:
    """Right-hand side in the variables ``(u0, v1)``; ``R`` depends on ``u0`` only."""

    V0: PolyMap
    V1: PolyMap
    R: PolyMap
    D: int


def transform(sys: SystemSpec, Phi: PolyMap, p: int, D: int | None = None) -> Transformed:
    """Exact transformed system after ``u1 = v1 + Phi(u0, t)``."""
    D = full_degree(sys, p) if D is None else D
    m0, m1, m, T = sys.m0, sys.m1, sys.m, sys.period
    ident = PolyMap.identity(m, T)
    Phi_m = Phi.embed(m, list(range(m0)))
    psi = ident + PolyMap.stack([PolyMap.zero(m, m0, T), Phi_m])
    W = compose(sys.V, psi, D)
    W0, W1 = W.components(range(m0)), W.components(range(m0, m))
    G = PolyMap.stack([W0, PolyMap.zero(m, m1, T)])
    F = W1 - directional_derivative(Phi_m, G, D) if not Phi.is_zero() else W1
    on_graph = F.select(lambda a: not any(a[m0:]))
    V1 = F - on_graph
    R_full = on_graph - apply_forward(Phi, sys, "graph").embed(m, list(range(m0)))
    R = R_full._new({a[:m0]: c for a, c in R_full.terms.items()}, nvars=m0)
    return Transformed(W0, V1, R, D)


def augment_epsilon(base: SystemSpec, eps_terms: PolyMap, c: float | None = None) -> SystemSpec:
    """Adjoin a parameter as an extra E0 coordinate with zero dynamics.

    ``eps_terms`` is a map of ``(u0, u1, eps)`` whose terms all carry a positive
    power of ``eps``.  The augmented coordinates are ``(u0, eps, u1)``.
    """
    m0, m = base.m0, base.m
    if (eps_terms.nvars, eps_terms.dim) != (m + 1, m):
        raise ValueError("parameter terms must map (u, eps) to the phase space")
    if any(a[m] == 0 for a in eps_terms.terms):
        raise ValueError("every parameter term must carry a power of eps")
    order = list(range(m0)) + [m0 + 1 + i for i in range(base.m1)] + [m0]
    V = base.V.embed(m + 1, order[:m])
    V = V + eps_terms.embed(m + 1, order)
    zero_row = PolyMap.zero(m + 1, 1, base.period)
    V = PolyMap.stack([V.components(range(m0)), zero_row, V.components(range(m0, m))])
    L0 = scipy.linalg.block_diag(base.L0, np.zeros((1, 1)))
    lam, P = base.eig0 if base.eig0 is not None else eigen_decompose(base.L0)
    eig0 = (np.append(lam, 0.0), scipy.linalg.block_diag(P, np.ones((1, 1))))
    if c is None:
        c = max(base.c, sufficient_c(V, base.rho, base.ell))
    return base.with_(L0=L0, V=V, c=c, eig0=eig0, name=base.name + "+eps")


@dataclass
class EpsilonSplit:
    phi: PolyMap
    phi_autonomous: PolyMap
    phi_unforced: PolyMap
    phi_parameter: PolyMap
    gap: float
    autonomous_is_static: bool
    time_dependence_carries_eps: bool


def epsilon_split(base: SystemSpec, eps_terms: PolyMap, p: int) -> EpsilonSplit:
    """Split ``Phi = Phi_A(u0) + eps Phi_BC(u0, eps, t)`` and compare with the unforced run."""
    aug = augment_epsilon(base, eps_terms)
    m0 = base.m0
    phi = build_phi(aug, p)
    auto = phi.select(lambda a: a[m0] == 0)
    auto = auto._new({a[:m0]: c for a, c in auto.terms.items()}, nvars=m0)
    rest = phi.select(lambda a: a[m0] > 0)
    rest = rest._new({a[:m0] + (a[m0] - 1,): c for a, c in rest.terms.items()})
    unforced = build_phi(base, p)
    static = all(c.shape[0] == 1 for c in auto.terms.values())
    carries = all(a[m0] >= 1 for a, c in phi.terms.items() if c.shape[0] > 1)
    return EpsilonSplit(phi, auto, unforced, rest, max_rel_diff(auto, unforced), static, carries)


@dataclass
class UncoupleResult:
    delta: float
    p: int
    p_opt: int
    constants: ConstantsReport
    nonresonance: NonResonanceReport
    phi: PolyMap
    R: PolyMap
    D_max: int
    identity_residual: float
    solve_residuals: list[float]
    certified_bound: float
    estimate: float
    in_range: bool
    phi_norms: dict[int, float] = field(default_factory=dict)
    gevrey: dict[int, float] = field(default_factory=dict)


def gevrey_envelope(report: ConstantsReport, n: int) -> float:
    """``sqrt(m0) K^(n-1) (n!)^(ell+1+tau nu)``."""
    s = report.ell + 1 + report.tau * report.nu
    return math.sqrt(report.m0) * math.exp((n - 1) * math.log(report.K) + s * math.lgamma(n + 1))


def certify(sys: SystemSpec, p_hint: int, tau: float | None = None, tol_res: float | None = None,
            eig: EigenData | None = None, delta: float | None = None
            ) -> tuple[NonResonanceReport, ConstantsReport, int]:
    """Scan divisors over every degree the construction will touch and fix the constants.

    The scan range depends on the degree, which depends on the constants, so
    iterate until the scanned degree covers the working degree.
    """
    eig = eig or eigen_data(sys)
    deg = max(2, p_hint)
    while True:
        nr = check_nonresonance(sys, tau, deg, deg * sys.V.kmax, "graph", tol_res, eig=eig)
        rep = constants_graph(sys, nr.gamma_eff, tau, eig)
        need = deg if delta is None else max(p_hint, working_degree(delta, rep))
        if need <= deg:
            return nr, rep, deg
        deg = need


def uncouple(sys: SystemSpec, delta: float, p: int | None = None, D_max: int | None = None,
             tau: float | None = None, tol_res: float | None = None) -> UncoupleResult:
    """Certify the hypotheses, pick the degree for ``delta`` and build ``Phi`` and ``R``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    eig = eigen_data(sys)
    nr, rep, _ = certify(sys, p or 2, tau, tol_res, eig, None if p else delta)
    popt = rep.p_opt(delta)
    p_use = p if p else working_degree(delta, rep)
    res: list[float] = []
    phi = build_phi(sys, p_use, eig, res)
    rem = compute_remainder(sys, phi, p_use, D_max)
    norms = {1: math.sqrt(sys.m0)}
    norms.update({n: graded_norm(phi.part(n), sys.ell) for n in range(2, p_use + 1)})
    return UncoupleResult(
        delta=delta, p=p_use, p_opt=popt, constants=rep, nonresonance=nr, phi=phi, R=rem.R,
        D_max=rem.D_max, identity_residual=rem.identity_residual, solve_residuals=res,
        certified_bound=certified_sup_bound(rem.R, delta, sys.ell),
        estimate=rep.remainder_bound(delta), in_range=rep.in_range(delta),
        phi_norms=norms, gevrey={n: gevrey_envelope(rep, n) for n in norms},
    )
