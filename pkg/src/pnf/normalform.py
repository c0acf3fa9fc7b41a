"""Normal forms ``dX/dt = L X + N(X, t) + R(X, t)`` with a tiny remainder.

After ``U = X + Phi(X, t)`` the polynomial part ``N`` only keeps monomials in
the kernel of the adjoint homological operator; everything else up to degree
``p`` is removed and the rest is the remainder ``R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import PolyMap, compose, directional_derivative, project
from .homological import apply_forward, split_normal
from .norms import graded_norm
from .spectrum import (ConstantsReport, EigenData, NonResonanceReport, check_nonresonance,
                       constants_normal, eigen_data)
from .system import SystemSpec
from .uncouple import certified_sup_bound

IDENTITY_TOL = 1e-10


def default_cap(sys: SystemSpec, p: int) -> int:
    """Truncation degree for the (non-polynomial) remainder."""
    return min(sys.deg_V * p, p + 2 * sys.deg_V)


@dataclass
class NormalFormBuild:
    phi: PolyMap
    N: PolyMap
    residuals: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def build_phi_N(sys: SystemSpec, p: int, eig: EigenData | None = None,
                tol_res: float | None = None) -> NormalFormBuild:
    """Change of variables ``Phi`` and normal form ``N``, degrees ``2..p``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    eig = eig or eigen_data(sys)
    m, T = sys.m, sys.period
    ident = PolyMap.identity(m, T)
    Phi = PolyMap.zero(m, m, T, real=sys.V.real)
    N = PolyMap.zero(m, m, T, real=sys.V.real)
    out = NormalFormBuild(Phi, N)
    for n in range(2, p + 1):
        W = compose(sys.V, ident + Phi, n, n)
        if not (Phi.is_zero() or N.is_zero()):
            W = W - directional_derivative(Phi, N, n)
        sol = split_normal(W.part(n), sys, eig, tol_res)
        out.residuals.append(sol.residual)
        out.warnings.extend(sol.warnings)
        Phi = Phi + sol.phi
        N = N + sol.normal
    out.phi, out.N = Phi, N
    return out


@dataclass
class NormalRemainder:
    R: PolyMap
    neumann_residual: float
    conjugacy_residual: float
    D_max: int


def nf_remainder(sys: SystemSpec, Phi: PolyMap, N: PolyMap, p: int, D_max: int | None = None,
                 tol: float = IDENTITY_TOL) -> NormalRemainder:
    """Solve ``(Id + D Phi) R = (Id - Pi_p)(V(X + Phi) - D Phi . N)`` through ``D_max``.

    ``D Phi`` raises the degree, so the Neumann series terminates after at
    most ``D_max - p`` steps.  The conjugacy identity
    ``(d/dt + B_L) Phi + (Id + D Phi)(N + R) = V(X + Phi)`` is checked too.
    """
    D = default_cap(sys, p) if D_max is None else D_max
    if D < p:
        raise ValueError("D_max must be at least p")
    m, T = sys.m, sys.period
    W = compose(sys.V, PolyMap.identity(m, T) + Phi, D)
    DN = directional_derivative(Phi, N, D)
    E = project(W - DN, p + 1, D)
    R = E
    for _ in range(D - p + 1):
        nxt = E - directional_derivative(Phi, R, D)
        if (nxt - R).is_zero():
            break
        R = nxt
    scale = max(1.0, W.max_abs(), E.max_abs())
    neu = ((R + directional_derivative(Phi, R, D)) - E).max_abs() / scale
    lhs = apply_forward(Phi, sys, "normal") + N + R + DN + directional_derivative(Phi, R, D)
    conj = (project(lhs, 0, D) - W).max_abs() / scale
    if max(neu, conj) > tol:
        raise ArithmeticError(f"normal-form identities fail: {neu:.3e}, {conj:.3e}")
    return NormalRemainder(R, neu, conj, D)


def adjoint_kernel_residual(N: PolyMap, L: np.ndarray) -> float:
    """``max |d/dt N - B_{L*} N|`` relative to the size of ``N``, coefficientwise."""
    Ls = np.asarray(L).conj().T
    lin = PolyMap.linear(Ls, N.period)
    B = directional_derivative(N, lin) - N.apply_matrix(Ls)
    return (N.dt() - B).max_abs() / max(1.0, N.max_abs())


def check_criteria(N: PolyMap, L: np.ndarray, samples: int = 64, seed: int = 0,
                   literal: bool = False) -> float:
    """Largest sampled violation of the commutation criterion for ``N``.

    Tests ``exp(-t L*) N(exp(t L*) y, -t) = N(y, 0)``, which is what membership
    in the kernel of ``-d/dt + B_{L*}`` integrates to.  With ``literal=True`` the
    time argument is ``+t``; the two coincide for autonomous ``N``.
    """
    rng = np.random.default_rng(seed)
    m = N.dim
    Ls = np.asarray(L).conj().T
    f = N.evaluator()
    worst = 0.0
    for _ in range(samples):
        y = rng.standard_normal(m)
        y /= max(1.0, np.linalg.norm(y))
        t = rng.uniform(0, N.period)
        E = scipy.linalg.expm(t * Ls)
        Einv = scipy.linalg.expm(-t * Ls)
        lhs = Einv @ f(E @ y, t if literal else -t)
        worst = max(worst, float(np.linalg.norm(lhs - f(y, 0.0))))
    return worst


@dataclass
class NormalFormResult:
    delta: float
    p: int
    p_opt: int
    constants: ConstantsReport
    nonresonance: NonResonanceReport
    phi: PolyMap
    N: PolyMap
    R: PolyMap
    D_max: int
    neumann_residual: float
    conjugacy_residual: float
    solve_residuals: list[float]
    certified_bound: float
    estimate: float
    kernel_residual: float
    warnings: list[str] = field(default_factory=list)


def certify(sys: SystemSpec, p_hint: int, tau: float | None = None, tol_res: float | None = None,
            eig: EigenData | None = None, delta: float | None = None
            ) -> tuple[NonResonanceReport, ConstantsReport, int]:
    eig = eig or eigen_data(sys)
    deg = max(2, p_hint)
    while True:
        nr = check_nonresonance(sys, tau, deg, deg * sys.V.kmax, "normal", tol_res, eig=eig)
        rep = constants_normal(sys, nr.gamma_eff, tau, eig)
        need = deg if delta is None else max(p_hint, 2, rep.p_opt(delta))
        if need <= deg:
            return nr, rep, deg
        deg = need


def normalize(sys: SystemSpec, delta: float, p: int | None = None, D_max: int | None = None,
              tau: float | None = None, tol_res: float | None = None) -> NormalFormResult:
    """Certify, choose the degree for ``delta``, and build ``Phi``, ``N`` and ``R``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    eig = eigen_data(sys)
    nr, rep, _ = certify(sys, p or 2, tau, tol_res, eig, None if p else delta)
    popt = rep.p_opt(delta)
    p_use = p if p else max(2, popt)
    b = build_phi_N(sys, p_use, eig, tol_res)
    rem = nf_remainder(sys, b.phi, b.N, p_use, D_max)
    return NormalFormResult(
        delta=delta, p=p_use, p_opt=popt, constants=rep, nonresonance=nr, phi=b.phi, N=b.N,
        R=rem.R, D_max=rem.D_max, neumann_residual=rem.neumann_residual,
        conjugacy_residual=rem.conjugacy_residual, solve_residuals=b.residuals,
        certified_bound=certified_sup_bound(rem.R, delta, sys.ell),
        estimate=rep.remainder_bound(delta),
        kernel_residual=adjoint_kernel_residual(b.N, sys.L), warnings=b.warnings,
    )


def normal_form_norms(N: PolyMap, ell: int) -> dict[int, float]:
    return {n: graded_norm(N.part(n), ell) for n in N.degrees()}


def sup_radius_bound(R: PolyMap, delta: float, ell: int) -> float:
    return certified_sup_bound(R, delta, ell) if not R.is_zero() else 0.0


def stirling_check(report: ConstantsReport) -> float:
    """Distance of the scanned supremum from ``e^3`` (attained at ``p = 1``)."""
    return abs(report.stirling - math.e ** 3)
