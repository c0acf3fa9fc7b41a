"""Solvers for the per-degree homological equations.

Both operators act diagonally on monomials once the linear part is
diagonalised, so each solve works in eigen-coordinates, divides (or solves a
small linear system) mode by mode, and maps the result back.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import (HomoPoly, PolyMap, _pad, compose, substitute_linear, directional_derivative,
                      enumerate_indices, index_factorial)
from .norms import graded_norm
from .spectrum import EigenData, HypothesisViolation, Path, default_tol_res, eigen_data
from .system import SystemSpec

COND_LIMIT = 1e12


class NonResonanceError(HypothesisViolation):
    """A per-mode solve met a (numerically) singular divisor."""


@dataclass
class HomologicalSolution:
    phi: HomoPoly
    normal: HomoPoly
    residual: float
    min_divisor: float
    warnings: list[str] = field(default_factory=list)


def _degree(F: PolyMap) -> int:
    degs = F.degrees()
    if len(degs) > 1:
        raise ValueError(f"right-hand side is not homogeneous: degrees {degs}")
    return degs[0] if degs else 0


def _is_identity(P: np.ndarray) -> bool:
    return P.shape[0] == P.shape[1] and np.array_equal(P, np.eye(P.shape[0]))


def _change_vars(F: PolyMap, A: np.ndarray, n: int) -> PolyMap:
    """``F(A x)``, exact on homogeneous maps of degree ``n``."""
    if _is_identity(A) or F.is_zero():
        return F
    return substitute_linear(F, A)


def _dense_terms(F: PolyMap, keys: list[tuple[int, ...]], K: int) -> np.ndarray:
    out = np.zeros((len(keys), 2 * K + 1, F.dim), dtype=complex)
    for i, a in enumerate(keys):
        c = F.terms.get(a)
        if c is not None:
            out[i] = _pad(c, K)
    return out


def _finish(P: PolyMap, real: bool, n: int) -> HomoPoly:
    P = P.chop()
    if real:
        P = P.realify()
    return HomoPoly.of(P, n)


def apply_forward(Phi: PolyMap, sys: SystemSpec, path: Path = "graph") -> PolyMap:
    """The homological operator applied to ``Phi``.

    ``graph``: ``D Phi . L0 u0 - L1 Phi + d/dt Phi`` for ``Phi(u0, t)`` in E1.
    ``normal``: ``D Phi . L X - L Phi + d/dt Phi`` on the full space.
    """
    T = sys.period
    if path == "graph":
        A, B = sys.L0, sys.L1
    else:
        A = B = sys.L
    if Phi.nvars != A.shape[0] or Phi.dim != B.shape[0]:
        raise ValueError("map does not match the blocks of the linear part")
    lin = PolyMap.linear(A, T, real=True)
    return directional_derivative(Phi, lin) - Phi.apply_matrix(B) + Phi.dt()


def solve_coupling(F: PolyMap, sys: SystemSpec, eig: EigenData | None = None,
                   check: bool = True) -> HomologicalSolution:
    """Solve ``D Phi . L0 u0 - L1 Phi + d/dt Phi = F`` for homogeneous ``F(u0, t)`` in E1.

    In eigen-coordinates of ``L0`` each ``(alpha, k)`` coefficient needs one dense
    ``m1 x m1`` solve with ``(<alpha, lambda0> + i k 2pi/T) I - L1``.
    """
    eig = eig or eigen_data(sys)
    n = _degree(F)
    T, m1 = sys.period, sys.m1
    if (F.nvars, F.dim) != (sys.m0, m1):
        raise ValueError("right-hand side must map E0 to E1")
    zero = HomoPoly(sys.m0, m1, T, {}, F.real, degree=n)
    if F.is_zero():
        return HomologicalSolution(zero, zero, 0.0, np.inf)
    Ft = _change_vars(F, eig.P0, n)
    keys = list(Ft.terms)
    K = Ft.kmax
    C = _dense_terms(Ft, keys, K)
    ks = np.arange(-K, K + 1)
    mu = np.asarray(keys, dtype=float) @ eig.lam0
    mu = mu[:, None] + 1j * eig.omega * ks[None, :]
    nz = np.any(C != 0, axis=-1)
    M = mu[nz][:, None, None] * np.eye(m1) - sys.L1
    sv = np.linalg.svd(M, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = np.where(sv[:, -1] > 0, sv[:, 0] / sv[:, -1], np.inf)
    divs = np.abs(mu[nz][:, None] - eig.lam1[None, :])
    bad = np.nonzero((cond > COND_LIMIT) | (sv[:, -1] <= default_tol_res(eig)))[0]
    if bad.size:
        where = [(keys[i], int(ks[j])) for i, j in zip(*np.nonzero(nz))]
        raise NonResonanceError(f"singular homological solve at (alpha, k) = {where[bad[0]]}",
                                where[bad[0]])
    X = np.zeros_like(C)
    X[nz] = np.linalg.solve(M, C[nz][..., None])[..., 0]
    phit = PolyMap(sys.m0, m1, T, {a: X[i] for i, a in enumerate(keys)}, False)
    phi = _finish(_change_vars(phit, eig.P0inv, n), F.real, n)
    resid = 0.0
    if check:
        back = apply_forward(phi, sys, "graph")
        resid = graded_norm(HomoPoly.of(back - F, n), 0) / max(graded_norm(F, 0), 1e-300)
    return HomologicalSolution(phi, zero, resid, float(divs.min()))


def _monomial_gram(m: int, n: int, Pinv: np.ndarray, T: float,
                   keys: list[tuple[int, ...]]) -> np.ndarray:
    """``S^H D S`` where column ``alpha`` of S expands ``(Pinv X)^alpha`` in X-monomials."""
    N = len(keys)
    basis = PolyMap(m, N, T, {a: np.eye(N)[i][None, :] for i, a in enumerate(keys)}, False)
    S = _dense_terms(_change_vars(basis, Pinv, n), keys, 0)[:, 0, :]
    D = np.array([index_factorial(b) for b in keys], dtype=float)
    return S.conj().T @ (D[:, None] * S)


def split_normal(F: PolyMap, sys: SystemSpec, eig: EigenData | None = None,
                 tol_res: float | None = None, check: bool = True) -> HomologicalSolution:
    """Split homogeneous ``F`` into ``(d/dt + B_L) Phi + N``.

    ``N`` is the orthogonal projection of ``F`` onto the kernel of the adjoint
    operator (for the Fischer product summed over Fourier modes) and ``Phi``
    is the pseudo-inverse solution, orthogonal to the kernel.
    """
    eig = eig or eigen_data(sys)
    if np.isnan(eig.P).any():
        raise HypothesisViolation("the linear part is not diagonalisable")
    tol = default_tol_res(eig) if tol_res is None else tol_res
    n = _degree(F)
    m, T = sys.m, sys.period
    if (F.nvars, F.dim) != (m, m):
        raise ValueError("right-hand side must map R^m to R^m")
    zero = HomoPoly(m, m, T, {}, F.real, degree=n)
    if F.is_zero():
        return HomologicalSolution(zero, zero, 0.0, np.inf)
    Ft = _change_vars(F, eig.P, n).apply_matrix(eig.Pinv)
    keys = enumerate_indices(m, n)
    K = Ft.kmax
    C = _dense_terms(Ft, keys, K)  # (N, 2K+1, m)
    ks = np.arange(-K, K + 1)
    s = np.asarray(keys, dtype=float) @ eig.lam
    d = s[:, None, None] + 1j * eig.omega * ks[None, :, None] - eig.lam[None, None, :]
    res = np.abs(d) <= tol
    Phi = np.zeros_like(C)
    Nrm = np.zeros_like(C)
    notes: list[str] = []
    G = Ginv = None
    mind = np.inf
    for ik in range(2 * K + 1):
        f = C[:, ik, :].reshape(-1)
        if not f.any():
            continue
        dk = d[:, ik, :].reshape(-1)
        rk = res[:, ik, :].reshape(-1)
        sk = ~rk
        live = sk & (f != 0)
        if live.any():
            mind = min(mind, float(np.abs(dk[live]).min()))
        near = live & (np.abs(dk) <= 10 * tol)
        for flat in np.nonzero(near)[0]:
            a, j = keys[flat // m], int(flat % m)
            notes.append(f"near-resonant divisor {abs(dk[flat]):.3e} at alpha={a}, k={ks[ik]}, j={j}")
        phi = np.zeros_like(f)
        if not rk.any():
            phi = f / dk
            nrm = np.zeros_like(f)
        else:
            if G is None:
                W = _monomial_gram(m, n, eig.Pinv, T, keys)
                H = eig.P.conj().T @ eig.P
                G = np.kron(W, H)
                Ginv = np.kron(np.linalg.inv(W), np.linalg.inv(H))
            r = np.nonzero(rk)[0]
            sidx = np.nonzero(sk)[0]
            nrm = Ginv[:, r] @ np.linalg.solve(Ginv[np.ix_(r, r)], f[r])
            g = f - nrm
            g[r] = 0.0
            phi[sidx] = g[sidx] / dk[sidx]
            if sidx.size:
                phi[r] = -np.linalg.solve(G[np.ix_(r, r)], G[np.ix_(r, sidx)] @ phi[sidx])
        Phi[:, ik, :] = phi.reshape(len(keys), m)
        Nrm[:, ik, :] = nrm.reshape(len(keys), m)
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    def back(A: np.ndarray) -> HomoPoly:
        P = PolyMap(m, m, T, {a: A[i] for i, a in enumerate(keys)}, False)
        return _finish(_change_vars(P, eig.Pinv, n).apply_matrix(eig.P), F.real, n)

    phi_out, n_out = back(Phi), back(Nrm)
    resid = 0.0
    if check:
        err = apply_forward(phi_out, sys, "normal") + n_out - F
        resid = graded_norm(HomoPoly.of(err, n), 0) / max(graded_norm(F, 0), 1e-300)
    return HomologicalSolution(phi_out, n_out, resid, mind, notes)


def resonant_monomials(sys: SystemSpec, n: int, K: int, eig: EigenData | None = None,
                       tol_res: float | None = None) -> list[tuple[tuple[int, ...], int, int]]:
    """Eigen-coordinate monomials ``x^alpha e_j`` at mode ``k`` with vanishing divisor."""
    eig = eig or eigen_data(sys)
    tol = default_tol_res(eig) if tol_res is None else tol_res
    out = []
    for a in enumerate_indices(sys.m, n):
        for k in range(-K, K + 1):
            for j in range(sys.m):
                if abs(eig.divisor(a, k, j, "normal")) <= tol:
                    out.append((a, k, j))
    return out
