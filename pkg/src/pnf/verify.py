"""Independent checks: a dense oracle, an integrator, drift runs and radius sweeps.

The oracle deliberately shares no code with the graded engine: it has its own
dictionary-based polynomial arithmetic and assembles the functional equation
as one dense linear system (or, for the normal form, per degree with an SVD
in the original coordinates).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Literal

import numpy as np

from .algebra import PolyMap
from .norms import hj_norms
from .system import SystemSpec

# -- dictionary polynomials: {(alpha, k): coefficient} -----------------------

DPoly = dict


def _dadd(p: DPoly, q: DPoly, s: complex = 1.0) -> DPoly:
    out = dict(p)
    for key, v in q.items():
        out[key] = out.get(key, 0) + s * v
    return out


def _dmul(p: DPoly, q: DPoly, maxdeg: int) -> DPoly:
    out: DPoly = {}
    for (a, k), v in p.items():
        da = sum(a)
        for (b, l), w in q.items():
            if da + sum(b) > maxdeg:
                continue
            key = (tuple(x + y for x, y in zip(a, b)), k + l)
            out[key] = out.get(key, 0) + v * w
    return out


def _dpartial(p: DPoly, j: int) -> DPoly:
    out: DPoly = {}
    for (a, k), v in p.items():
        if a[j]:
            b = a[:j] + (a[j] - 1,) + a[j + 1:]
            out[(b, k)] = out.get((b, k), 0) + a[j] * v
    return out


def _ddt(p: DPoly, w: float) -> DPoly:
    return {(a, k): 1j * w * k * v for (a, k), v in p.items() if k}


def _dtrunc(p: DPoly, lo: int, hi: int) -> DPoly:
    return {key: v for key, v in p.items() if lo <= sum(key[0]) <= hi}


def _from_polymap(P: PolyMap) -> list[DPoly]:
    out: list[DPoly] = [{} for _ in range(P.dim)]
    for a, c in P.terms.items():
        K = (c.shape[0] - 1) // 2
        for r in range(c.shape[0]):
            for i in range(P.dim):
                if c[r, i] != 0:
                    out[i][(a, r - K)] = complex(c[r, i])
    return out


def _to_polymap(comps: list[DPoly], nvars: int, period: float, real: bool) -> PolyMap:
    dim = len(comps)
    keys: dict[tuple[int, ...], dict[tuple[int, int], complex]] = {}
    for i, p in enumerate(comps):
        for (a, k), v in p.items():
            if v != 0:
                keys.setdefault(a, {})[(k, i)] = v
    terms = {}
    for a, vals in keys.items():
        K = max(abs(k) for k, _ in vals)
        arr = np.zeros((2 * K + 1, dim), dtype=complex)
        for (k, i), v in vals.items():
            arr[K + k, i] = v
        terms[a] = arr
    P = PolyMap(nvars, dim, period, terms, False)
    return P.realify(1e-6) if real else P


def _dcompose(V: list[DPoly], inner: list[DPoly], maxdeg: int, nin: int) -> list[DPoly]:
    cache: dict[tuple[int, ...], DPoly] = {}

    def power(beta: tuple[int, ...]) -> DPoly:
        if not any(beta):
            return {((0,) * nin, 0): 1.0}
        if beta not in cache:
            i = next(j for j, b in enumerate(beta) if b)
            prev = beta[:i] + (beta[i] - 1,) + beta[i + 1:]
            cache[beta] = _dmul(power(prev), inner[i], maxdeg)
        return cache[beta]

    out = []
    for comp in V:
        acc: DPoly = {}
        for (beta, k), v in comp.items():
            for (a, l), w in power(beta).items():
                key = (a, k + l)
                acc[key] = acc.get(key, 0) + v * w
        out.append(acc)
    return out


def _linear(A: np.ndarray) -> list[DPoly]:
    n = A.shape[1]
    out = []
    for i in range(A.shape[0]):
        p = {}
        for j in range(n):
            if A[i, j] != 0:
                p[(tuple(1 if r == j else 0 for r in range(n)), 0)] = complex(A[i, j])
        out.append(p)
    return out


def _indices(m: int, n: int) -> list[tuple[int, ...]]:
    return [a for a in product(range(n + 1), repeat=m) if sum(a) == n]


MAX_UNKNOWNS = 5000

# -- oracle --------------------------------------------------------------------

@dataclass
class OracleResult:
    phi: PolyMap
    N: PolyMap | None
    unknowns: int
    residual: float
    kernel_dims: dict[int, int] = field(default_factory=dict)


def _coupling_residual(sys: SystemSpec, Vd: list[DPoly], phi: list[DPoly], p: int) -> list[DPoly]:
    """``(A_L + d/dt) Phi - Pi_p (V1(u0 + Phi) - D Phi . V0(u0 + Phi))`` in dictionary form."""
    m0, m1, w = sys.m0, sys.m1, sys.omega
    ident = [{(tuple(1 if r == i else 0 for r in range(m0)), 0): 1.0} for i in range(m0)]
    W = _dcompose(Vd, ident + phi, p, m0)
    W0, W1 = W[:m0], W[m0:]
    L0u = _linear(sys.L0)
    out = []
    for i in range(m1):
        lhs: DPoly = _ddt(phi[i], w)
        for j in range(m0):
            dj = _dpartial(phi[i], j)
            lhs = _dadd(lhs, _dmul(dj, L0u[j], p))
            lhs = _dadd(lhs, _dmul(dj, W0[j], p))
        for r in range(m1):
            if sys.L1[i, r]:
                lhs = _dadd(lhs, phi[r], -sys.L1[i, r])
        out.append(_dtrunc(_dadd(lhs, W1[i], -1.0), 0, p))
    return out


def _oracle_graph(sys: SystemSpec, p: int) -> OracleResult:
    m0, m1 = sys.m0, sys.m1
    Kw = p * sys.V.kmax
    Vd = _from_polymap(sys.V)
    unknowns = [(a, k, i) for n in range(2, p + 1) for a in _indices(m0, n)
                for k in range(-Kw, Kw + 1) for i in range(m1)]
    if len(unknowns) > MAX_UNKNOWNS:
        raise ValueError(f"{len(unknowns)} unknowns is too many for the dense oracle")

    def phi_of(z: dict[int, complex]) -> list[DPoly]:
        out: list[DPoly] = [{} for _ in range(m1)]
        for c, v in z.items():
            a, k, i = unknowns[c]
            out[i][(a, k)] = v
        return out

    base = _coupling_residual(sys, Vd, phi_of({}), p)
    columns = []
    for c in range(len(unknowns)):
        r = _coupling_residual(sys, Vd, phi_of({c: 1.0}), p)
        columns.append([_dadd(r[i], base[i], -1.0) for i in range(m1)])
    rows: dict[tuple, int] = {}
    for comp in [base] + columns:
        for i, d in enumerate(comp):
            for key in d:
                rows.setdefault((key, i), len(rows))
    A = np.zeros((len(rows), len(unknowns)), dtype=complex)
    b = np.zeros(len(rows), dtype=complex)
    for i, d in enumerate(base):
        for key, v in d.items():
            b[rows[(key, i)]] = -v
    for c, comp in enumerate(columns):
        for i, d in enumerate(comp):
            for key, v in d.items():
                A[rows[(key, i)], c] += v
    if len(unknowns):
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.matrix_rank(A) < len(unknowns):
            raise np.linalg.LinAlgError("oracle system is singular (resonance)")
    else:
        z = np.zeros(0)
    resid = float(np.max(np.abs(A @ z - b), initial=0.0)) / max(1.0, float(np.max(np.abs(b), initial=0)))
    phi = phi_of({c: v for c, v in enumerate(z) if v != 0})
    return OracleResult(_to_polymap(phi, m0, sys.period, sys.V.real), None, len(unknowns), resid)


def _oracle_normal(sys: SystemSpec, p: int, svd_tol: float = 1e-8) -> OracleResult:
    m, w, L = sys.m, sys.omega, sys.L
    Vd = _from_polymap(sys.V)
    Kw = p * sys.V.kmax
    ident = [{(tuple(1 if r == i else 0 for r in range(m)), 0): 1.0} for i in range(m)]
    LX = _linear(L)
    phi: list[DPoly] = [{} for _ in range(m)]
    nf: list[DPoly] = [{} for _ in range(m)]
    kernel_dims: dict[int, int] = {}
    worst = 0.0
    for n in range(2, p + 1):
        W = _dcompose(Vd, [_dadd(ident[i], phi[i]) for i in range(m)], n, m)
        rhs = []
        for i in range(m):
            acc = W[i]
            for j in range(m):
                acc = _dadd(acc, _dmul(_dpartial(phi[i], j), nf[j], n), -1.0)
            rhs.append(_dtrunc(acc, n, n))
        basis = [(a, i) for a in _indices(m, n) for i in range(m)]
        if len(basis) * (2 * Kw + 1) > MAX_UNKNOWNS:
            raise ValueError("too many unknowns for the dense oracle")
        pos = {bi: r for r, bi in enumerate(basis)}
        # the operator d/dt + B_L at mode 0; mode k adds i k w on the diagonal
        B = np.zeros((len(basis), len(basis)), dtype=complex)
        for c, (a, i) in enumerate(basis):
            mono = {(a, 0): 1.0}
            img: list[DPoly] = [{} for _ in range(m)]
            for j in range(m):
                img[i] = _dadd(img[i], _dmul(_dpartial(mono, j), LX[j], n))
            for r in range(m):
                if L[r, i]:
                    img[r] = _dadd(img[r], mono, -L[r, i])
            for r, d in enumerate(img):
                for (b2, _), v in d.items():
                    B[pos[(b2, r)], c] += v
        wts = np.sqrt([math.prod(math.factorial(x) for x in a) for a, _ in basis])
        Bh = wts[:, None] * B / wts[None, :]
        kdim = 0
        for k in range(-Kw, Kw + 1):
            f = np.array([rhs[i].get((a, k), 0) for a, i in basis], dtype=complex)
            Ah = Bh + 1j * k * w * np.eye(len(basis))
            U, s, Vh = np.linalg.svd(Ah)
            zero = s <= svd_tol * max(1.0, s[0])
            kdim += int(zero.sum())
            if not f.any():
                continue
            fh = wts * f
            coef = U.conj().T @ fh
            nh = U[:, zero] @ coef[zero]
            ph = Vh.conj().T[:, ~zero] @ (coef[~zero] / s[~zero])
            resid = np.abs(Ah @ ph + nh - fh).max() / max(1.0, np.abs(fh).max())
            worst = max(worst, float(resid))
            for r, (a, i) in enumerate(basis):
                if ph[r] != 0:
                    phi[i][(a, k)] = phi[i].get((a, k), 0) + ph[r] / wts[r]
                if nh[r] != 0:
                    nf[i][(a, k)] = nf[i].get((a, k), 0) + nh[r] / wts[r]
        kernel_dims[n] = kdim
    real = sys.V.real
    return OracleResult(_to_polymap(phi, m, sys.period, real), _to_polymap(nf, m, sys.period, real),
                        0, worst, kernel_dims)


def oracle_solve(sys: SystemSpec, p: int, path: Literal["graph", "normal"] = "graph") -> OracleResult:
    """Solve the truncated functional equation directly, for ``p <= 3``.

    At these degrees the invariant-manifold equation is linear in the unknown
    coefficients, so all of them are found by one dense least-squares solve.
    The normal-form equation is solved degree by degree with an SVD of the
    homological operator in a Fischer-orthonormal monomial basis.
    """
    if not 1 <= p <= 3:
        raise ValueError("the oracle is limited to p <= 3")
    return _oracle_graph(sys, p) if path == "graph" else _oracle_normal(sys, p)


# -- integration -----------------------------------------------------------------

class IntegrationError(RuntimeError):
    pass


def integrate(f: Callable[[np.ndarray, float], np.ndarray], y0: np.ndarray, t0: float, t1: float,
              h: float, observe: Callable[[np.ndarray, float], None] | None = None
              ) -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4 from ``t0`` to ``t1``; the step is shrunk to land on ``t1``."""
    if not h > 0:
        raise ValueError("step must be positive")
    steps = max(1, math.ceil((t1 - t0) / h - 1e-12))
    h = (t1 - t0) / steps
    y = np.array(y0, dtype=float)
    ts = t0 + h * np.arange(steps + 1)
    ys = np.empty((steps + 1, y.size))
    ys[0] = y
    for s in range(steps):
        t = ts[s]
        k1 = f(y, t)
        k2 = f(y + 0.5 * h * k1, t + 0.5 * h)
        k3 = f(y + 0.5 * h * k2, t + 0.5 * h)
        k4 = f(y + h * k3, t + h)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"solution blew up at t = {ts[s + 1]:.6g}")
        ys[s + 1] = y
        if observe is not None:
            observe(y, ts[s + 1])
    return ts, ys


@dataclass
class DriftResult:
    delta: float
    p: int
    t_end: float
    max_v1: float
    certified_bound: float
    allowed: float
    max_u0: float
    left_ball: bool
    zero_remainder: bool
    exit_time: float | None = None


class _LeftBall(Exception):
    pass


def _transformed_rhs(sys: SystemSpec, tr, zero_remainder: bool):
    m0 = sys.m0
    f0, f1 = tr.V0.evaluator(), tr.V1.evaluator()
    fR = tr.R.evaluator()
    L0, L1 = sys.L0, sys.L1

    def f(y: np.ndarray, t: float) -> np.ndarray:
        u0, v1 = y[:m0], y[m0:]
        du0 = L0 @ u0 + f0(y, t)
        dv1 = L1 @ v1 + f1(y, t)
        if not zero_remainder:
            dv1 = dv1 + fR(u0, t)
        return np.concatenate([du0, dv1])

    return f


def manifold_drift(sys: SystemSpec, delta: float, p: int | None = None, t_end: float | None = None,
                   h: float = 0.01, seed: int = 0, zero_remainder: bool = False) -> DriftResult:
    """Integrate the transformed system from ``v1 = 0`` and record how far ``v1`` drifts."""
    from .uncouple import transform, uncouple

    res = uncouple(sys, delta, p)
    tr = transform(sys, res.phi, res.p)
    t_end = 10 * sys.period if t_end is None else t_end
    rng = np.random.default_rng(seed)
    u0 = rng.standard_normal(sys.m0)
    u0 *= 0.5 * delta / np.linalg.norm(u0)
    y0 = np.concatenate([u0, np.zeros(sys.m1)])
    track = {"v1": 0.0, "u0": float(np.linalg.norm(u0))}

    def observe(y: np.ndarray, t: float) -> None:
        track["v1"] = max(track["v1"], float(np.linalg.norm(y[sys.m0:])))
        track["u0"] = max(track["u0"], float(np.linalg.norm(y[:sys.m0])))
        if track["u0"] > delta:
            raise _LeftBall(t)

    exit_time = None
    try:
        integrate(_transformed_rhs(sys, tr, zero_remainder), y0, 0.0, t_end, h, observe)
    except _LeftBall as e:
        exit_time = e.args[0]
    return DriftResult(delta, res.p, t_end, track["v1"], res.certified_bound,
                       10 * t_end * res.certified_bound, track["u0"], exit_time is not None,
                       zero_remainder, exit_time)


def pushforward_gap(sys: SystemSpec, delta: float, p: int, t_end: float | None = None,
                    h: float = 0.01, seed: int = 0) -> float:
    """Largest gap between the original flow and the transformed flow mapped back."""
    from .uncouple import build_phi, transform

    phi = build_phi(sys, p)
    tr = transform(sys, phi, p)
    t_end = sys.period if t_end is None else t_end
    rng = np.random.default_rng(seed)
    u0 = rng.standard_normal(sys.m0)
    u0 *= 0.5 * delta / np.linalg.norm(u0)
    fphi = phi.evaluator()
    y0 = np.concatenate([u0, np.zeros(sys.m1)])
    ts, ys = integrate(_transformed_rhs(sys, tr, False), y0, 0.0, t_end, h)
    x0 = np.concatenate([u0, fphi(u0, 0.0)])
    _, xs = integrate(sys.rhs(), x0, 0.0, t_end, h)
    gap = 0.0
    for t, y, x in zip(ts, ys, xs):
        u1 = y[sys.m0:] + fphi(y[:sys.m0], t)
        gap = max(gap, float(np.linalg.norm(np.concatenate([y[:sys.m0], u1]) - x)))
    return gap


# -- radius sweeps -------------------------------------------------------------------

def sample_points(nvars: int, delta: float, n_dirs: int = 200, seed: int = 0) -> np.ndarray:
    """``n_dirs`` random points on the sphere of radius ``delta`` plus the signed axes."""
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n_dirs, nvars))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(nvars), -np.eye(nvars)])
    return delta * np.concatenate([d, axes])


def sampled_sup(R: PolyMap, delta: float, ell: int, n_dirs: int = 200, seed: int = 0) -> float:
    """Largest ``|R(x, .)|_{H^ell}`` over the sample points on the sphere ``|x| = delta``."""
    if R.is_zero():
        return 0.0
    pts = sample_points(R.nvars, delta, n_dirs, seed)
    return float(hj_norms(R.modes_at(pts), ell).max())


@dataclass
class SweepRow:
    delta: float
    p: int
    p_opt: int
    certified_bound: float
    sampled_sup: float
    estimate: float
    in_range: bool


@dataclass
class Sweep:
    path: str
    rows: list[SweepRow]
    b: float
    omega: float
    slope: float
    delta0: float


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("NF_THREADS", "1")))
    except ValueError:
        return 1


def delta_sweep(sys: SystemSpec, deltas: list[float], path: Literal["graph", "normal"] = "graph",
                seed: int = 0, n_dirs: int = 200, p: int | None = None) -> Sweep:
    """Run the construction at every radius and compare the three remainder sizes."""
    from .normalform import normalize
    from .uncouple import uncouple

    run = uncouple if path == "graph" else normalize

    def one(delta: float):
        r = run(sys, delta, p)
        return r, SweepRow(delta, r.p, r.p_opt, r.certified_bound,
                           sampled_sup(r.R, delta, sys.ell, n_dirs, seed), r.estimate,
                           r.constants.in_range(delta))

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(one, deltas))
    rows = [row for _, row in results]
    rep = results[0][0].constants if results else None
    b = rep.b if rep else math.nan
    pts = [(r.delta ** -b, math.log(r.certified_bound)) for r in rows if r.certified_bound > 0]
    slope = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) >= 2 else math.nan
    return Sweep(path, rows, b, rep.omega if rep else math.nan, slope,
                 rep.delta0 if rep else math.nan)
