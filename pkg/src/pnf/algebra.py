"""Graded polynomial maps whose coefficients are trigonometric polynomials in time.

A trigonometric coefficient is stored as a dense complex array of shape
``(2K + 1, dim)``; row ``K + k`` holds the Fourier mode ``k``, so the value at
time ``t`` is ``sum_k c_k exp(i k 2 pi t / T)``.  A polynomial map keeps one
such array per multi-index (sparse over monomials, dense over modes).

All products are direct convolutions, so coefficients that are exactly zero
stay exactly zero and Fourier supports never grow beyond Minkowski sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

Index = tuple[int, ...]

REAL_TOL = 1e-9


@lru_cache(maxsize=None)
def _indices(length: int, degree: int) -> tuple[Index, ...]:
    if length == 0:
        return ((),) if degree == 0 else ()
    if length == 1:
        return ((degree,),)
    out: list[Index] = []
    for first in range(degree + 1):
        for rest in _indices(length - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


def enumerate_indices(length: int, degree: int) -> list[Index]:
    """All multi-indices of the given length and total degree, lexicographically.

    >>> enumerate_indices(2, 2)
    [(0, 2), (1, 1), (2, 0)]
    """
    if length < 1 or degree < 0:
        raise ValueError("need length >= 1 and degree >= 0")
    return list(_indices(length, degree))


def index_factorial(alpha: Index) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def multinomial_weight(alpha: Index) -> float:
    """alpha! / |alpha|!, the weight of a monomial in the Fischer-type norm."""
    return index_factorial(alpha) / math.factorial(sum(alpha))


# -- dense mode arrays -------------------------------------------------------

def _as_modes(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] % 2 != 1:
        raise ValueError("mode arrays need shape (2K+1, dim)")
    return a


def _kmax(a: np.ndarray) -> int:
    return (a.shape[0] - 1) // 2


def _pad(a: np.ndarray, K: int) -> np.ndarray:
    k = _kmax(a)
    if k == K:
        return a
    if k > K:
        raise ValueError("cannot shrink a mode array by padding")
    out = np.zeros((2 * K + 1, a.shape[1]), dtype=complex)
    out[K - k:K + k + 1] = a
    return out


def _add(a: np.ndarray | None, b: np.ndarray) -> np.ndarray:
    if a is None:
        return b.copy()
    K = max(_kmax(a), _kmax(b))
    return _pad(a, K) + _pad(b, K)


def _conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of two trigonometric polynomials given by their mode arrays.

    Columns multiply componentwise; a single column broadcasts.
    """
    na, nb = a.shape[0], b.shape[0]
    if na == 1:
        return a[0] * b
    if nb == 1:
        return a * b[0]
    d = max(a.shape[1], b.shape[1])
    out = np.zeros((na + nb - 1, d), dtype=complex)
    if na <= nb:
        for i in range(na):
            out[i:i + nb] += a[i] * b
    else:
        for j in range(nb):
            out[j:j + na] += a * b[j]
    return out


def _trim(a: np.ndarray) -> np.ndarray:
    k = _kmax(a)
    lo = 0
    while k > 0 and not a[lo].any() and not a[-1 - lo].any():
        lo += 1
        k -= 1
    return a[lo:a.shape[0] - lo] if lo else a


def _conj_gap(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - np.conj(a[::-1])), initial=0.0))


def _wavenumbers(K: int) -> np.ndarray:
    return np.arange(-K, K + 1)


# -- trigonometric polynomials -----------------------------------------------

@dataclass(frozen=True, eq=False)
class TrigPoly:
    """Vector-valued trigonometric polynomial of a given period.

    ``real=True`` demands conjugate symmetry ``c_{-k} = conj(c_k)`` and is
    checked on construction.
    """

    period: float
    coeffs: np.ndarray
    real: bool = False

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise ValueError("period must be positive")
        a = _trim(_as_modes(self.coeffs))
        object.__setattr__(self, "coeffs", a)
        if self.real:
            scale = max(1.0, float(np.max(np.abs(a), initial=0.0)))
            if _conj_gap(a) > REAL_TOL * scale:
                raise ValueError("coefficients are not conjugate symmetric")

    @classmethod
    def from_modes(cls, period: float, modes: Mapping[int, Sequence[complex] | complex],
                   real: bool = False) -> "TrigPoly":
        if not modes:
            return cls(period, np.zeros((1, 1)), real)
        K = max(abs(int(k)) for k in modes)
        vecs = {int(k): np.atleast_1d(np.asarray(v, dtype=complex)) for k, v in modes.items()}
        dim = len(next(iter(vecs.values())))
        a = np.zeros((2 * K + 1, dim), dtype=complex)
        for k, v in vecs.items():
            a[K + k] += v
        return cls(period, a, real)

    @property
    def kmax(self) -> int:
        return _kmax(self.coeffs)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    def mode(self, k: int) -> np.ndarray:
        K = self.kmax
        if abs(k) > K:
            return np.zeros(self.dim, dtype=complex)
        return self.coeffs[K + k]

    def support(self) -> set[int]:
        K = self.kmax
        return {i - K for i in range(2 * K + 1) if self.coeffs[i].any()}

    def __call__(self, t: float | np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        ph = np.exp(1j * self.omega * np.multiply.outer(t, _wavenumbers(self.kmax)))
        val = ph @ self.coeffs
        return val.real if self.real else val

    def derivative(self) -> "TrigPoly":
        ks = _wavenumbers(self.kmax)
        return TrigPoly(self.period, self.coeffs * (1j * self.omega * ks)[:, None], self.real)

    def _check(self, other: "TrigPoly") -> None:
        if not math.isclose(self.period, other.period, rel_tol=1e-12):
            raise ValueError("periods differ")

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        self._check(other)
        return TrigPoly(self.period, _add(self.coeffs, other.coeffs), self.real and other.real)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(self.period, -self.coeffs, self.real)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def __mul__(self, s: complex) -> "TrigPoly":
        real = self.real and complex(s).imag == 0
        return TrigPoly(self.period, self.coeffs * s, real)

    __rmul__ = __mul__


def trig_mul(f: TrigPoly, g: TrigPoly) -> TrigPoly:
    """Product of two trigonometric polynomials (componentwise, scalars broadcast)."""
    f._check(g)
    if f.dim != g.dim and 1 not in (f.dim, g.dim):
        raise ValueError("dimension mismatch")
    return TrigPoly(f.period, _conv(f.coeffs, g.coeffs), f.real and g.real)


# -- polynomial maps ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolyMap:
    """Polynomial map from R^nvars to C^dim with time-periodic coefficients.

    ``terms`` maps a multi-index to a mode array of shape ``(2K+1, dim)``.
    Exactly-zero terms are dropped on construction.
    """

    nvars: int
    dim: int
    period: float
    terms: Mapping[Index, np.ndarray]
    real: bool = False

    def __post_init__(self) -> None:
        if not self.period > 0:
            raise ValueError("period must be positive")
        clean: dict[Index, np.ndarray] = {}
        for alpha, arr in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.nvars or min(alpha, default=0) < 0:
                raise ValueError(f"bad multi-index {alpha} for {self.nvars} variables")
            a = _as_modes(arr)
            if a.shape[1] != self.dim:
                if a.shape[1] == 1:
                    a = np.repeat(a, self.dim, axis=1)
                else:
                    raise ValueError("coefficient dimension mismatch")
            if a.any():
                clean[alpha] = _trim(a)
        object.__setattr__(self, "terms", clean)
        if self.real:
            gap = self.conjugate_gap()
            if gap > REAL_TOL * max(1.0, self.max_abs()):
                raise ValueError(f"map flagged real is not conjugate symmetric (gap {gap:.3e})")

    # constructors
    @classmethod
    def zero(cls, nvars: int, dim: int, period: float, real: bool = True) -> "PolyMap":
        return cls(nvars, dim, period, {}, real)

    @classmethod
    def linear(cls, A: np.ndarray, period: float, real: bool | None = None) -> "PolyMap":
        """The map X -> A X."""
        A = np.atleast_2d(np.asarray(A))
        if real is None:
            real = not np.iscomplexobj(A) or not np.any(np.imag(A))
        dim, nvars = A.shape
        terms = {}
        for i in range(nvars):
            alpha = tuple(1 if j == i else 0 for j in range(nvars))
            terms[alpha] = A[:, i][None, :]
        return cls(nvars, dim, period, terms, real)

    @classmethod
    def identity(cls, n: int, period: float) -> "PolyMap":
        return cls.linear(np.eye(n), period, real=True)

    @classmethod
    def monomial(cls, alpha: Index, coeff: np.ndarray, period: float,
                 real: bool = False) -> "PolyMap":
        c = _as_modes(coeff)
        return cls(len(alpha), c.shape[1], period, {tuple(alpha): c}, real)

    @classmethod
    def stack(cls, parts: Sequence["PolyMap"]) -> "PolyMap":
        """Concatenate the components of several maps sharing their variables."""
        nvars, period = parts[0].nvars, parts[0].period
        dims = [p.dim for p in parts]
        offsets = np.cumsum([0] + dims)
        terms: dict[Index, np.ndarray] = {}
        for p, off in zip(parts, offsets):
            if p.nvars != nvars:
                raise ValueError("stacked maps must share variables")
            for alpha, arr in p.terms.items():
                block = np.zeros((arr.shape[0], offsets[-1]), dtype=complex)
                block[:, off:off + p.dim] = arr
                terms[alpha] = _add(terms.get(alpha), block)
        return cls(nvars, int(offsets[-1]), period, terms, all(p.real for p in parts))

    # structure
    @property
    def kmax(self) -> int:
        return max((_kmax(a) for a in self.terms.values()), default=0)

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    def degrees(self) -> list[int]:
        return sorted({sum(a) for a in self.terms})

    @property
    def max_degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    @property
    def min_degree(self) -> int:
        return min((sum(a) for a in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(a))) for a in self.terms.values()), default=0.0)

    def conjugate_gap(self) -> float:
        return max((_conj_gap(a) for a in self.terms.values()), default=0.0)

    def coefficient(self, alpha: Index) -> TrigPoly:
        a = self.terms.get(tuple(alpha))
        if a is None:
            a = np.zeros((1, self.dim))
        return TrigPoly(self.period, a, self.real)

    def support(self) -> dict[Index, set[int]]:
        return {alpha: self.coefficient(alpha).support() for alpha in self.terms}

    def _new(self, terms: Mapping[Index, np.ndarray], dim: int | None = None,
             nvars: int | None = None, real: bool | None = None) -> "PolyMap":
        return PolyMap(self.nvars if nvars is None else nvars,
                       self.dim if dim is None else dim, self.period, terms,
                       self.real if real is None else real)

    def part(self, n: int) -> "HomoPoly":
        return HomoPoly(self.nvars, self.dim, self.period,
                        {a: c for a, c in self.terms.items() if sum(a) == n}, self.real, degree=n)

    def project(self, lo: int, hi: int) -> "PolyMap":
        return project(self, lo, hi)

    def component(self, i: int) -> "PolyMap":
        return self._new({a: c[:, i:i + 1] for a, c in self.terms.items()}, dim=1)

    def components(self, idx: Sequence[int]) -> "PolyMap":
        idx = list(idx)
        return self._new({a: c[:, idx] for a, c in self.terms.items()}, dim=len(idx))

    def select(self, keep: Callable[[Index], bool]) -> "PolyMap":
        return self._new({a: c for a, c in self.terms.items() if keep(a)})

    # arithmetic
    def _check(self, other: "PolyMap") -> None:
        if (self.nvars, self.dim) != (other.nvars, other.dim):
            raise ValueError("shape mismatch")
        if not math.isclose(self.period, other.period, rel_tol=1e-12):
            raise ValueError("periods differ")

    def __add__(self, other: "PolyMap") -> "PolyMap":
        self._check(other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = _add(terms.get(a), c)
        return self._new(terms, real=self.real and other.real)

    def __neg__(self) -> "PolyMap":
        return self._new({a: -c for a, c in self.terms.items()})

    def __sub__(self, other: "PolyMap") -> "PolyMap":
        return self + (-other)

    def __mul__(self, s: complex) -> "PolyMap":
        real = self.real and complex(s).imag == 0
        return self._new({a: c * s for a, c in self.terms.items()}, real=real)

    __rmul__ = __mul__

    def apply_matrix(self, A: np.ndarray) -> "PolyMap":
        """Left-multiply every coefficient by the matrix ``A``."""
        A = np.atleast_2d(np.asarray(A))
        if A.shape[1] != self.dim:
            raise ValueError("matrix does not match the map dimension")
        real = self.real and not (np.iscomplexobj(A) and np.any(np.imag(A)))
        return self._new({a: c @ A.T for a, c in self.terms.items()}, dim=A.shape[0], real=real)

    def dt(self) -> "PolyMap":
        """Time derivative."""
        out = {}
        for a, c in self.terms.items():
            ks = _wavenumbers(_kmax(c))
            out[a] = c * (1j * self.omega * ks)[:, None]
        return self._new(out)

    def partial(self, j: int) -> "PolyMap":
        out = {}
        for a, c in self.terms.items():
            if a[j]:
                b = a[:j] + (a[j] - 1,) + a[j + 1:]
                out[b] = c * a[j]
        return self._new(out)

    def realify(self, tol: float = 1e-8) -> "PolyMap":
        """Project onto conjugate-symmetric coefficients, checking the gap is roundoff."""
        gap = self.conjugate_gap()
        if gap > tol * max(1.0, self.max_abs()):
            raise ValueError(f"map is not real up to roundoff (gap {gap:.3e})")
        return self._new({a: 0.5 * (c + np.conj(c[::-1])) for a, c in self.terms.items()},
                         real=True)

    def chop(self, rel: float = 1e-14) -> "PolyMap":
        """Zero out entries below ``rel`` times the largest coefficient."""
        thr = rel * self.max_abs()
        out = {}
        for a, c in self.terms.items():
            c = c.copy()
            c[np.abs(c) <= thr] = 0.0
            out[a] = c
        return self._new(out)

    def embed(self, nvars: int, positions: Sequence[int]) -> "PolyMap":
        """Rename variable ``i`` to ``positions[i]`` inside ``nvars`` variables."""
        out = {}
        for a, c in self.terms.items():
            b = [0] * nvars
            for i, p in enumerate(positions):
                b[p] = a[i]
            out[tuple(b)] = c
        return self._new(out, nvars=nvars)

    # evaluation
    def _dense(self) -> tuple[np.ndarray, np.ndarray, int]:
        keys = list(self.terms)
        K = self.kmax
        E = np.array(keys, dtype=float).reshape(len(keys), self.nvars)
        if keys:
            C = np.stack([_pad(self.terms[a], K) for a in keys])
        else:
            C = np.zeros((0, 2 * K + 1, self.dim), dtype=complex)
        return E, C, K

    def modes_at(self, x: np.ndarray) -> np.ndarray:
        """Fourier modes of ``t -> P(x, t)``; shape ``(..., 2K+1, dim)``."""
        E, C, _ = self._dense()
        x = np.asarray(x)
        mon = np.prod(x[..., None, :] ** E, axis=-1)
        return np.einsum("...n,nkd->...kd", mon, C)

    def evaluator(self) -> Callable[[np.ndarray, float], np.ndarray]:
        """Fast pointwise evaluation ``f(x, t)``."""
        E, C, K = self._dense()
        ks = _wavenumbers(K)
        w, real = self.omega, self.real

        def f(x: np.ndarray, t: float) -> np.ndarray:
            mon = np.prod(np.asarray(x)[..., None, :] ** E, axis=-1)
            vals = np.einsum("...n,nkd,k->...d", mon, C, np.exp(1j * w * ks * t))
            return vals.real if real else vals

        return f

    def __call__(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.evaluator()(x, t)

    def substitute(self, args: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate at trigonometric arguments; ``args[i]`` is a 1-D mode array."""
        if len(args) != self.nvars:
            raise ValueError("need one argument per variable")
        cols = [_as_modes(a) for a in args]
        cache: dict[Index, np.ndarray] = {(0,) * self.nvars: np.ones((1, 1), dtype=complex)}

        def power(beta: Index) -> np.ndarray:
            if beta not in cache:
                i = next(j for j, b in enumerate(beta) if b)
                prev = beta[:i] + (beta[i] - 1,) + beta[i + 1:]
                cache[beta] = _conv(power(prev), cols[i])
            return cache[beta]

        out: np.ndarray | None = None
        for beta, c in self.terms.items():
            out = _add(out, _conv(power(beta), c))
        if out is None:
            return np.zeros((1, self.dim), dtype=complex)
        return out

    def __repr__(self) -> str:
        return (f"PolyMap(nvars={self.nvars}, dim={self.dim}, degrees={self.degrees()}, "
                f"kmax={self.kmax}, real={self.real})")


class HomoPoly(PolyMap):
    """A polynomial map whose monomials all share one total degree."""

    def __init__(self, nvars: int, dim: int, period: float,
                 terms: Mapping[Index, np.ndarray], real: bool = False,
                 degree: int | None = None) -> None:
        super().__init__(nvars, dim, period, terms, real)
        degs = self.degrees()
        if len(degs) > 1 or (degree is not None and degs and degs[0] != degree):
            raise ValueError(f"terms of degrees {degs} are not homogeneous of degree {degree}")
        object.__setattr__(self, "degree", degs[0] if degs else degree)

    @classmethod
    def of(cls, P: PolyMap, degree: int | None = None) -> "HomoPoly":
        return cls(P.nvars, P.dim, P.period, P.terms, P.real, degree)


def project(F: PolyMap, lo: int, hi: int) -> PolyMap:
    """Keep the homogeneous parts of degree ``lo..hi`` (empty when ``lo > hi``)."""
    return F._new({a: c for a, c in F.terms.items() if lo <= sum(a) <= hi})


# -- products and composition ------------------------------------------------

def _mul_terms(A: Mapping[Index, np.ndarray], B: Mapping[Index, np.ndarray],
               max_deg: int | None) -> dict[Index, np.ndarray]:
    out: dict[Index, np.ndarray] = {}
    bdeg = [(b, sum(b), cb) for b, cb in B.items()]
    for a, ca in A.items():
        da = sum(a)
        for b, db, cb in bdeg:
            if max_deg is not None and da + db > max_deg:
                continue
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = _add(out.get(key), _conv(ca, cb))
    return out


def mul(a: PolyMap, b: PolyMap, max_deg: int | None = None) -> PolyMap:
    """Product of two maps, truncated at ``max_deg``; a scalar factor broadcasts."""
    if a.nvars != b.nvars:
        raise ValueError("variable count mismatch")
    if a.dim != b.dim and 1 not in (a.dim, b.dim):
        raise ValueError("dimension mismatch")
    return PolyMap(a.nvars, max(a.dim, b.dim), a.period, _mul_terms(a.terms, b.terms, max_deg),
                   a.real and b.real)


def compose(V: PolyMap, inner: PolyMap, max_deg: int, min_deg: int = 0) -> PolyMap:
    """``V(inner(x), t)`` truncated to degrees ``min_deg..max_deg``.

    ``inner`` must vanish at the origin; otherwise the graded truncation
    would not be exact.
    """
    if inner.dim != V.nvars:
        raise ValueError("inner map dimension must equal the number of variables of V")
    if any(sum(a) == 0 for a in inner.terms):
        raise ValueError("inner map has a constant part")
    comps = [{a: c[:, i:i + 1] for a, c in inner.terms.items()} for i in range(inner.dim)]
    low = [min((sum(a) for a in c), default=max_deg + 1) for c in comps]
    zero = (0,) * inner.nvars
    cache: dict[Index, dict[Index, np.ndarray]] = {(0,) * V.nvars: {zero: np.ones((1, 1))}}

    def power(beta: Index) -> dict[Index, np.ndarray]:
        if beta not in cache:
            i = next(j for j, b in enumerate(beta) if b)
            prev = beta[:i] + (beta[i] - 1,) + beta[i + 1:]
            cache[beta] = _mul_terms(power(prev), comps[i], max_deg)
        return cache[beta]

    out: dict[Index, np.ndarray] = {}
    for beta, coef in V.terms.items():
        if sum(b * l for b, l in zip(beta, low)) > max_deg:
            continue
        for alpha, arr in power(beta).items():
            if sum(alpha) < min_deg:
                continue
            out[alpha] = _add(out.get(alpha), _conv(arr, coef))
    return PolyMap(inner.nvars, V.dim, V.period, out, V.real and inner.real)


@lru_cache(maxsize=None)
def _shift_table(m: int, d: int) -> np.ndarray:
    """Row ``r``, column ``j``: position of ``alpha_r + e_j`` among the degree ``d+1`` indices."""
    pos = {a: i for i, a in enumerate(_indices(m, d + 1))}
    rows = []
    for a in _indices(m, d):
        rows.append([pos[a[:j] + (a[j] + 1,) + a[j + 1:]] for j in range(m)])
    return np.array(rows, dtype=int).reshape(-1, m)


_SUBST_CACHE: dict[tuple, np.ndarray] = {}


def linear_substitution_matrix(A: np.ndarray, n: int) -> np.ndarray:
    """``M`` with ``(A x)^alpha = sum_beta M[beta, alpha] x^beta`` over degree ``n`` indices."""
    A = np.asarray(A, dtype=complex)
    key = (A.shape, A.tobytes(), n)
    hit = _SUBST_CACHE.get(key)
    if hit is not None:
        return hit
    p, m = A.shape
    vecs: dict[Index, np.ndarray] = {(0,) * p: np.ones(1, dtype=complex)}
    for d in range(n):
        shift = _shift_table(m, d)
        size = len(_indices(m, d + 1))
        for a in _indices(p, d + 1):
            i = next(r for r, x in enumerate(a) if x)
            v = vecs[a[:i] + (a[i] - 1,) + a[i + 1:]]
            out = np.zeros(size, dtype=complex)
            for j in range(m):
                if A[i, j] != 0:
                    np.add.at(out, shift[:, j], A[i, j] * v)
            vecs[a] = out
    M = np.stack([vecs[a] for a in _indices(p, n)], axis=1)
    if len(_SUBST_CACHE) > 256:
        _SUBST_CACHE.clear()
    _SUBST_CACHE[key] = M
    return M


def substitute_linear(F: PolyMap, A: np.ndarray) -> PolyMap:
    """``F(A x)`` for a constant matrix ``A``, degree by degree."""
    A = np.asarray(A)
    if A.shape[0] != F.nvars:
        raise ValueError("matrix rows must match the variables of F")
    m = A.shape[1]
    K = F.kmax
    terms: dict[Index, np.ndarray] = {}
    for n in F.degrees():
        src = _indices(F.nvars, n)
        C = np.zeros((len(src), 2 * K + 1, F.dim), dtype=complex)
        for i, a in enumerate(src):
            c = F.terms.get(a)
            if c is not None:
                C[i] = _pad(c, K)
        new = np.tensordot(linear_substitution_matrix(A, n), C, axes=(1, 0))
        for b, c in zip(_indices(m, n), new):
            if np.any(c != 0):
                terms[b] = c
    return PolyMap(m, F.dim, F.period, terms, False)


def directional_derivative(Phi: PolyMap, G: PolyMap, max_deg: int | None = None) -> PolyMap:
    """``D_X Phi . G``: the derivative of ``Phi`` applied to the vector field ``G``."""
    if G.dim != Phi.nvars:
        raise ValueError("G must have one component per variable of Phi")
    if isinstance(Phi, HomoPoly) and Phi.degree == 0 and not Phi.is_zero():
        raise ValueError("directional derivative of a degree-0 map")
    out = PolyMap.zero(Phi.nvars, Phi.dim, Phi.period, real=Phi.real and G.real)
    for j in range(Phi.nvars):
        dj = Phi.partial(j)
        if dj.is_zero():
            continue
        out = out + mul(G.component(j), dj, max_deg)
    return out


def multilinear(Vq: PolyMap, args: Sequence[PolyMap]) -> PolyMap:
    """The symmetric q-linear form attached to the degree-q part of ``Vq``.

    ``Vq[x, ..., x] = Vq(x)``.  Arguments are maps sharing their variables;
    constant vectors are maps in zero variables.
    """
    q = len(args)
    nvars = args[0].nvars
    if any(a.dim != Vq.nvars or a.nvars != nvars for a in args):
        raise ValueError("arguments must be maps into the variables of Vq")
    comps = [[a.component(i).terms for i in range(a.dim)] for a in args]
    zero = (0,) * nvars
    out: dict[Index, np.ndarray] = {}
    for beta, coef in Vq.terms.items():
        if sum(beta) != q:
            continue
        idx = [i for i, b in enumerate(beta) for _ in range(b)]
        acc: dict[Index, np.ndarray] = {}
        for perm in permutations(range(q)):
            prod: dict[Index, np.ndarray] = {zero: np.ones((1, 1))}
            for j, r in enumerate(perm):
                prod = _mul_terms(prod, comps[r][idx[j]], None)
            for a, c in prod.items():
                acc[a] = _add(acc.get(a), c)
        for a, c in acc.items():
            out[a] = _add(out.get(a), _conv(c, coef) / math.factorial(q))
    return PolyMap(nvars, Vq.dim, Vq.period, out, Vq.real and all(a.real for a in args))


def constant_map(vec: TrigPoly | np.ndarray, period: float, nvars: int = 0) -> PolyMap:
    """A map with only a degree-0 term (used as a multilinear argument).

    ``vec`` is a trigonometric polynomial, a constant vector, or a mode array.
    """
    if isinstance(vec, TrigPoly):
        c, real = vec.coeffs, vec.real
    else:
        v = np.asarray(vec)
        c = _as_modes(v[None, :] if v.ndim == 1 else v)
        real = _conj_gap(c) <= REAL_TOL * max(1.0, float(np.abs(c).max(initial=0.0)))
    return PolyMap(nvars, c.shape[1], period, {(0,) * nvars: c}, real)


def max_rel_diff(a: PolyMap, b: PolyMap) -> float:
    """Largest coefficient difference relative to ``max(1, largest coefficient)``."""
    d = (a - b).max_abs()
    return d / max(1.0, a.max_abs(), b.max_abs())


def graded_parts(F: PolyMap) -> Iterable[tuple[int, HomoPoly]]:
    for n in F.degrees():
        yield n, F.part(n)
