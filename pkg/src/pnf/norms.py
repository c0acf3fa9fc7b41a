"""Sobolev-in-time norms and the graded norms built on them."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .algebra import PolyMap, TrigPoly, _as_modes, _kmax, _pad, index_factorial, multinomial_weight

AGREEMENT_TOL = 1e-10


def _weights(K: int, j: float) -> np.ndarray:
    ks = np.arange(-K, K + 1, dtype=float)
    return (1.0 + ks ** 2) ** j


def hj_norm(f: TrigPoly | np.ndarray, j: float) -> float:
    """``|f|_{H^j}^2 = sum_k (1 + k^2)^j |f_k|^2`` with the Euclidean norm on each mode.

    >>> round(hj_norm(TrigPoly.from_modes(2 * math.pi, {1: 0.5, -1: 0.5}), 0), 12)
    0.707106781187
    """
    a = f.coeffs if isinstance(f, TrigPoly) else _as_modes(f)
    w = _weights(_kmax(a), j)
    return float(math.sqrt(np.sum(w * np.sum(np.abs(a) ** 2, axis=1))))


def hj_norms(a: np.ndarray, j: float) -> np.ndarray:
    """Vectorised ``hj_norm`` over leading axes of an array of shape ``(..., 2K+1, dim)``."""
    w = _weights(_kmax(a[(0,) * (a.ndim - 2)]), j)
    return np.sqrt(np.einsum("k,...k->...", w, np.sum(np.abs(a) ** 2, axis=-1)))


def _homogeneous_degree(F: PolyMap) -> int:
    degs = F.degrees()
    if len(degs) > 1:
        raise ValueError(f"expected a homogeneous map, got degrees {degs}")
    return degs[0] if degs else 0


def two_n_norm(P: PolyMap, mode: int = 0) -> float:
    """Fischer-type norm ``sqrt(sum (alpha!/n!) |P_alpha|^2)`` of one Fourier mode."""
    _homogeneous_degree(P)
    total = 0.0
    for alpha, c in P.terms.items():
        K = _kmax(c)
        if abs(mode) <= K:
            total += multinomial_weight(alpha) * float(np.sum(np.abs(c[K + mode]) ** 2))
    return math.sqrt(total)


def graded_norm(F: PolyMap, j: float) -> float:
    """``||F||_{n,H^j}`` of a homogeneous map, computed two ways that must agree."""
    _homogeneous_degree(F)
    if F.is_zero():
        return 0.0
    by_index = sum(multinomial_weight(a) * hj_norm(c, j) ** 2 for a, c in F.terms.items())
    K = F.kmax
    w = _weights(K, j)
    by_mode = sum(w[K + k] * two_n_norm(F, k) ** 2 for k in range(-K, K + 1))
    if abs(by_index - by_mode) > AGREEMENT_TOL * max(by_index, by_mode, 1e-300):
        raise AssertionError(f"graded norm formulas disagree: {by_index!r} vs {by_mode!r}")
    return math.sqrt(by_index)


def graded_norms(F: PolyMap, j: float) -> dict[int, float]:
    """Graded norm of each homogeneous part."""
    return {n: graded_norm(F.part(n), j) for n in F.degrees()}


def fischer_inner(P: PolyMap, Q: PolyMap) -> complex:
    """``<P, Q>``: Fischer product of the coefficients summed over Fourier modes.

    For a single degree this is ``conj(P)(d/dX) Q`` at the origin; monomials
    are orthogonal with ``<X^a, X^a> = a!``.
    """
    total = 0j
    for alpha, c in P.terms.items():
        d = Q.terms.get(alpha)
        if d is None:
            continue
        K = max(_kmax(c), _kmax(d))
        total += index_factorial(alpha) * complex(np.vdot(_pad(c, K), _pad(d, K)))
    return total


def _zeta_like(ell: float, cutoff: int = 100_000) -> float:
    ks = np.arange(1, cutoff + 1, dtype=float)
    head = 1.0 + 2.0 * float(np.sum((1.0 + ks ** 2) ** (-ell)))
    # midpoint rule for the tail; its error is far below 1e-14 at this cutoff
    tail, _ = quad(lambda x: (1.0 + x * x) ** (-ell), cutoff + 0.5, np.inf, epsabs=1e-16)
    return head + 2.0 * tail


def algebra_constant(ell: float) -> float:
    """A constant ``C`` with ``|f g|_{H^ell} <= C |f|_{H^ell} |g|_{H^ell}``.

    Uses ``2^ell * sqrt(sum_k (1 + k^2)^(-ell))``.
    """
    if ell < 1:
        raise ValueError("the Sobolev index must be at least 1")
    return 2.0 ** ell * math.sqrt(_zeta_like(ell))


def sufficient_c(V: PolyMap, rho: float, ell: float) -> float:
    """Smallest ``c`` certified by the coefficient tensor for the analyticity bound.

    The degree-q part satisfies ``|V_q[x_1..x_q]|_{H^ell} <= ||V_q||_q prod |x_i|``
    (Cauchy-Schwarz on the symmetric tensor), so ``c = max_q rho^q ||V_q||_q`` works.
    """
    return max((rho ** n * graded_norm(V.part(n), ell) for n in V.degrees()), default=0.0)
