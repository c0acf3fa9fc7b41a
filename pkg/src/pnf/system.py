"""The system ``du/dt = L u + V(u, t)`` split into a centre-like block and the rest."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .algebra import PolyMap


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A periodic analytic system with polynomial nonlinearity.

    Coordinates are ordered ``(u0, u1)``: the first ``m0`` span the block
    carried by ``L0``, the last ``m1`` the block carried by ``L1``.  For
    the normal-form path set ``m1 = 0`` or use the full ``L``.

    ``c`` and ``rho`` are the analyticity constants: every degree-q part
    satisfies ``|V_q[x_1..x_q]|_{H^ell} <= c rho^-q prod |x_i|``.
    """

    period: float
    L0: np.ndarray
    L1: np.ndarray
    V: PolyMap
    c: float
    rho: float
    ell: int = 1
    tau: float = 1.0
    eig0: tuple[np.ndarray, np.ndarray] | None = None
    nu: int | None = None
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        L0 = np.atleast_2d(np.asarray(self.L0, dtype=float)) if np.size(self.L0) else np.zeros((0, 0))
        L1 = np.atleast_2d(np.asarray(self.L1, dtype=float)) if np.size(self.L1) else np.zeros((0, 0))
        object.__setattr__(self, "L0", L0)
        object.__setattr__(self, "L1", L1)
        if L0.shape[0] != L0.shape[1] or L1.shape[0] != L1.shape[1]:
            raise ValueError("linear blocks must be square")
        if not self.period > 0:
            raise ValueError("period must be positive")
        if self.ell < 1:
            raise ValueError("the Sobolev index ell must be at least 1")
        if not (self.c > 0 and self.rho > 0):
            raise ValueError("c and rho must be positive")
        m = self.m
        if (self.V.nvars, self.V.dim) != (m, m):
            raise ValueError(f"V must map R^{m} to R^{m}")
        if not math.isclose(self.V.period, self.period, rel_tol=1e-12):
            raise ValueError("V has a different period")
        if not self.V.is_zero() and self.V.min_degree < 2:
            raise ValueError("V must be at least quadratic")
        if self.eig0 is not None:
            lam, P = (np.asarray(x, dtype=complex) for x in self.eig0)
            if P.shape != L0.shape or lam.shape != (self.m0,):
                raise ValueError("eigen-decomposition of L0 has the wrong shape")
            resid = np.linalg.norm(L0 @ P - P * lam)
            if resid > 1e-9 * max(1.0, np.linalg.norm(L0)) * max(1.0, np.linalg.norm(P)):
                raise ValueError("supplied eigen-decomposition does not match L0")
            if np.linalg.cond(P) > 1e12:
                raise ValueError("supplied eigenvectors are singular")

    @property
    def m0(self) -> int:
        return self.L0.shape[0]

    @property
    def m1(self) -> int:
        return self.L1.shape[0]

    @property
    def m(self) -> int:
        return self.m0 + self.m1

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    @property
    def L(self) -> np.ndarray:
        return scipy.linalg.block_diag(self.L0, self.L1) if self.m else np.zeros((0, 0))

    @property
    def V0(self) -> PolyMap:
        return self.V.components(range(self.m0))

    @property
    def V1(self) -> PolyMap:
        return self.V.components(range(self.m0, self.m))

    @property
    def deg_V(self) -> int:
        return max(self.V.max_degree, 2)

    def with_(self, **changes) -> "SystemSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return SystemSpec(**kw)

    def rhs(self):
        """Pointwise right-hand side ``f(u, t) = L u + V(u, t)``."""
        L = self.L
        Vf = self.V.evaluator()

        def f(u: np.ndarray, t: float) -> np.ndarray:
            return L @ u + Vf(u, t)

        return f
