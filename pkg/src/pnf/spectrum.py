"""Eigen-data, small divisors, non-resonance scans and the explicit constants."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np
import scipy.linalg

from .algebra import enumerate_indices
from .norms import algebra_constant

if TYPE_CHECKING:
    from .system import SystemSpec

Path = Literal["graph", "normal"]

RANK_TOL = 1e-8
STIRLING_SCAN = 200


class HypothesisViolation(ValueError):
    """A structural assumption fails (resonance, non-diagonalisable part, ...)."""

    def __init__(self, message: str, offending: object = None) -> None:
        super().__init__(message)
        self.offending = offending


def is_normal(A: np.ndarray, tol: float = 1e-12) -> bool:
    A = np.asarray(A)
    scale = max(1.0, float(np.linalg.norm(A)) ** 2)
    return float(np.linalg.norm(A @ A.conj().T - A.conj().T @ A)) <= tol * scale


def eigen_decompose(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and an eigenvector matrix, unitary whenever ``A`` is normal."""
    A = np.atleast_2d(np.asarray(A))
    n = A.shape[0]
    if n == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    if is_normal(A):
        T, Z = scipy.linalg.schur(A.astype(complex), output="complex")
        return np.diag(T).copy(), Z
    w, P = np.linalg.eig(A)
    if np.linalg.cond(P) > 1e12:
        raise HypothesisViolation("matrix is not diagonalisable to working precision")
    return w.astype(complex), P.astype(complex)


def jordan_index(A: np.ndarray, tol: float = RANK_TOL) -> int:
    """Size of the largest Jordan block, from rank tests on ``(A - lambda)^s``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    n = A.shape[0]
    if n == 0:
        return 1
    scale = max(1.0, float(np.linalg.norm(A)))
    lams: list[complex] = []
    for lam in np.linalg.eigvals(A):
        if all(abs(lam - mu) > 1e-6 * scale for mu in lams):
            lams.append(lam)
    nu = 1
    for lam in lams:
        B = A - lam * np.eye(n)
        prev = n
        power = np.eye(n, dtype=complex)
        for s in range(1, n + 1):
            power = power @ B
            r = np.linalg.matrix_rank(power, tol=tol * scale ** s)
            if r == prev:
                nu = max(nu, s - 1)
                break
            prev = r
        else:
            nu = max(nu, n)
    return max(nu, 1)


@dataclass(frozen=True)
class EigenData:
    """Spectral data of the linear part in both decompositions."""

    lam0: np.ndarray
    P0: np.ndarray
    P0inv: np.ndarray
    lam1: np.ndarray
    nu: int
    lam: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    period: float

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    @property
    def Lambda(self) -> float:
        return float(np.max(np.abs(self.lam), initial=0.0))

    def sources(self, path: Path) -> tuple[np.ndarray, np.ndarray]:
        if path == "graph":
            return self.lam0, self.lam1
        return self.lam, self.lam

    def divisor(self, a: tuple[int, ...], k: int, j: int, path: Path = "graph") -> complex:
        """``<a, lambda_src> + i k 2pi/T - lambda_tgt[j]`` (indices are 0-based)."""
        src, tgt = self.sources(path)
        if len(a) != len(src) or not 0 <= j < len(tgt):
            raise IndexError("multi-index or component out of range")
        return complex(np.dot(a, src) + 1j * k * self.omega - tgt[j])


def eigen_data(sys: "SystemSpec") -> EigenData:
    if sys.eig0 is not None:
        lam0, P0 = (np.asarray(x, dtype=complex) for x in sys.eig0)
    else:
        lam0, P0 = eigen_decompose(sys.L0)
    P0inv = np.linalg.inv(P0) if sys.m0 else P0
    lam1 = np.linalg.eigvals(sys.L1).astype(complex) if sys.m1 else np.zeros(0, dtype=complex)
    nu = sys.nu if sys.nu is not None else jordan_index(sys.L1)
    if sys.m1:
        try:
            lam1d, P1 = eigen_decompose(sys.L1)
        except HypothesisViolation:
            lam1d, P1 = lam1, None
    else:
        lam1d, P1 = lam1, np.zeros((0, 0), dtype=complex)
    lam = np.concatenate([lam0, lam1d])
    if P1 is None:
        P = np.full((sys.m, sys.m), np.nan + 0j)
        Pinv = P
    else:
        P = scipy.linalg.block_diag(P0, P1).astype(complex)
        Pinv = np.linalg.inv(P)
    return EigenData(lam0, P0, P0inv, lam1, nu, lam, P, Pinv, sys.period)


def default_tol_res(eig: EigenData) -> float:
    return 1e-9 * (1.0 + eig.Lambda)


@dataclass
class NonResonanceReport:
    path: str
    tau: float
    gamma_eff: float
    worst: tuple | None
    resonant: list[tuple]
    near_resonant: list[tuple]
    scanned: int
    degree_range: tuple[int, int]
    fourier_max: int
    tol_res: float


def check_nonresonance(sys: "SystemSpec", tau: float | None = None, degree_max: int = 10,
                       fourier_max: int | None = None, path: Path = "graph",
                       tol_res: float | None = None, degree_min: int = 2,
                       eig: EigenData | None = None, strict: bool = True) -> NonResonanceReport:
    """Scan the small divisors over degrees ``degree_min..degree_max`` and ``|k| <= fourier_max``.

    Returns the empirical constant ``gamma_eff = min |d| (|a| + |k|)^tau`` over
    the non-resonant tuples, the tuple attaining it, and every tuple with
    ``|d| <= tol_res``.  On the invariant-manifold path any resonance is a
    hypothesis violation (raised when ``strict``).
    """
    eig = eig or eigen_data(sys)
    tau = sys.tau if tau is None else tau
    if not tau >= 0:
        raise ValueError("tau must be nonnegative")
    if fourier_max is None:
        fourier_max = degree_max * sys.V.kmax
    tol = default_tol_res(eig) if tol_res is None else tol_res
    src, tgt = eig.sources(path)
    ks = np.arange(-fourier_max, fourier_max + 1)
    gamma, worst, scanned = math.inf, None, 0
    resonant: list[tuple] = []
    near: list[tuple] = []
    if len(src) and len(tgt):
        for n in range(max(degree_min, 0), degree_max + 1):
            A = enumerate_indices(len(src), n)
            s = np.asarray(A, dtype=float) @ src
            d = s[:, None, None] + 1j * eig.omega * ks[None, :, None] - tgt[None, None, :]
            absd = np.abs(d)
            weight = (n + np.abs(ks))[None, :, None].astype(float) ** tau
            scanned += absd.size
            res = absd <= tol
            for ia, ik, j in zip(*np.nonzero(res)):
                resonant.append((A[ia], int(ks[ik]), int(j)))
            for ia, ik, j in zip(*np.nonzero(~res & (absd <= 10 * tol))):
                near.append((A[ia], int(ks[ik]), int(j)))
            prod = np.where(res, np.inf, absd * weight)
            idx = np.unravel_index(np.argmin(prod), prod.shape)
            if prod[idx] < gamma:
                gamma = float(prod[idx])
                worst = (A[idx[0]], int(ks[idx[1]]), int(idx[2]))
    report = NonResonanceReport(path, tau, gamma, worst, resonant, near, scanned,
                                (degree_min, degree_max), fourier_max, tol)
    if strict and path == "graph" and resonant:
        raise HypothesisViolation(f"resonant divisor at (a, k, j) = {resonant[0]}", resonant[0])
    return report


def stirling_sup(pmax: int = STIRLING_SCAN) -> float:
    """``sup_p e^2 p! / (p^(p+1/2) e^-p)`` by a direct scan (the sequence decreases)."""
    vals = [2.0 + math.lgamma(p + 1) - (p + 0.5) * math.log(p) + p for p in range(1, pmax + 1)]
    return math.exp(max(vals))


@dataclass
class ConstantsReport:
    """Explicit constants for one system, with where each one comes from."""

    path: str
    ell: int
    tau: float
    nu: int
    gamma: float
    Lambda: float
    m0: int
    m: int
    c: float
    rho: float
    period: float
    algebra_C: float
    C_j: list[float]
    b: float
    K: float = math.nan
    bigC: float = math.nan
    M: float = math.nan
    omega: float = math.nan
    delta0: float = math.nan
    M1: float = math.nan
    M0: float = math.nan
    stirling: float = math.nan
    flags: dict[str, bool] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)

    def p_opt(self, delta: float) -> int:
        if not delta > 0:
            raise ValueError("delta must be positive")
        if self.path == "graph":
            return max(1, math.ceil((2 * delta * self.K) ** (-self.b)))
        return max(1, math.ceil(1.0 / (math.e * (self.bigC * delta) ** self.b)))

    def remainder_bound(self, delta: float) -> float:
        """Guaranteed sup bound on the remainder over the ball of radius ``delta``."""
        if self.path == "graph":
            return self.M * math.exp(-self.omega / delta ** self.b)
        return self.M * delta ** 2 * math.exp(-self.omega / delta ** self.b)

    def in_range(self, delta: float) -> bool:
        return self.path == "normal" or delta < self.delta0

    def to_dict(self) -> dict:
        return asdict(self)


def _homological_factor(gamma: float, nu: int, Lambda: float, period: float, j: float,
                        path: Path) -> float:
    lead = max(1.0, nu / gamma ** nu) if path == "graph" else max(1.0, 1.0 / gamma)
    return lead * (1 + period ** 2 / (2 * math.pi ** 2) * (4 * Lambda ** 2 + 1)) ** (j / 2)


def homological_constants(gamma: float, nu: int, Lambda: float, period: float, ell: int,
                          path: Path = "graph") -> list[float]:
    """``C_j`` for ``j = 0..ell+1`` in the bound on the inverse homological operator."""
    return [_homological_factor(gamma, nu, Lambda, period, j, path) for j in range(ell + 2)]


def constants_graph(sys: "SystemSpec", gamma: float, tau: float | None = None,
                    eig: EigenData | None = None) -> ConstantsReport:
    """Constants of the invariant-manifold construction."""
    eig = eig or eigen_data(sys)
    tau = sys.tau if tau is None else tau
    ell, nu, c, rho, T = sys.ell, eig.nu, sys.c, sys.rho, sys.period
    m0, m = sys.m0, sys.m
    Lam = float(np.max(np.abs(np.concatenate([eig.lam0, eig.lam1])), initial=0.0))
    Ca = algebra_constant(ell)
    Cj = homological_constants(gamma, nu, Lam, T, ell, "graph")
    sm0, sm = math.sqrt(m0), math.sqrt(m)
    K = max(9 * Ca * sm0 * sm / rho, 8 * Cj[ell] * c * (Ca * sm0) ** 3 * sm / rho ** 2)
    b = 1.0 / (1 + ell + tau * nu)
    M = c * (73 / 72 + Ca * sm0 * (2 * sm + sm0 / 72))
    omega = math.log(2) / (2 * (2 * K) ** b)
    delta0 = min(1 / (2 * K * (2 * math.e) ** b), rho / (4 * Ca * sm * sm0))
    r = Ca * sm / rho * 3 * delta0 * sm0
    series = r / (1 - r) ** 2 + 2 / (1 - r)
    M1 = 2 * c * sm0 * (Ca * sm / rho) ** 2 * series
    proj = 1.0  # E0 and E1 are coordinate blocks, so the projection has norm 1
    M0 = (1 + proj + 2 ** (ell + tau * nu) * m0 * proj) * M1
    return ConstantsReport(
        path="graph", ell=ell, tau=tau, nu=nu, gamma=gamma, Lambda=Lam, m0=m0, m=m, c=c,
        rho=rho, period=T, algebra_C=Ca, C_j=Cj, b=b, K=K, M=M, omega=omega, delta0=delta0,
        M1=M1, M0=M0,
        flags={"tau_nu_le_ell": tau * nu <= ell, "gamma_finite": math.isfinite(gamma)},
        notes={
            "algebra_C": "2^ell sqrt(sum_k (1+k^2)^-ell)",
            "C_j": "max(1, nu/gamma^nu) (1 + T^2/(2 pi^2) (4 Lambda^2 + 1))^(j/2)",
            "K": "max(9 C sqrt(m0 m)/rho, 8 C_ell c (C sqrt(m0))^3 sqrt(m)/rho^2)",
            "b": "1/(1 + ell + tau nu)",
            "M": "c (73/72 + C sqrt(m0) (2 sqrt(m) + sqrt(m0)/72))",
            "omega": "ln 2 / (2 (2K)^b)",
            "delta0": "min(1/(2K (2e)^b), rho/(4 C sqrt(m) sqrt(m0)))",
            "M1": "2c sqrt(m0) (C sqrt(m)/rho)^2 sum_k (k+2) (3 delta0 sqrt(m0) C sqrt(m)/rho)^k",
            "M0": "(1 + |P0| + 2^(ell + tau nu) m0 |P0|) M1 with |P0| = 1",
            "gamma": "empirical minimum over the scanned divisors",
        },
    )


def constants_normal(sys: "SystemSpec", gamma: float, tau: float | None = None,
                    eig: EigenData | None = None) -> ConstantsReport:
    """Constants of the normal-form construction."""
    eig = eig or eigen_data(sys)
    tau = sys.tau if tau is None else tau
    ell, c, rho, T, m = sys.ell, sys.c, sys.rho, sys.period, sys.m
    Lam = eig.Lambda
    Ca = algebra_constant(ell)
    Cj = homological_constants(gamma, 1, Lam, T, ell, "normal")
    sm = math.sqrt(m)
    bigC = (Ca * sm) ** 3 / rho ** 2 * ((2.5 * Ca ** 2 * m + 2) * Cj[ell] * Ca
                                        + 3 * rho / (Ca * sm))
    Mcal = stirling_sup()
    s = 1 + ell + tau
    Mp = 10 / 9 * c * bigC ** 2 * ((Mcal * math.sqrt(27 / (8 * math.e))) ** s
                                   + (2 * math.e) ** (2 * s))
    b = 1.0 / s
    omega = 1.0 / (math.e * bigC ** b)
    return ConstantsReport(
        path="normal", ell=ell, tau=tau, nu=1, gamma=gamma, Lambda=Lam, m0=m, m=m, c=c,
        rho=rho, period=T, algebra_C=Ca, C_j=Cj, b=b, bigC=bigC, M=Mp, omega=omega,
        delta0=math.inf, stirling=Mcal,
        flags={"tau_le_ell": tau <= ell, "gamma_finite": math.isfinite(gamma)},
        notes={
            "C_j": "max(1, 1/gamma) (1 + T^2/(2 pi^2) (1 + 4 Lambda^2))^(j/2)",
            "bigC": "(C sqrt m)^3/rho^2 ((5/2 C^2 m + 2) C_ell C + 3 rho/(C sqrt m))",
            "M": "10/9 c bigC^2 ((Mcal sqrt(27/(8e)))^(1+ell+tau) + (2e)^(2(1+ell+tau)))",
            "stirling": "sup_p e^2 p!/(p^(p+1/2) e^-p), scanned over p = 1..200",
            "omega": "1/(e bigC^b)",
            "b": "1/(1 + ell + tau)",
            "gamma": "empirical minimum over non-resonant scanned divisors",
        },
    )
