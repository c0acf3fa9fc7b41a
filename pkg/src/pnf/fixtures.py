"""Bundled example systems.

``uncouple_basic``
    One neutral direction driven by ``u0^2 cos t`` into one damped direction,
    plus autonomous couplings so every degree of the graph map is nontrivial.
``touze_amabili``
    Two quadratically coupled damped oscillators, the first harmonically
    forced with amplitude ``eps^2``; ``eps`` is carried as a coordinate.
``hopf``
    A planar centre with frequency sqrt(2) under 2 pi-periodic forcing
    (non-resonant with the forcing, so its normal form is autonomous).
``hopf_1to1``
    Same with frequency 1: resonances now occur at nonzero Fourier modes.
"""
from __future__ import annotations

import math
from importlib import resources

import numpy as np

from .algebra import PolyMap
from .norms import sufficient_c
from .system import SystemSpec

TWO_PI = 2 * math.pi

TOUZE_AMABILI = {
    "omega1": 1.0, "omega2": 2.3, "xi1": 0.01, "xi2": 0.05, "Omega": 1.1,
    "a": (1.0, 0.6, 0.3), "b": (0.5, 0.8, 0.2), "kappa": 0.3,
}


def _cos(amp: float = 1.0) -> np.ndarray:
    return np.array([0.5 * amp, 0.0, 0.5 * amp])


def _sin(amp: float = 1.0) -> np.ndarray:
    return np.array([0.5j * amp, 0.0, -0.5j * amp])


def _column(dim: int, i: int, values: np.ndarray | float) -> np.ndarray:
    v = np.atleast_1d(np.asarray(values, dtype=complex))
    out = np.zeros((v.size, dim), dtype=complex)
    out[:, i] = v
    return out


def _build(nvars: int, period: float, entries: list[tuple[int, tuple[int, ...], object]]) -> PolyMap:
    P = PolyMap.zero(nvars, nvars, period)
    for comp, alpha, val in entries:
        P = P + PolyMap(nvars, nvars, period, {alpha: _column(nvars, comp, val)}, True)
    return P


def uncouple_basic(rho: float = 1.0, ell: int = 1) -> SystemSpec:
    V = _build(2, TWO_PI, [
        (1, (2, 0), _cos()),
        (1, (1, 1), 1.0),
        (1, (0, 2), 1.0),
    ])
    return SystemSpec(TWO_PI, [[0.0]], [[-1.0]], V, c=sufficient_c(V, rho, ell), rho=rho,
                      ell=ell, tau=1.0, eig0=(np.array([0.0]), np.eye(1)), name="uncouple_basic")


def touze_amabili_parts(rho: float = 1.0, ell: int = 1) -> tuple[SystemSpec, PolyMap]:
    """Unforced system on ``(X1, Y1, X2, Y2)`` and the parameter terms on ``(X1, Y1, X2, Y2, eps)``."""
    p = TOUZE_AMABILI
    w1, w2, x1, x2 = p["omega1"], p["omega2"], p["xi1"], p["xi2"]
    T = TWO_PI / p["Omega"]
    a, b = p["a"], p["b"]
    V = _build(4, T, [
        (1, (2, 0, 0, 0), -a[0]), (1, (1, 0, 1, 0), -a[1]), (1, (0, 0, 2, 0), -a[2]),
        (3, (2, 0, 0, 0), -b[0]), (3, (1, 0, 1, 0), -b[1]), (3, (0, 0, 2, 0), -b[2]),
    ])
    L0 = np.array([[0.0, 1.0], [-w1 ** 2, -2 * x1 * w1]])
    L1 = np.array([[0.0, 1.0], [-w2 ** 2, -2 * x2 * w2]])
    base = SystemSpec(T, L0, L1, V, c=1.0, rho=rho, ell=ell, tau=1.0, name="touze_amabili_unforced",
                      meta={k: list(v) if isinstance(v, tuple) else v for k, v in p.items()})
    base = base.with_(c=sufficient_c(V, rho, ell))
    eps = PolyMap.zero(5, 4, T)
    for comp, alpha, val in [(1, (0, 0, 0, 0, 2), _cos()), (3, (1, 0, 0, 0, 1), _cos(p["kappa"]))]:
        eps = eps + PolyMap(5, 4, T, {alpha: _column(4, comp, val)}, True)
    return base, eps


def touze_amabili(rho: float = 1.0, ell: int = 1) -> SystemSpec:
    """Forced system with ``eps`` adjoined; coordinates ``(X1, Y1, eps, X2, Y2)``."""
    from .uncouple import augment_epsilon

    base, eps = touze_amabili_parts(rho, ell)
    aug = augment_epsilon(base, eps)
    return aug.with_(name="touze_amabili")


def _hopf(freq: float, name: str, rho: float, ell: int) -> SystemSpec:
    L = freq * np.array([[0.0, 1.0], [-1.0, 0.0]])
    V = _build(2, TWO_PI, [
        (0, (2, 0), _cos(0.5)), (0, (1, 1), -0.3), (1, (0, 2), 0.2), (1, (1, 1), _sin(0.4)),
        (0, (3, 0), 0.1), (0, (2, 1), 1.0), (0, (0, 3), _sin(0.3)),
        (1, (3, 0), -1.0), (1, (1, 2), 0.5), (1, (0, 3), _cos(0.2)),
    ])
    lam = np.array([1j * freq, -1j * freq])
    P = np.array([[1.0, 1.0], [1j, -1j]]) / math.sqrt(2)
    return SystemSpec(TWO_PI, L, np.zeros((0, 0)), V, c=sufficient_c(V, rho, ell), rho=rho,
                      ell=ell, tau=1.0, eig0=(lam, P), name=name)


def hopf(rho: float = 1.0, ell: int = 1) -> SystemSpec:
    return _hopf(math.sqrt(2), "hopf", rho, ell)


def hopf_1to1(rho: float = 1.0, ell: int = 1) -> SystemSpec:
    return _hopf(1.0, "hopf_1to1", rho, ell)


BUILDERS = {
    "uncouple_basic": uncouple_basic,
    "touze_amabili": touze_amabili,
    "hopf": hopf,
    "hopf_1to1": hopf_1to1,
}


def bundled(name: str) -> SystemSpec:
    """Load a bundled fixture from its JSON file."""
    from .io import system_from_json
    import json

    text = resources.files("pnf").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return system_from_json(json.loads(text))


def write_bundled(directory) -> None:
    """Regenerate the JSON files of all fixtures."""
    from pathlib import Path

    from .io import system_to_json, write_json

    for name, build in BUILDERS.items():
        write_json(Path(directory) / f"{name}.json", system_to_json(build()))
