"""JSON and CSV interchange.

Floats are written with 17 significant digits (enough to round-trip every
double), keys are sorted, and non-finite values become the strings ``"inf"``,
``"-inf"`` or ``"nan"``, so artifacts are byte-stable and re-ingest bit-for-bit.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import fields, is_dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .algebra import PolyMap
from .system import SystemSpec


def _num(x: Any) -> float:
    if isinstance(x, str):
        return float(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        raise TypeError("expected a real number")
    return float(x)


def _cnum(x: Any) -> complex:
    if isinstance(x, dict):
        return complex(_num(x.get("re", 0.0)), _num(x.get("im", 0.0)))
    if isinstance(x, (list, tuple)):
        return complex(_num(x[0]), _num(x[1]))
    return complex(_num(x))


def to_jsonable(obj: Any) -> Any:
    """Recursively convert arrays, complex numbers and dataclasses to plain JSON data."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, PolyMap):
        return polymap_record(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(obj.real)), "im": to_jsonable(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def fmt_float(x: float) -> str:
    return format(x, ".17g")


def _encode(obj: Any, indent: int) -> str:
    pad, inner = " " * indent, " " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        return fmt_float(obj)
    return json.dumps(obj)


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, one-space indent, 17-digit floats."""
    return _encode(to_jsonable(obj), 0) + "\n"


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def polymap_to_json(P: PolyMap) -> list[dict]:
    """One entry per (component, multi-index) with its nonzero Fourier modes."""
    out = []
    for alpha in sorted(P.terms):
        c = P.terms[alpha]
        K = (c.shape[0] - 1) // 2
        for i in range(P.dim):
            modes = [{"k": k, "re": float(c[K + k, i].real), "im": float(c[K + k, i].imag)}
                     for k in range(-K, K + 1) if c[K + k, i] != 0]
            if modes:
                out.append({"component": i, "alpha": list(alpha), "modes": modes})
    return out


def polymap_from_json(entries: Iterable[dict], nvars: int, dim: int, period: float,
                      real: bool = True) -> PolyMap:
    buckets: dict[tuple[int, ...], dict[tuple[int, int], complex]] = {}
    for e in entries:
        alpha = tuple(int(a) for a in e["alpha"])
        comp = int(e["component"])
        if len(alpha) != nvars or not 0 <= comp < dim:
            raise ValueError(f"entry {e} does not fit {nvars} variables and {dim} components")
        slot = buckets.setdefault(alpha, {})
        for mode in e["modes"]:
            key = (int(mode["k"]), comp)
            slot[key] = slot.get(key, 0) + _cnum(mode)
    terms = {}
    for alpha, slot in buckets.items():
        K = max(abs(k) for k, _ in slot)
        arr = np.zeros((2 * K + 1, dim), dtype=complex)
        for (k, i), v in slot.items():
            arr[K + k, i] = v
        terms[alpha] = arr
    return PolyMap(nvars, dim, period, terms, real)


def polymap_record(P: PolyMap) -> dict:
    """Self-describing form of a map, as stored in results files."""
    return {"nvars": P.nvars, "dim": P.dim, "period": P.period, "real": P.real,
            "terms": polymap_to_json(P)}


def polymap_from_record(rec: dict) -> PolyMap:
    return polymap_from_json(rec["terms"], int(rec["nvars"]), int(rec["dim"]),
                             _num(rec["period"]), bool(rec["real"]))


def load_results(path: str | Path) -> dict[str, PolyMap]:
    """Maps stored in a results file, keyed by name."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {k: polymap_from_record(v) for k, v in data["maps"].items()}


def _matrix(x: Any, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros((0, 0))
    return np.array([[_num(v) for v in row] for row in x], dtype=float).reshape(n, n)


def system_from_json(data: dict) -> SystemSpec:
    """Build a system from the interchange format, validating it on the way."""
    for key in ("T", "m0", "m1", "L0", "L1", "V", "c", "rho", "ell"):
        if key not in data:
            raise ValueError(f"missing field {key!r}")
    T = _num(data["T"])
    m0, m1 = int(data["m0"]), int(data["m1"])
    L0 = _matrix(data["L0"]["matrix"], m0)
    L1 = _matrix(data["L1"]["matrix"], m1)
    eig0 = None
    if m0:
        if "eigvals" not in data["L0"] or "eigvecs" not in data["L0"]:
            raise ValueError("L0 needs its eigen-decomposition (eigvals, eigvecs)")
        lam = np.array([_cnum(v) for v in data["L0"]["eigvals"]])
        P = np.array([[_cnum(v) for v in row] for row in data["L0"]["eigvecs"]])
        eig0 = (lam, P.reshape(m0, m0))
    nu = data["L1"].get("nu")
    V = polymap_from_json(data["V"], m0 + m1, m0 + m1, T, real=True)
    return SystemSpec(
        period=T, L0=L0, L1=L1, V=V, c=_num(data["c"]), rho=_num(data["rho"]),
        ell=int(data["ell"]), tau=_num(data.get("tau", 1.0)), eig0=eig0,
        nu=None if nu is None else int(nu), name=str(data.get("name", "")),
        meta=dict(data.get("meta", {})),
    )


def system_to_json(sys: SystemSpec) -> dict:
    from .spectrum import eigen_decompose

    lam, P = sys.eig0 if sys.eig0 is not None else eigen_decompose(sys.L0)
    out = {
        "name": sys.name, "T": sys.period, "m0": sys.m0, "m1": sys.m1,
        "L0": {"matrix": sys.L0.tolist(), "eigvals": [[z.real, z.imag] for z in lam],
               "eigvecs": [[[z.real, z.imag] for z in row] for row in P]},
        "L1": {"matrix": sys.L1.tolist()},
        "V": polymap_to_json(sys.V), "c": sys.c, "rho": sys.rho, "ell": sys.ell,
        "tau": sys.tau, "meta": sys.meta,
    }
    if sys.nu is not None:
        out["L1"]["nu"] = sys.nu
    return out


def load_system(path: str | Path) -> SystemSpec:
    return system_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def write_csv(path: str | Path, header: list[str], rows: Iterable[Iterable[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
