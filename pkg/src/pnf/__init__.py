"""Polynomial normalisations with exponentially small remainders for periodic vector fields."""
from .algebra import HomoPoly, PolyMap, TrigPoly, compose, directional_derivative, enumerate_indices
from .system import SystemSpec

__all__ = ["HomoPoly", "PolyMap", "SystemSpec", "TrigPoly", "compose", "directional_derivative",
           "enumerate_indices"]
