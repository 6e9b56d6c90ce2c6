"""Built-in benchmark problems with box constraints and reference minimizers.

Four fits come with full residual/Jacobian definitions (rosenbrock, kowalik,
osborne1, osborne2).  Two further cases (twoeq6, teneq1b) originate in an
external constrained-equations library; only their dimensions, boxes,
starting points and reference solutions are recorded here, so requesting
them raises ExternalDefinitionUnavailableError.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import data
from .prox import Box
from .solver import InvalidPointError, Problem


class UnknownProblemError(Exception):
    """No benchmark case under that name."""


class ExternalDefinitionUnavailableError(Exception):
    """The case's defining equations are not bundled with this package."""


class EmptyBoxError(Exception):
    """A box transform produced an empty feasible set."""


class CaseSource(str, Enum):
    STANDARD = "standard_collection"
    EXTERNAL_NLE = "external_nle"


@dataclass(frozen=True)
class BenchmarkCase:
    problem: Problem
    box: Box
    reference_x: np.ndarray | None
    reference_avg_iterations: int | None
    source: CaseSource

    def __post_init__(self):
        if self.problem.n != self.box.dimension:
            raise ValueError("problem and box dimensions differ")
        if self.reference_x is not None and not self.box.contains(self.reference_x, atol=1e-4):
            raise ValueError("reference point must lie in the box (up to rounding slack)")


# -- residual/Jacobian definitions -------------------------------------------

def _rosenbrock_residual(x):
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def _rosenbrock_jacobian(x):
    return np.array([[-20.0 * x[0], 10.0], [-1.0, 0.0]])


def _kowalik_residual(x):
    u = data.KOWALIK_U
    return data.KOWALIK_Y - x[0] * (u * u + u * x[1]) / (u * u + u * x[2] + x[3])


def _kowalik_jacobian(x):
    u = data.KOWALIK_U
    num = u * u + u * x[1]
    den = u * u + u * x[2] + x[3]
    return np.column_stack([
        -num / den,
        -x[0] * u / den,
        x[0] * num * u / den ** 2,
        x[0] * num / den ** 2,
    ])


_OSBORNE1_T = 10.0 * np.arange(data.OSBORNE1_M)
_OSBORNE1_Y = data.OSBORNE1_Y[:data.OSBORNE1_M]


def _osborne1_residual(x):
    return _OSBORNE1_Y - (x[0]
                          + x[1] * np.exp(-x[3] * _OSBORNE1_T)
                          + x[2] * np.exp(-x[4] * _OSBORNE1_T))


def _osborne1_jacobian(x):
    t = _OSBORNE1_T
    e1 = np.exp(-x[3] * t)
    e2 = np.exp(-x[4] * t)
    return np.column_stack([
        -np.ones_like(t), -e1, -e2, x[1] * t * e1, x[2] * t * e2,
    ])


_OSBORNE2_T = np.arange(65) / 10.0


def _osborne2_terms(x):
    t = _OSBORNE2_T
    return (
        np.exp(-t * x[4]),
        np.exp(-(t - x[8]) ** 2 * x[5]),
        np.exp(-(t - x[9]) ** 2 * x[6]),
        np.exp(-(t - x[10]) ** 2 * x[7]),
    )


def _osborne2_residual(x):
    e0, e1, e2, e3 = _osborne2_terms(x)
    return data.OSBORNE2_Y - (x[0] * e0 + x[1] * e1 + x[2] * e2 + x[3] * e3)


def _osborne2_jacobian(x):
    t = _OSBORNE2_T
    e0, e1, e2, e3 = _osborne2_terms(x)
    return np.column_stack([
        -e0, -e1, -e2, -e3,
        x[0] * t * e0,
        x[1] * (t - x[8]) ** 2 * e1,
        x[2] * (t - x[9]) ** 2 * e2,
        x[3] * (t - x[10]) ** 2 * e3,
        -2.0 * x[1] * x[5] * (t - x[8]) * e1,
        -2.0 * x[2] * x[6] * (t - x[9]) * e2,
        -2.0 * x[3] * x[7] * (t - x[10]) * e3,
    ])


# -- case registry ------------------------------------------------------------

def _standard_cases() -> dict[str, BenchmarkCase]:
    return {
        "rosenbrock": BenchmarkCase(
            problem=Problem(n=2, m=2, residual=_rosenbrock_residual,
                            jacobian=_rosenbrock_jacobian, name="rosenbrock"),
            box=Box(np.array([-3.0, -2.0]), np.array([3.0, 0.8])),
            reference_x=np.array([0.89475, 0.80000]),
            reference_avg_iterations=7,
            source=CaseSource.STANDARD,
        ),
        "kowalik": BenchmarkCase(
            problem=Problem(n=4, m=11, residual=_kowalik_residual,
                            jacobian=_kowalik_jacobian, name="kowalik"),
            box=Box(np.array([0.1928, 0.1916, 0.1234, 0.1362]), np.ones(4)),
            reference_x=np.array([0.19281, 0.19165, 0.12340, 0.13620]),
            reference_avg_iterations=7,
            source=CaseSource.STANDARD,
        ),
        "osborne1": BenchmarkCase(
            problem=Problem(n=5, m=data.OSBORNE1_M, residual=_osborne1_residual,
                            jacobian=_osborne1_jacobian, name="osborne1"),
            box=Box(np.array([0.3754, 1.0, -2.0, 0.01287, 0.0]),
                    np.array([1.0, 2.0, 0.0, 1.0, 1.0])),
            reference_x=np.array([0.37546, 1.93569, -1.46461, 0.01287, 0.02212]),
            reference_avg_iterations=21,
            source=CaseSource.STANDARD,
        ),
        "osborne2": BenchmarkCase(
            problem=Problem(n=11, m=65, residual=_osborne2_residual,
                            jacobian=_osborne2_jacobian, name="osborne2"),
            box=Box(np.array([1.31, 0.4314, 0.6336, 0.5, 0.5, 0.6, 1.0, 4.0, 2.0, 4.5689, 5.0]),
                    np.array([1.4, 0.8, 1.0, 1.0, 1.0, 3.0, 5.0, 7.0, 2.5, 5.0, 6.0])),
            reference_x=np.array([1.31000, 0.43157, 0.63367, 0.59941, 0.75423, 0.90423,
                                  1.36573, 4.82393, 2.39867, 4.56890, 5.67535]),
            reference_avg_iterations=17,
            source=CaseSource.STANDARD,
        ),
    }


# Known metadata of the external constrained-equations cases (dimensions,
# boxes, published starting points and minimizers); their equations are not
# bundled.
EXTERNAL_CASE_INFO: dict[str, dict] = {
    "twoeq6": {
        "n": 2,
        "m": 2,
        "box": Box(np.array([0.0001, 0.0001]), np.array([0.9999, np.inf])),
        "reference_x": np.array([0.75739, 0.02130]),
        "reference_avg_iterations": 20,
        "starting_points": [np.array([0.9, 0.5]), np.array([0.6, 0.1])],
    },
    "teneq1b": {
        "n": 10,
        "m": 10,
        "box": Box(np.array([0.0001] * 4 + [0.0] * 6), np.full(10, np.inf)),
        "reference_x": np.array([2.99763, 3.96642, 79.99969, 0.00236, 0.00060,
                                 0.00136, 0.06457, 3.53081, 26.43154, 0.00449]),
        "reference_avg_iterations": 10,
        "starting_points": [
            np.array([1.0, 1.0, 20.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            np.array([2.0, 5.0, 40.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0]),
        ],
    },
}

CASE_NAMES = ("rosenbrock", "kowalik", "osborne1", "osborne2", "twoeq6", "teneq1b")


def case_names() -> tuple[str, ...]:
    return CASE_NAMES


def get_case(name: str) -> BenchmarkCase:
    """Look up a benchmark case by name."""
    key = name.strip().lower()
    cases = _standard_cases()
    if key in cases:
        return cases[key]
    if key in EXTERNAL_CASE_INFO:
        raise ExternalDefinitionUnavailableError(
            f"case '{key}' is defined by an external equations library whose "
            "formulas are not bundled; only its metadata is available "
            "(problems.EXTERNAL_CASE_INFO)"
        )
    raise UnknownProblemError(f"unknown case '{name}'; known: {', '.join(CASE_NAMES)}")


def finite_diff_jacobian(problem: Problem, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, column i = (F(x + h e_i) - F(x - h e_i)) / 2h."""
    base = np.asarray(x, dtype=float)
    if base.shape != (problem.n,):
        raise InvalidPointError(f"point must have shape ({problem.n},)")
    cols = []
    for i in range(problem.n):
        forward = base.copy()
        backward = base.copy()
        forward[i] += h
        backward[i] -= h
        if not (problem.validity(forward) and problem.validity(backward)):
            raise InvalidPointError(f"stencil around coordinate {i} leaves the domain")
        cols.append((np.asarray(problem.residual(forward), dtype=float)
                     - np.asarray(problem.residual(backward), dtype=float)) / (2.0 * h))
    return np.column_stack(cols)


def shrink_box(box: Box, delta: float, which) -> Box:
    """Raise selected lower bounds to at least ``delta`` (zero-based indices).

    Pulls an open feasible region away from boundary faces where the
    derivative degenerates.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    lower = box.lower.copy()
    idx = sorted(set(int(i) for i in which))
    for i in idx:
        if i < 0 or i >= box.dimension:
            raise IndexError(f"coordinate index {i} out of range for dimension {box.dimension}")
        lower[i] = max(lower[i], delta)
    if np.any(lower > box.upper):
        raise EmptyBoxError("shrunken box is empty")
    return Box(lower, box.upper.copy())
