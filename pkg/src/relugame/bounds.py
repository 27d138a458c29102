"""Interval bounds through the order-preserving lift of the game.

Replacing the terminal payoff ``(x, -x)`` by an arbitrary pair ``(x, x')``
gives a value ``Vbar(x, x')`` that is monotone in both arguments, since
every transition probability is nonnegative.  For ``lo <= x <= hi`` this
sandwiches each neuron: ``Vbar(lo, -hi) <= y <= Vbar(hi, -lo)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import GameError, GameGraph, TerminalReward
from .value import ValueTable, shapley_value

BoundaryAssignment = TerminalReward


def boundary(x, x_prime) -> BoundaryAssignment:
    """Terminal payoff ``x`` at the ``+`` input states and ``x_prime`` at the ``-`` ones."""
    return TerminalReward(x, x_prime)


def value_with_boundary(graph: GameGraph, bnd: BoundaryAssignment) -> ValueTable:
    """Game value for a general boundary; no antisymmetry is assumed."""
    return shapley_value(graph, bnd)


@dataclass(frozen=True)
class IntervalVector:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=np.float64, ndmin=1)
        hi = np.array(self.upper, dtype=np.float64, ndmin=1)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise GameError("interval bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise GameError("interval bounds must be finite")
        if np.any(lo > hi):
            raise GameError("interval lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(self.lower - tol <= x) and np.all(x <= self.upper + tol))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True)
class LayerIntervals:
    """``layers[l-1]`` bounds the activations of layer ``l`` (``layers[0]`` is the output)."""

    layers: tuple

    @property
    def output(self) -> IntervalVector:
        return self.layers[0]


def interval_propagate(graph: GameGraph, box: IntervalVector) -> LayerIntervals:
    """Bounds on every neuron for inputs in ``box``."""
    k = graph.width(graph.depth)
    if box.lower.size != k:
        raise GameError(f"box has dimension {box.lower.size}, network expects {k}")
    low = value_with_boundary(graph, boundary(box.lower, -box.upper))
    high = value_with_boundary(graph, boundary(box.upper, -box.lower))
    return LayerIntervals(tuple(IntervalVector(lo, hi) for lo, hi in zip(low.plus, high.plus)))
