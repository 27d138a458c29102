"""The turn-based stopping game attached to a network.

Every neuron ``(l, i)`` gives two states: ``(l, i, +)`` where Max moves and
``(l, i, -)`` where Min moves.  Continuing from a state pays ``+b`` (Max) or
``-b`` (Min), scales the future by ``gamma = sum_j |W_ij|`` and jumps to
layer ``l + 1``: a positive weight keeps the sign of the state, a negative
weight flips it.  Stopping moves to the absorbing cemetery with reward 0.
Layer ``L`` (the network input) is terminal and pays ``+x_i`` / ``-x_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .network import NetworkError, NetworkSpec, validate

PLUS, MINUS = 1, -1


class GameError(ValueError):
    pass


class GameState(NamedTuple):
    """A signed state ``(layer, neuron, sign)`` with 1-based layer and neuron."""

    layer: int
    neuron: int
    sign: int

    @property
    def label(self) -> str:
        if self.sign == 0:
            return "cemetery"
        return f"{self.layer},{self.neuron}{'+' if self.sign > 0 else '-'}"

    @property
    def is_max(self) -> bool:
        return self.sign == PLUS


CEMETERY = GameState(0, 0, 0)


@dataclass(frozen=True)
class GameGraph:
    """Per-layer arrays describing the game.

    All tuples are indexed by ``l - 1`` for ``l = 1 .. L-1``.  ``p_keep[l-1]``
    holds ``P^l_{i+,j+} = P^l_{i-,j-}`` and ``p_flip[l-1]`` holds
    ``P^l_{i+,j-} = P^l_{i-,j+}``; the Min-side rows are the same arrays
    with the roles of the two successors swapped.
    """

    widths: tuple          # widths[l-1] = k_l, l = 1..L
    gamma: tuple
    p_keep: tuple
    p_flip: tuple
    bias: tuple

    @property
    def depth(self) -> int:
        return len(self.widths)

    def width(self, l: int) -> int:
        return self.widths[l - 1]

    # -- state-level view ------------------------------------------------
    def states(self) -> list[GameState]:
        """All signed states in canonical order, cemetery last."""
        out = [GameState(l, i, s)
               for l in range(1, self.depth + 1)
               for i in range(1, self.width(l) + 1)
               for s in (PLUS, MINUS)]
        out.append(CEMETERY)
        return out

    def interior_states(self, sign: int) -> list[GameState]:
        """States of one player where a move is made (layers 1..L-1)."""
        return [GameState(l, i, sign)
                for l in range(1, self.depth)
                for i in range(1, self.width(l) + 1)]

    def is_terminal(self, s: GameState) -> bool:
        return s.layer == self.depth

    def _check(self, s: GameState):
        if s == CEMETERY:
            return
        if not (1 <= s.layer <= self.depth and 1 <= s.neuron <= self.width(s.layer)
                and s.sign in (PLUS, MINUS)):
            raise GameError(f"no such state {s}")

    def reward(self, s: GameState) -> float:
        """Instantaneous reward for continuing from ``s``."""
        self._check(s)
        if s == CEMETERY or self.is_terminal(s):
            return 0.0
        return s.sign * float(self.bias[s.layer - 1][s.neuron - 1])

    def discount(self, s: GameState) -> float:
        self._check(s)
        if s == CEMETERY or self.is_terminal(s):
            return 0.0
        return float(self.gamma[s.layer - 1][s.neuron - 1])

    def transitions(self, s: GameState) -> list[tuple[GameState, float]]:
        """Positive-probability successors of ``s`` after a continue move."""
        self._check(s)
        if s == CEMETERY or self.is_terminal(s):
            return []
        l, i = s.layer, s.neuron - 1
        keep, flip = self.p_keep[l - 1][i], self.p_flip[l - 1][i]
        out = []
        for j in range(self.width(l + 1)):
            if keep[j] > 0:
                out.append((GameState(l + 1, j + 1, s.sign), float(keep[j])))
            if flip[j] > 0:
                out.append((GameState(l + 1, j + 1, -s.sign), float(flip[j])))
        return out

    def reconstruct_weights(self, l: int) -> np.ndarray:
        """``gamma * (P_keep - P_flip)``, which should give back ``W^l``."""
        return self.gamma[l - 1][:, None] * (self.p_keep[l - 1] - self.p_flip[l - 1])


def build_game(spec: NetworkSpec, strict: bool = True) -> GameGraph:
    """Build the game of a ReLU net.

    In strict mode a row of zeros in some ``W^l`` (so ``gamma = 0``) is an
    error.  In lenient mode the state keeps ``gamma = 0`` and no outgoing
    transitions, so continuing collects only the bias.
    """
    problems = validate(spec)
    if problems:
        raise NetworkError("; ".join(problems))
    L = spec.depth
    gammas, keeps, flips, biases = [], [], [], []
    for l in range(1, L):
        w = spec.W(l)
        gamma = np.abs(w).sum(axis=1)
        zero = np.flatnonzero(gamma == 0)
        if zero.size and strict:
            raise GameError(f"zero weight row at ({l},{zero[0] + 1})")
        safe = np.where(gamma > 0, gamma, 1.0)[:, None]
        keeps.append(np.where(w > 0, w, 0.0) / safe)
        flips.append(np.where(w < 0, -w, 0.0) / safe)
        gammas.append(gamma)
        biases.append(np.array(spec.b(l)))
    for a in gammas + keeps + flips + biases:
        a.setflags(write=False)
    widths = tuple(spec.width(l) for l in range(1, L + 1))
    return GameGraph(widths, tuple(gammas), tuple(keeps), tuple(flips), tuple(biases))


@dataclass(frozen=True)
class TerminalReward:
    """Payoffs at the layer-``L`` states: ``plus[i]`` at ``(L, i+1, +)``, ``minus[i]`` at ``(L, i+1, -)``."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = np.array(self.plus, dtype=np.float64, ndmin=1)
        minus = np.array(self.minus, dtype=np.float64, ndmin=1)
        if plus.shape != minus.shape or plus.ndim != 1:
            raise GameError("terminal reward needs matching + and - vectors")
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            raise GameError("terminal reward must be finite")
        plus.setflags(write=False)
        minus.setflags(write=False)
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @classmethod
    def from_mapping(cls, graph: GameGraph, mapping) -> "TerminalReward":
        """From a ``{GameState: value}`` dict covering every layer-L state."""
        L, k = graph.depth, graph.width(graph.depth)
        plus, minus = np.empty(k), np.empty(k)
        for i in range(k):
            for sign, arr in ((PLUS, plus), (MINUS, minus)):
                s = GameState(L, i + 1, sign)
                if s not in mapping:
                    raise GameError(f"missing terminal entry for state {s.label}")
                arr[i] = mapping[s]
        return cls(plus, minus)

    def value(self, s: GameState) -> float:
        return float((self.plus if s.sign > 0 else self.minus)[s.neuron - 1])

    def as_mapping(self, graph: GameGraph) -> dict:
        L = graph.depth
        out = {}
        for i in range(self.plus.size):
            out[GameState(L, i + 1, PLUS)] = float(self.plus[i])
            out[GameState(L, i + 1, MINUS)] = float(self.minus[i])
        return out


def terminal_reward_from_input(graph: GameGraph, x) -> TerminalReward:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != graph.width(graph.depth):
        raise GameError(f"input has length {x.size}, game expects {graph.width(graph.depth)}")
    return TerminalReward(x, -x)


def check_terminal(graph: GameGraph, terminal: TerminalReward):
    k = graph.width(graph.depth)
    if terminal.plus.size != k:
        raise GameError(f"terminal reward covers {terminal.plus.size} of {k} input states")


def _fraction_label(p: float, limit: int = 1000) -> str:
    f = Fraction(p).limit_denominator(limit)
    if abs(float(f) - p) <= 1e-12:
        return str(f)
    return repr(p)


def _num_label(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def export_dot(graph: GameGraph) -> str:
    """Render the game in Graphviz dot syntax.

    States are circles.  Each interior state has a dashed stop edge to the
    cemetery (reward 0) and one continue edge per successor, labelled with
    the transition probability (as a fraction when a small denominator
    reproduces it) and with the continue reward at its tail.  Terminal
    states point at ``x_i`` / ``-x_i`` boxes.
    """
    lines = ["digraph relu_game {", "  rankdir=LR;",
             '  node [shape=circle, fontsize=10];']
    for s in graph.states():
        if s == CEMETERY:
            lines.append('  "cemetery" [label="⊥", shape=doublecircle];')
            continue
        lines.append(f'  "{s.label}" [label="{s.label}"];')
    for s in graph.states():
        if s == CEMETERY:
            continue
        if graph.is_terminal(s):
            x = f"x_{s.neuron}" if s.sign > 0 else f"-x_{s.neuron}"
            lines.append(f'  "phi {s.label}" [label="{x}", shape=box];')
            lines.append(f'  "{s.label}" -> "phi {s.label}";')
            continue
        reward = _num_label(graph.reward(s))
        lines.append(f'  "{s.label}" -> "cemetery" [label="stop: 0", style=dashed];')
        for target, p in graph.transitions(s):
            lines.append(f'  "{s.label}" -> "{target.label}" '
                         f'[label="{_fraction_label(p)}", taillabel="{reward}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
