"""Backward (Shapley-Bellman) recursions on the game.

All recursions share one backup: for a neuron ``(l, i)`` and the values
``V+``, ``V-`` of layer ``l + 1``,

    Q+ = gamma * (P_keep @ V+ + P_flip @ V-) + b
    Q- = gamma * (P_keep @ V- + P_flip @ V+) - b

and the state's value is a choice between continuing (``Q``) and stopping
(``0``).  What differs between the recursions is who chooses and how.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import (PLUS, GameGraph, GameState, TerminalReward, build_game,
                   check_terminal, terminal_reward_from_input)
from .network import NetworkSpec, forward_relu


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class ValueTable:
    """Values of every signed state.

    ``plus[l-1][i-1]`` is the value at ``(l, i, +)``, ``minus`` likewise.
    ``q_plus`` / ``q_minus`` hold the continue values for ``l < L``.
    """

    plus: tuple
    minus: tuple
    q_plus: tuple
    q_minus: tuple

    def __getitem__(self, s: GameState) -> float:
        arr = self.plus if s.sign == PLUS else self.minus
        return float(arr[s.layer - 1][s.neuron - 1])

    @property
    def output(self) -> np.ndarray:
        """Values at the ``(1, i, +)`` start states."""
        return self.plus[0]


@dataclass(frozen=True)
class PolicyPair:
    """Deterministic stop (0) / continue (1) choices.

    ``pi[l-1]`` covers the Max states of layer ``l`` and ``sigma[l-1]`` the
    Min states, for ``l = 1 .. L-1``.  The cemetery always stops.
    """

    pi: tuple
    sigma: tuple

    def __post_init__(self):
        pi = tuple(np.asarray(p, dtype=np.int8) for p in self.pi)
        sigma = tuple(np.asarray(p, dtype=np.int8) for p in self.sigma)
        for arr in pi + sigma:
            if not np.all((arr == 0) | (arr == 1)):
                raise PolicyError("policy entries must be 0 (stop) or 1 (continue)")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "sigma", sigma)

    def action(self, s: GameState) -> int:
        arr = self.pi if s.sign == PLUS else self.sigma
        return int(arr[s.layer - 1][s.neuron - 1])

    @property
    def pi_bits(self) -> str:
        return bits_of(self.pi)

    @property
    def sigma_bits(self) -> str:
        return bits_of(self.sigma)

    @property
    def bits(self) -> str:
        return f"{self.pi_bits}/{self.sigma_bits}"

    @classmethod
    def constant(cls, graph: GameGraph, action: int) -> "PolicyPair":
        layers = tuple(np.full(graph.width(l), action, dtype=np.int8)
                       for l in range(1, graph.depth))
        return cls(layers, layers)

    @classmethod
    def from_bits(cls, graph: GameGraph, pi_bits: str, sigma_bits: str) -> "PolicyPair":
        return cls(split_bits(graph, pi_bits), split_bits(graph, sigma_bits))

    @classmethod
    def parse(cls, graph: GameGraph, text: str) -> "PolicyPair":
        """Parse ``"<pi bits>/<sigma bits>"``; a single bit string is used for both."""
        pi_bits, _, sigma_bits = text.partition("/")
        return cls.from_bits(graph, pi_bits, sigma_bits or pi_bits)


def n_interior(graph: GameGraph) -> int:
    return sum(graph.width(l) for l in range(1, graph.depth))


def bits_of(layers) -> str:
    return "".join(str(int(v)) for arr in layers for v in arr)


def split_bits(graph: GameGraph, bits: str) -> tuple:
    bits = bits.strip()
    n = n_interior(graph)
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise PolicyError(f"expected {n} policy bits of 0/1, got {bits!r}")
    out, pos = [], 0
    for l in range(1, graph.depth):
        k = graph.width(l)
        out.append(np.array([int(c) for c in bits[pos:pos + k]], dtype=np.int8))
        pos += k
    return tuple(out)


def backup(graph: GameGraph, l: int, v_plus, v_minus):
    """Continue values ``(Q+, Q-)`` of layer ``l`` given layer ``l + 1`` values."""
    g = graph.gamma[l - 1]
    keep, flip, b = graph.p_keep[l - 1], graph.p_flip[l - 1], graph.bias[l - 1]
    q_plus = g * (keep @ v_plus + flip @ v_minus) + b
    q_minus = g * (keep @ v_minus + flip @ v_plus) - b
    return q_plus, q_minus


def _sweep(graph: GameGraph, terminal: TerminalReward, choose):
    """Generic backward sweep; ``choose(l, q_plus, q_minus)`` returns ``(v_plus, v_minus)``."""
    check_terminal(graph, terminal)
    L = graph.depth
    plus, minus = [None] * L, [None] * L
    q_plus, q_minus = [None] * (L - 1), [None] * (L - 1)
    plus[L - 1], minus[L - 1] = terminal.plus.copy(), terminal.minus.copy()
    for l in range(L - 1, 0, -1):
        qp, qm = backup(graph, l, plus[l], minus[l])
        q_plus[l - 1], q_minus[l - 1] = qp, qm
        plus[l - 1], minus[l - 1] = choose(l, qp, qm)
    return ValueTable(tuple(plus), tuple(minus), tuple(q_plus), tuple(q_minus))


def shapley_value(graph: GameGraph, terminal: TerminalReward) -> ValueTable:
    """Game value: Max takes ``max(0, Q+)``, Min takes ``min(0, Q-)``."""
    return _sweep(graph, terminal,
                  lambda l, qp, qm: (np.maximum(qp, 0.0), np.minimum(qm, 0.0)))


def _check_policy(graph: GameGraph, layers, name):
    if len(layers) != graph.depth - 1 or any(
            np.shape(layers[l - 1]) != (graph.width(l),) for l in range(1, graph.depth)):
        raise PolicyError(f"{name} does not cover the interior states of this game")


def fixed_policy_value_max(graph: GameGraph, terminal: TerminalReward, pi) -> ValueTable:
    """Max plays ``pi`` (a tuple of 0/1 arrays per layer), Min best-responds.

    The value at ``(1, i, +)`` is ``inf_sigma`` of the pair value; one sweep
    suffices because the horizon is finite.
    """
    _check_policy(graph, pi, "pi")
    return _sweep(graph, terminal,
                  lambda l, qp, qm: (np.where(pi[l - 1] == 1, qp, 0.0), np.minimum(qm, 0.0)))


def fixed_policy_value_min(graph: GameGraph, terminal: TerminalReward, sigma) -> ValueTable:
    """Min plays ``sigma``, Max best-responds (``sup_pi`` of the pair value)."""
    _check_policy(graph, sigma, "sigma")
    return _sweep(graph, terminal,
                  lambda l, qp, qm: (np.maximum(qp, 0.0), np.where(sigma[l - 1] == 1, qm, 0.0)))


def policy_pair_value(graph: GameGraph, terminal: TerminalReward, pair: PolicyPair) -> ValueTable:
    """Both players fixed: the Markov chain with rewards, solved backwards."""
    _check_policy(graph, pair.pi, "pi")
    _check_policy(graph, pair.sigma, "sigma")
    return _sweep(graph, terminal,
                  lambda l, qp, qm: (np.where(pair.pi[l - 1] == 1, qp, 0.0),
                                     np.where(pair.sigma[l - 1] == 1, qm, 0.0)))


def optimal_policies(graph: GameGraph, terminal: TerminalReward,
                     table: ValueTable | None = None) -> PolicyPair:
    """Optimal stationary pair read off the continue values.

    Max continues iff ``Q+ >= 0`` and Min continues iff ``Q- < 0``; ties
    (``Q = 0``) are indifferent for the value and resolve to Max continuing,
    Min stopping.  Under the standard terminal reward ``Q- = -Q+`` is minus
    the pre-activation, so both players continue exactly on active neurons.
    """
    if table is None:
        table = shapley_value(graph, terminal)
    pi = tuple((q >= 0).astype(np.int8) for q in table.q_plus)
    sigma = tuple((q < 0).astype(np.int8) for q in table.q_minus)
    return PolicyPair(pi, sigma)


def policy_fingerprint(graph: GameGraph, terminal: TerminalReward) -> str:
    """Max's optimal bits in canonical order; constant on a linear region."""
    return optimal_policies(graph, terminal).pi_bits


@dataclass(frozen=True)
class EquivalenceReport:
    max_value_error: float      # max |V(l,i,+) - y^l_i|
    max_antisymmetry: float     # max |V(l,i,+) + V(l,i,-)|
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_value_error <= self.tolerance and self.max_antisymmetry <= self.tolerance


def check_game_equivalence(spec: NetworkSpec, x, tol: float = 1e-9,
                           strict: bool = True) -> EquivalenceReport:
    """Compare the game value with the forward pass at every neuron."""
    graph = build_game(spec, strict=strict)
    table = shapley_value(graph, terminal_reward_from_input(graph, x))
    _, ys = forward_relu(spec, x)
    err = max(float(np.max(np.abs(v - y), initial=0.0)) for v, y in zip(table.plus, ys))
    anti = max(float(np.max(np.abs(p + m), initial=0.0))
               for p, m in zip(table.plus, table.minus))
    return EquivalenceReport(err, anti, tol)


def lipschitz_bound(spec: NetworkSpec) -> float:
    """Product over layers of the largest discount ``max_i sum_j |W_ij|``.

    Bounds the sup-norm Lipschitz constant of the network map.
    """
    out = 1.0
    for w in spec.weights:
        out *= float(np.abs(w).sum(axis=1).max())
    return out

