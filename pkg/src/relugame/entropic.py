"""Entropy-regularised version of the game (the Softplus net game).

States, transitions and terminal payoffs are those of the ReLU game.  A
player who continues with probability ``p`` additionally earns
``tau * H(p)`` (Max) or pays it (Min), where ``H`` is the binary Shannon
entropy.  Maximising ``p * Q + tau * H(p)`` over ``p`` gives the soft
maximum ``tau * log(1 + exp(Q / tau))`` of the two actions (continue with
value ``Q``, stop with value 0), attained by the Gibbs probability
``p = expit(Q / tau)``; Min mirrors this with ``-Q``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import entr, expit

from .game import GameGraph, TerminalReward, build_game, check_terminal, terminal_reward_from_input
from .network import NetworkSpec
from .value import ValueTable, backup, shapley_value


class EntropicError(ValueError):
    pass


def _check_tau(tau):
    if not (np.isfinite(tau) and tau > 0):
        raise EntropicError(f"tau must be positive and finite, got {tau}")


def soft_max0(q, tau):
    """``tau * log(exp(0) + exp(q / tau))`` as a two-term log-sum-exp."""
    return tau * np.logaddexp(0.0, np.asarray(q, dtype=np.float64) / tau)


@dataclass(frozen=True)
class EntropicValueTable(ValueTable):
    tau: float = 1.0


def entropic_value(graph: GameGraph, terminal: TerminalReward, tau: float) -> EntropicValueTable:
    """Soft Shapley recursion: ``V+ = softmax(0, Q+)``, ``V- = -softmax(0, -Q-)``."""
    _check_tau(tau)
    check_terminal(graph, terminal)
    L = graph.depth
    plus, minus = [None] * L, [None] * L
    q_plus, q_minus = [None] * (L - 1), [None] * (L - 1)
    plus[L - 1], minus[L - 1] = terminal.plus.copy(), terminal.minus.copy()
    for l in range(L - 1, 0, -1):
        qp, qm = backup(graph, l, plus[l], minus[l])
        q_plus[l - 1], q_minus[l - 1] = qp, qm
        plus[l - 1] = soft_max0(qp, tau)
        minus[l - 1] = -soft_max0(-qm, tau)
    return EntropicValueTable(tuple(plus), tuple(minus), tuple(q_plus), tuple(q_minus), tau)


@dataclass(frozen=True)
class GibbsPolicy:
    """Continue probabilities; ``pi[l-1]`` at Max states, ``sigma[l-1]`` at Min states."""

    pi: tuple
    sigma: tuple

    def __post_init__(self):
        pi = tuple(np.asarray(p, dtype=np.float64) for p in self.pi)
        sigma = tuple(np.asarray(p, dtype=np.float64) for p in self.sigma)
        for arr in pi + sigma:
            if not np.all((arr >= 0) & (arr <= 1)):
                raise EntropicError("continue probabilities must lie in [0, 1]")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "sigma", sigma)


def gibbs_policies(graph: GameGraph, terminal: TerminalReward, tau: float,
                   table: EntropicValueTable | None = None) -> GibbsPolicy:
    """Optimal randomised policies of the regularised game."""
    _check_tau(tau)
    if table is None:
        table = entropic_value(graph, terminal, tau)
    pi = tuple(expit(q / tau) for q in table.q_plus)
    sigma = tuple(expit(-q / tau) for q in table.q_minus)
    return GibbsPolicy(pi, sigma)


def _binary_entropy(p):
    return entr(p) + entr(1.0 - p)


def entropic_value_given_policy(graph: GameGraph, terminal: TerminalReward, tau: float,
                                policy: GibbsPolicy) -> ValueTable:
    """Value of the regularised game when both players follow ``policy``.

    At a Max state continuing with probability ``p`` is worth
    ``p * (Q - tau log p) + (1 - p) * (0 - tau log(1 - p))``; at a Min state
    the log terms change sign.  Probabilities 0 and 1 use ``0 log 0 = 0``.
    """
    _check_tau(tau)
    check_terminal(graph, terminal)
    L = graph.depth
    if len(policy.pi) != L - 1 or len(policy.sigma) != L - 1:
        raise EntropicError("policy does not match the depth of the game")
    plus, minus = [None] * L, [None] * L
    q_plus, q_minus = [None] * (L - 1), [None] * (L - 1)
    plus[L - 1], minus[L - 1] = terminal.plus.copy(), terminal.minus.copy()
    for l in range(L - 1, 0, -1):
        p, s = policy.pi[l - 1], policy.sigma[l - 1]
        if p.shape != (graph.width(l),) or s.shape != (graph.width(l),):
            raise EntropicError(f"policy does not cover layer {l}")
        qp, qm = backup(graph, l, plus[l], minus[l])
        q_plus[l - 1], q_minus[l - 1] = qp, qm
        plus[l - 1] = p * qp + tau * _binary_entropy(p)
        minus[l - 1] = s * qm - tau * _binary_entropy(s)
    return ValueTable(tuple(plus), tuple(minus), tuple(q_plus), tuple(q_minus))


@dataclass(frozen=True)
class FreeEnergyRow:
    layer: int
    neuron: int
    sign: int
    q: float
    p_continue: float
    entropy: float
    expected_reward: float
    value: float


def free_energy_report(graph: GameGraph, terminal: TerminalReward, tau: float) -> list[FreeEnergyRow]:
    """Per interior state: Gibbs entropy and ``value = expected reward +/- tau * entropy``."""
    table = entropic_value(graph, terminal, tau)
    gibbs = gibbs_policies(graph, terminal, tau, table)
    rows = []
    for l in range(1, graph.depth):
        for i in range(graph.width(l)):
            for sign, q, p, v in ((1, table.q_plus, gibbs.pi, table.plus),
                                  (-1, table.q_minus, gibbs.sigma, table.minus)):
                pc = float(p[l - 1][i])
                rows.append(FreeEnergyRow(l, i + 1, sign, float(q[l - 1][i]), pc,
                                          float(_binary_entropy(pc)), pc * float(q[l - 1][i]),
                                          float(v[l - 1][i])))
    return rows


@dataclass(frozen=True)
class TauLimitRow:
    tau: float
    deviation: float      # max over neurons of |V_tau(l,i,+) - V(l,i,+)|
    envelope: float       # tau * log 2 * sum over layers of partial products of max gamma
    finite: bool


def _relu_increment(q, dq):
    """``max(q + dq, 0) - max(q, 0)`` without cancelling when both sides agree."""
    both_on = (q > 0) & (q + dq > 0)
    both_off = (q <= 0) & (q + dq <= 0)
    direct = np.maximum(q + dq, 0.0) - np.maximum(q, 0.0)
    return np.where(both_on, dq, np.where(both_off, 0.0, direct))


def deviation_table(graph: GameGraph, terminal: TerminalReward, tau: float):
    """``V_tau - V`` at every state, propagated layer by layer.

    Subtracting the two value tables loses everything below one ulp of the
    values.  Here the difference itself is carried through the backup
    (biases cancel, so ``Q_tau - Q`` is ``gamma * P @ (V_tau - V)``) and the
    softplus excess ``tau * log1p(exp(-|Q_tau| / tau))`` is added directly.
    """
    soft = entropic_value(graph, terminal, tau)
    exact = shapley_value(graph, terminal)
    L = graph.depth
    k = graph.width(L)
    d_plus, d_minus = [None] * L, [None] * L
    d_plus[L - 1], d_minus[L - 1] = np.zeros(k), np.zeros(k)
    for l in range(L - 1, 0, -1):
        g = graph.gamma[l - 1]
        keep, flip = graph.p_keep[l - 1], graph.p_flip[l - 1]
        dq_plus = g * (keep @ d_plus[l] + flip @ d_minus[l])
        dq_minus = g * (keep @ d_minus[l] + flip @ d_plus[l])
        qp, qm = exact.q_plus[l - 1], exact.q_minus[l - 1]
        sp, sm = soft.q_plus[l - 1], soft.q_minus[l - 1]
        d_plus[l - 1] = _relu_increment(qp, dq_plus) + tau * np.log1p(np.exp(-np.abs(sp) / tau))
        d_minus[l - 1] = -(_relu_increment(-qm, -dq_minus)
                           + tau * np.log1p(np.exp(-np.abs(sm) / tau)))
    return tuple(d_plus), tuple(d_minus), soft


def tau_limit_report(spec: NetworkSpec, x, taus, strict: bool = True) -> list[TauLimitRow]:
    """Distance between the regularised and the plain game value for each ``tau``.

    The deviation is the largest ``|V_tau - V|`` over the Max states of
    layers ``1 .. L-1``, computed by :func:`deviation_table`.  It can have
    either sign: a negative weight turns a larger hidden activation into a
    smaller downstream one.
    """
    taus = [float(t) for t in taus]
    for t in taus:
        _check_tau(t)
    graph = build_game(spec, strict=strict)
    terminal = terminal_reward_from_input(graph, x)
    gbar = [float(g.max()) if g.size else 0.0 for g in graph.gamma]
    # softplus exceeds relu by at most tau*log 2 per neuron, amplified by upstream gammas
    partial = np.cumprod([1.0] + gbar[:-1])
    scale = float(np.log(2.0) * partial.sum())
    rows = []
    for t in taus:
        d_plus, d_minus, soft = deviation_table(graph, terminal, t)
        dev = max(float(np.max(np.abs(d), initial=0.0)) for d in d_plus[:-1])
        finite = all(np.all(np.isfinite(a)) for a in
                     soft.plus + soft.minus + soft.q_plus + soft.q_minus + d_plus + d_minus)
        rows.append(TauLimitRow(t, dev, t * scale, bool(finite)))
    return rows


__all__ = [
    "EntropicError", "EntropicValueTable", "GibbsPolicy", "entropic_value", "gibbs_policies",
    "entropic_value_given_policy", "free_energy_report", "tau_limit_report", "soft_max0",
]
