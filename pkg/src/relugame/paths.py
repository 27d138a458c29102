"""Trajectory sums for a fixed policy pair.

Once both players fix a deterministic policy the game is a Markov chain
with rewards, and the value at a state is the probability-weighted sum of
discounted rewards over the finitely many trajectories that can follow.
This module enumerates those trajectories, samples them, and brute-forces
the max-min over all deterministic pairs on small games.

Conventions:

* a trajectory stops at the first state whose policy says stop; that state
  collects nothing;
* every state where the player continues collects its signed bias,
  discounted by the product of the ``gamma`` of the states visited before;
* reaching layer ``L`` collects the terminal reward, discounted by the
  product of ``gamma`` over all earlier states.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .game import CEMETERY, MINUS, PLUS, GameGraph, GameState, TerminalReward, check_terminal
from .value import PolicyPair, n_interior, split_bits

DEFAULT_PATH_CAP = 10**6
DEFAULT_BIT_LIMIT = 20
SHARD_SIZE = 1 << 16

STOP, TERMINAL, DEAD_END = "stop", "terminal", "dead_end"


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """States visited from ``states[0]`` until the trajectory ends.

    ``ending`` is ``"stop"`` (last state chose stop), ``"terminal"`` (last
    state is in layer ``L``) or ``"dead_end"`` (last state continued but has
    no successors, which only happens for zero rows built leniently).
    """

    states: tuple
    ending: str

    @property
    def start(self) -> int:
        return self.states[0].layer

    def __len__(self) -> int:
        return len(self.states) - 1

    def __str__(self) -> str:
        return " -> ".join(s.label for s in self.states) + f" [{self.ending}]"


def _check_start(graph: GameGraph, start: GameState):
    if start == CEMETERY or start.sign not in (PLUS, MINUS):
        raise PathError("start must be a signed state")
    graph._check(start)


def enumerate_paths(graph: GameGraph, pair: PolicyPair, start: GameState,
                    cap: int = DEFAULT_PATH_CAP) -> list[Trajectory]:
    """All trajectories compatible with ``pair`` from ``start``, depth first."""
    _check_start(graph, start)
    out = []
    stack = [(start,)]
    while stack:
        prefix = stack.pop()
        s = prefix[-1]
        if graph.is_terminal(s):
            ending = TERMINAL
        elif pair.action(s) == 0:
            ending = STOP
        else:
            succ = graph.transitions(s)
            if succ:
                # reversed so that the output lists successors in canonical order
                for target, _ in reversed(succ):
                    stack.append(prefix + (target,))
                continue
            ending = DEAD_END
        out.append(Trajectory(prefix, ending))
        if len(out) > cap:
            raise PathError(f"more than {cap} trajectories; raise the path cap")
    return out


def path_probability(graph: GameGraph, alpha: Trajectory) -> float:
    """Product of transition probabilities along ``alpha`` (1 for length 0)."""
    p = 1.0
    for a, b in zip(alpha.states[:-1], alpha.states[1:]):
        step = dict(graph.transitions(a)).get(b)
        if step is None:
            raise PathError(f"no transition {a.label} -> {b.label}")
        p *= step
    return p


def path_reward(graph: GameGraph, alpha: Trajectory, terminal: TerminalReward) -> float:
    """Discounted signed biases along ``alpha`` plus the terminal payoff if reached."""
    total, discount = 0.0, 1.0
    collecting = alpha.states if alpha.ending == DEAD_END else alpha.states[:-1]
    for s in collecting:
        total += discount * graph.reward(s)
        discount *= graph.discount(s)
    if alpha.ending == TERMINAL:
        total += discount * terminal.value(alpha.states[-1])
    return total


def value_by_enumeration(graph: GameGraph, pair: PolicyPair, start: GameState,
                         terminal: TerminalReward, cap: int = DEFAULT_PATH_CAP) -> float:
    check_terminal(graph, terminal)
    return sum(path_probability(graph, a) * path_reward(graph, a, terminal)
               for a in enumerate_paths(graph, pair, start, cap))


@dataclass(frozen=True)
class BruteForceResult:
    value: float          # max over pi of min over sigma
    minmax: float         # min over sigma of max over pi
    pair: PolicyPair      # a maximin pi together with its best response sigma
    pairs_evaluated: int


def maxmin_bruteforce(graph: GameGraph, start: GameState, terminal: TerminalReward,
                      bit_limit: int = DEFAULT_BIT_LIMIT, tol: float = 1e-9) -> BruteForceResult:
    """Exhaustive max-min of the enumerated value over all deterministic pairs.

    Both orders of optimisation are computed and must agree within ``tol``.
    """
    _check_start(graph, start)
    n = n_interior(graph)
    if 2 * n > bit_limit:
        raise PathError(f"game has {2 * n} policy bits, above the limit of {bit_limit}")
    words = ["".join(bits) for bits in itertools.product("01", repeat=n)]
    layers = [split_bits(graph, w) for w in words]
    values = np.empty((len(words), len(words)))
    for a, pi in enumerate(layers):
        for c, sigma in enumerate(layers):
            values[a, c] = value_by_enumeration(graph, PolicyPair(pi, sigma), start, terminal)
    row_min = values.min(axis=1)
    best_pi = int(np.argmax(row_min))
    best_sigma = int(np.argmin(values[best_pi]))
    maxmin = float(row_min[best_pi])
    minmax = float(values.max(axis=0).min())
    if abs(maxmin - minmax) > tol * max(1.0, abs(maxmin)):
        raise PathError(f"max-min {maxmin!r} differs from min-max {minmax!r}")
    return BruteForceResult(maxmin, minmax, PolicyPair(layers[best_pi], layers[best_sigma]),
                            values.size)


# -- Monte Carlo ---------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    stderr: float
    samples: int
    seed: int


def _shard_sums(graph: GameGraph, pair: PolicyPair, start: GameState,
                terminal: TerminalReward, n: int, seed_seq) -> tuple[int, float, float]:
    """Simulate ``n`` trajectories; return (count, mean, sum of squared deviations)."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    L = graph.depth
    neuron = np.full(n, start.neuron - 1, dtype=np.int64)
    sign = np.full(n, start.sign, dtype=np.int8)
    alive = np.ones(n, dtype=bool)
    reward = np.zeros(n)
    discount = np.ones(n)
    for l in range(start.layer, L):
        if not alive.any():
            break
        acts = np.where(sign > 0, pair.pi[l - 1][neuron], pair.sigma[l - 1][neuron])
        alive &= acts == 1
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        nrn, sgn = neuron[idx], sign[idx]
        reward[idx] += discount[idx] * sgn * graph.bias[l - 1][nrn]
        discount[idx] *= graph.gamma[l - 1][nrn]
        # successor columns: [keep_0..keep_{k-1}, flip_0..flip_{k-1}]
        probs = np.hstack([graph.p_keep[l - 1], graph.p_flip[l - 1]])
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(idx.size)
        k_next = graph.width(l + 1)
        choice = np.empty(idx.size, dtype=np.int64)
        dead = np.zeros(idx.size, dtype=bool)
        for i in np.unique(nrn):
            m = nrn == i
            row = cdf[i]
            if row[-1] == 0:
                dead[m] = True
                choice[m] = 0
                continue
            # clamp guards against the last cumulative sum rounding below 1
            c = np.searchsorted(row, u[m] * row[-1], side="right")
            choice[m] = np.minimum(c, 2 * k_next - 1)
        if dead.any():
            alive[idx[dead]] = False
        neuron[idx] = choice % k_next
        sign[idx] = np.where(choice >= k_next, -sgn, sgn)
    else:
        done = alive
        if done.any():
            term = np.where(sign[done] > 0, terminal.plus[neuron[done]],
                            terminal.minus[neuron[done]])
            reward[done] += discount[done] * term
    mean = float(reward.mean())
    dev = reward - mean
    return n, mean, float(np.dot(dev, dev))


def monte_carlo_value(graph: GameGraph, pair: PolicyPair, start: GameState,
                      terminal: TerminalReward, samples: int, seed: int = 0,
                      workers: int = 1) -> MonteCarloResult:
    """Plain Monte Carlo estimate of the pair value with its standard error.

    Samples are split into fixed shards of ``SHARD_SIZE`` trajectories; shard
    ``k`` draws from PCG64 seeded by the ``k``-th child of
    ``SeedSequence(seed)``.  The shard layout depends only on ``samples``,
    and partial sums are reduced in shard order, so the result is
    bit-identical for any ``workers``.
    """
    if samples < 1:
        raise PathError("samples must be >= 1")
    _check_start(graph, start)
    check_terminal(graph, terminal)
    n_shards = -(-samples // SHARD_SIZE)
    sizes = [SHARD_SIZE] * (n_shards - 1) + [samples - SHARD_SIZE * (n_shards - 1)]
    seqs = np.random.SeedSequence(seed).spawn(n_shards)
    jobs = list(zip(sizes, seqs))

    def run(job):
        return _shard_sums(graph, pair, start, terminal, job[0], job[1])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    # pairwise merge of (count, mean, M2) in shard order
    count, mean, m2 = parts[0]
    for n_b, mean_b, m2_b in parts[1:]:
        n_ab = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / n_ab
        m2 += m2_b + delta * delta * count * n_b / n_ab
        count = n_ab
    if samples == 1:
        return MonteCarloResult(mean, float("nan"), samples, seed)
    var = m2 / (samples - 1)
    return MonteCarloResult(mean, float(np.sqrt(var / samples)), samples, seed)


def trajectory_mass(graph: GameGraph, pair: PolicyPair, start: GameState) -> float:
    """Total probability of the enumerated trajectories (1 for a proper chain)."""
    return sum(path_probability(graph, a) for a in enumerate_paths(graph, pair, start))

