from fractions import Fraction

import numpy as np
import pytest

from instances import random_bits, random_instance, single_neuron, worked_example
from oracle import ExactGame
from relugame.game import MINUS, PLUS, GameState, build_game, terminal_reward_from_input
from relugame.network import NetworkSpec
from relugame.paths import (DEAD_END, STOP, TERMINAL, PathError, Trajectory, enumerate_paths,
                            maxmin_bruteforce, monte_carlo_value, path_probability, path_reward,
                            trajectory_mass, value_by_enumeration)
from relugame.value import PolicyPair, n_interior, policy_pair_value, shapley_value

START = GameState(1, 1, PLUS)


def S(label):
    l, rest = label.split(",")
    return GameState(int(l), int(rest[:-1]), PLUS if rest[-1] == "+" else MINUS)


@pytest.fixture
def worked():
    graph = build_game(worked_example())
    return graph, terminal_reward_from_input(graph, [10, 10])


class TestEnumeratePaths:
    def test_all_continue(self, worked):
        graph, _ = worked
        paths = enumerate_paths(graph, PolicyPair.constant(graph, 1), START)
        assert [[s.label for s in p.states] for p in paths] == [
            ["1,1+", "2,1+", "3,1+"], ["1,1+", "2,1+", "3,2-"],
            ["1,1+", "2,2-", "3,1+"], ["1,1+", "2,2-", "3,2+"]]
        assert all(p.ending == TERMINAL for p in paths)

    def test_all_stop(self, worked):
        graph, _ = worked
        paths = enumerate_paths(graph, PolicyPair.constant(graph, 0), START)
        assert len(paths) == 1 and len(paths[0]) == 0 and paths[0].ending == STOP

    def test_positive_net_stays_on_max_side(self):
        spec = NetworkSpec.checked([[[1.0, 2.0], [3.0, 0.5]], [[1.0, 1.0]]], [[0, 0], [0]])
        graph = build_game(spec)
        for p in enumerate_paths(graph, PolicyPair.constant(graph, 1), START):
            assert all(s.sign == PLUS for s in p.states)

    def test_cap(self, worked):
        graph, _ = worked
        with pytest.raises(PathError, match="cap"):
            enumerate_paths(graph, PolicyPair.constant(graph, 1), START, cap=3)

    def test_path_invariants(self):
        for seed in range(20):
            _, graph, _ = random_instance(seed, max_depth=4, max_width=3)
            rng = np.random.default_rng(seed)
            n = n_interior(graph)
            pair = PolicyPair.parse(graph, random_bits(rng, n) + "/" + random_bits(rng, n))
            for p in enumerate_paths(graph, pair, START):
                assert START.layer + len(p) <= graph.depth
                for s in p.states[:-1]:
                    assert pair.action(s) == 1
                if p.ending == STOP:
                    assert pair.action(p.states[-1]) == 0
                assert path_probability(graph, p) > 0

    def test_dead_end_in_lenient_game(self):
        spec = NetworkSpec.checked([[[0.0]], [[1.0]]], [[3.0], [1.0]])
        graph = build_game(spec, strict=False)
        terminal = terminal_reward_from_input(graph, [5.0])
        (p,) = enumerate_paths(graph, PolicyPair.constant(graph, 1), START)
        assert p.ending == DEAD_END
        assert path_reward(graph, p, terminal) == 1.0 + 3.0
        assert value_by_enumeration(graph, PolicyPair.constant(graph, 1), START, terminal) == \
            policy_pair_value(graph, terminal, PolicyPair.constant(graph, 1))[START]


class TestProbabilityAndReward:
    def test_probabilities(self, worked):
        graph, _ = worked
        paths = enumerate_paths(graph, PolicyPair.constant(graph, 1), START)
        probs = [Fraction(path_probability(graph, p)).limit_denominator(1000) for p in paths]
        assert probs == [Fraction(2, 15), Fraction(16, 105), Fraction(5, 21), Fraction(10, 21)]
        assert sum(path_probability(graph, p) for p in paths) == pytest.approx(1.0, abs=1e-15)

    def test_rewards(self, worked):
        graph, terminal = worked
        paths = enumerate_paths(graph, PolicyPair.constant(graph, 1), START)
        rewards = [path_reward(graph, p, terminal) for p in paths]
        np.testing.assert_allclose(rewards, [1351.0, -749.0, -14.0, -14.0], rtol=0, atol=1e-9)

    def test_length_zero(self, worked):
        graph, terminal = worked
        stop = Trajectory((START,), STOP)
        assert path_probability(graph, stop) == 1.0
        assert path_reward(graph, stop, terminal) == 0.0

    def test_invalid_edge(self, worked):
        graph, _ = worked
        with pytest.raises(PathError):
            path_probability(graph, Trajectory((START, S("2,1-")), STOP))

    def test_mass_is_one(self):
        for seed in range(20):
            _, graph, _ = random_instance(seed, max_depth=4, max_width=3)
            for s in graph.interior_states(PLUS) + graph.interior_states(MINUS):
                assert trajectory_mass(graph, PolicyPair.constant(graph, 1), s) == \
                    pytest.approx(1.0, abs=1e-12)


class TestValueByEnumeration:
    def test_worked_example(self, worked):
        graph, terminal = worked
        v = value_by_enumeration(graph, PolicyPair.constant(graph, 1), START, terminal)
        assert v == pytest.approx(56.0, abs=1e-9)
        assert value_by_enumeration(graph, PolicyPair.constant(graph, 0), START, terminal) == 0.0

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_backward_recursion_and_exact_oracle(self, seed):
        spec, graph, x = random_instance(seed, max_depth=3, max_width=3)
        rng = np.random.default_rng(seed)
        n = n_interior(graph)
        pair = PolicyPair.parse(graph, random_bits(rng, n) + "/" + random_bits(rng, n))
        terminal = terminal_reward_from_input(graph, x)
        table = policy_pair_value(graph, terminal, pair)
        policy = {(s.layer, s.neuron - 1, s.sign): pair.action(s)
                  for s in graph.interior_states(PLUS) + graph.interior_states(MINUS)}
        V = ExactGame(spec.weights, spec.biases).solve(x, -x, policy)
        for s in graph.interior_states(PLUS) + graph.interior_states(MINUS):
            v = value_by_enumeration(graph, pair, s, terminal)
            assert v == pytest.approx(table[s], abs=1e-9)
            assert v == pytest.approx(float(V(s.layer, s.neuron - 1, s.sign)), abs=1e-9)


class TestBruteForce:
    def test_worked_example(self, worked):
        graph, terminal = worked
        res = maxmin_bruteforce(graph, START, terminal)
        assert res.value == pytest.approx(56.0, abs=1e-9)
        assert res.minmax == pytest.approx(56.0, abs=1e-9)
        assert res.pairs_evaluated == 64

    def test_origin(self):
        graph = build_game(worked_example())
        res = maxmin_bruteforce(graph, START, terminal_reward_from_input(graph, [0, 0]))
        assert res.value == pytest.approx(0.0, abs=1e-9)

    def test_single_neuron(self):
        graph = build_game(single_neuron(2.0, -1.0))
        res = maxmin_bruteforce(graph, START, terminal_reward_from_input(graph, [3.0]))
        assert res.value == pytest.approx(5.0, abs=1e-12)

    def test_limit(self, worked):
        graph, terminal = worked
        with pytest.raises(PathError, match="limit of 4"):
            maxmin_bruteforce(graph, START, terminal, bit_limit=4)

    @pytest.mark.parametrize("seed", range(15))
    def test_equals_shapley(self, seed):
        _, graph, x = random_instance(seed, max_depth=3, max_width=3)
        terminal = terminal_reward_from_input(graph, x)
        res = maxmin_bruteforce(graph, START, terminal)
        assert res.value == pytest.approx(shapley_value(graph, terminal)[START], abs=1e-9)


class TestMonteCarlo:
    def test_all_stop_is_exact(self, worked):
        graph, terminal = worked
        res = monte_carlo_value(graph, PolicyPair.constant(graph, 0), START, terminal, 1000)
        assert res.estimate == 0.0 and res.stderr == 0.0

    def test_deterministic_chain(self):
        spec = NetworkSpec.checked([[[2.0]], [[3.0]]], [[1.0], [-1.0]])
        graph = build_game(spec)
        terminal = terminal_reward_from_input(graph, [4.0])
        pair = PolicyPair.constant(graph, 1)
        res = monte_carlo_value(graph, pair, START, terminal, 1)
        assert res.estimate == value_by_enumeration(graph, pair, START, terminal)
        assert np.isnan(res.stderr)

    def test_statistical_agreement(self, worked):
        graph, terminal = worked
        pair = PolicyPair.constant(graph, 1)
        res = monte_carlo_value(graph, pair, START, terminal, 10**6, seed=3)
        assert abs(res.estimate - 56.0) <= 4 * res.stderr

    def test_reproducible_and_worker_independent(self, worked):
        graph, terminal = worked
        pair = PolicyPair.constant(graph, 1)
        a = monte_carlo_value(graph, pair, START, terminal, 200_000, seed=9, workers=1)
        b = monte_carlo_value(graph, pair, START, terminal, 200_000, seed=9, workers=4)
        assert repr(a.estimate) == repr(b.estimate) and repr(a.stderr) == repr(b.stderr)
        c = monte_carlo_value(graph, pair, START, terminal, 200_000, seed=10)
        assert c.estimate != a.estimate

    def test_rejects_zero_samples(self, worked):
        graph, terminal = worked
        with pytest.raises(PathError):
            monte_carlo_value(graph, PolicyPair.constant(graph, 1), START, terminal, 0)
