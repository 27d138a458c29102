import numpy as np
import pytest

from instances import random_instance, worked_example
from oracle import ExactGame
from relugame.bounds import IntervalVector, boundary, interval_propagate, value_with_boundary
from relugame.game import GameError, build_game, terminal_reward_from_input
from relugame.network import NetworkSpec, forward_relu
from relugame.value import shapley_value


def random_box(rng, k, scale=2.0):
    a, b = rng.uniform(-scale, scale, size=(2, k))
    return IntervalVector(np.minimum(a, b), np.maximum(a, b))


class TestValueWithBoundary:
    def test_standard_boundary_is_shapley_value(self):
        for seed in range(20):
            _, graph, x = random_instance(seed)
            a = value_with_boundary(graph, boundary(x, -x))
            b = shapley_value(graph, terminal_reward_from_input(graph, x))
            for u, v in zip(a.plus + a.minus, b.plus + b.minus):
                np.testing.assert_array_equal(u, v)

    def test_broken_antisymmetry(self):
        spec = NetworkSpec.checked([[[1.0, 2.0], [3.0, 1.0]], [[1.0, 1.0]]], [[1.0, -1.0], [-2.0]])
        graph = build_game(spec)
        table = value_with_boundary(graph, boundary([1.0, 2.0], [1.0, 2.0]))
        np.testing.assert_allclose(table.plus[0], [8.0], atol=1e-12)
        np.testing.assert_allclose(table.plus[1], [6.0, 4.0], atol=1e-12)
        np.testing.assert_array_equal(table.minus[0], [0.0])
        np.testing.assert_array_equal(table.minus[1], [0.0, 0.0])

    def test_zero_boundary(self):
        _, graph, _ = random_instance(4)
        k = graph.width(graph.depth)
        a = value_with_boundary(graph, boundary(np.zeros(k), np.zeros(k)))
        b = shapley_value(graph, terminal_reward_from_input(graph, np.zeros(k)))
        np.testing.assert_array_equal(a.output, b.output)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_exact_oracle(self, seed):
        spec, graph, x = random_instance(seed, max_depth=4, max_width=4)
        xp = np.random.default_rng(seed).uniform(-2, 2, size=x.size)
        table = value_with_boundary(graph, boundary(x, xp))
        V = ExactGame(spec.weights, spec.biases).solve(x, xp)
        for s in graph.states()[:-1]:
            assert table[s] == pytest.approx(float(V(s.layer, s.neuron - 1, s.sign)), abs=1e-9)

    @pytest.mark.parametrize("seed", range(30))
    def test_order_preserving(self, seed):
        _, graph, x = random_instance(seed)
        rng = np.random.default_rng(seed)
        xp = rng.uniform(-2, 2, size=x.size)
        z, zp = x + rng.uniform(0, 1, size=x.size), xp + rng.uniform(0, 1, size=x.size)
        lo = value_with_boundary(graph, boundary(x, xp))
        hi = value_with_boundary(graph, boundary(z, zp))
        for a, b in zip(lo.plus + lo.minus, hi.plus + hi.minus):
            assert np.all(a <= b + 1e-12)


class TestIntervalVector:
    def test_rejects_inverted(self):
        with pytest.raises(GameError):
            IntervalVector([1.0], [0.0])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(GameError):
            IntervalVector([0.0, 1.0], [1.0])

    def test_contains(self):
        box = IntervalVector([0, 0], [1, 2])
        assert box.contains([0.5, 2.0]) and not box.contains([1.5, 0.0])
        np.testing.assert_array_equal(box.width, [1.0, 2.0])


class TestIntervalPropagate:
    def test_worked_example_box(self):
        graph = build_game(worked_example())
        layers = interval_propagate(graph, IntervalVector([9, 9], [11, 11]))
        np.testing.assert_allclose(layers.output.lower, [11.0], atol=1e-9)
        np.testing.assert_allclose(layers.output.upper, [101.0], atol=1e-9)
        np.testing.assert_allclose(layers.layers[1].lower, [17.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(layers.layers[1].upper, [47.0, 6.0], atol=1e-9)
        assert layers.output.contains([56.0])

    def test_degenerate_box(self):
        for seed in range(20):
            spec, graph, x = random_instance(seed)
            out = interval_propagate(graph, IntervalVector(x, x)).output
            y = forward_relu(spec, x)[0]
            np.testing.assert_allclose(out.lower, y, atol=1e-9)
            np.testing.assert_allclose(out.upper, y, atol=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_soundness_every_layer(self, seed):
        spec, graph, _ = random_instance(seed)
        rng = np.random.default_rng(seed)
        box = random_box(rng, spec.n_inputs)
        layers = interval_propagate(graph, box)
        for x in rng.uniform(box.lower, box.upper, size=(50, spec.n_inputs)):
            _, ys = forward_relu(spec, x)
            for iv, y in zip(layers.layers, ys):
                assert iv.contains(y, tol=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_nesting(self, seed):
        spec, graph, _ = random_instance(seed)
        rng = np.random.default_rng(seed)
        inner = random_box(rng, spec.n_inputs)
        outer = IntervalVector(inner.lower - rng.uniform(0, 1, spec.n_inputs),
                               inner.upper + rng.uniform(0, 1, spec.n_inputs))
        a = interval_propagate(graph, inner).output
        b = interval_propagate(graph, outer).output
        assert np.all(b.lower <= a.lower + 1e-12) and np.all(a.upper <= b.upper + 1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(GameError):
            interval_propagate(build_game(worked_example()), IntervalVector([0.0], [1.0]))
