"""Exact rational reference for the game, written without the package.

The game is rebuilt straight from the weight matrices with ``Fraction``
arithmetic and solved by memoised recursion over ``(layer, neuron, sign)``.
Layers are given input-first, as in network files.
"""

from fractions import Fraction
from functools import lru_cache


def _frac_matrix(rows):
    return [[Fraction(float(v)) for v in row] for row in rows]


class ExactGame:
    def __init__(self, weights, biases):
        # reverse to output-first so that index l-1 is layer l
        self.W = [_frac_matrix(w) for w in reversed(weights)]
        self.b = [[Fraction(float(v)) for v in bias] for bias in reversed(biases)]
        self.L = len(self.W) + 1

    def gamma(self, l, i):
        return sum(abs(w) for w in self.W[l - 1][i])

    def successors(self, l, i, sign):
        """``[(probability, (l+1, j, sign'))]`` with the sign flipped on negative weights."""
        g = self.gamma(l, i)
        out = []
        for j, w in enumerate(self.W[l - 1][i]):
            if w != 0:
                out.append((abs(w) / g, (l + 1, j, sign if w > 0 else -sign)))
        return out

    def solve(self, x_plus, x_minus, policy=None):
        """Value at every state.

        ``policy`` maps ``(l, i, sign)`` to 0/1; states it omits are played
        optimally by their owner, so a Max-only policy gives ``f^pi``.
        """
        xp = [Fraction(float(v)) for v in x_plus]
        xm = [Fraction(float(v)) for v in x_minus]

        @lru_cache(maxsize=None)
        def V(l, i, sign):
            if l == self.L:
                return xp[i] if sign > 0 else xm[i]
            g = self.gamma(l, i)
            q = sign * self.b[l - 1][i]
            if g != 0:
                q += g * sum(p * V(*s) for p, s in self.successors(l, i, sign))
            if policy is not None and (l, i, sign) in policy:
                return q if policy[(l, i, sign)] else Fraction(0)
            return max(q, Fraction(0)) if sign > 0 else min(q, Fraction(0))

        return V

    def forward(self, x):
        y = [Fraction(float(v)) for v in x]
        for l in range(self.L - 1, 0, -1):
            y = [max(sum(w * v for w, v in zip(row, y)) + b, Fraction(0))
                 for row, b in zip(self.W[l - 1], self.b[l - 1])]
        return y
