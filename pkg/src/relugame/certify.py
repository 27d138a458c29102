"""Policies as checkable certificates for a thresholded single-output net.

An input is accepted when ``f(x) >= alpha`` and rejected when
``f(x) <= beta``.  Fixing only Max's policy ``pi`` gives the concave map
``f^pi = inf_sigma f^{pi,sigma} <= f``, so ``f^pi(x) >= alpha`` proves
acceptance; dually ``sigma`` gives the convex ``^sigma f >= f``.  Both
one-sided values are one backward sweep, which is all a verifier needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .game import GameGraph, terminal_reward_from_input
from .value import (PolicyError, bits_of, fixed_policy_value_max, fixed_policy_value_min,
                    optimal_policies, shapley_value, split_bits)

ACCEPT, REJECT = "accept", "reject"


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    kind: str                 # "accept" (Max policy) or "reject" (Min policy)
    threshold: float
    policy: str               # bit string of the certifying player, canonical order
    certified_value: float
    x: tuple
    net_digest: str = ""

    def to_text(self) -> str:
        lines = [
            f"kind={self.kind}",
            f"threshold={self.threshold!r}",
            f"policy={self.policy}",
            f"certified_value={self.certified_value!r}",
            "x=" + ",".join(repr(float(v)) for v in self.x),
            f"net_sha256={self.net_digest}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Certificate":
        fields = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise CertificateError(f"malformed certificate line {line!r}")
            fields[key.strip()] = value.strip()
        try:
            kind = fields["kind"]
            if kind not in (ACCEPT, REJECT):
                raise CertificateError(f"unknown certificate kind {kind!r}")
            return cls(kind, float(fields["threshold"]), fields["policy"],
                       float(fields["certified_value"]),
                       tuple(float(v) for v in fields["x"].split(",")),
                       fields.get("net_sha256", ""))
        except KeyError as exc:
            raise CertificateError(f"certificate is missing field {exc}") from exc
        except ValueError as exc:
            if isinstance(exc, CertificateError):
                raise
            raise CertificateError(f"malformed certificate: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "Certificate":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Refusal:
    """Returned when ``x`` is not on the requested side of the threshold."""

    kind: str
    threshold: float
    value: float


def _single_output(graph: GameGraph):
    if graph.width(1) != 1:
        raise CertificateError(f"certificates need a single-output network, got {graph.width(1)} outputs")


def certify_accept(graph: GameGraph, x, alpha: float, net_digest: str = ""):
    """Certificate that ``f(x) >= alpha`` built from Max's optimal policy, or a :class:`Refusal`."""
    _single_output(graph)
    terminal = terminal_reward_from_input(graph, x)
    table = shapley_value(graph, terminal)
    f = float(table.output[0])
    if not f >= alpha:
        return Refusal(ACCEPT, alpha, f)
    pi = optimal_policies(graph, terminal, table).pi
    value = float(fixed_policy_value_max(graph, terminal, pi).output[0])
    return Certificate(ACCEPT, float(alpha), bits_of(pi), value,
                       tuple(float(v) for v in np.ravel(x)), net_digest)


def certify_reject(graph: GameGraph, x, beta: float, net_digest: str = ""):
    """Certificate that ``f(x) <= beta`` built from Min's optimal policy, or a :class:`Refusal`."""
    _single_output(graph)
    terminal = terminal_reward_from_input(graph, x)
    table = shapley_value(graph, terminal)
    f = float(table.output[0])
    if not f <= beta:
        return Refusal(REJECT, beta, f)
    sigma = optimal_policies(graph, terminal, table).sigma
    value = float(fixed_policy_value_min(graph, terminal, sigma).output[0])
    return Certificate(REJECT, float(beta), bits_of(sigma), value,
                       tuple(float(v) for v in np.ravel(x)), net_digest)


def one_sided_value(graph: GameGraph, kind: str, policy, x) -> float:
    """``f^pi(x)`` for an accept policy, ``^sigma f(x)`` for a reject policy."""
    terminal = terminal_reward_from_input(graph, x)
    layers = split_bits(graph, policy) if isinstance(policy, str) else policy
    if kind == ACCEPT:
        return float(fixed_policy_value_max(graph, terminal, layers).output[0])
    if kind == REJECT:
        return float(fixed_policy_value_min(graph, terminal, layers).output[0])
    raise CertificateError(f"unknown certificate kind {kind!r}")


def check_certificate(graph: GameGraph, cert: Certificate) -> bool:
    """Recompute the one-sided value and test the threshold.

    The stored ``certified_value`` is ignored.
    """
    _single_output(graph)
    try:
        value = one_sided_value(graph, cert.kind, cert.policy, cert.x)
    except (PolicyError, ValueError):
        return False
    if cert.kind == ACCEPT:
        return value >= cert.threshold
    return value <= cert.threshold


def cell_membership(graph: GameGraph, pi, alpha: float, x) -> bool:
    """Whether ``x`` lies in the acceptance cell ``{f^pi >= alpha}``."""
    return one_sided_value(graph, ACCEPT, pi, x) >= alpha


def reject_cell_membership(graph: GameGraph, sigma, beta: float, x) -> bool:
    """Whether ``x`` lies in the rejection cell ``{^sigma f <= beta}``."""
    return one_sided_value(graph, REJECT, sigma, x) <= beta


def classify(graph: GameGraph, x, alpha: float, beta: float, net_digest: str = ""):
    """Verdict ``"accept"``, ``"reject"`` or ``"unclassified"`` with the certificate if any."""
    if not alpha > beta:
        raise CertificateError(f"need alpha > beta, got alpha={alpha}, beta={beta}")
    acc = certify_accept(graph, x, alpha, net_digest)
    if isinstance(acc, Certificate):
        return ACCEPT, acc
    rej = certify_reject(graph, x, beta, net_digest)
    if isinstance(rej, Certificate):
        return REJECT, rej
    return "unclassified", acc.value
