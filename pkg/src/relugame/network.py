"""Feed-forward ReLU / Softplus networks.

Layers are stored input-first (the order they appear in files), but all
accessors use the reversed numbering in which layer 1 is the output and
layer ``L`` is the input.  ``W(l)`` therefore maps layer ``l + 1`` to
layer ``l`` and has shape ``(k_l, k_{l+1})``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "softplus")


class NetworkError(ValueError):
    """Raised for malformed networks or inputs of the wrong shape."""


@dataclass(frozen=True)
class NetworkSpec:
    """Weights and biases of a fully connected network.

    ``weights[0]`` maps the input to the first hidden layer and
    ``weights[-1]`` produces the output.  ``widths`` is input-first as well.
    Construction does not validate; call :func:`validate` or use
    :meth:`checked`.
    """

    weights: tuple
    biases: tuple
    widths: tuple
    activation: str = "relu"
    tau: float | None = None

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=np.float64, ndmin=2) for w in self.weights)
        bs = tuple(np.array(b, dtype=np.float64, ndmin=1) for b in self.biases)
        for a in ws + bs:
            a.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        object.__setattr__(self, "widths", tuple(int(k) for k in self.widths))

    @classmethod
    def checked(cls, weights, biases, widths=None, activation="relu", tau=None):
        """Build and validate; ``widths`` is inferred from the matrices if omitted."""
        if widths is None:
            ws = [np.array(w, dtype=np.float64, ndmin=2) for w in weights]
            widths = [ws[0].shape[1]] + [w.shape[0] for w in ws] if ws else []
        spec = cls(tuple(weights), tuple(biases), tuple(widths), activation, tau)
        problems = validate(spec)
        if problems:
            raise NetworkError("; ".join(problems))
        return spec

    # -- output-first accessors -----------------------------------------
    @property
    def depth(self) -> int:
        """Number of layers ``L`` counting input and output."""
        return len(self.widths)

    def width(self, l: int) -> int:
        return self.widths[self.depth - l]

    def W(self, l: int) -> np.ndarray:
        return self.weights[self.depth - 1 - l]

    def b(self, l: int) -> np.ndarray:
        return self.biases[self.depth - 1 - l]

    @property
    def n_inputs(self) -> int:
        return self.widths[0]

    @property
    def n_outputs(self) -> int:
        return self.widths[-1]

    def to_dict(self) -> dict:
        d = {
            "widths": list(self.widths),
            "layers": [{"W": w.tolist(), "b": b.tolist()}
                       for w, b in zip(self.weights, self.biases)],
            "activation": self.activation,
        }
        if self.tau is not None:
            d["tau"] = float(self.tau)
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON serialisation."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def validate(spec: NetworkSpec) -> list[str]:
    """Return a list of human-readable violations (empty if the net is valid)."""
    problems = []
    L = len(spec.widths)
    n = len(spec.weights)
    if L < 2 or n == 0:
        return ["L >= 2 required (at least one weight layer)"]
    if len(spec.biases) != n:
        problems.append(f"{n} weight matrices but {len(spec.biases)} bias vectors")
    if n != L - 1:
        problems.append(f"{len(spec.widths)} widths imply {L - 1} weight layers, got {n}")
        return problems
    for k in spec.widths:
        if k < 1:
            problems.append(f"layer widths must be positive, got {k}")
    if spec.activation not in ACTIVATIONS:
        problems.append(f"unknown activation {spec.activation!r}")
    if spec.activation == "softplus" and (spec.tau is None or not spec.tau > 0):
        problems.append("softplus activation needs tau > 0")
    for l in range(1, L):
        w, b = spec.W(l), spec.b(l)
        rows, cols = spec.width(l), spec.width(l + 1)
        if w.shape != (rows, cols):
            problems.append(f"layer {l}: W has shape {w.shape}, expected ({rows}, {cols})")
        if b.shape != (rows,):
            problems.append(f"layer {l}: b has length {b.size}, expected k_{l} = {rows}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            problems.append(f"layer {l}: non-finite entries")
    return problems


def _as_input(spec: NetworkSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape != (spec.n_inputs,):
        raise NetworkError(f"input has length {x.size}, network expects {spec.n_inputs}")
    if not np.all(np.isfinite(x)):
        raise NetworkError("input must be finite")
    return x


def forward_relu(spec: NetworkSpec, x):
    """Evaluate the ReLU net.

    Returns ``(output, ys)`` where ``ys[l - 1]`` is the activation vector of
    layer ``l`` (so ``ys[0]`` is the output and ``ys[-1]`` is ``x``).  The
    output layer is rectified too.
    """
    y = _as_input(spec, x)
    ys = [y]
    for l in range(spec.depth - 1, 0, -1):
        y = np.maximum(spec.W(l) @ y + spec.b(l), 0.0)
        ys.append(y)
    ys.reverse()
    return ys[0], ys


def preactivations(spec: NetworkSpec, x) -> list[np.ndarray]:
    """``z^l = W^l y^{l+1} + b^l`` for l = 1..L-1, indexed ``[l - 1]``."""
    _, ys = forward_relu(spec, x)
    return [spec.W(l) @ ys[l] + spec.b(l) for l in range(1, spec.depth)]


def softplus(z, tau: float):
    """``tau * log(1 + exp(z / tau))`` without overflow."""
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(over="ignore"):
        # |z| / tau may overflow to inf, and exp(-inf) = 0 is the right limit
        return np.maximum(z, 0.0) + tau * np.log1p(np.exp(-np.abs(z) / tau))


def forward_softplus(spec: NetworkSpec, x, tau: float):
    """Softplus counterpart of :func:`forward_relu`; same return layout."""
    if not tau > 0:
        raise NetworkError(f"tau must be positive, got {tau}")
    y = _as_input(spec, x)
    ys = [y]
    for l in range(spec.depth - 1, 0, -1):
        y = softplus(spec.W(l) @ y + spec.b(l), tau)
        ys.append(y)
    ys.reverse()
    return ys[0], ys


def random_network(seed: int, depth: int, widths, weight_scale: float = 1.0,
                   bias_scale: float | None = None) -> NetworkSpec:
    """Random net with entries uniform in ``[-weight_scale, weight_scale]``.

    Uses numpy's PCG64 generator seeded with ``seed``; weights are drawn
    layer by layer input-first, each layer's ``W`` then ``b``.  Biases use
    ``bias_scale`` (defaults to ``weight_scale``).
    """
    widths = tuple(int(k) for k in widths)
    if len(widths) != depth:
        raise NetworkError(f"depth {depth} needs {depth} widths, got {len(widths)}")
    if any(k < 1 for k in widths):
        raise NetworkError("widths must be positive")
    if bias_scale is None:
        bias_scale = weight_scale
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for k_in, k_out in zip(widths[:-1], widths[1:]):
        weights.append(rng.uniform(-weight_scale, weight_scale, size=(k_out, k_in)))
        biases.append(rng.uniform(-bias_scale, bias_scale, size=k_out))
    return NetworkSpec(tuple(weights), tuple(biases), widths)


def load_network(path, check: bool = True) -> NetworkSpec:
    """Read a network file (JSON, layers listed input-first).

    With ``check=False`` dimension problems are left for :func:`validate`.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise NetworkError(f"cannot read network file {path}: {exc}") from exc
    return network_from_dict(data, check)


def network_from_dict(data: dict, check: bool = True) -> NetworkSpec:
    try:
        layers = data["layers"]
        weights = [layer["W"] for layer in layers]
        biases = [layer["b"] for layer in layers]
        widths = data["widths"]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"network document is missing field {exc}") from exc
    try:
        if not check:
            return NetworkSpec(tuple(weights), tuple(biases), tuple(widths),
                               data.get("activation", "relu"), data.get("tau"))
        return NetworkSpec.checked(weights, biases, widths,
                                   data.get("activation", "relu"), data.get("tau"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, NetworkError):
            raise
        raise NetworkError(f"malformed network document: {exc}") from exc


def save_network(spec: NetworkSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
