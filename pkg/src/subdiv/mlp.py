"""Feed-forward networks (tanh / linear layers) as DAG fragments.

Weights are read from JSON: a list of layers, each
``{"W": [[...], ...], "b": [...], "activation": "tanh" | "linear"}`` with ``W``
stored row-major as ``outputs x inputs``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = ("tanh", "linear")


@dataclass(frozen=True)
class LayerSpec:
    W: np.ndarray
    b: np.ndarray
    activation: str = "tanh"

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]

    def to_json(self) -> dict:
        return {"W": self.W.tolist(), "b": self.b.tolist(), "activation": self.activation}


def validate_layers(layers: Sequence[LayerSpec]) -> list[LayerSpec]:
    layers = list(layers)
    if not layers:
        raise ValueError("network has no layers")
    for i, layer in enumerate(layers):
        if layer.activation not in ACTIVATIONS:
            raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
        if layer.W.ndim != 2 or layer.W.shape[0] == 0 or layer.W.shape[1] == 0:
            raise ValueError(f"layer {i}: W must be a non-empty matrix")
        if layer.b.shape != (layer.W.shape[0],):
            raise ValueError(f"layer {i}: bias length {layer.b.size} != {layer.W.shape[0]} rows")
        if not (np.all(np.isfinite(layer.W)) and np.all(np.isfinite(layer.b))):
            raise ValueError(f"layer {i}: non-finite weights")
        if i and layer.n_in != layers[i - 1].n_out:
            raise ValueError(
                f"dimension mismatch: layer {i} takes {layer.n_in} inputs, "
                f"layer {i - 1} produces {layers[i - 1].n_out}"
            )
    return layers


def load_ann_weights(path: str) -> list[LayerSpec]:
    """Read and validate a weights file."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed weights file ({exc})") from exc
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a list of layers")
    layers = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "W" not in item or "b" not in item:
            raise ValueError(f"{path}: layer {i} needs 'W' and 'b'")
        rows = item["W"]
        if not isinstance(rows, list) or not rows or len({len(r) if isinstance(r, list) else -1 for r in rows}) != 1:
            raise ValueError(f"{path}: layer {i}: W must be a rectangular list of rows")
        layers.append(
            LayerSpec(
                np.asarray(rows, dtype=np.float64),
                np.asarray(item["b"], dtype=np.float64).reshape(-1),
                item.get("activation", "tanh"),
            )
        )
    return validate_layers(layers)


def save_ann_weights(path: str, layers: Sequence[LayerSpec]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([layer.to_json() for layer in layers], fh, indent=1)
        fh.write("\n")


def build_mlp(builder, layers: Sequence[LayerSpec], inputs: Sequence[int]) -> list[int]:
    """Emit the network into ``builder`` on input node ids; returns output ids.

    Each neuron is ``((w1*x1 + w2*x2) + ...) + b`` followed by its activation
    (skipped for linear layers).
    """
    layers = validate_layers(layers)
    if len(inputs) != layers[0].n_in:
        raise ValueError(f"dimension mismatch: network takes {layers[0].n_in} inputs, got {len(inputs)}")
    current = list(inputs)
    for layer in layers:
        nxt = []
        for r in range(layer.n_out):
            acc = None
            for w, x in zip(layer.W[r], current):
                term = builder.binary("mul", builder.const(w), x)
                acc = term if acc is None else builder.binary("add", acc, term)
            acc = builder.binary("add", acc, builder.const(layer.b[r]))
            if layer.activation == "tanh":
                acc = builder.unary("tanh", acc)
            nxt.append(acc)
        current = nxt
    return current


def mlp_forward(layers: Sequence[LayerSpec], x: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass; ``x`` has shape ``(n_in,)`` or ``(n_in, P)``."""
    h = np.asarray(x, dtype=np.float64)
    for layer in layers:
        h = layer.W @ h + (layer.b if h.ndim == 1 else layer.b[:, None])
        if layer.activation == "tanh":
            h = np.tanh(h)
    return h


def random_mlp(sizes: Sequence[int], seed: int, output_activation: str = "linear", scale: float = 1.0) -> list[LayerSpec]:
    """Seeded random stand-in network (Glorot-style uniform weights)."""
    rng = np.random.default_rng(seed)
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        lim = scale * np.sqrt(6.0 / (n_in + n_out))
        W = rng.uniform(-lim, lim, size=(n_out, n_in))
        b = rng.uniform(-0.5, 0.5, size=n_out)
        last = i == len(sizes) - 2
        layers.append(LayerSpec(W, b, output_activation if last else "tanh"))
    return layers


def standin_mlp(sizes: Sequence[int], seed: int, box: Sequence[tuple[float, float]]) -> list[LayerSpec]:
    """Seeded random network whose first layer is rescaled to the input box,
    so hidden units are not saturated across the domain."""
    layers = random_mlp(sizes, seed)
    lo = np.array([a for a, _ in box], dtype=np.float64)
    hi = np.array([b for _, b in box], dtype=np.float64)
    centre, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    W = layers[0].W / half
    layers[0] = LayerSpec(W, layers[0].b - W @ centre, layers[0].activation)
    return layers
