"""Dense feed-forward classifier with recorded activations and input gradients.

The network is a plain stack of fully connected layers held as numpy arrays.
Forward passes record every pre- and post-activation so that the attribution
methods can replay the pass backwards with their own propagation rules.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

RELU = "relu"
LINEAR = "linear"
ACTIVATIONS = (RELU, LINEAR)


@dataclass
class DenseLayer:
    """One fully connected layer: ``post = act(weights @ a + biases)``."""

    weights: np.ndarray  # (n_out, n_in)
    biases: np.ndarray  # (n_out,)
    activation: str = RELU

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError(f"layer weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"bias shape {self.biases.shape} does not match {self.weights.shape[0]} outputs"
            )
        if not np.isfinite(self.weights).all() or not np.isfinite(self.biases).all():
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class NetworkSpec:
    """An ordered stack of dense layers ending in a linear logit layer."""

    layers: list[DenseLayer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for lower, upper in zip(self.layers, self.layers[1:]):
            if upper.n_in != lower.n_out:
                raise ValueError(
                    f"layer widths do not chain: {lower.n_out} outputs feed {upper.n_in} inputs"
                )
        if self.layers[-1].activation != LINEAR:
            raise ValueError("final layer must be linear (logits)")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    @property
    def n_classes(self) -> int:
        return self.layers[-1].n_out


@dataclass
class ForwardTrace:
    """Recorded forward pass for a single input."""

    input: np.ndarray
    pre_activations: list[np.ndarray] = field(default_factory=list)
    post_activations: list[np.ndarray] = field(default_factory=list)
    logits: np.ndarray = None
    probabilities: np.ndarray = None


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


def _check_input(net: NetworkSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.n_inputs,):
        raise ValueError(f"input shape {x.shape} does not match {net.n_inputs} network inputs")
    if not np.isfinite(x).all():
        raise ValueError("input contains non-finite values")
    return x


def _check_class(net: NetworkSpec, target_class: int) -> int:
    target_class = int(target_class)
    if not 0 <= target_class < net.n_classes:
        raise ValueError(f"class {target_class} out of range for {net.n_classes} classes")
    return target_class


def _forward_arrays(net: NetworkSpec, X: np.ndarray):
    """Batched forward pass returning per-layer (pre, post) activation lists."""
    pres, posts = [], []
    a = X
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases
        a = np.maximum(z, 0.0) if layer.activation == RELU else z
        pres.append(z)
        posts.append(a)
    return pres, posts


def forward(net: NetworkSpec, x: np.ndarray) -> ForwardTrace:
    """Evaluate the network on one input, recording every activation."""
    x = _check_input(net, x)
    pres, posts = _forward_arrays(net, x[None, :])
    logits = posts[-1][0]
    return ForwardTrace(
        input=x,
        pre_activations=[p[0] for p in pres],
        post_activations=[p[0] for p in posts],
        logits=logits,
        probabilities=softmax(logits),
    )


def forward_batch(net: NetworkSpec, X: np.ndarray):
    """Logits and softmax probabilities for a batch of row-vector inputs."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise ValueError(f"batch shape {X.shape} does not match {net.n_inputs} network inputs")
    _, posts = _forward_arrays(net, X)
    logits = posts[-1]
    return logits, softmax(logits, axis=1)


def input_gradient_batch(net: NetworkSpec, X: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of each row's target-class logit with respect to that row.

    The rectifier derivative at exactly 0 is taken as 0, so units sitting on
    the kink pass nothing backwards.
    """
    X = np.asarray(X, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.intp)
    pres, _ = _forward_arrays(net, X)
    g = np.zeros((X.shape[0], net.n_classes))
    g[np.arange(X.shape[0]), targets] = 1.0
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        if layer.activation == RELU:
            g = g * (pres[i] > 0.0)
        g = g @ layer.weights
    return g


def input_gradient(net: NetworkSpec, x: np.ndarray, target_class: int) -> np.ndarray:
    """Gradient of the target-class logit with respect to the input vector."""
    x = _check_input(net, x)
    target_class = _check_class(net, target_class)
    return input_gradient_batch(net, x[None, :], np.array([target_class]))[0]


def predict(net: NetworkSpec, x: np.ndarray):
    """Predicted label (argmax probability, ties to the lowest index) and probabilities."""
    trace = forward(net, x)
    return int(np.argmax(trace.probabilities)), trace.probabilities


def predict_batch(net: NetworkSpec, X: np.ndarray):
    logits, probs = forward_batch(net, X)
    return np.argmax(logits, axis=1), probs


def init_network(
    n_inputs: int,
    hidden_sizes: Sequence[int],
    n_classes: int,
    rng: np.random.Generator,
) -> NetworkSpec:
    """Fresh network with fan-in-scaled uniform weights and zero biases.

    Weights are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); hidden layers
    are rectified, the output layer is linear.
    """
    widths = [n_inputs, *hidden_sizes, n_classes]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        activation = LINEAR if i == len(widths) - 2 else RELU
        layers.append(DenseLayer(weights, np.zeros(fan_out), activation))
    return NetworkSpec(layers)


def to_json_dict(net: NetworkSpec) -> dict:
    return {
        "n_inputs": net.n_inputs,
        "n_classes": net.n_classes,
        "layers": [
            {
                "rows": layer.n_out,
                "cols": layer.n_in,
                "weights": layer.weights.ravel().tolist(),
                "biases": layer.biases.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }


def from_json_dict(doc: dict) -> NetworkSpec:
    layers = []
    for entry in doc["layers"]:
        weights = np.array(entry["weights"], dtype=np.float64).reshape(
            entry["rows"], entry["cols"]
        )
        layers.append(DenseLayer(weights, np.array(entry["biases"]), entry["activation"]))
    net = NetworkSpec(layers)
    if net.n_inputs != doc["n_inputs"] or net.n_classes != doc["n_classes"]:
        raise ValueError("model file header disagrees with layer shapes")
    return net


def save_model(net: NetworkSpec, path) -> None:
    """Write the network as JSON; floats round-trip exactly via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(net), fh)
        fh.write("\n")


def load_model(path) -> NetworkSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))
