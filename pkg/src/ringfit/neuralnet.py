"""
Fully connected feedforward network in NumPy.

Layers are affine maps followed by either ``tanh`` or the identity. Training
uses inverted dropout on hidden activations, a mean-squared-error loss,
exact backpropagation and Adam. Everything is float64; samples are rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, InvalidParameterError

TANH = "tanh"
LINEAR = "linear"


@dataclass(frozen=True)
class NetworkSpec:
    """Layer sizes (input ... output) and one activation per affine layer.

    ``dropout_scope`` is ``"hidden"`` (hidden-layer activations only) or
    ``"all"`` (additionally the network input).
    """

    layer_sizes: tuple[int, ...]
    activations: tuple[str, ...]
    dropout_rate: float = 0.1
    dropout_scope: str = "hidden"

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise InvalidParameterError(f"invalid layer sizes {self.layer_sizes}")
        if len(self.activations) != len(self.layer_sizes) - 1:
            raise InvalidParameterError("need exactly one activation per affine layer")
        if any(a not in (TANH, LINEAR) for a in self.activations):
            raise InvalidParameterError(f"unknown activation in {self.activations}")
        if not 0 <= self.dropout_rate < 1:
            raise InvalidParameterError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.dropout_scope not in ("hidden", "all"):
            raise InvalidParameterError(f"unknown dropout_scope {self.dropout_scope!r}")

    @classmethod
    def mlp(cls, layer_sizes: Sequence[int], final: str = LINEAR, **kwargs) -> "NetworkSpec":
        """tanh on every layer except the last, which gets ``final``."""
        n = len(layer_sizes) - 1
        return cls(tuple(layer_sizes), (TANH,) * (n - 1) + (final,), **kwargs)

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activations": list(self.activations),
            "dropout_rate": self.dropout_rate,
            "dropout_scope": self.dropout_scope,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            tuple(d["layer_sizes"]),
            tuple(d["activations"]),
            float(d["dropout_rate"]),
            d.get("dropout_scope", "hidden"),
        )


@dataclass
class TrainingConfig:
    learning_rate: float = 0.001
    epochs: int = 1
    batch_size: int = 64
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidParameterError("learning_rate must be > 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidParameterError("epochs must be >= 0 and batch_size >= 1")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1 and self.adam_epsilon > 0):
            raise InvalidParameterError("invalid Adam constants")


@dataclass
class NetworkModel:
    """Weights, biases and Adam state. ``weights[l]`` has shape (fan_in, fan_out)."""

    spec: NetworkSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    def __post_init__(self):
        sizes = self.spec.layer_sizes
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (sizes[l], sizes[l + 1]) or b.shape != (sizes[l + 1],):
                raise InvalidParameterError(f"layer {l} parameter shapes do not match spec")
        if len(self.weights) != self.spec.n_layers:
            raise InvalidParameterError("wrong number of layers")
        if not self.m:
            self.m = [np.zeros_like(p) for p in self.parameters()]
            self.v = [np.zeros_like(p) for p in self.parameters()]

    def parameters(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]``; gradients use the same order."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out.extend((W, b))
        return out

    def copy(self) -> "NetworkModel":
        return NetworkModel(
            self.spec,
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            [a.copy() for a in self.m],
            [a.copy() for a in self.v],
            self.step,
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    # -- inference / training primitives ---------------------------------

    def forward(self, x, train: bool = False, rng: np.random.Generator | None = None):
        out, _ = forward(self, x, train=train, rng=rng)
        return out

    def predict(self, x) -> np.ndarray:
        return self.forward(x, train=False)


def init(spec: NetworkSpec, rng: np.random.Generator) -> NetworkModel:
    """Glorot-uniform weights, zero biases, zeroed Adam state."""
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return NetworkModel(spec, weights, biases)


def _dropout_mask(shape, rate, rng):
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def forward(model: NetworkModel, x, train: bool = False, rng: np.random.Generator | None = None):
    """Run the network and return ``(output, cache)``.

    ``x`` may be a single vector or a batch of rows. In train mode inverted
    dropout is applied (``rng`` required); eval mode ignores ``rng``.
    """
    spec = model.spec
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.ndim != 2 or h.shape[1] != spec.layer_sizes[0]:
        raise InvalidInputError(
            f"input has {h.shape[-1] if h.ndim else 0} features, expected {spec.layer_sizes[0]}"
        )
    dropping = train and spec.dropout_rate > 0
    if dropping and rng is None:
        raise InvalidInputError("train-mode forward needs a random generator")

    inputs, masks, acts = [], [], []
    if dropping and spec.dropout_scope == "all":
        mask = _dropout_mask(h.shape, spec.dropout_rate, rng)
        h = h * mask
        masks.append(mask)
    else:
        masks.append(None)
    last = spec.n_layers - 1
    for l, (W, b, act) in enumerate(zip(model.weights, model.biases, spec.activations)):
        inputs.append(h)
        z = h @ W + b
        a = np.tanh(z) if act == TANH else z
        acts.append(a)
        if dropping and l < last:
            mask = _dropout_mask(a.shape, spec.dropout_rate, rng)
            h = a * mask
            masks.append(mask)
        else:
            h = a
            masks.append(None)
    out = h[0] if single else h
    return out, {"inputs": inputs, "acts": acts, "masks": masks, "single": single}


def mse(output, target) -> float:
    """Mean over output coordinates, then over the batch."""
    diff = np.asarray(output) - np.asarray(target)
    return float(np.mean(diff * diff))


def loss_and_gradients(
    model: NetworkModel, x, target, train: bool = False, rng: np.random.Generator | None = None
):
    """MSE loss and its gradients, ordered like :meth:`NetworkModel.parameters`."""
    out, cache = forward(model, x, train=train, rng=rng)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != out.shape:
        raise InvalidInputError(f"target shape {target.shape} != output shape {out.shape}")
    diff = out - target
    loss = float(np.mean(diff * diff))

    delta = 2.0 * diff / diff.size
    if cache["single"]:
        delta = delta[None, :]
    grads: list[np.ndarray] = [None] * (2 * model.spec.n_layers)
    masks = cache["masks"]
    for l in range(model.spec.n_layers - 1, -1, -1):
        # delta is dL/d(post-dropout output of layer l)
        if masks[l + 1] is not None:
            delta = delta * masks[l + 1]
        if model.spec.activations[l] == TANH:
            a = cache["acts"][l]
            delta = delta * (1.0 - a * a)
        grads[2 * l] = cache["inputs"][l].T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ model.weights[l].T
    return loss, grads


def adam_step(model: NetworkModel, grads: Sequence[np.ndarray], config: TrainingConfig) -> NetworkModel:
    """One bias-corrected Adam update, in place."""
    model.step += 1
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_epsilon, config.learning_rate
    c1 = 1.0 - b1**model.step
    c2 = 1.0 - b2**model.step
    for p, g, m, v in zip(model.parameters(), grads, model.m, model.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return model


def train(
    model: NetworkModel,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainingConfig,
    rng: np.random.Generator,
    validation: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[NetworkModel, list[float], list[float]]:
    """Mini-batch Adam training, in place.

    Returns the model, the per-epoch mean training loss (sample-weighted
    over batches, computed with dropout active) and, if ``validation`` is
    given, the per-epoch eval-mode validation loss.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = inputs.shape[0]
    if n == 0:
        raise InvalidInputError("cannot train on an empty dataset")
    if targets.shape[0] != n:
        raise InvalidInputError("inputs and targets have different row counts")
    losses: list[float] = []
    val_losses: list[float] = []
    bs = config.batch_size
    for _ in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            loss, grads = loss_and_gradients(model, inputs[idx], targets[idx], train=True, rng=rng)
            adam_step(model, grads, config)
            total += loss * len(idx)
        losses.append(total / n)
        if validation is not None:
            val_losses.append(mse(model.predict(validation[0]), validation[1]))
    return model, losses, val_losses
