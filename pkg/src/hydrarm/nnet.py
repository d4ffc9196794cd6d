"""Minimal dense network engine: forward, backprop, dropout, adam, I/O.

Double precision throughout; the networks are tiny, so reproducibility
beats speed.  Dropout is inverted (surviving activations scaled by
1/(1-p) at train time) so evaluation applies no correction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "linear")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"
    dropout: float = 0.0  # applied after the activation

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dims must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


@dataclass
class Network:
    layers: list[LayerSpec]
    weights: list[np.ndarray]  # per layer, (out_dim, in_dim)
    biases: list[np.ndarray]   # per layer, (out_dim,)
    seed: int = 0

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError("consecutive layer dims must chain")
        for spec, w, b in zip(self.layers, self.weights, self.biases):
            if w.shape != (spec.out_dim, spec.in_dim) or b.shape != (spec.out_dim,):
                raise ValueError("weight shapes do not match layer specs")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim


def build_network(dims: list[int], hidden_dropout: float = 0.2,
                  seed: int = 0) -> Network:
    """Relu hidden stack with a linear output layer.

    Small fan-in-scaled uniform weights and biases train measurably better
    here than Glorot with zero biases (live relu units at the narrow tail
    of the pyramid, less early variance under dropout).
    """
    rng = np.random.default_rng(seed)
    layers, weights, biases = [], [], []
    for i, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
        last = i == len(dims) - 2
        layers.append(LayerSpec(
            in_dim=d_in, out_dim=d_out,
            activation="linear" if last else "relu",
            dropout=0.0 if last else hidden_dropout,
        ))
        limit = 1.0 / math.sqrt(d_in)
        weights.append(rng.uniform(-limit, limit, (d_out, d_in)))
        biases.append(rng.uniform(-limit, limit, d_out))
    return Network(layers=layers, weights=weights, biases=biases, seed=seed)


def param_count(net: Network) -> int:
    return sum((spec.in_dim + 1) * spec.out_dim for spec in net.layers)


def forward(net: Network, x: np.ndarray, train: bool = False,
            rng: np.random.Generator | None = None):
    """Run the network; returns (output, cache) with cache for backprop.

    x may be (in_dim,) or a batch (B, in_dim); the output matches.  Train
    mode draws one dropout mask per layer from rng.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x.reshape(1, -1) if single else x
    if a.shape[1] != net.in_dim:
        raise ValueError(
            f"input width {a.shape[1]} does not match network {net.in_dim}")
    if train and rng is None and any(s.dropout > 0 for s in net.layers):
        raise ValueError("train-mode forward with dropout requires an rng")

    cache = {"inputs": [], "pre": [], "masks": [], "train": train}
    for spec, w, b in zip(net.layers, net.weights, net.biases):
        cache["inputs"].append(a)
        pre = a @ w.T + b
        cache["pre"].append(pre)
        a = np.maximum(pre, 0.0) if spec.activation == "relu" else pre
        if train and spec.dropout > 0.0:
            keep = 1.0 - spec.dropout
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        else:
            mask = None
        cache["masks"].append(mask)
    cache["output"] = a
    return (a[0] if single else a), cache


def mse_loss(output: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error averaged over every output element in the batch."""
    output = np.atleast_2d(output)
    target = np.atleast_2d(target)
    return float(np.mean((output - target) ** 2))


def backward(net: Network, cache: dict, target: np.ndarray):
    """Exact gradients of the batch-mean MSE for every weight and bias.

    Returns (grads_w, grads_b) lists shaped like net.weights/net.biases.
    Dropout masks recorded in the cache are respected.
    """
    target = np.asarray(target, dtype=float)
    out = cache["output"]
    if target.ndim == 1:
        target = target.reshape(1, -1)
    if target.shape != out.shape:
        raise ValueError(
            f"target shape {target.shape} does not match output {out.shape}")
    n_batch, n_out = out.shape

    delta = 2.0 * (out - target) / (n_batch * n_out)
    grads_w = [None] * len(net.layers)
    grads_b = [None] * len(net.layers)
    for li in range(len(net.layers) - 1, -1, -1):
        spec = net.layers[li]
        mask = cache["masks"][li]
        if mask is not None:
            delta = delta * mask
        if spec.activation == "relu":
            delta = delta * (cache["pre"][li] > 0.0)
        grads_w[li] = delta.T @ cache["inputs"][li]
        grads_b[li] = delta.sum(axis=0)
        if li > 0:
            delta = delta @ net.weights[li]
    return grads_w, grads_b


@dataclass
class AdamState:
    """Bias-corrected adam accumulators, one entry per parameter array."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def init_like(self, params: list[np.ndarray]) -> None:
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step_count = 0


def adam_step(adam: AdamState, params: list[np.ndarray],
              grads: list[np.ndarray]) -> None:
    """Apply one adam update in place; the step counter advances once."""
    if not adam.m:
        adam.init_like(params)
    if len(params) != len(grads) or len(params) != len(adam.m):
        raise ValueError("parameter/gradient count mismatch")
    adam.step_count += 1
    t = adam.step_count
    c1 = 1.0 - adam.beta1 ** t
    c2 = 1.0 - adam.beta2 ** t
    for p, g, m, v in zip(params, grads, adam.m, adam.v):
        if p.shape != g.shape:
            raise ValueError("parameter/gradient shape mismatch")
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * g * g
        p -= adam.lr * (m / c1) / (np.sqrt(v / c2) + adam.eps)


# ---------------------------------------------------------------------------
# Checkpoints


@dataclass
class Checkpoint:
    """Serialized network plus the normalization bounds it was trained with."""

    kind: str  # "fk" or "ik"
    net: Network
    norm: dict

    @property
    def param_count(self) -> int:
        return param_count(self.net)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    doc = {
        "kind": ckpt.kind,
        "layers": [
            {"in": s.in_dim, "out": s.out_dim,
             "activation": s.activation, "dropout": s.dropout}
            for s in ckpt.net.layers
        ],
        "weights": [w.tolist() for w in ckpt.net.weights],
        "biases": [b.tolist() for b in ckpt.net.biases],
        "norm": dict(ckpt.norm),
        "seed": int(ckpt.net.seed),
        "param_count": param_count(ckpt.net),
    }
    with open(path, "w") as f:
        json.dump(doc, f)
        f.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path) as f:
        doc = json.load(f)
    for key in ("kind", "layers", "weights", "biases", "norm", "seed"):
        if key not in doc:
            raise ValueError(f"{path}: checkpoint missing {key!r}")
    layers = [LayerSpec(in_dim=int(s["in"]), out_dim=int(s["out"]),
                        activation=s["activation"], dropout=float(s["dropout"]))
              for s in doc["layers"]]
    weights = [np.array(w, dtype=float) for w in doc["weights"]]
    biases = [np.array(b, dtype=float) for b in doc["biases"]]
    net = Network(layers=layers, weights=weights, biases=biases,
                  seed=int(doc["seed"]))
    if "param_count" in doc and int(doc["param_count"]) != param_count(net):
        raise ValueError(f"{path}: stored param_count does not match weights")
    return Checkpoint(kind=doc["kind"], net=net, norm=doc["norm"])
