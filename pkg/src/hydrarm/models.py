"""Forward/inverse kinematics model assembly, training, and evaluation.

Both models share the hidden stack 128-64-32-16 (relu, dropout 0.2) and a
linear output.  The forward model maps 48 stacked pressure/valve history
values to the 20 marker coordinates; the inverse model maps the 20 marker
coordinates to the 4 pressures.  Training is plain minibatch adam on the
batch-mean MSE for a fixed number of epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import (Dataset, NormalizationSpec, denormalize_markers_xy,
                   denormalize_pressures, normalize_markers_xy,
                   normalize_pressures)
from .nnet import (AdamState, Checkpoint, adam_step, backward, build_network,
                   forward, mse_loss)

HIDDEN_DIMS = [128, 64, 32, 16]
FK_DIMS = [48, *HIDDEN_DIMS, 20]
IK_DIMS = [20, *HIDDEN_DIMS, 4]
HIDDEN_DROPOUT = 0.2

# Per-sample RMSE definition used everywhere in this package:
#   fk: sqrt(mean over the 10 markers of squared euclidean (x, y) error),
#       computed in meters after denormalization, reported in mm.
#   ik: sqrt(mean over the 4 actuators of squared pressure error) in kPa,
#       computed after denormalization.
RMSE_DEFINITION = {
    "fk": "sqrt(mean_j |est_j - true_j|^2) over 10 markers, mm",
    "ik": "sqrt(mean_a (est_a - true_a)^2) over 4 pressures, kPa",
}

HIST_RANGE = {"fk": (0.0, 20.0), "ik": (0.0, 5.0)}  # mm / kPa
HIST_STEP = {"fk": 1.0, "ik": 0.25}
ERROR_LANDMARK = {"fk": 5.0, "ik": 1.5}  # mm / kPa


def architecture(kind: str) -> list[int]:
    if kind == "fk":
        return list(FK_DIMS)
    if kind == "ik":
        return list(IK_DIMS)
    raise ValueError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    epoch_losses: list[float] = field(default_factory=list)


def train(kind: str, dataset: Dataset, tc: TrainConfig,
          norm: NormalizationSpec | None = None) -> TrainResult:
    """Train a fresh network of the given kind on normalized samples.

    Each epoch reshuffles with the seeded generator; the final partial
    batch is kept.  Returns the checkpoint with the normalization bounds
    embedded plus the mean training loss per epoch.
    """
    norm = norm or NormalizationSpec()
    dims = architecture(kind)
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if dataset.inputs.shape[1] != dims[0] or dataset.targets.shape[1] != dims[-1]:
        raise ValueError(
            f"{kind} model expects {dims[0]}->{dims[-1]} samples, got "
            f"{dataset.inputs.shape[1]}->{dataset.targets.shape[1]}")

    net = build_network(dims, hidden_dropout=HIDDEN_DROPOUT, seed=tc.seed)
    rng = np.random.default_rng(tc.seed)
    adam = AdamState()
    params = [*net.weights, *net.biases]
    adam.init_like(params)

    losses = []
    for _ in range(tc.epochs):
        order = rng.permutation(n)
        total, batches = 0.0, 0
        for s in range(0, n, tc.batch_size):
            idx = order[s:s + tc.batch_size]
            out, cache = forward(net, dataset.inputs[idx], train=True, rng=rng)
            total += mse_loss(out, dataset.targets[idx])
            batches += 1
            grads_w, grads_b = backward(net, cache, dataset.targets[idx])
            adam_step(adam, params, [*grads_w, *grads_b])
        losses.append(total / batches)
    return TrainResult(Checkpoint(kind=kind, net=net, norm=norm.to_dict()),
                       epoch_losses=losses)


def _norm_spec(ckpt: Checkpoint) -> NormalizationSpec:
    return NormalizationSpec.from_dict(ckpt.norm)


def predict_fk(ckpt: Checkpoint, p_history, u_history) -> np.ndarray:
    """Marker (x, y) estimate in meters from pressure/valve history.

    Histories are ordered newest first: rows at t, t-tau, ..., t-n*tau.
    Output is clamped to the workspace rectangle.
    """
    if ckpt.kind != "fk":
        raise ValueError(f"expected an fk checkpoint, got {ckpt.kind!r}")
    spec = _norm_spec(ckpt)
    p_hist = np.asarray(p_history, dtype=float)
    u_hist = np.asarray(u_history, dtype=float)
    n_hist = ckpt.net.in_dim // 12
    if p_hist.shape != (n_hist, 4) or u_hist.shape != (n_hist, 8):
        raise ValueError(
            f"fk input needs {n_hist} pressure rows of 4 and valve rows of 8")
    vec = np.concatenate([
        normalize_pressures(p_hist, spec).ravel(), u_hist.ravel()])
    out, _ = forward(ckpt.net, vec, train=False)
    return denormalize_markers_xy(np.clip(out, 0.0, 1.0), spec)


def predict_ik(ckpt: Checkpoint, markers) -> np.ndarray:
    """Pressure estimate in kPa for a desired marker shape, clamped to range."""
    if ckpt.kind != "ik":
        raise ValueError(f"expected an ik checkpoint, got {ckpt.kind!r}")
    spec = _norm_spec(ckpt)
    markers = list(markers)
    if 2 * len(markers) != ckpt.net.in_dim:
        raise ValueError(
            f"ik input needs {ckpt.net.in_dim // 2} markers, got {len(markers)}")
    vec = normalize_markers_xy(markers, spec)
    out, _ = forward(ckpt.net, vec, train=False)
    p = denormalize_pressures(out, spec)
    return np.clip(p, spec.p_min, spec.p_max)


@dataclass
class EvalReport:
    kind: str
    rmse: np.ndarray        # per-sample, mm (fk) or kPa (ik)
    bin_edges: np.ndarray
    counts: np.ndarray
    summary: dict

    @property
    def units(self) -> str:
        return "mm" if self.kind == "fk" else "kPa"


def rmse_per_sample(kind: str, outputs: np.ndarray, targets: np.ndarray,
                    spec: NormalizationSpec) -> np.ndarray:
    """Physical-space per-sample RMSE; see RMSE_DEFINITION."""
    if kind == "fk":
        est = np.stack([denormalize_markers_xy(o, spec) for o in outputs])
        ref = np.stack([denormalize_markers_xy(t, spec) for t in targets])
        sq = np.sum((est - ref) ** 2, axis=2)       # squared distance per marker
        return np.sqrt(np.mean(sq, axis=1)) * 1e3   # m -> mm
    if kind == "ik":
        est = denormalize_pressures(outputs, spec)
        ref = denormalize_pressures(targets, spec)
        return np.sqrt(np.mean((est - ref) ** 2, axis=1))
    raise ValueError(f"unknown model kind {kind!r}")


def evaluate(ckpt: Checkpoint, dataset: Dataset) -> EvalReport:
    """Per-sample RMSE over a test set with the fixed histogram binning.

    Values beyond the top edge are counted in the last bin so the counts
    always sum to the sample count.
    """
    if dataset.kind != ckpt.kind:
        raise ValueError(
            f"dataset kind {dataset.kind!r} does not match model {ckpt.kind!r}")
    if len(dataset) == 0:
        raise ValueError("cannot evaluate on an empty test set")
    spec = _norm_spec(ckpt)
    outputs, _ = forward(ckpt.net, dataset.inputs, train=False)
    # Same range clamp the prediction helpers apply (bounds map to 0/1).
    outputs = np.clip(outputs, 0.0, 1.0)
    rmse = rmse_per_sample(ckpt.kind, outputs, dataset.targets, spec)

    lo, hi = HIST_RANGE[ckpt.kind]
    edges = np.arange(lo, hi + HIST_STEP[ckpt.kind] / 2, HIST_STEP[ckpt.kind])
    counts, _ = np.histogram(np.minimum(rmse, hi - 1e-12), bins=edges)
    threshold = ERROR_LANDMARK[ckpt.kind]
    summary = {
        "kind": ckpt.kind,
        "samples": int(len(dataset)),
        "units": "mm" if ckpt.kind == "fk" else "kPa",
        "mean": float(np.mean(rmse)),
        "median": float(np.median(rmse)),
        "threshold": threshold,
        "fraction_below_threshold": float(np.mean(rmse < threshold)),
        "rmse_definition": RMSE_DEFINITION[ckpt.kind],
    }
    return EvalReport(kind=ckpt.kind, rmse=rmse, bin_edges=edges,
                      counts=counts, summary=summary)
