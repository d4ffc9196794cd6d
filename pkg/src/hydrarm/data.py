"""Run-log persistence, decimation, window construction, and splitting.

Logs are collected at 10 Hz and decimated to the 2 Hz model rate before
windows are built.  Forward-model samples stack pressure and valve history
at back-steps of tau rows; inverse-model samples pair the current marker
coordinates with the current pressures.  All physical channels are min-max
normalized to [0, 1]; valve bits pass through unchanged.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .geometry import MarkerTuple
from .plant import LOG_RATE, RunRow


@dataclass(frozen=True)
class NormalizationSpec:
    """Min-max bounds: kPa for pressures, meters for marker coordinates."""

    p_min: float = 95.0
    p_max: float = 121.0
    x_min: float = -0.15
    x_max: float = 0.15
    y_min: float = 0.0
    y_max: float = 0.40

    def __post_init__(self):
        for lo, hi in ((self.p_min, self.p_max), (self.x_min, self.x_max),
                       (self.y_min, self.y_max)):
            if lo >= hi:
                raise ValueError("normalization bounds require min < max")

    def to_dict(self) -> dict:
        return {"p_min": self.p_min, "p_max": self.p_max,
                "x_min": self.x_min, "x_max": self.x_max,
                "y_min": self.y_min, "y_max": self.y_max}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationSpec":
        return cls(**{k: float(d[k]) for k in
                      ("p_min", "p_max", "x_min", "x_max", "y_min", "y_max")})


def _norm(v, lo: float, hi: float):
    return np.clip((np.asarray(v, dtype=float) - lo) / (hi - lo), 0.0, 1.0)


def _denorm(v, lo: float, hi: float):
    return np.asarray(v, dtype=float) * (hi - lo) + lo


def normalize_pressures(p, spec: NormalizationSpec):
    return _norm(p, spec.p_min, spec.p_max)


def denormalize_pressures(p, spec: NormalizationSpec):
    return _denorm(p, spec.p_min, spec.p_max)


def normalize_markers_xy(markers, spec: NormalizationSpec) -> np.ndarray:
    """Flatten markers to [x1, y1, x2, y2, ...] normalized to [0, 1].

    Accepts MarkerTuples or (x, y[, phi]) sequences; phi is excluded from
    model I/O.
    """
    out = np.empty(2 * len(markers))
    for j, m in enumerate(markers):
        x, y = (m.x, m.y) if isinstance(m, MarkerTuple) else (m[0], m[1])
        out[2 * j] = _norm(x, spec.x_min, spec.x_max)
        out[2 * j + 1] = _norm(y, spec.y_min, spec.y_max)
    return out


def denormalize_markers_xy(flat, spec: NormalizationSpec) -> np.ndarray:
    """Inverse of normalize_markers_xy; returns an (k, 2) array in meters."""
    flat = np.asarray(flat, dtype=float)
    pts = flat.reshape(-1, 2).copy()
    pts[:, 0] = _denorm(pts[:, 0], spec.x_min, spec.x_max)
    pts[:, 1] = _denorm(pts[:, 1], spec.y_min, spec.y_max)
    return pts


@dataclass(frozen=True)
class WindowConfig:
    """History windowing: tau rows back-step, n extra history samples."""

    tau: int = 7
    history: int = 3
    model_rate: float = 2.0

    def __post_init__(self):
        if self.tau < 1 or self.history < 0:
            raise ValueError("tau must be >= 1 and history >= 0")

    @property
    def span_rows(self) -> int:
        return self.tau * self.history


# ---------------------------------------------------------------------------
# Log files (JSON Lines, one row object per line)


def write_runlog(log: list[RunRow], path) -> None:
    with open(path, "w") as f:
        for row in log:
            rec = {
                "t": row.t,
                "p": [float(v) for v in row.p],
                "u": list(row.u),
                "m": [[m.x, m.y, m.phi] for m in row.markers],
                "theta": [float(v) for v in row.theta],
            }
            f.write(json.dumps(rec) + "\n")


def read_runlog(path) -> list[RunRow]:
    log = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            log.append(RunRow(
                t=float(rec["t"]),
                p=np.array(rec["p"], dtype=float),
                u=tuple(int(v) for v in rec["u"]),
                markers=[MarkerTuple(*xyphi) for xyphi in rec["m"]],
                theta=np.array(rec["theta"], dtype=float),
            ))
    _check_spacing(log, 1.0 / LOG_RATE, path)
    return log


def _check_spacing(log: list[RunRow], expected: float, origin="log") -> None:
    for a, b in zip(log, log[1:]):
        if abs((b.t - a.t) - expected) > 1e-9:
            raise ValueError(
                f"{origin}: rows not spaced {expected} s at t={a.t}")


def decimate(log: list[RunRow], model_rate: float = 2.0) -> list[RunRow]:
    """Keep every k-th row starting at row 0 so the output runs at model_rate."""
    if not log:
        return []
    ratio = LOG_RATE / model_rate
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9:
        raise ValueError(f"model rate {model_rate} must divide {LOG_RATE} Hz")
    return log[::k]


# ---------------------------------------------------------------------------
# Windowed samples


@dataclass
class Dataset:
    """Paired model inputs/targets, one row per sample."""

    kind: str              # "fk" or "ik"
    inputs: np.ndarray     # (N, d_in)
    targets: np.ndarray    # (N, d_out)

    def __len__(self) -> int:
        return self.inputs.shape[0]


def build_fk_windows(log2hz: list[RunRow], wc: WindowConfig,
                     norm: NormalizationSpec) -> Dataset:
    """Forward-model samples from one decimated run.

    Input (48 at defaults): [p_t, p_{t-tau}, ..., p_{t-n*tau},
    u_t, u_{t-tau}, ..., u_{t-n*tau}] with pressures normalized and valve
    bits raw.  Target (20): [x_1, y_1, ..., x_10, y_10] at t, normalized.
    Runs shorter than the window span yield an empty dataset.
    """
    span = wc.span_rows
    n_rows = len(log2hz)
    n_markers = len(log2hz[0].markers) if n_rows else 10
    d_in = (wc.history + 1) * 12
    inputs, targets = [], []
    for t in range(span, n_rows):
        vec = np.empty(d_in)
        pos = 0
        for r in range(wc.history + 1):
            vec[pos:pos + 4] = normalize_pressures(
                log2hz[t - r * wc.tau].p, norm)
            pos += 4
        for r in range(wc.history + 1):
            vec[pos:pos + 8] = log2hz[t - r * wc.tau].u
            pos += 8
        inputs.append(vec)
        targets.append(normalize_markers_xy(log2hz[t].markers, norm))
    if not inputs:
        return Dataset("fk", np.empty((0, d_in)), np.empty((0, 2 * n_markers)))
    return Dataset("fk", np.array(inputs), np.array(targets))


def build_ik_samples(log2hz: list[RunRow],
                     norm: NormalizationSpec) -> Dataset:
    """Inverse-model samples: normalized markers -> normalized pressures.

    One sample per row; no history.
    """
    inputs = [normalize_markers_xy(row.markers, norm) for row in log2hz]
    targets = [normalize_pressures(row.p, norm) for row in log2hz]
    if not inputs:
        return Dataset("ik", np.empty((0, 20)), np.empty((0, 4)))
    return Dataset("ik", np.array(inputs), np.array(targets))


def concat(datasets: list[Dataset]) -> Dataset:
    kinds = {d.kind for d in datasets}
    if len(kinds) != 1:
        raise ValueError(f"cannot concatenate mixed dataset kinds {kinds}")
    return Dataset(kinds.pop(),
                   np.concatenate([d.inputs for d in datasets]),
                   np.concatenate([d.targets for d in datasets]))


def split(dataset: Dataset, ratio: float = 0.8,
          seed: int = 0) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle; the first ceil(ratio*N) samples train.

    The partition is disjoint and exhaustive, so the ceiling rule sends
    e.g. 5886 samples to 4709 train / 1177 test.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise ValueError("split ratio must be in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(ratio * n)
    tr, te = perm[:n_train], perm[n_train:]
    return (Dataset(dataset.kind, dataset.inputs[tr], dataset.targets[tr]),
            Dataset(dataset.kind, dataset.inputs[te], dataset.targets[te]))
