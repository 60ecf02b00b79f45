"""Linear centered kernel alignment between layer activations.

CKA(X, Y) = ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F) on column-centred
activation matrices: invariant to orthogonal transforms and isotropic
scaling, bounded in [0, 1], and equal to the Gram-matrix HSIC formulation.
No plotting here; matrices are emitted as plain JSON/CSV-ready data.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch, UnknownLayer
from ..numcore import no_grad
from ..train.crops import make_crops

PROBE_CROPS_DEFAULT = 512
FEATURE_CAP_DEFAULT = 8192


def linear_cka(x, y, clamp=True):
    """CKA between [N, Dx] and [N, Dy] activation matrices."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"need matching-row 2-D matrices, got {x.shape} / {y.shape}")
    if x.shape[0] < 2:
        raise ShapeMismatch("CKA needs at least two probe rows")
    x = x - x.mean(axis=0, keepdims=True)
    y = y - y.mean(axis=0, keepdims=True)
    xx = np.linalg.norm(x.T @ x)
    yy = np.linalg.norm(y.T @ y)
    if xx == 0.0 or yy == 0.0:
        warnings.warn("zero-variance activations in CKA; similarity defined as 0",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    value = np.linalg.norm(y.T @ x) ** 2 / (xx * yy)
    if clamp:
        value = min(max(value, 0.0), 1.0)
    return float(value)


@dataclass
class ActivationMatrix:
    layer: str
    matrix: np.ndarray  # [n_probe_crops, n_features]


@dataclass
class CkaMatrix:
    row_model: str
    col_model: str
    row_layers: list
    col_layers: list
    values: np.ndarray  # [L, L']

    def to_json(self):
        return json.dumps({
            "row_model": self.row_model,
            "col_model": self.col_model,
            "row_layers": self.row_layers,
            "col_layers": self.col_layers,
            "values": [[float(v) for v in row] for row in self.values],
        }, sort_keys=True, indent=2)

    def to_csv_rows(self):
        yield ["layer"] + list(self.col_layers)
        for name, row in zip(self.row_layers, self.values):
            yield [name] + [f"{v:.10g}" for v in row]


def sample_probe_crops(recordings, crop_len, n=PROBE_CROPS_DEFAULT, seed=0, stride=None):
    """Draw a seeded probe batch of crops from a recording set."""
    stride = stride or crop_len
    pool = []
    for rec in recordings:
        pool.extend(make_crops(rec, crop_len, stride))
    if not pool:
        raise ShapeMismatch("no crops available for probing")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 41]))
    idx = rng.choice(len(pool), size=min(n, len(pool)), replace=False)
    return np.stack([np.asarray(pool[i].data, dtype=np.float32) for i in sorted(idx)])


def probe_activations(model, probe, layers=None, feature_cap=FEATURE_CAP_DEFAULT,
                      seed=0, batch_size=64):
    """Eval-mode activations per selected layer, one row per probe crop.

    Features are the flattened (channel-major) post-activation outputs;
    layers wider than feature_cap are column-subsampled with a seeded draw,
    which leaves CKA statistics essentially untouched.
    """
    if layers is None:
        layers = model.probe_names()
    known = set(model.capturable_names())
    for name in layers:
        if name not in known:
            raise UnknownLayer(f"layer {name!r}; known: {sorted(known)}")
    probe = np.asarray(probe, dtype=model.dtype)
    if probe.ndim != 3:
        raise ShapeMismatch(f"probe must be [N, C, W], got {probe.shape}")

    column_picks = {}
    blocks = {name: [] for name in layers}
    with no_grad():
        for start in range(0, probe.shape[0], batch_size):
            _, captured = model.forward(probe[start: start + batch_size],
                                        train=False, capture=layers)
            for name in layers:
                flat = captured[name].reshape(captured[name].shape[0], -1)
                if name not in column_picks:
                    d = flat.shape[1]
                    if d > feature_cap:
                        rng = np.random.default_rng(
                            np.random.SeedSequence([seed, 43, len(column_picks)]))
                        column_picks[name] = np.sort(
                            rng.choice(d, size=feature_cap, replace=False))
                    else:
                        column_picks[name] = None
                pick = column_picks[name]
                blocks[name].append(flat if pick is None else flat[:, pick])
    return [ActivationMatrix(name, np.concatenate(blocks[name], axis=0))
            for name in layers]


def cka_heatmap(model_a, model_b, probe, layers_a=None, layers_b=None,
                model_a_id="model_a", model_b_id="model_b", feature_cap=FEATURE_CAP_DEFAULT,
                seed=0):
    """All-pairs layer CKA between two models on a shared probe set."""
    acts_a = probe_activations(model_a, probe, layers_a, feature_cap, seed)
    same = model_b is model_a and layers_a == layers_b
    acts_b = acts_a if same else probe_activations(model_b, probe, layers_b,
                                                   feature_cap, seed)
    values = np.zeros((len(acts_a), len(acts_b)))
    for i, a in enumerate(acts_a):
        for j, b in enumerate(acts_b):
            values[i, j] = linear_cka(a.matrix, b.matrix)
    return CkaMatrix(model_a_id, model_b_id,
                     [a.layer for a in acts_a], [b.layer for b in acts_b], values)
