"""Cropped training loop with AdamW, cosine annealing and checkpointing.

One call to train() owns its model and optimizer exclusively. Everything
stochastic (shuffling, augmentation, dropout) draws from generators derived
from (plan seed, epoch, step), so a (seed, plan, data) triple fixes the
metrics log and the returned checkpoint bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..augment import AugmentPolicy, augment_crop, crop_rng
from ..errors import ArchMismatch, DivergedLoss, EmptyInput
from ..models import ModelSpec, build
from ..numcore import Tensor, cross_entropy, no_grad, softmax
from .checkpoint import Checkpoint
from .crops import crops_for_recordings, make_crops, stack_crops, tiling_stride
from .optim import AdamW, cosine_schedule
from .sampler import BalancedSampler, ShuffleSampler

# Appendix hyperparameter table: drop prob, batch size, peak lr, epochs, decay
TABLE3_PRESETS = {
    "tcn": dict(drop_prob=0.0527015, batch_size=64, lr=0.0011261,
                epochs=35, weight_decay=5.8373053e-07),
    "deep4net": dict(drop_prob=0.5, batch_size=64, lr=0.01,
                     epochs=35, weight_decay=0.0005),
    "shallownet": dict(drop_prob=0.5, batch_size=64, lr=0.000625,
                       epochs=35, weight_decay=0.0),
    "eegnet": dict(drop_prob=0.25, batch_size=64, lr=0.001,
                   epochs=35, weight_decay=0.0),
}

METRICS_COLUMNS = ("epoch", "step", "lr", "train_loss", "train_bac", "valid_bac")


@dataclass
class TrainPlan:
    arch: str
    drop_prob: float | None = None
    batch_size: int | None = None
    lr: float | None = None
    epochs: int | None = None
    weight_decay: float | None = None
    crop_len: int | None = None          # None -> receptive field
    crop_stride: int | None = None       # None -> prediction-tiling stride
    seed: int = 0
    augment: AugmentPolicy = field(default_factory=AugmentPolicy.disabled)
    init_checkpoint: str | Checkpoint | None = None
    gamma: float | None = None           # discriminative lr decay factor
    sampler: str = "shuffle"             # "shuffle" | "balanced"
    n_channels: int = 21
    n_classes: int = 2

    def resolved(self):
        preset = TABLE3_PRESETS[self.arch]
        out = replace(self)
        for key, value in preset.items():
            if getattr(out, key) is None:
                setattr(out, key, value)
        if out.gamma is not None and not 0.0 < out.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {out.gamma}")
        return out

    def model_spec(self):
        return ModelSpec(self.arch, n_channels=self.n_channels,
                         n_classes=self.n_classes, drop_prob=self.drop_prob)


def discriminative_scales(model, gamma):
    """Per-parameter lr multipliers: group i of L gets gamma^(L-1-i), so
    input-side layers move more slowly than the classifier for gamma < 1."""
    groups = model.layer_groups()
    L = len(groups)
    scales = {}
    for i, (_, names) in enumerate(groups):
        factor = gamma ** (L - 1 - i)
        for name in names:
            scales[name] = factor
    return scales


def _init_model(plan):
    if plan.init_checkpoint is None:
        return build(plan.model_spec(), seed=plan.seed)
    ckpt = plan.init_checkpoint
    if not isinstance(ckpt, Checkpoint):
        ckpt = Checkpoint.load(ckpt)
    if ckpt.arch != plan.arch:
        raise ArchMismatch(f"plan wants {plan.arch!r}, checkpoint holds {ckpt.arch!r}")
    model = build(plan.model_spec(), seed=plan.seed)
    ckpt.load_into(model)
    return model


def _crop_geometry(plan, model):
    crop_len = plan.crop_len or model.receptive_field
    stride = plan.crop_stride or tiling_stride(model, crop_len)
    return crop_len, min(stride, crop_len)


def predict_recording(model, rec, crop_len=None, stride=None, batch_size=64):
    """Mean of per-crop softmax over all crops and dense positions; argmax
    class with ties resolved toward class 0."""
    crop_len = crop_len or model.receptive_field
    stride = stride or tiling_stride(model, crop_len)
    crops = make_crops(rec, crop_len, min(stride, crop_len))
    probs = np.zeros(model.spec.n_classes, dtype=np.float64)
    n = 0
    with no_grad():
        for start in range(0, len(crops), batch_size):
            chunk = crops[start: start + batch_size]
            batch = np.stack([np.asarray(c.data, dtype=model.dtype) for c in chunk])
            logits = model.forward(batch, train=False)
            p = softmax(Tensor(logits.data), axis=1).data  # [B, 2, P]
            probs += p.sum(axis=(0, 2))
            n += p.shape[0] * p.shape[2]
    probs /= n
    return int(np.argmax(probs)), probs


def evaluate_recordings(model, recordings, crop_len=None, stride=None):
    """Recording-level balanced accuracy over a set (macro recall)."""
    from ..analysis.metrics import balanced_accuracy
    preds, truths = [], []
    for rec in recordings:
        cls, _ = predict_recording(model, rec, crop_len, stride)
        preds.append(cls)
        truths.append(rec.label)
    return balanced_accuracy(preds, truths, strict=False)


def _crop_balanced_accuracy(preds, truths):
    from ..analysis.metrics import balanced_accuracy
    return balanced_accuracy(preds, truths, strict=False)


def train(plan, train_recordings, valid_recordings, epoch_hook=None):
    """Run the cropped-training protocol; returns (best checkpoint, metrics).

    The checkpoint is the epoch with the highest validation recording-level
    balanced accuracy (earliest on ties). metrics is a list of per-epoch
    dicts matching METRICS_COLUMNS. epoch_hook(epoch, model), when given,
    runs after each epoch's validation pass.
    """
    plan = plan.resolved()
    if not train_recordings or not valid_recordings:
        raise EmptyInput("train and valid sets must be non-empty")
    train_ids = {r.id for r in train_recordings}
    overlap = train_ids & {r.id for r in valid_recordings}
    if overlap:
        raise EmptyInput(f"valid set shares recordings with train: {sorted(overlap)[:3]}")

    model = _init_model(plan)
    crop_len, stride = _crop_geometry(plan, model)
    plan.augment.validate(crop_len)
    crops = crops_for_recordings(train_recordings, crop_len, stride)

    if plan.sampler == "balanced":
        sampler = BalancedSampler(crops, plan.batch_size, plan.seed)
    else:
        sampler = ShuffleSampler(len(crops), plan.batch_size, plan.seed)

    scales = discriminative_scales(model, plan.gamma) if plan.gamma is not None else None
    optimizer = AdamW(model.named_params(), lr=plan.lr,
                      weight_decay=plan.weight_decay, lr_scales=scales)
    total_steps = plan.epochs * sampler.steps_per_epoch

    metrics = []
    best = None
    global_step = 0
    for epoch in range(plan.epochs):
        epoch_losses = []
        epoch_preds, epoch_truths = [], []
        lr_t = plan.lr
        for step, batch_idx in enumerate(sampler.epoch_batches(epoch)):
            batch, labels = stack_crops(crops, batch_idx, dtype=model.dtype)
            if plan.augment.apply_probability > 0:
                batch = np.stack([
                    augment_crop(batch[i], plan.augment,
                                 crop_rng(plan.augment.seed, epoch, global_step,
                                          i))
                    for i in range(batch.shape[0])])
            drop_rng = np.random.default_rng(
                np.random.SeedSequence([plan.seed, 31, epoch, step]))
            logits = model.forward(batch, train=True, rng=drop_rng)
            positions = logits.shape[2]
            loss = cross_entropy(logits.reshape(-1, model.spec.n_classes),
                                 np.repeat(labels, positions))
            loss_value = loss.item()
            if not np.isfinite(loss_value):
                raise DivergedLoss(
                    f"loss became {loss_value} at epoch {epoch} step {step}")
            loss.backward()
            multiplier = cosine_schedule(global_step, total_steps, 1.0)
            lr_t = plan.lr * multiplier
            optimizer.step(multiplier)
            optimizer.zero_grad()

            epoch_losses.append(loss_value)
            mean_probs = softmax(Tensor(logits.data), axis=1).data.mean(axis=2)
            epoch_preds.extend(np.argmax(mean_probs, axis=1).tolist())
            epoch_truths.extend(labels.tolist())
            global_step += 1

        valid_bac = evaluate_recordings(model, valid_recordings, crop_len, stride)
        row = {
            "epoch": epoch,
            "step": global_step,
            "lr": lr_t,
            "train_loss": float(np.mean(epoch_losses)),
            "train_bac": _crop_balanced_accuracy(epoch_preds, epoch_truths),
            "valid_bac": valid_bac,
        }
        metrics.append(row)
        if best is None or valid_bac > best.valid_bac:
            best = Checkpoint.from_model(model, seed=plan.seed, epoch=epoch,
                                         valid_bac=valid_bac)
        if epoch_hook is not None:
            epoch_hook(epoch, model)
    return best, metrics


def fine_tune(plan, train_recordings, valid_recordings, epoch_hook=None):
    """Warm-start training from plan.init_checkpoint (parameters only)."""
    if plan.init_checkpoint is None:
        raise ArchMismatch("fine_tune needs an init checkpoint")
    return train(plan, train_recordings, valid_recordings, epoch_hook=epoch_hook)


def write_metrics_csv(path, metrics):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
        writer.writeheader()
        for row in metrics:
            writer.writerow({k: _format_value(row[k]) for k in METRICS_COLUMNS})
    return path


def _format_value(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v
