"""Experiment harnesses: scaling curves, cross-dataset transfer with a
forgetting trajectory, and the four-regime merged-training comparison.

Each harness is a deterministic function of (config, seeds) that returns
plain row dicts; CSV/figure emission belongs to the CLI layer.
"""

from __future__ import annotations

import csv
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..errors import EmptyInput
from ..signalio.split import split_train_valid
from ..train import Checkpoint, TrainPlan, evaluate_recordings, train
from .metrics import MetricsReport, balanced_accuracy, mean_and_std, standard_error

SCALING_COLUMNS = ("size", "seed", "test_bac")
TRANSFER_COLUMNS = ("size", "seed", "condition", "target_test_bac", "source_test_bac")
FORGETTING_COLUMNS = ("size", "seed", "condition", "epoch", "source_test_bac")
MERGED_COLUMNS = ("model", "train_on", "bac_source", "bac_target", "bac_pooled",
                  "bac_source_std", "bac_target_std", "bac_pooled_std")


def _subsample(recordings, size, seed):
    if size > len(recordings):
        raise EmptyInput(f"requested {size} recordings, pool has {len(recordings)}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 53]))
    idx = rng.choice(len(recordings), size=size, replace=False)
    return [recordings[i] for i in sorted(idx)]


def _fit(plan, recordings, seed, valid_ratio=0.85):
    """Split off a validation share and run one training; returns checkpoint."""
    if len(recordings) < 2:
        raise EmptyInput("need at least two recordings to hold out validation")
    train_set, valid_set = split_train_valid(recordings, valid_ratio, seed)
    ckpt, metrics = train(replace(plan, seed=seed), train_set, valid_set)
    return ckpt, metrics


def scaling_harness(plan, train_pool, test_set, sizes, seeds):
    """Test BAC per (train-set size, seed) on a fixed test set."""
    rows = []
    for size in sizes:
        for seed in seeds:
            subset = _subsample(train_pool, size, seed)
            ckpt, _ = _fit(plan, subset, seed)
            model = ckpt.build_model()
            bac = evaluate_recordings(model, test_set)
            rows.append({"size": size, "seed": seed, "test_bac": bac})
    return rows


def scaling_summary(rows):
    """Mean and standard error of test BAC per size."""
    out = []
    for size in sorted({r["size"] for r in rows}):
        vals = [r["test_bac"] for r in rows if r["size"] == size]
        mean, _ = mean_and_std(vals)
        out.append({"size": size, "mean_bac": mean, "stderr": standard_error(vals)})
    return out


def transfer_harness(plan, source_train, source_test, target_train, target_test,
                     target_sizes, seeds, track_forgetting=False,
                     pretrained=None):
    """Scratch vs fine-tune-from-source at several target-set sizes.

    Returns (summary_rows, forgetting_rows). The source model is trained
    once on the full source pool (or supplied via `pretrained`); each
    (size, seed) cell then trains a scratch model and a fine-tuned model on
    the same subsample and reports both test BACs plus the source-test BAC
    after target training. With track_forgetting, the fine-tuned cells also
    record the source-test BAC after every epoch.
    """
    if pretrained is None:
        pretrained, _ = _fit(plan, source_train, plan.seed)
    rows, curve = [], []
    for size in target_sizes:
        for seed in seeds:
            subset = _subsample(target_train, size, seed)
            if size == 0:
                model = pretrained.build_model()
                rows.append({"size": 0, "seed": seed, "condition": "finetune",
                             "target_test_bac": evaluate_recordings(model, target_test),
                             "source_test_bac": evaluate_recordings(model, source_test)})
                continue
            for condition in ("scratch", "finetune"):
                cell_plan = replace(plan,
                                    init_checkpoint=pretrained if condition == "finetune" else None)
                hook = None
                if track_forgetting:
                    def hook(epoch, live_model, _size=size, _seed=seed,
                             _condition=condition):
                        curve.append({
                            "size": _size, "seed": _seed, "condition": _condition,
                            "epoch": epoch,
                            "source_test_bac": evaluate_recordings(live_model, source_test),
                        })
                ckpt, _ = _fit(replace(cell_plan, seed=seed), subset, seed) \
                    if hook is None else _fit_with_hook(cell_plan, subset, seed, hook)
                model = ckpt.build_model()
                rows.append({
                    "size": size, "seed": seed, "condition": condition,
                    "target_test_bac": evaluate_recordings(model, target_test),
                    "source_test_bac": evaluate_recordings(model, source_test),
                })
    return rows, curve


def _fit_with_hook(plan, recordings, seed, hook):
    train_set, valid_set = split_train_valid(recordings, 0.85, seed)
    return train(replace(plan, seed=seed), train_set, valid_set, epoch_hook=hook)


def transfer_gaps(rows):
    """Mean fine-tune minus scratch target BAC per size."""
    gaps = {}
    for size in sorted({r["size"] for r in rows if r["size"] > 0}):
        ft = [r["target_test_bac"] for r in rows
              if r["size"] == size and r["condition"] == "finetune"]
        sc = [r["target_test_bac"] for r in rows
              if r["size"] == size and r["condition"] == "scratch"]
        gaps[size] = float(np.mean(ft) - np.mean(sc))
    return gaps


MERGED_REGIMES = ("source", "target", "source+target", "pretrain>finetune")


def merged_training_harness(plan, source_train, source_test, target_train,
                            target_test, seeds=None,
                            source_tag="source", target_tag="target"):
    """The four training regimes evaluated on source, target and pooled test
    sets; rows follow the model x regime x three-BAC-columns layout."""
    seeds = list(seeds) if seeds else [plan.seed]
    pooled_test = list(source_test) + list(target_test)
    per_regime = {regime: {"bac_source": [], "bac_target": [], "bac_pooled": []}
                  for regime in MERGED_REGIMES}

    for seed in seeds:
        pre_source, _ = _fit(plan, source_train, seed)
        regimes = {
            "source": lambda: pre_source,
            "target": lambda: _fit(plan, target_train, seed)[0],
            "source+target": lambda: _fit(
                replace(plan, sampler="balanced"),
                list(source_train) + list(target_train), seed)[0],
            "pretrain>finetune": lambda: _fit(
                replace(plan, init_checkpoint=pre_source), target_train, seed)[0],
        }
        for regime, run in regimes.items():
            model = run().build_model()
            per_regime[regime]["bac_source"].append(
                evaluate_recordings(model, source_test))
            per_regime[regime]["bac_target"].append(
                evaluate_recordings(model, target_test))
            per_regime[regime]["bac_pooled"].append(
                evaluate_recordings(model, pooled_test))

    rows = []
    for regime in MERGED_REGIMES:
        cells = per_regime[regime]
        row = {"model": plan.arch, "train_on": regime}
        for key in ("bac_source", "bac_target", "bac_pooled"):
            mean, std = mean_and_std(cells[key])
            row[key] = mean
            row[f"{key}_std"] = std
        rows.append(row)
    return rows


def write_rows_csv(path, rows, columns):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in columns})
    return path


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    return v
