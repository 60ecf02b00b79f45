"""Stratified recording-level train/validation splitting."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyInput


def split_train_valid(recordings, ratio, seed):
    """Partition recordings into (train, valid) lists, stratified by label.

    Deterministic under seed; splits at the recording level so crops from
    one recording never straddle the boundary. Per class the train share is
    round(ratio * n), keeping proportions within one recording.
    """
    recordings = list(recordings)
    if not recordings:
        raise EmptyInput("no recordings to split")
    if not 0.0 < ratio < 1.0:
        raise EmptyInput(f"split ratio must be in (0, 1), got {ratio}")
    for rec in recordings:
        if rec.split != "train":
            raise EmptyInput(f"recording {rec.id} carries split={rec.split!r}, expected 'train'")

    rng = np.random.default_rng(seed)
    by_label = {}
    for rec in recordings:
        by_label.setdefault(rec.label, []).append(rec)
    labels = sorted(by_label)

    # largest-remainder allocation: the global train count is round(ratio*n)
    # and every class stays within one recording of its proportional share
    total_train = int(np.floor(ratio * len(recordings) + 0.5))
    base = {lb: int(np.floor(ratio * len(by_label[lb]))) for lb in labels}
    leftover = total_train - sum(base.values())
    remainders = sorted(labels, key=lambda lb: (-(ratio * len(by_label[lb])
                                                  - base[lb]), lb))
    for lb in remainders[:leftover]:
        base[lb] += 1

    train, valid = [], []
    for lb in labels:
        group = by_label[lb]
        order = rng.permutation(len(group))
        n_train = min(base[lb], len(group))
        for pos, j in enumerate(order):
            (train if pos < n_train else valid).append(group[j])
    if not train or not valid:
        raise EmptyInput(
            f"ratio {ratio} left an empty side for {len(recordings)} recordings")
    return train, valid
