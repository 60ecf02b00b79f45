"""Sliding-window crop extraction for cropped decoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidHyperparameter, TooShort


@dataclass
class Crop:
    data: np.ndarray        # [n_channels, crop_len] view into the recording
    label: int
    recording_id: str
    dataset_tag: str
    offset: int


def make_crops(rec, crop_len, stride):
    """Crops at offsets 0, stride, 2*stride, ... fully inside the recording."""
    if not 1 <= stride <= crop_len:
        raise InvalidHyperparameter(f"stride {stride} outside [1, {crop_len}]")
    n = rec.n_samples
    if n < crop_len:
        raise TooShort(f"recording {rec.id}: {n} samples < crop length {crop_len}")
    crops = []
    for offset in range(0, n - crop_len + 1, stride):
        crops.append(Crop(rec.data[:, offset: offset + crop_len], rec.label,
                          rec.id, rec.dataset_tag, offset))
    return crops


def tiling_stride(model, crop_len):
    """Default stride: dense prediction positions per crop times their
    input-sample spacing, so consecutive crops' prediction windows tile the
    recording without gaps. Always >= 1; configurable down to 1 upstream."""
    positions = model.n_outputs(crop_len)
    return max(1, positions * model.output_stride)


def crops_for_recordings(recordings, crop_len, stride):
    crops = []
    for rec in recordings:
        crops.extend(make_crops(rec, crop_len, stride))
    return crops


def stack_crops(crops, indices, dtype=np.float32):
    batch = np.stack([np.asarray(crops[i].data, dtype=dtype) for i in indices])
    labels = np.array([crops[i].label for i in indices], dtype=np.int64)
    return batch, labels
