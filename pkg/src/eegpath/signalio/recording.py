"""Recording container and label conventions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

NORMAL = 0
ABNORMAL = 1

LABEL_NAMES = {NORMAL: "normal", ABNORMAL: "abnormal"}
LABEL_VALUES = {v: k for k, v in LABEL_NAMES.items()}


def label_from_string(s):
    return LABEL_VALUES[s.strip().lower()]


@dataclass
class Recording:
    """One subject's multichannel EEG with its study metadata.

    data is [n_channels, n_samples] in microvolts before preprocessing and in
    [0, 1] after. Immutable by convention once constructed.
    """

    id: str
    channels: list
    data: np.ndarray
    sample_rate_hz: float
    label: int = NORMAL
    dataset_tag: str = ""
    split: str = "train"
    age_years: float | None = None
    gender: str | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2 or self.data.shape[0] != len(self.channels):
            raise ShapeMismatch(
                f"data shape {self.data.shape} does not match {len(self.channels)} channels")
        if self.sample_rate_hz <= 0:
            raise ShapeMismatch("sample_rate_hz must be positive")

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]

    @property
    def duration_s(self):
        return self.n_samples / self.sample_rate_hz

    def replace(self, **kwargs):
        fields = dict(
            id=self.id, channels=list(self.channels), data=self.data,
            sample_rate_hz=self.sample_rate_hz, label=self.label,
            dataset_tag=self.dataset_tag, split=self.split,
            age_years=self.age_years, gender=self.gender)
        fields.update(kwargs)
        return Recording(**fields)
