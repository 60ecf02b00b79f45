"""Stochastic EEG crop augmentations.

Six transforms, each applied independently with a fixed trigger
probability during training-batch assembly, composed in the order listed
in the policy. All transforms map a [n_channels, crop_len] array to the
same shape and never touch the label. Reproducibility comes from a
per-crop rng derived from (policy seed, epoch, crop index), so results do
not depend on batch scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, filtfilt, hilbert

from .errors import CropTooShort, InvalidHyperparameter

_MIN_HILBERT_SAMPLES = 64


def sign_flip(x):
    return -x


def channels_dropout(x, rng, p=0.2):
    """Zero each channel independently with probability p."""
    if p == 0.0:
        return x
    mask = rng.random(x.shape[0]) < p
    if not mask.any():
        return x
    out = x.copy()
    out[mask] = 0.0
    return out


def frequency_shift_by(x, shift_hz, rate_hz):
    """Shift the whole spectrum by shift_hz via the analytic signal."""
    if x.shape[-1] < _MIN_HILBERT_SAMPLES:
        raise CropTooShort(
            f"frequency shift needs >= {_MIN_HILBERT_SAMPLES} samples, got {x.shape[-1]}")
    analytic = hilbert(x, axis=-1)
    t = np.arange(x.shape[-1]) / rate_hz
    rotated = analytic * np.exp(2j * np.pi * shift_hz * t)
    return np.ascontiguousarray(rotated.real, dtype=x.dtype)


def frequency_shift(x, rng, max_shift_hz=2.0, rate_hz=100.0):
    shift = rng.uniform(-max_shift_hz, max_shift_hz)
    return frequency_shift_by(x, shift, rate_hz)


def smooth_time_mask_at(x, start, mask_len, steepness=0.05):
    """Attenuate [start, start+mask_len) to ~0 with logistic ramps."""
    t = np.arange(x.shape[-1], dtype=np.float64)
    inside = 1.0 / (1.0 + np.exp(-steepness * (t - start)))
    inside *= 1.0 / (1.0 + np.exp(-steepness * (start + mask_len - t)))
    return (x * (1.0 - inside)[None, :]).astype(x.dtype)


def smooth_time_mask(x, rng, mask_len=600, steepness=0.05):
    w = x.shape[-1]
    if w <= mask_len:
        raise CropTooShort(f"crop of {w} samples cannot hold a {mask_len}-sample mask")
    start = int(rng.integers(0, w - mask_len + 1))
    return smooth_time_mask_at(x, start, mask_len, steepness)


def bandstop_filter_at(x, center_hz, bandwidth_hz=1.0, rate_hz=100.0, order=4):
    """Zero-phase Butterworth notch of the given width around center_hz."""
    lo = center_hz - bandwidth_hz / 2.0
    hi = center_hz + bandwidth_hz / 2.0
    if lo <= 0 or hi >= rate_hz / 2.0:
        raise InvalidHyperparameter(
            f"stop band [{lo}, {hi}] Hz outside (0, {rate_hz / 2}) Hz")
    b, a = butter(order, [lo, hi], btype="bandstop", fs=rate_hz)
    return filtfilt(b, a, x, axis=-1).astype(x.dtype)


def bandstop_filter(x, rng, bandwidth_hz=1.0, low_hz=2.0, high_hz=45.0, rate_hz=100.0):
    center = rng.uniform(low_hz, high_hz)
    return bandstop_filter_at(x, center, bandwidth_hz, rate_hz)


def channels_shuffle(x, rng, p=0.2):
    """Permute a random subset of channels: each is selected with
    probability p, then the selected rows are shuffled among themselves."""
    if p == 0.0 or x.shape[0] < 2:
        return x
    selected = np.flatnonzero(rng.random(x.shape[0]) < p)
    if len(selected) < 2:
        return x
    out = x.copy()
    out[selected] = x[selected[rng.permutation(len(selected))]]
    return out


@dataclass
class AugmentPolicy:
    apply_probability: float = 0.1
    sign_flip: bool = True
    channels_dropout: bool = True
    frequency_shift: bool = True
    smooth_time_mask: bool = True
    bandstop_filter: bool = True
    channels_shuffle: bool = True
    channels_dropout_p: float = 0.2
    max_freq_shift_hz: float = 2.0
    mask_len_samples: int = 600
    mask_steepness: float = 0.05
    bandstop_bw_hz: float = 1.0
    bandstop_low_hz: float = 2.0
    bandstop_high_hz: float = 45.0
    shuffle_p: float = 0.2
    seed: int = 0

    def validate(self, crop_len, rate_hz=100.0):
        for name in ("apply_probability", "channels_dropout_p", "shuffle_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidHyperparameter(f"{name}={v} outside [0, 1]")
        if self.smooth_time_mask and self.apply_probability > 0 \
                and crop_len <= self.mask_len_samples:
            raise InvalidHyperparameter(
                f"mask_len_samples={self.mask_len_samples} does not fit a "
                f"{crop_len}-sample crop; shorten the mask or disable it")
        if self.frequency_shift and self.apply_probability > 0 \
                and crop_len < _MIN_HILBERT_SAMPLES:
            raise InvalidHyperparameter("crops too short for frequency_shift")
        if self.bandstop_filter and self.apply_probability > 0:
            if self.bandstop_low_hz - self.bandstop_bw_hz / 2 <= 0 \
                    or self.bandstop_high_hz + self.bandstop_bw_hz / 2 >= rate_hz / 2:
                raise InvalidHyperparameter("bandstop band reaches DC or Nyquist")

    @staticmethod
    def disabled():
        return AugmentPolicy(apply_probability=0.0)


def crop_rng(policy_seed, *key):
    """Deterministic per-crop generator, independent of batch scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(policy_seed), *map(int, key)]))


def augment_crop(x, policy, rng, rate_hz=100.0):
    """Apply the policy's transforms in fixed order to one crop."""
    p = policy.apply_probability
    if p == 0.0:
        return x
    if policy.sign_flip and rng.random() < p:
        x = sign_flip(x)
    if policy.channels_dropout and rng.random() < p:
        x = channels_dropout(x, rng, policy.channels_dropout_p)
    if policy.frequency_shift and rng.random() < p:
        x = frequency_shift(x, rng, policy.max_freq_shift_hz, rate_hz)
    if policy.smooth_time_mask and rng.random() < p:
        x = smooth_time_mask(x, rng, policy.mask_len_samples, policy.mask_steepness)
    if policy.bandstop_filter and rng.random() < p:
        x = bandstop_filter(x, rng, policy.bandstop_bw_hz, policy.bandstop_low_hz,
                            policy.bandstop_high_hz, rate_hz)
    if policy.channels_shuffle and rng.random() < p:
        x = channels_shuffle(x, rng, policy.shuffle_p)
    return x
