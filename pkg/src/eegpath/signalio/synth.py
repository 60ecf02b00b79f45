"""Synthetic two-dataset EEG generator.

Stands in for the access-restricted clinical corpora: each dataset carries
a binary class signal (a band-limited oscillation whose centre frequency
differs by class) buried in 1/f^alpha noise, with dataset identity encoded
as a distinct noise spectrum and per-channel gain profile. Keeping the
class frequencies equal across datasets gives transferable structure;
swapping them per dataset gives a forgetting-prone shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidConfig
from .montage import DEFAULT_MONTAGE
from .recording import ABNORMAL, NORMAL, Recording


@dataclass
class SynthDatasetConfig:
    tag: str
    n_train: int = 20
    n_test: int = 8
    abnormal_fraction: float = 0.5
    class_freqs_hz: tuple = (6.0, 10.0)
    signal_amplitude_uv: float = 6.0
    noise_amplitude_uv: float = 20.0
    noise_alpha: float = 1.0
    channel_gain_low: float = 0.8
    channel_gain_high: float = 1.2


@dataclass
class SynthConfig:
    seed: int = 0
    n_channels: int = 21
    sample_rate_hz: float = 100.0
    duration_s: float = 72.0
    datasets: list = field(default_factory=lambda: [
        SynthDatasetConfig(tag="source", n_train=24, n_test=8,
                           noise_alpha=1.0),
        SynthDatasetConfig(tag="target", n_train=24, n_test=8,
                           noise_alpha=1.6, channel_gain_low=0.5,
                           channel_gain_high=1.5),
    ])

    def validate(self):
        if self.n_channels < 1 or self.sample_rate_hz <= 0 or self.duration_s <= 0:
            raise InvalidConfig("channels, rate and duration must be positive")
        if not self.datasets:
            raise InvalidConfig("at least one dataset must be configured")
        for ds in self.datasets:
            if not 0.0 <= ds.abnormal_fraction <= 1.0:
                raise InvalidConfig(f"{ds.tag}: abnormal_fraction outside [0, 1]")
            if min(ds.class_freqs_hz) <= 0 or max(ds.class_freqs_hz) >= self.sample_rate_hz / 2:
                raise InvalidConfig(f"{ds.tag}: class frequencies outside (0, Nyquist)")
            if ds.n_train < 0 or ds.n_test < 0:
                raise InvalidConfig(f"{ds.tag}: negative recording counts")


def _shaped_noise(rng, n_channels, n_samples, rate, alpha, amplitude):
    """Gaussian noise with a 1/f^alpha spectrum, unit-free then scaled."""
    spec = rng.normal(size=(n_channels, n_samples // 2 + 1)) \
        + 1j * rng.normal(size=(n_channels, n_samples // 2 + 1))
    freqs = np.fft.rfftfreq(n_samples, 1.0 / rate)
    shape = 1.0 / np.power(np.maximum(freqs, freqs[1]), alpha / 2.0)
    noise = np.fft.irfft(spec * shape, n=n_samples, axis=1)
    noise /= noise.std(axis=1, keepdims=True)
    return amplitude * noise


def _class_signal(rng, ds, n_channels, n_samples, rate, label, mixing):
    freq = ds.class_freqs_hz[label]
    t = np.arange(n_samples) / rate
    phase = rng.uniform(0, 2 * np.pi)
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * 0.15 * t + rng.uniform(0, 2 * np.pi))
    wave = np.sin(2 * np.pi * freq * t + phase) * envelope
    return ds.signal_amplitude_uv * mixing[:, None] * wave[None, :]


def generate_recordings(cfg):
    """Produce all configured recordings, deterministic in cfg.seed."""
    cfg.validate()
    n_samples = int(round(cfg.duration_s * cfg.sample_rate_hz))
    out = []
    master = np.random.SeedSequence(cfg.seed)
    for ds_index, ds in enumerate(cfg.datasets):
        ds_seq, mix_seq = np.random.SeedSequence([cfg.seed, ds_index]).spawn(2)
        ds_rng = np.random.default_rng(mix_seq)
        gains = ds_rng.uniform(ds.channel_gain_low, ds.channel_gain_high,
                               size=cfg.n_channels)
        # class-signal mixing is mostly frontal-weighted and dataset-jittered
        base_mix = np.linspace(1.0, 0.4, cfg.n_channels)
        mixing = base_mix * ds_rng.uniform(0.85, 1.15, size=cfg.n_channels)

        counts = (("train", ds.n_train), ("test", ds.n_test))
        for split, n in counts:
            n_abnormal = int(round(n * ds.abnormal_fraction))
            labels = [ABNORMAL] * n_abnormal + [NORMAL] * (n - n_abnormal)
            for i, label in enumerate(labels):
                rng = np.random.default_rng(
                    np.random.SeedSequence([cfg.seed, ds_index,
                                            0 if split == "train" else 1, i]))
                noise = _shaped_noise(rng, cfg.n_channels, n_samples,
                                      cfg.sample_rate_hz, ds.noise_alpha,
                                      ds.noise_amplitude_uv)
                signal = _class_signal(rng, ds, cfg.n_channels, n_samples,
                                       cfg.sample_rate_hz, label, mixing)
                data = gains[:, None] * (noise + signal)
                age_mu = 52.0 if label == ABNORMAL else 44.0
                out.append(Recording(
                    id=f"{ds.tag}_{split}_{i:04d}",
                    channels=list(DEFAULT_MONTAGE[:cfg.n_channels])
                    if cfg.n_channels <= len(DEFAULT_MONTAGE)
                    else [f"CH{c}" for c in range(cfg.n_channels)],
                    data=data.astype(np.float32),
                    sample_rate_hz=cfg.sample_rate_hz,
                    label=label,
                    dataset_tag=ds.tag,
                    split=split,
                    age_years=float(np.clip(rng.normal(age_mu, 18.0), 2.0, 95.0)),
                    gender="male" if rng.random() < 0.55 else "female",
                ))
    return out


def forgetting_shift(cfg):
    """A copy of cfg whose second dataset swaps the class-frequency mapping."""
    datasets = [replace(ds) for ds in cfg.datasets]
    if len(datasets) >= 2:
        f = datasets[1].class_freqs_hz
        datasets[1] = replace(datasets[1], class_freqs_hz=(f[1], f[0]))
    return replace(cfg, datasets=datasets)
