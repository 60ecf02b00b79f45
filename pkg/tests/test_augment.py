import numpy as np
import pytest

from eegpath.augment import (
    AugmentPolicy,
    augment_crop,
    bandstop_filter_at,
    channels_dropout,
    channels_shuffle,
    crop_rng,
    frequency_shift,
    frequency_shift_by,
    sign_flip,
    smooth_time_mask,
    smooth_time_mask_at,
)
from eegpath.errors import CropTooShort, InvalidHyperparameter

RATE = 100.0


def crop(seed=0, channels=21, length=900):
    return np.random.default_rng(seed).normal(size=(channels, length)).astype(np.float32)


# ---------------------------------------------------------------------------
# individual transforms
# ---------------------------------------------------------------------------

def test_sign_flip_is_exact_involution():
    x = crop(0)
    np.testing.assert_array_equal(sign_flip(x), -x)
    np.testing.assert_array_equal(sign_flip(sign_flip(x)), x)


def test_channels_dropout_semantics():
    x = crop(1)
    out = channels_dropout(x, np.random.default_rng(3), p=0.5)
    zeroed = np.flatnonzero((out == 0).all(axis=1))
    kept = np.setdiff1d(np.arange(x.shape[0]), zeroed)
    assert len(zeroed) >= 1
    np.testing.assert_array_equal(out[kept], x[kept])  # untouched rows bit-identical
    assert out[zeroed].var() == 0.0
    assert channels_dropout(x, np.random.default_rng(0), p=0.0) is x


def test_channels_dropout_rate():
    x = crop(2, channels=10, length=64)
    rng = np.random.default_rng(5)
    zeroed = 0
    for _ in range(1000):
        out = channels_dropout(x, rng, p=0.2)
        zeroed += (out == 0).all(axis=1).sum()
    rate = zeroed / (1000 * 10)
    assert abs(rate - 0.2) < 0.02


def test_frequency_shift_identity_at_zero():
    x = crop(3)
    out = frequency_shift_by(x, 0.0, RATE)
    rms = np.sqrt(((out - x) ** 2).mean())
    assert rms < 1e-6


def test_frequency_shift_moves_fft_peak():
    t = np.arange(1000) / RATE
    x = np.sin(2 * np.pi * 10.0 * t)[None, :].astype(np.float64)
    out = frequency_shift_by(x, +2.0, RATE)
    freqs = np.fft.rfftfreq(1000, 1 / RATE)
    peak = freqs[np.abs(np.fft.rfft(out[0])).argmax()]
    assert abs(peak - 12.0) <= 0.2
    # energy preserved for band-limited input
    assert abs((out ** 2).sum() / (x ** 2).sum() - 1.0) < 0.01


def test_frequency_shift_draw_stays_in_range():
    x = crop(4)
    for i in range(200):
        rng = np.random.default_rng(i)
        shift = rng.uniform(-2.0, 2.0)
        assert -2.0 <= shift <= 2.0
        frequency_shift(x, np.random.default_rng(i), 2.0, RATE)


def test_frequency_shift_too_short():
    with pytest.raises(CropTooShort):
        frequency_shift_by(crop(5, length=32), 1.0, RATE)


def test_smooth_time_mask_attenuation_profile():
    x = np.ones((3, 2000), dtype=np.float32)
    out = smooth_time_mask_at(x, start=700, mask_len=600)
    center = out[:, 1000]
    assert (np.abs(center) < 0.01).all()  # attenuated by factor < 0.01
    far = np.concatenate([out[:, :300], out[:, 1900:]], axis=1)
    assert np.abs(far - 1.0).max() < 1e-6  # far samples unchanged


def test_smooth_time_mask_window_inside_bounds():
    x = crop(6, length=700)
    for i in range(50):
        rng = np.random.default_rng(i)
        out = smooth_time_mask(x, rng, mask_len=600)
        assert out.shape == x.shape
    with pytest.raises(CropTooShort):
        smooth_time_mask(crop(7, length=600), np.random.default_rng(0), mask_len=600)


def test_bandstop_notch_depth():
    t = np.arange(3000) / RATE
    x = np.sin(2 * np.pi * 20.0 * t)[None, :]
    out = bandstop_filter_at(x, 20.0, 1.0, RATE)
    in_rms = np.sqrt((x ** 2).mean())
    out_rms = np.sqrt((out[:, 200:-200] ** 2).mean())
    assert out_rms < 0.1 * in_rms  # >= 20 dB at the notch centre


def test_bandstop_passband_untouched():
    t = np.arange(3000) / RATE
    x = np.sin(2 * np.pi * 30.0 * t)[None, :]
    out = bandstop_filter_at(x, 20.0, 1.0, RATE)  # 10 bandwidths away
    in_rms = np.sqrt((x ** 2).mean())
    out_rms = np.sqrt((out[:, 200:-200] ** 2).mean())
    assert abs(out_rms - in_rms) / in_rms < 0.05


def test_bandstop_dc_unchanged():
    x = np.full((2, 1500), 3.0)
    out = bandstop_filter_at(x, 20.0, 1.0, RATE)
    assert np.abs(out[:, 100:-100] - 3.0).max() < 1e-6


def test_channels_shuffle_preserves_multiset():
    x = crop(8)
    out = channels_shuffle(x, np.random.default_rng(1), p=0.9)
    a = {row.tobytes() for row in x}
    b = {row.tobytes() for row in out}
    assert a == b
    assert not np.array_equal(out, x)  # p=0.9 on 21 channels: moved something
    assert channels_shuffle(x, np.random.default_rng(0), p=0.0) is x


def test_channels_shuffle_moves_expected_fraction():
    x = np.arange(20, dtype=np.float64)[:, None] * np.ones((20, 8))
    rng = np.random.default_rng(9)
    moved = 0
    for _ in range(2000):
        out = channels_shuffle(x, rng, p=0.2)
        moved += (out[:, 0] != x[:, 0]).sum()
    # each channel is selected w.p. 0.2 and then displaced unless it maps to
    # itself; with k selected the expected displaced count is k(1-1/k)=k-1
    n, p = 20, 0.2
    expect_selected = n * p
    # P(selected set size >= 2) correction is small; compare loosely
    rate = moved / (2000 * n)
    assert 0.1 < rate < 0.25


# ---------------------------------------------------------------------------
# policy pipeline
# ---------------------------------------------------------------------------

def test_pipeline_identity_when_disabled():
    x = crop(10)
    out = augment_crop(x, AugmentPolicy.disabled(), np.random.default_rng(0))
    assert out is x


def test_pipeline_trigger_rate_per_transform():
    # with only sign_flip enabled, trigger rate is directly observable
    x = np.ones((2, 700), dtype=np.float32)
    policy = AugmentPolicy(sign_flip=True, channels_dropout=False,
                           frequency_shift=False, smooth_time_mask=False,
                           bandstop_filter=False, channels_shuffle=False)
    flips = 0
    for i in range(10000):
        out = augment_crop(x, policy, crop_rng(7, 0, i))
        flips += out[0, 0] < 0
    assert abs(flips / 10000 - 0.1) < 0.01


def test_pipeline_preserves_shape_and_is_deterministic():
    x = crop(11, length=650)
    policy = AugmentPolicy(seed=3, mask_len_samples=500)
    outs = []
    for _ in range(2):
        outs.append(np.stack([
            augment_crop(x, policy, crop_rng(policy.seed, 4, i)) for i in range(40)
        ]))
    np.testing.assert_array_equal(outs[0], outs[1])
    assert outs[0].shape == (40,) + x.shape
    changed = sum(not np.array_equal(outs[0][i], x) for i in range(40))
    assert changed >= 1  # ~6 transforms x 0.1 over 40 crops


def test_policy_validation():
    with pytest.raises(InvalidHyperparameter):
        AugmentPolicy(apply_probability=1.5).validate(900)
    with pytest.raises(InvalidHyperparameter):
        AugmentPolicy().validate(571)  # default 600-sample mask cannot fit
    AugmentPolicy(mask_len_samples=400).validate(571)
    AugmentPolicy().validate(901)
    with pytest.raises(InvalidHyperparameter):
        AugmentPolicy(bandstop_high_hz=49.9).validate(901)
