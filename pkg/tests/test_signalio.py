import numpy as np
import pytest

from eegpath.errors import (
    EmptyInput,
    InvalidConfig,
    MalformedHeader,
    MissingChannels,
    NoOverlapWithMontage,
    TooShort,
    TruncatedFile,
)
from eegpath.signalio import (
    ABNORMAL,
    DEFAULT_MONTAGE,
    NORMAL,
    ManifestEntry,
    PreprocessConfig,
    Recording,
    SynthConfig,
    SynthDatasetConfig,
    forgetting_shift,
    generate_recordings,
    load_dataset,
    normalize_channel_name,
    parse_edf,
    preprocess,
    read_eegx,
    read_manifest,
    resample,
    split_train_valid,
    write_edf,
    write_eegx,
    write_manifest,
)


def make_edf_bytes(rng, n_channels=21, rate=200.0, duration_s=4.0,
                   labels=None, physical_range=None):
    n = int(rate * duration_s)
    data = rng.normal(scale=40.0, size=(n_channels, n))
    if labels is None:
        labels = [f"EEG {name}-REF" for name in DEFAULT_MONTAGE[:n_channels]]
    blob = write_edf(None, labels, data, rate, physical_range=physical_range)
    return blob, data, labels


# ---------------------------------------------------------------------------
# EDF
# ---------------------------------------------------------------------------

def test_edf_round_trip_header_and_samples():
    rng = np.random.default_rng(0)
    blob, data, labels = make_edf_bytes(rng)
    rec, header = parse_edf(blob)
    assert header.n_signals == 21
    assert header.n_records == 4
    assert header.record_duration_s == 1.0
    assert header.labels == labels
    assert (header.samples_per_record == 200).all()
    assert rec.sample_rate_hz == 200.0
    assert rec.channels == list(DEFAULT_MONTAGE)
    # quantisation step = physical span / digital span
    span = 2 * np.ceil(np.abs(data).max())
    step = span / 65535
    assert np.abs(rec.data - data).max() <= step


def test_edf_identity_affine_mapping():
    # physical range equal to the digital range stores values verbatim
    rng = np.random.default_rng(1)
    digital_like = rng.integers(-32768, 32768, size=(21, 400)).astype(np.float64)
    labels = [f"EEG {n}-REF" for n in DEFAULT_MONTAGE]
    blob = write_edf(None, labels, digital_like, 200.0,
                     physical_range=(-32768, 32767))
    rec, _ = parse_edf(blob)
    np.testing.assert_array_equal(rec.data, digital_like)


def test_edf_truncated_file():
    rng = np.random.default_rng(2)
    blob, _, _ = make_edf_bytes(rng)
    with pytest.raises(TruncatedFile):
        parse_edf(blob[:len(blob) - 137])
    with pytest.raises(TruncatedFile):
        parse_edf(blob[:100])


def test_edf_malformed_header():
    rng = np.random.default_rng(3)
    blob, _, _ = make_edf_bytes(rng)
    # overwrite the record-count field (offset 236, width 8) with garbage
    bad = blob[:236] + b"notanum " + blob[244:]
    with pytest.raises(MalformedHeader):
        parse_edf(bad)


def test_edf_no_overlap_with_montage():
    rng = np.random.default_rng(4)
    labels = [f"EEG {n}-REF" for n in DEFAULT_MONTAGE[:18]] + ["EKG", "Photic", "X1"]
    blob, _, _ = make_edf_bytes(rng, labels=labels)
    with pytest.raises(NoOverlapWithMontage):
        parse_edf(blob)


def test_edf_new_nomenclature_accepted():
    rng = np.random.default_rng(5)
    renames = {"T3": "T7", "T4": "T8", "T5": "P7", "T6": "P8"}
    labels = [renames.get(n, n).capitalize() for n in DEFAULT_MONTAGE]
    blob, _, _ = make_edf_bytes(rng, labels=labels)
    rec, _ = parse_edf(blob)
    assert rec.channels == list(DEFAULT_MONTAGE)


def test_channel_name_normalization():
    assert normalize_channel_name("EEG FP1-REF") == "FP1"
    assert normalize_channel_name("t7") == "T3"
    assert normalize_channel_name("P8-LE") == "T6"
    assert normalize_channel_name(" Cz ") == "CZ"


# ---------------------------------------------------------------------------
# EEGX container
# ---------------------------------------------------------------------------

def test_eegx_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    rec = Recording("r0", list(DEFAULT_MONTAGE),
                    rng.normal(size=(21, 500)).astype(np.float32), 100.0,
                    label=ABNORMAL)
    path = tmp_path / "r0.eegx"
    write_eegx(path, rec)
    back = read_eegx(path)
    np.testing.assert_array_equal(back.data, rec.data)
    assert back.sample_rate_hz == 100.0
    assert back.label == ABNORMAL
    assert back.channels == rec.channels
    assert back.id == "r0"


def test_eegx_truncated_and_bad_magic(tmp_path):
    rng = np.random.default_rng(7)
    rec = Recording("r0", ["C3", "C4"], rng.normal(size=(2, 50)), 100.0)
    blob = write_eegx(None, rec)
    with pytest.raises(TruncatedFile):
        read_eegx(blob[:-8])
    with pytest.raises(MalformedHeader):
        read_eegx(b"XGEE" + blob[4:])


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------

def _raw_recording(rng, rate=200.0, duration_s=120.0, n_channels=21, scale=40.0):
    n = int(rate * duration_s)
    data = rng.normal(scale=scale, size=(n_channels, n))
    return Recording("raw", list(DEFAULT_MONTAGE[:n_channels]), data, rate)


def test_preprocess_rate_and_duration():
    rng = np.random.default_rng(8)
    rec = _raw_recording(rng, rate=200.0, duration_s=120.0)
    out = preprocess(rec)
    assert out.sample_rate_hz == 100.0
    assert out.n_samples == 6000  # 60 s kept at 100 Hz
    assert out.n_channels == 21
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0


def test_preprocess_duration_cap():
    rng = np.random.default_rng(9)
    rec = _raw_recording(rng, rate=100.0, duration_s=22 * 60.0)
    out = preprocess(rec)
    assert out.n_samples == 20 * 60 * 100


def test_preprocess_constant_channel_is_zero():
    rng = np.random.default_rng(10)
    rec = _raw_recording(rng, rate=100.0, duration_s=80.0)
    data = rec.data.copy()
    data[3, :] = 7.5
    out = preprocess(rec.replace(data=data))
    np.testing.assert_array_equal(out.data[3], 0.0)


def test_preprocess_clips_before_normalisation():
    rng = np.random.default_rng(11)
    rec = _raw_recording(rng, rate=100.0, duration_s=80.0)
    data = rec.data.copy()
    data[0, 7000] = 900.0
    data[0, 7100] = -950.0
    pre_clipped = np.clip(data, -800.0, 800.0)
    out_a = preprocess(rec.replace(data=data))
    out_b = preprocess(rec.replace(data=pre_clipped))
    np.testing.assert_array_equal(out_a.data, out_b.data)


def test_preprocess_too_short_and_missing_channels():
    rng = np.random.default_rng(12)
    with pytest.raises(TooShort):
        preprocess(_raw_recording(rng, rate=100.0, duration_s=63.0))
    rec = _raw_recording(rng, rate=100.0, duration_s=80.0, n_channels=20)
    with pytest.raises(MissingChannels):
        preprocess(rec)


def test_preprocess_output_range_is_stable_under_reapplication():
    rng = np.random.default_rng(13)
    out = preprocess(_raw_recording(rng, rate=100.0, duration_s=130.0))
    again = preprocess(out)
    assert again.data.min() >= 0.0 and again.data.max() <= 1.0


def test_resample_preserves_sub_nyquist_peak():
    rate_in, rate_out = 250.0, 100.0
    t = np.arange(int(rate_in * 30)) / rate_in
    for freq in (4.0, 17.3, 33.0):
        x = np.sin(2 * np.pi * freq * t)[None, :]
        y = resample(x, rate_in, rate_out)[0]
        spectrum = np.abs(np.fft.rfft(y))
        peak = np.fft.rfftfreq(len(y), 1 / rate_out)[spectrum.argmax()]
        assert abs(peak - freq) <= 0.1


def test_resample_attenuates_above_target_nyquist():
    rate_in, rate_out = 200.0, 100.0
    t = np.arange(int(rate_in * 30)) / rate_in
    x = np.sin(2 * np.pi * 70.0 * t)[None, :]
    y = resample(x, rate_in, rate_out)[0][200:-200]
    in_rms = np.sqrt(0.5)
    out_rms = np.sqrt((y ** 2).mean())
    assert 20 * np.log10(in_rms / max(out_rms, 1e-300)) >= 40.0


# ---------------------------------------------------------------------------
# train/valid split
# ---------------------------------------------------------------------------

def _tagged(n, label, offset=0):
    return [Recording(f"r{offset + i}", ["C3"], np.zeros((1, 10)), 100.0, label=label)
            for i in range(n)]


def test_split_85_15():
    recs = _tagged(50, NORMAL) + _tagged(50, ABNORMAL, offset=50)
    train, valid = split_train_valid(recs, 0.85, seed=0)
    assert len(train) == 85 and len(valid) == 15


def test_split_rejects_degenerate_ratio():
    recs = _tagged(10, NORMAL)
    with pytest.raises(EmptyInput):
        split_train_valid(recs, 1.0, seed=0)
    with pytest.raises(EmptyInput):
        split_train_valid([], 0.85, seed=0)


def test_split_stratified_counts():
    recs = _tagged(10, NORMAL) + _tagged(10, ABNORMAL, offset=10)
    train, valid = split_train_valid(recs, 0.85, seed=3)
    assert len(train) == 17 and len(valid) == 3
    per_class = {NORMAL: 0, ABNORMAL: 0}
    for r in train:
        per_class[r.label] += 1
    assert sorted(per_class.values()) == [8, 9]


def test_split_disjoint_union_and_deterministic():
    recs = _tagged(13, NORMAL) + _tagged(8, ABNORMAL, offset=13)
    a_train, a_valid = split_train_valid(recs, 0.7, seed=11)
    b_train, b_valid = split_train_valid(recs, 0.7, seed=11)
    assert [r.id for r in a_train] == [r.id for r in b_train]
    ids_train = {r.id for r in a_train}
    ids_valid = {r.id for r in a_valid}
    assert not ids_train & ids_valid
    assert ids_train | ids_valid == {r.id for r in recs}


def test_split_rejects_non_train_split_tag():
    recs = _tagged(4, NORMAL)
    recs[2] = recs[2].replace(split="test")
    with pytest.raises(EmptyInput):
        split_train_valid(recs, 0.5, seed=0)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def test_manifest_round_trip_and_load(tmp_path):
    rng = np.random.default_rng(14)
    entries = []
    for i, (label, split) in enumerate([(NORMAL, "train"), (ABNORMAL, "train"),
                                        (ABNORMAL, "test")]):
        rec = Recording(f"r{i}", list(DEFAULT_MONTAGE),
                        rng.normal(size=(21, 300)).astype(np.float32), 100.0,
                        label=label)
        write_eegx(tmp_path / f"r{i}.eegx", rec)
        entries.append(ManifestEntry(path=f"r{i}.eegx", label=label, split=split,
                                     dataset_tag="synthA", age=40.0 + i,
                                     gender="female"))
    write_manifest(tmp_path / "manifest.csv", entries)
    back = read_manifest(tmp_path / "manifest.csv")
    assert [e.label for e in back] == [e.label for e in entries]
    assert back[0].age == 40.0

    recs = load_dataset(tmp_path / "manifest.csv", split="train")
    assert len(recs) == 2
    assert recs[1].label == ABNORMAL
    assert recs[1].dataset_tag == "synthA"
    assert recs[1].gender == "female"


# ---------------------------------------------------------------------------
# synthetic generator
# ---------------------------------------------------------------------------

def test_synth_default_contract():
    cfg = SynthConfig(seed=1, datasets=[
        SynthDatasetConfig(tag="source", n_train=4, n_test=2),
        SynthDatasetConfig(tag="target", n_train=4, n_test=2),
    ])
    recs = generate_recordings(cfg)
    assert len(recs) == 12
    tags = {r.dataset_tag for r in recs}
    assert tags == {"source", "target"}
    for r in recs:
        assert r.n_channels == 21
        assert r.sample_rate_hz == 100.0
        assert r.label in (NORMAL, ABNORMAL)
        assert r.age_years is not None and r.gender in ("male", "female")


def test_synth_deterministic():
    cfg = SynthConfig(seed=5, datasets=[SynthDatasetConfig(tag="a", n_train=2, n_test=1)])
    a = generate_recordings(cfg)
    b = generate_recordings(cfg)
    for ra, rb in zip(a, b):
        np.testing.assert_array_equal(ra.data, rb.data)


def test_synth_class_frequency_content():
    # the labelled oscillation dominates its band after preprocessing
    cfg = SynthConfig(seed=2, datasets=[
        SynthDatasetConfig(tag="a", n_train=2, n_test=0, abnormal_fraction=0.5,
                           class_freqs_hz=(6.0, 12.0), signal_amplitude_uv=12.0)])
    recs = generate_recordings(cfg)
    for rec in recs:
        pre = preprocess(rec)
        x = pre.data[0] - pre.data[0].mean()
        freqs = np.fft.rfftfreq(len(x), 1 / 100.0)
        spectrum = np.abs(np.fft.rfft(x))
        band = (freqs > 2.0) & (freqs < 20.0)
        peak = freqs[band][spectrum[band].argmax()]
        expected = cfg.datasets[0].class_freqs_hz[rec.label]
        assert abs(peak - expected) < 0.5, (rec.id, peak, expected)


def test_synth_invalid_config():
    with pytest.raises(InvalidConfig):
        generate_recordings(SynthConfig(datasets=[]))
    with pytest.raises(InvalidConfig):
        generate_recordings(SynthConfig(datasets=[
            SynthDatasetConfig(tag="a", class_freqs_hz=(6.0, 60.0))]))


def test_forgetting_shift_swaps_target_frequencies():
    cfg = SynthConfig()
    shifted = forgetting_shift(cfg)
    assert shifted.datasets[1].class_freqs_hz == tuple(reversed(cfg.datasets[1].class_freqs_hz))
    assert shifted.datasets[0].class_freqs_hz == cfg.datasets[0].class_freqs_hz
