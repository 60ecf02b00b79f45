"""Reader/writer for 16-bit EDF biosignal files.

Covers plain EDF only: a 256-byte ASCII header, one 256-byte ASCII header
per signal, then data records of little-endian int16 samples. Annotation
channels and EDF+ events are out of scope; physical units are taken to be
microvolts as both corpora store them that way.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import MalformedHeader, NoOverlapWithMontage, TruncatedFile
from .montage import DEFAULT_MONTAGE, montage_indices, normalize_channel_name
from .recording import NORMAL, Recording


@dataclass
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    n_records: int
    record_duration_s: float
    labels: list
    transducers: list
    dimensions: list
    physical_min: np.ndarray
    physical_max: np.ndarray
    digital_min: np.ndarray
    digital_max: np.ndarray
    prefiltering: list
    samples_per_record: np.ndarray

    @property
    def n_signals(self):
        return len(self.labels)

    def sample_rate(self, i):
        return self.samples_per_record[i] / self.record_duration_s


def _ascii(field: bytes) -> str:
    return field.decode("ascii", errors="replace").rstrip()


def _number(field: bytes, kind, what):
    text = field.decode("ascii", errors="replace").strip()
    try:
        return kind(text)
    except ValueError:
        raise MalformedHeader(f"non-numeric {what} field: {text!r}") from None


def parse_edf(source, montage=DEFAULT_MONTAGE, recording_id=None):
    """Parse an EDF byte stream or file into (Recording, EdfHeader).

    The Recording keeps every montage channel, relabelled canonically, in
    montage order, as physical microvolt values; non-montage signals are
    dropped. Metadata fields (label, split, tag) are left at defaults for
    the manifest layer to fill in.
    """
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
        if recording_id is None:
            recording_id = Path(source).stem
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()
    if recording_id is None:
        recording_id = "edf"

    if len(raw) < 256:
        raise TruncatedFile(f"file shorter than the 256-byte header ({len(raw)} bytes)")
    buf = io.BytesIO(raw)

    version = _ascii(buf.read(8))
    patient_id = _ascii(buf.read(80))
    rec_id = _ascii(buf.read(80))
    start_date = _ascii(buf.read(8))
    start_time = _ascii(buf.read(8))
    header_bytes = _number(buf.read(8), int, "header-bytes")
    buf.read(44)
    n_records = _number(buf.read(8), int, "record-count")
    record_duration = _number(buf.read(8), float, "record-duration")
    ns = _number(buf.read(4), int, "signal-count")
    if ns <= 0 or n_records < 0 or record_duration <= 0:
        raise MalformedHeader(
            f"implausible header: ns={ns} n_records={n_records} duration={record_duration}")
    if header_bytes != 256 * (ns + 1):
        raise MalformedHeader(f"header-bytes {header_bytes} != 256*(ns+1)={256 * (ns + 1)}")
    if len(raw) < header_bytes:
        raise TruncatedFile("file ends inside the signal headers")

    def fields(width, parse=None, what=""):
        out = []
        for _ in range(ns):
            chunk = buf.read(width)
            out.append(_number(chunk, parse, what) if parse else _ascii(chunk))
        return out

    labels = fields(16)
    transducers = fields(80)
    dimensions = fields(8)
    phys_min = np.array(fields(8, float, "physical-min"))
    phys_max = np.array(fields(8, float, "physical-max"))
    dig_min = np.array(fields(8, int, "digital-min"))
    dig_max = np.array(fields(8, int, "digital-max"))
    prefiltering = fields(80)
    samples_per_record = np.array(fields(8, int, "samples-per-record"))
    buf.read(32 * ns)

    if (dig_max <= dig_min).any():
        raise MalformedHeader("digital_max must exceed digital_min for every signal")
    if (samples_per_record <= 0).any():
        raise MalformedHeader("samples-per-record must be positive")

    header = EdfHeader(version, patient_id, rec_id, start_date, start_time,
                       n_records, record_duration, labels, transducers, dimensions,
                       phys_min, phys_max, dig_min, dig_max, prefiltering,
                       samples_per_record)

    record_samples = int(samples_per_record.sum())
    declared = header_bytes + 2 * n_records * record_samples
    if len(raw) < declared:
        raise TruncatedFile(
            f"declared {n_records} records need {declared} bytes, file has {len(raw)}")

    idx = montage_indices(labels, montage)
    missing = [name for name, i in zip(montage, idx) if i is None]
    if missing:
        raise NoOverlapWithMontage(
            f"{len(montage) - len(missing)} of {len(montage)} montage electrodes present; "
            f"missing {missing}")
    rates = {samples_per_record[i] for i in idx}
    if len(rates) != 1:
        raise MalformedHeader("montage channels have differing sample rates")

    payload = np.frombuffer(raw, dtype="<i2", offset=header_bytes,
                            count=n_records * record_samples)
    payload = payload.reshape(n_records, record_samples)
    offsets = np.concatenate([[0], np.cumsum(samples_per_record)])

    gain = (phys_max - phys_min) / (dig_max - dig_min)
    n_samples = int(n_records * samples_per_record[idx[0]])
    data = np.empty((len(montage), n_samples), dtype=np.float64)
    for row, i in enumerate(idx):
        digital = payload[:, offsets[i]: offsets[i + 1]].reshape(-1)
        data[row] = (digital - dig_min[i]) * gain[i] + phys_min[i]

    recording = Recording(
        id=recording_id,
        channels=[normalize_channel_name(labels[i]) for i in idx],
        data=data,
        sample_rate_hz=float(header.sample_rate(idx[0])),
        label=NORMAL,
    )
    return recording, header


def write_edf(path, channels, data, sample_rate_hz, record_duration_s=1.0,
              patient_id="X", recording_id="X", physical_range=None):
    """Write [n_channels, n_samples] microvolt data as a plain EDF file.

    Samples are quantised to the int16 digital range; pass physical_range
    equal to (-32768, 32767) to store values verbatim. Trailing samples
    that do not fill a whole record are dropped.
    """
    data = np.asarray(data, dtype=np.float64)
    n_channels, n_samples = data.shape
    spr = int(round(sample_rate_hz * record_duration_s))
    if abs(spr - sample_rate_hz * record_duration_s) > 1e-9:
        raise ValueError("record duration must hold an integer number of samples")
    n_records = n_samples // spr
    dig_min, dig_max = -32768, 32767
    if physical_range is None:
        # integer span keeps the 8-char ASCII header fields exact
        span = np.abs(data).max() if data.size else 1.0
        span = max(float(np.ceil(span)), 1.0)
        phys_min, phys_max = -span, span
    else:
        phys_min, phys_max = physical_range

    def field(value, width):
        text = f"{value}"
        if len(text) > width:
            text = text[:width]
        return text.ljust(width).encode("ascii")

    def num(value, width):
        text = f"{value:.10g}"
        if len(text) > width:
            text = f"{value:.{max(width - 7, 1)}g}"
        return field(text, width)

    out = io.BytesIO()
    out.write(field("0", 8))
    out.write(field(patient_id, 80))
    out.write(field(recording_id, 80))
    out.write(field("01.01.01", 8))
    out.write(field("00.00.00", 8))
    out.write(num(256 * (n_channels + 1), 8))
    out.write(field("", 44))
    out.write(num(n_records, 8))
    out.write(num(record_duration_s, 8))
    out.write(field(n_channels, 4))
    for ch in channels:
        out.write(field(ch, 16))
    for _ in channels:
        out.write(field("AgAgCl electrode", 80))
    for _ in channels:
        out.write(field("uV", 8))
    for _ in channels:
        out.write(num(phys_min, 8))
    for _ in channels:
        out.write(num(phys_max, 8))
    for _ in channels:
        out.write(num(dig_min, 8))
    for _ in channels:
        out.write(num(dig_max, 8))
    for _ in channels:
        out.write(field("", 80))
    for _ in channels:
        out.write(num(spr, 8))
    for _ in channels:
        out.write(field("", 32))

    gain = (phys_max - phys_min) / (dig_max - dig_min)
    digital = np.round((data - phys_min) / gain) + dig_min
    digital = np.clip(digital, dig_min, dig_max).astype("<i2")
    for r in range(n_records):
        for c in range(n_channels):
            out.write(digital[c, r * spr:(r + 1) * spr].tobytes())

    blob = out.getvalue()
    if path is None:
        return blob
    Path(path).write_bytes(blob)
    return blob
