"""Raw binary fallback container for synthetic and preprocessed recordings.

Layout (little-endian): magic "EEGX", version u32, n_channels u32,
n_samples u64, sample_rate f64, label u8, then float32 payload in
channel-major order. Channel names are implied by the canonical montage
order, so tests never depend on EDF writing fidelity.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import MalformedHeader, TruncatedFile
from .montage import DEFAULT_MONTAGE
from .recording import Recording

MAGIC = b"EEGX"
VERSION = 1
_HEADER = struct.Struct("<4sIIQdB")


def write_eegx(path, recording):
    data = np.ascontiguousarray(recording.data, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, recording.n_channels,
                          recording.n_samples, recording.sample_rate_hz,
                          recording.label)
    blob = header + data.tobytes()
    if path is None:
        return blob
    Path(path).write_bytes(blob)
    return blob


def read_eegx(source, recording_id=None, channels=None):
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
        if recording_id is None:
            recording_id = Path(source).stem
    else:
        raw = bytes(source)
    if recording_id is None:
        recording_id = "eegx"
    if len(raw) < _HEADER.size:
        raise TruncatedFile("missing container header")
    magic, version, n_channels, n_samples, rate, label = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeader(f"bad magic {magic!r}")
    if version != VERSION:
        raise MalformedHeader(f"unsupported container version {version}")
    need = _HEADER.size + 4 * n_channels * n_samples
    if len(raw) < need:
        raise TruncatedFile(f"payload needs {need} bytes, file has {len(raw)}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size,
                         count=n_channels * n_samples)
    data = data.reshape(n_channels, n_samples).copy()
    if channels is None:
        channels = list(DEFAULT_MONTAGE[:n_channels]) if n_channels <= len(DEFAULT_MONTAGE) \
            else [f"CH{i}" for i in range(n_channels)]
    return Recording(id=recording_id, channels=list(channels), data=data,
                     sample_rate_hz=rate, label=int(label))
