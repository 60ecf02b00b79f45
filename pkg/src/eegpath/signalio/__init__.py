from .recording import ABNORMAL, LABEL_NAMES, NORMAL, Recording, label_from_string
from .montage import DEFAULT_MONTAGE, montage_indices, normalize_channel_name
from .edf import EdfHeader, parse_edf, write_edf
from .eegx import read_eegx, write_eegx
from .preprocess import PreprocessConfig, preprocess, resample
from .split import split_train_valid
from .manifest import (
    ManifestEntry,
    load_dataset,
    load_recording,
    read_manifest,
    write_manifest,
)
from .synth import SynthConfig, SynthDatasetConfig, forgetting_shift, generate_recordings

__all__ = [
    "Recording", "NORMAL", "ABNORMAL", "LABEL_NAMES", "label_from_string",
    "DEFAULT_MONTAGE", "normalize_channel_name", "montage_indices",
    "EdfHeader", "parse_edf", "write_edf", "read_eegx", "write_eegx",
    "PreprocessConfig", "preprocess", "resample", "split_train_valid",
    "ManifestEntry", "write_manifest", "read_manifest", "load_recording",
    "load_dataset", "SynthConfig", "SynthDatasetConfig", "generate_recordings",
    "forgetting_shift",
]
