"""Dataset manifests: one CSV row per recording file."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .eegx import read_eegx
from .edf import parse_edf
from .recording import LABEL_NAMES, label_from_string

COLUMNS = ("path", "label", "split", "dataset_tag", "age", "gender")


@dataclass
class ManifestEntry:
    path: str
    label: int
    split: str
    dataset_tag: str
    age: float | None = None
    gender: str | None = None


def write_manifest(path, entries):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for e in entries:
            writer.writerow([
                e.path, LABEL_NAMES[e.label], e.split, e.dataset_tag,
                "" if e.age is None else f"{e.age:g}",
                "" if e.gender is None else e.gender,
            ])
    return path


def read_manifest(path):
    path = Path(path)
    entries = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"manifest {path} lacks columns {sorted(missing)}")
        for row in reader:
            entries.append(ManifestEntry(
                path=row["path"],
                label=label_from_string(row["label"]),
                split=row["split"].strip(),
                dataset_tag=row["dataset_tag"].strip(),
                age=float(row["age"]) if row["age"] else None,
                gender=row["gender"].strip() or None,
            ))
    return entries


def load_recording(entry, base_dir=None):
    """Load one manifest entry (EDF or EEGX by extension) with its metadata."""
    file_path = Path(entry.path)
    if base_dir is not None and not file_path.is_absolute():
        file_path = Path(base_dir) / file_path
    if file_path.suffix.lower() == ".edf":
        rec, _ = parse_edf(file_path)
    else:
        rec = read_eegx(file_path)
    return rec.replace(label=entry.label, split=entry.split,
                       dataset_tag=entry.dataset_tag, age_years=entry.age,
                       gender=entry.gender)


def load_dataset(manifest_path, split=None, dataset_tag=None):
    """Load all recordings listed in a manifest, optionally filtered."""
    base = Path(manifest_path).parent
    out = []
    for entry in read_manifest(manifest_path):
        if split is not None and entry.split != split:
            continue
        if dataset_tag is not None and entry.dataset_tag != dataset_tag:
            continue
        out.append(load_recording(entry, base))
    return out
