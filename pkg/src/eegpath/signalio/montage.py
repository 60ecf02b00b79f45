"""Channel-name normalisation for the 21-electrode 10-20 montage.

The two corpora label electrodes differently ("EEG FP1-REF" vs "Fp1",
old T3/T4/T5/T6 vs new T7/T8/P7/P8 nomenclature); everything is folded
onto the old-style upper-case names used below.
"""

DEFAULT_MONTAGE = (
    "FP1", "FP2", "F7", "F3", "FZ", "F4", "F8",
    "A1", "T3", "C3", "CZ", "C4", "T4", "A2",
    "T5", "P3", "PZ", "P4", "T6", "O1", "O2",
)

# new 10-10 style names -> old 10-20 names
_RENAMES = {"T7": "T3", "T8": "T4", "P7": "T5", "P8": "T6"}

_PREFIXES = ("EEG ", "EEG")
_SUFFIXES = ("-REF", "-LE", "-AVG")


def normalize_channel_name(raw):
    """Fold a vendor label onto the canonical montage name."""
    name = raw.strip().upper()
    for prefix in _PREFIXES:
        if name.startswith(prefix):
            name = name[len(prefix):].strip()
            break
    for suffix in _SUFFIXES:
        if name.endswith(suffix):
            name = name[: -len(suffix)].strip()
            break
    return _RENAMES.get(name, name)


def montage_indices(channels, montage=DEFAULT_MONTAGE):
    """Map montage names to row indices in `channels`; None when absent."""
    lookup = {}
    for i, ch in enumerate(channels):
        lookup.setdefault(normalize_channel_name(ch), i)
    return [lookup.get(name) for name in montage]
