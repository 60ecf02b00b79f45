"""Exception types shared across the package."""


class EegPathError(Exception):
    """Base class for all package errors."""


# --- file ingestion ---

class TruncatedFile(EegPathError):
    pass


class MalformedHeader(EegPathError):
    pass


class NoOverlapWithMontage(EegPathError):
    pass


class TooShort(EegPathError):
    pass


class MissingChannels(EegPathError):
    pass


class EmptyInput(EegPathError):
    pass


class InvalidConfig(EegPathError):
    pass


# --- tensor core ---

class ShapeMismatch(EegPathError):
    pass


class InvalidHyperparameter(EegPathError):
    pass


class NonScalarLoss(EegPathError):
    pass


# --- models ---

class UnknownArch(EegPathError):
    pass


class WindowTooShort(EegPathError):
    pass


class UnknownLayer(EegPathError):
    pass


# --- augmentation ---

class CropTooShort(EegPathError):
    pass


# --- training ---

class EmptyBucket(EegPathError):
    pass


class DivergedLoss(EegPathError):
    pass


class ArchMismatch(EegPathError):
    pass


class NameMismatch(EegPathError):
    pass


# --- analysis ---

class DegenerateInput(EegPathError):
    pass


class MissingClass(EegPathError):
    pass
