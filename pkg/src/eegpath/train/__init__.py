from .crops import Crop, crops_for_recordings, make_crops, stack_crops, tiling_stride
from .optim import AdamW, adamw_step, cosine_schedule
from .sampler import BalancedSampler, ShuffleSampler
from .checkpoint import Checkpoint, config_digest
from .loop import (
    METRICS_COLUMNS,
    TABLE3_PRESETS,
    TrainPlan,
    discriminative_scales,
    evaluate_recordings,
    fine_tune,
    predict_recording,
    train,
    write_metrics_csv,
)

__all__ = [
    "Crop", "make_crops", "crops_for_recordings", "stack_crops", "tiling_stride",
    "AdamW", "adamw_step", "cosine_schedule",
    "ShuffleSampler", "BalancedSampler",
    "Checkpoint", "config_digest",
    "TrainPlan", "TABLE3_PRESETS", "METRICS_COLUMNS",
    "train", "fine_tune", "predict_recording", "evaluate_recordings",
    "discriminative_scales", "write_metrics_csv",
]
