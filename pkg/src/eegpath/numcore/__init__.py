from .tensor import Tensor, concat, grad_enabled, no_grad
from .functional import (
    batch_norm,
    conv1d,
    conv2d,
    cross_entropy,
    dropout,
    elu,
    log_softmax,
    max_pool1d,
    mean_pool1d,
    nll_loss,
    relu,
    softmax,
    weight_norm,
)

__all__ = [
    "Tensor", "concat", "no_grad", "grad_enabled",
    "conv1d", "conv2d", "batch_norm", "dropout", "weight_norm",
    "max_pool1d", "mean_pool1d", "relu", "elu",
    "softmax", "log_softmax", "nll_loss", "cross_entropy",
]
