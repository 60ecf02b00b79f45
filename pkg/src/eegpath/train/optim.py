"""AdamW with decoupled weight decay and cosine annealing.

The weight-decay step is applied directly to the parameters, outside the
gradient moments. Each step receives the cosine multiplier on both the
learning rate and (through it) the decay, so a zero learning rate moves
nothing. Per-parameter learning-rate scales implement discriminative
fine-tuning.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch


def adamw_step(param, grad, m, v, t, lr_t, wd_t, beta1=0.9, beta2=0.999, eps=1e-8):
    """One decoupled-decay Adam update, in place on param/m/v. t >= 1."""
    if param.shape != grad.shape or m.shape != param.shape or v.shape != param.shape:
        raise ShapeMismatch("parameter, gradient and moment shapes must agree")
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    param -= lr_t * m_hat / (np.sqrt(v_hat) + eps)
    if wd_t:
        param -= wd_t * param


def cosine_schedule(t, total, peak):
    """Cosine anneal from peak to 0 over `total` steps, no restarts."""
    if total <= 0:
        return peak
    return peak * 0.5 * (1.0 + np.cos(np.pi * min(t, total) / total))


class AdamW:
    def __init__(self, params, lr, weight_decay=0.0, betas=(0.9, 0.999),
                 eps=1e-8, lr_scales=None):
        self.params = dict(params)
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.lr_scales = lr_scales or {}
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self, multiplier=1.0):
        """Apply one update using grads stored on the parameters."""
        self.t += 1
        for name, p in self.params.items():
            if p.grad is None:
                continue
            lr_t = self.lr * multiplier * self.lr_scales.get(name, 1.0)
            wd_t = self.weight_decay * lr_t
            adamw_step(p.data, p.grad, self.m[name], self.v[name], self.t,
                       lr_t, wd_t, self.beta1, self.beta2, self.eps)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def state_arrays(self):
        return {"m": self.m, "v": self.v, "t": self.t}
