"""Differentiable primitives for the four convolutional architectures.

Convolutions are evaluated as a sum over kernel positions, each position a
batched BLAS matmul on a strided slice of the (padded) input. That keeps
memory at O(input) instead of materialising im2col buffers, and every
backward is the exact adjoint of the implemented forward.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidHyperparameter, ShapeMismatch
from .tensor import Tensor


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


# im2col buffers above this size fall back to the per-position loop
_COL_BYTES_LIMIT = 134_217_728


def _conv1d_cols(xp, B, groups, Cg, K, dilation, stride, L_out):
    """Materialise [B, G, Cg*K, L_out] patches for a single-GEMM convolution.

    Built from K contiguous slice copies; gathering a transposed
    sliding-window view is an order of magnitude slower for dilated kernels.
    """
    hi = (L_out - 1) * stride + 1
    cols = np.empty((B, groups, Cg, K, L_out), dtype=xp.dtype)
    for k in range(K):
        sl = xp[:, :, k * dilation: k * dilation + hi: stride]
        cols[:, :, :, k, :] = sl.reshape(B, groups, Cg, L_out)
    return cols.reshape(B, groups, Cg * K, L_out)


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------

def conv1d(x, weight, bias=None, stride=1, dilation=1, groups=1, causal=False, padding=0):
    """1-D convolution over the last axis.

    x: [B, C, L]; weight: [F, C // groups, K]; bias: [F] or None.
    causal=True left-pads by (K-1)*dilation so output positions only see
    past samples and the length is preserved (stride 1). `padding` is a
    symmetric zero-pad and is mutually exclusive with causal.
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    if x.ndim != 3 or weight.ndim != 3:
        raise ShapeMismatch(f"conv1d expects x [B,C,L] and weight [F,Cg,K], got {x.shape} / {weight.shape}")
    if stride < 1 or dilation < 1 or groups < 1:
        raise InvalidHyperparameter("stride, dilation and groups must be >= 1")
    if causal and padding:
        raise InvalidHyperparameter("causal and symmetric padding are mutually exclusive")
    B, C, L = x.shape
    F, Cg, K = weight.shape
    if C % groups or F % groups or Cg != C // groups:
        raise ShapeMismatch(f"channels {C} / filters {F} incompatible with groups={groups}")

    left = (K - 1) * dilation if causal else padding
    right = 0 if causal else padding
    span = dilation * (K - 1) + 1
    L_pad = L + left + right
    if L_pad < span:
        raise ShapeMismatch(f"input length {L} too short for kernel span {span}")
    L_out = (L_pad - span) // stride + 1

    xp = x.data
    if left or right:
        xp = np.pad(xp, ((0, 0), (0, 0), (left, right)))
    Fg = F // groups
    w = weight.data.reshape(groups, Fg, Cg, K)
    hi = (L_out - 1) * stride + 1

    col_bytes = B * C * K * L_out * x.data.itemsize
    cols = None
    if K > 2 and col_bytes <= _COL_BYTES_LIMIT:
        cols = _conv1d_cols(xp, B, groups, Cg, K, dilation, stride, L_out)
        wflat = w.reshape(groups, Fg, Cg * K)
        out = np.matmul(wflat, cols).reshape(B, F, L_out)
    else:
        out = np.zeros((B, groups, Fg, L_out), dtype=x.data.dtype)
        for k in range(K):
            xk = xp[:, :, k * dilation: k * dilation + hi: stride]
            xk = xk.reshape(B, groups, Cg, L_out)
            out += np.matmul(w[:, :, :, k], xk)
        out = out.reshape(B, F, L_out)
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.shape != (F,):
            raise ShapeMismatch(f"bias shape {bias.shape} != ({F},)")
        out = out + bias.data[None, :, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        gg = g.reshape(B, groups, Fg, L_out)
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 2)))
        if weight.requires_grad:
            if cols is not None:
                gw = np.matmul(gg, np.swapaxes(cols, -1, -2)).sum(axis=0)
                gw = gw.reshape(groups, Fg, Cg, K)
            else:
                gw = np.zeros_like(weight.data).reshape(groups, Fg, Cg, K)
                for k in range(K):
                    xk = xp[:, :, k * dilation: k * dilation + hi: stride]
                    xk = xk.reshape(B, groups, Cg, L_out)
                    gw[:, :, :, k] = np.matmul(gg, np.swapaxes(xk, -1, -2)).sum(axis=0)
            weight._accumulate(gw.reshape(F, Cg, K))
        if x.requires_grad:
            gx_pad = np.zeros((B, groups, Cg, L_pad), dtype=x.data.dtype)
            if cols is not None:
                gcols = np.matmul(np.swapaxes(wflat, -1, -2), gg)
                gcols = gcols.reshape(B, groups, Cg, K, L_out)
                for k in range(K):
                    gx_pad[:, :, :, k * dilation: k * dilation + hi: stride] += gcols[:, :, :, k]
            else:
                wt = np.swapaxes(w, 1, 2)  # [G, Cg, Fg]
                for k in range(K):
                    gx_pad[:, :, :, k * dilation: k * dilation + hi: stride] += np.matmul(wt[:, :, :, k], gg)
            gx = gx_pad.reshape(B, C, L_pad)[:, :, left: left + L]
            x._accumulate(gx)

    return Tensor._result(out, parents, backward)


def conv2d(x, weight, bias=None, stride=(1, 1), dilation=(1, 1), groups=1, padding=(0, 0)):
    """2-D convolution over the trailing (spatial, time) axes.

    x: [B, C, H, W]; weight: [F, C // groups, KH, KW]. The H axis carries
    the electrode montage so kernels like (n_channels, 1) collapse space.
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeMismatch(f"conv2d expects x [B,C,H,W] and weight [F,Cg,KH,KW], got {x.shape} / {weight.shape}")
    sh, sw = stride
    dh, dw = dilation
    ph, pw = padding
    if min(sh, sw, dh, dw) < 1 or groups < 1:
        raise InvalidHyperparameter("stride, dilation and groups must be >= 1")
    B, C, H, W = x.shape
    F, Cg, KH, KW = weight.shape
    if C % groups or F % groups or Cg != C // groups:
        raise ShapeMismatch(f"channels {C} / filters {F} incompatible with groups={groups}")

    H_pad, W_pad = H + 2 * ph, W + 2 * pw
    span_h, span_w = dh * (KH - 1) + 1, dw * (KW - 1) + 1
    if H_pad < span_h or W_pad < span_w:
        raise ShapeMismatch(f"input {H}x{W} too short for kernel span {span_h}x{span_w}")
    H_out = (H_pad - span_h) // sh + 1
    W_out = (W_pad - span_w) // sw + 1

    xp = x.data
    if ph or pw:
        xp = np.pad(xp, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    Fg = F // groups
    w = weight.data.reshape(groups, Fg, Cg, KH, KW)
    hi_h = (H_out - 1) * sh + 1
    hi_w = (W_out - 1) * sw + 1

    col_bytes = B * C * KH * KW * H_out * W_out * x.data.itemsize
    cols = None
    if KH * KW > 2 and col_bytes <= _COL_BYTES_LIMIT:
        cols = np.empty((B, groups, Cg, KH, KW, H_out, W_out), dtype=xp.dtype)
        for kh in range(KH):
            for kw in range(KW):
                sl = xp[:, :, kh * dh: kh * dh + hi_h: sh, kw * dw: kw * dw + hi_w: sw]
                cols[:, :, :, kh, kw] = sl.reshape(B, groups, Cg, H_out, W_out)
        cols = cols.reshape(B, groups, Cg * KH * KW, H_out * W_out)
        wflat = w.reshape(groups, Fg, Cg * KH * KW)
        out = np.matmul(wflat, cols).reshape(B, F, H_out, W_out)
    else:
        out = np.zeros((B, groups, Fg, H_out * W_out), dtype=x.data.dtype)
        for kh in range(KH):
            for kw in range(KW):
                xk = xp[:, :, kh * dh: kh * dh + hi_h: sh, kw * dw: kw * dw + hi_w: sw]
                xk = xk.reshape(B, groups, Cg, H_out * W_out)
                out += np.matmul(w[:, :, :, kh, kw], xk)
        out = out.reshape(B, F, H_out, W_out)
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.shape != (F,):
            raise ShapeMismatch(f"bias shape {bias.shape} != ({F},)")
        out = out + bias.data[None, :, None, None]

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        gg = g.reshape(B, groups, Fg, H_out * W_out)
        if bias is not None and bias.requires_grad:
            bias._accumulate(g.sum(axis=(0, 2, 3)))
        if weight.requires_grad:
            if cols is not None:
                gw = np.matmul(gg, np.swapaxes(cols, -1, -2)).sum(axis=0)
                gw = gw.reshape(groups, Fg, Cg, KH, KW)
            else:
                gw = np.zeros_like(weight.data).reshape(groups, Fg, Cg, KH, KW)
                for kh in range(KH):
                    for kw in range(KW):
                        xk = xp[:, :, kh * dh: kh * dh + hi_h: sh, kw * dw: kw * dw + hi_w: sw]
                        xk = xk.reshape(B, groups, Cg, H_out * W_out)
                        gw[:, :, :, kh, kw] = np.matmul(gg, np.swapaxes(xk, -1, -2)).sum(axis=0)
            weight._accumulate(gw.reshape(F, Cg, KH, KW))
        if x.requires_grad:
            gx_pad = np.zeros((B, groups, Cg, H_pad, W_pad), dtype=x.data.dtype)
            if cols is not None:
                gcols = np.matmul(np.swapaxes(wflat, -1, -2), gg)
                gcols = gcols.reshape(B, groups, Cg, KH, KW, H_out, W_out)
                for kh in range(KH):
                    for kw in range(KW):
                        gx_pad[:, :, :, kh * dh: kh * dh + hi_h: sh,
                               kw * dw: kw * dw + hi_w: sw] += gcols[:, :, :, kh, kw]
            else:
                wt = np.swapaxes(w, 1, 2)  # [G, Cg, Fg, KH, KW]
                gg4 = gg.reshape(B, groups, Fg, H_out, W_out)
                for kh in range(KH):
                    for kw in range(KW):
                        contrib = np.einsum("gcf,bgfhw->bgchw", wt[:, :, :, kh, kw], gg4)
                        gx_pad[:, :, :, kh * dh: kh * dh + hi_h: sh,
                               kw * dw: kw * dw + hi_w: sw] += contrib
            gx = gx_pad.reshape(B, C, H_pad, W_pad)[:, :, ph: ph + H, pw: pw + W]
            x._accumulate(gx)

    return Tensor._result(out, parents, backward)


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------

def _pool_check(x, kernel, stride):
    if x.ndim != 3:
        raise ShapeMismatch(f"pooling expects [B,C,L], got {x.shape}")
    if kernel < 1 or stride < 1:
        raise InvalidHyperparameter("kernel and stride must be >= 1")
    L = x.shape[-1]
    if L < kernel:
        raise ShapeMismatch(f"input length {L} shorter than pool kernel {kernel}")
    return (L - kernel) // stride + 1


def max_pool1d(x, kernel, stride=None):
    x = _as_tensor(x)
    stride = kernel if stride is None else stride
    L_out = _pool_check(x, kernel, stride)
    B, C, L = x.shape
    windows = np.lib.stride_tricks.sliding_window_view(x.data, kernel, axis=-1)[:, :, ::stride]
    arg = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, arg[..., None], axis=-1)[..., 0]
    pos = arg + np.arange(L_out)[None, None, :] * stride

    def backward(g):
        gx = np.zeros_like(x.data).reshape(B * C, L)
        rows = np.repeat(np.arange(B * C), L_out)
        np.add.at(gx, (rows, pos.reshape(-1)), g.reshape(-1))
        x._accumulate(gx.reshape(B, C, L))

    return Tensor._result(out, (x,), backward)


def mean_pool1d(x, kernel, stride=None):
    x = _as_tensor(x)
    stride = kernel if stride is None else stride
    L_out = _pool_check(x, kernel, stride)
    B, C, L = x.shape
    windows = np.lib.stride_tricks.sliding_window_view(x.data, kernel, axis=-1)[:, :, ::stride]
    out = windows.mean(axis=-1)
    hi = (L_out - 1) * stride + 1

    def backward(g):
        gx = np.zeros_like(x.data)
        gk = g / kernel
        for k in range(kernel):
            gx[:, :, k: k + hi: stride] += gk
        x._accumulate(gx)

    return Tensor._result(out, (x,), backward)


# ---------------------------------------------------------------------------
# normalisation / regularisation
# ---------------------------------------------------------------------------

def batch_norm(x, gamma, beta, running_mean, running_var, train, momentum=0.1, eps=1e-5):
    """Per-channel batch normalisation over all non-channel axes.

    x: [B, C, ...]. running_mean/running_var are plain float arrays updated
    in place in train mode (new value weighted by `momentum`, variance
    unbiased); eval mode is a deterministic affine map using them.
    """
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    C = x.shape[1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise ShapeMismatch(f"gamma/beta must be shape ({C},)")
    axes = (0,) + tuple(range(2, x.ndim))
    bshape = (1, C) + (1,) * (x.ndim - 2)
    n = x.data.size // C

    if train:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if running_mean is not None:
            running_mean *= 1.0 - momentum
            running_mean += momentum * mu
            running_var *= 1.0 - momentum
            running_var += momentum * var * (n / max(n - 1, 1))
    else:
        mu = running_mean
        var = running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu.reshape(bshape)) * inv_std.reshape(bshape)
    out = gamma.data.reshape(bshape) * xhat + beta.data.reshape(bshape)
    sub = "bc" + "defg"[: x.ndim - 2]

    def backward(g):
        # per-channel fused reductions; reused for gamma/beta and the x term
        sum_g = np.einsum(f"{sub}->c", g)
        sum_gx = np.einsum(f"{sub},{sub}->c", g, xhat)
        if beta.requires_grad:
            beta._accumulate(sum_g)
        if gamma.requires_grad:
            gamma._accumulate(sum_gx)
        if x.requires_grad:
            coef = (gamma.data * inv_std).reshape(bshape)
            if train:
                gx = coef * g
                gx -= coef * (sum_g / n).reshape(bshape)
                gx -= xhat * (coef * (sum_gx / n).reshape(bshape))
            else:
                gx = coef * g
            x._accumulate(gx)

    return Tensor._result(out, (x, gamma, beta), backward)


def dropout(x, p, train, rng=None):
    """Inverted dropout: train-time scaling by 1/(1-p), eval is identity."""
    x = _as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise InvalidHyperparameter(f"dropout p must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return x
    if rng is None:
        raise InvalidHyperparameter("train-mode dropout with p > 0 needs an rng")
    mask = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    out = x.data * mask

    def backward(g):
        x._accumulate(g * mask)

    return Tensor._result(out, (x,), backward)


def weight_norm(v, g):
    """Reparameterise a conv weight as g * v / ||v||, norms per output filter."""
    v, g = _as_tensor(v), _as_tensor(g)
    F = v.shape[0]
    if g.shape != (F,):
        raise ShapeMismatch(f"weight_norm gain must be shape ({F},)")
    axes = tuple(range(1, v.ndim))
    bshape = (F,) + (1,) * (v.ndim - 1)
    norm = np.sqrt((v.data ** 2).sum(axis=axes))
    scale = (g.data / norm).reshape(bshape)
    out = v.data * scale

    def backward(grad):
        s = (grad * v.data).sum(axis=axes)
        if g.requires_grad:
            g._accumulate(s / norm)
        if v.requires_grad:
            gv = grad * scale - v.data * ((g.data * s / norm ** 3).reshape(bshape))
            v._accumulate(gv)

    return Tensor._result(out, (v, g), backward)


# ---------------------------------------------------------------------------
# activations / loss
# ---------------------------------------------------------------------------

def relu(x):
    x = _as_tensor(x)
    out = np.maximum(x.data, 0.0)

    def backward(g):
        x._accumulate(g * (x.data > 0))

    return Tensor._result(out, (x,), backward)


def elu(x, alpha=1.0):
    x = _as_tensor(x)
    neg = x.data < 0
    out = np.where(neg, alpha * np.expm1(x.data), x.data)

    def backward(g):
        x._accumulate(g * np.where(neg, out + alpha, 1.0))

    return Tensor._result(out, (x,), backward)


def softmax(x, axis=-1):
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        x._accumulate(out * (g - inner))

    return Tensor._result(out, (x,), backward)


def log_softmax(x, axis=-1):
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - lse

    def backward(g):
        x._accumulate(g - np.exp(out) * g.sum(axis=axis, keepdims=True))

    return Tensor._result(out, (x,), backward)


def nll_loss(log_probs, targets):
    """Mean of -log_probs[i, targets[i]] over the batch."""
    log_probs = _as_tensor(log_probs)
    targets = np.asarray(targets)
    if log_probs.ndim != 2 or targets.shape != (log_probs.shape[0],):
        raise ShapeMismatch(f"nll_loss expects [N,C] log-probs and [N] targets, got {log_probs.shape} / {targets.shape}")
    N = log_probs.shape[0]
    rows = np.arange(N)
    out = -log_probs.data[rows, targets].mean()

    def backward(g):
        gx = np.zeros_like(log_probs.data)
        gx[rows, targets] = -g / N
        log_probs._accumulate(gx)

    return Tensor._result(out, (log_probs,), backward)


def cross_entropy(logits, targets):
    """Mean categorical cross-entropy of [N, n_classes] logits."""
    logits = _as_tensor(logits)
    targets = np.asarray(targets)
    if logits.ndim != 2:
        raise ShapeMismatch(f"cross_entropy expects [N,C] logits, got {logits.shape}")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= logits.shape[1]:
        raise ShapeMismatch("targets out of class range")
    return nll_loss(log_softmax(logits, axis=1), targets)
