"""Shared test oracles: finite differences and naive reference ops."""

import numpy as np

from eegpath.numcore import Tensor


def finite_diff_grad(fn, arrays, h=1e-5):
    """Central-difference gradient of scalar fn w.r.t. each array (f64)."""
    grads = []
    for i, a in enumerate(arrays):
        g = np.zeros_like(a, dtype=np.float64)
        flat = a.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = fn(arrays)
            flat[j] = orig - h
            down = fn(arrays)
            flat[j] = orig
            gflat[j] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def check_gradients(build_loss, arrays, h=1e-5, rtol=1e-4):
    """Compare autodiff grads of build_loss against central differences.

    build_loss takes a list of Tensors (requires_grad) and returns a scalar
    Tensor. Arrays must be float64. Returns the worst relative error.
    """
    tensors = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    loss = build_loss(tensors)
    loss.backward()

    def eval_fn(arrs):
        ts = [Tensor(a) for a in arrs]
        return build_loss(ts).item()

    fd = finite_diff_grad(eval_fn, [a.copy() for a in arrays], h=h)
    worst = 0.0
    for t, g_fd in zip(tensors, fd):
        g_ad = t.grad
        assert g_ad is not None, "missing gradient"
        # FD truncation noise scales with the gradient magnitude of the whole
        # tensor, so entries far below that scale are checked absolutely.
        scale = max(1.0, np.abs(g_fd).max())
        floor = 1e-4 * scale
        denom = np.maximum(np.abs(g_fd), np.abs(g_ad))
        significant = denom >= floor
        diff = np.abs(g_ad - g_fd)
        assert diff[~significant].max(initial=0.0) < floor, "near-zero gradient entries disagree"
        if significant.any():
            rel = diff[significant] / denom[significant]
            worst = max(worst, rel.max())
    assert worst < rtol, f"gradient mismatch: worst relative error {worst:.3e}"
    return worst


def naive_conv1d(x, w, bias=None, stride=1, dilation=1, groups=1, left_pad=0, right_pad=0):
    """Direct nested-loop 1-D convolution, independent of the tensor engine."""
    B, C, L = x.shape
    F, Cg, K = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (left_pad, right_pad)))
    L_pad = L + left_pad + right_pad
    span = dilation * (K - 1) + 1
    L_out = (L_pad - span) // stride + 1
    out = np.zeros((B, F, L_out))
    cg = C // groups
    fg = F // groups
    for b in range(B):
        for f in range(F):
            grp = f // fg
            for l in range(L_out):
                acc = 0.0
                for c in range(cg):
                    for k in range(K):
                        acc += xp[b, grp * cg + c, l * stride + k * dilation] * w[f, c, k]
                out[b, f, l] = acc + (bias[f] if bias is not None else 0.0)
    return out
