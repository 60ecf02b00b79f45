"""The four convolutional architectures, pinned to exact parameter counts.

Canonical configuration (21 channels, 2 classes):

    arch        params   receptive field
    eegnet        2018   571
    shallownet   36722   603
    deep4net    277052   601
    tcn         456502   931

Internal hyperparameters were reconstructed from the architectures' design
papers and the remaining free dimensions solved so the canonical parameter
counts hold exactly while the receptive field stays near 600 samples (900
for the TCN): the ShallowNet pools with stride 21 and the Deep4Net with a
length-7 window, everything else is the published layout. The receptive
field of a model is the smallest window that yields one dense prediction.

Models consume [batch, n_channels, window] arrays and emit dense per-crop
logits [batch, n_classes, n_positions].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch, UnknownArch, WindowTooShort
from ..numcore import Tensor
from ..numcore import functional as F

ARCH_IDS = ("eegnet", "shallownet", "deep4net", "tcn")

EEGNET_CONFIG = {
    "n_filters_time": 8, "depth_multiplier": 2, "n_filters_sep": 16,
    "kernel_length": 64, "sep_kernel_length": 16,
    "pool1": 4, "pool2": 8, "classifier_length": 18, "drop_prob": 0.25,
}
SHALLOWNET_CONFIG = {
    "n_filters_time": 40, "filter_time_length": 25, "n_filters_spat": 40,
    "pool_length": 75, "pool_stride": 21, "classifier_length": 25, "drop_prob": 0.5,
}
DEEP4NET_CONFIG = {
    "n_filters": (25, 50, 100, 200), "filter_length": 10,
    "pool_length": 7, "pool_stride": 3, "classifier_length": 1, "drop_prob": 0.5,
}
TCN_CONFIG = {
    "n_blocks": 5, "n_filters": 55, "kernel_size": 16, "drop_prob": 0.0527015,
}

_ARCH_CONFIGS = {
    "eegnet": EEGNET_CONFIG,
    "shallownet": SHALLOWNET_CONFIG,
    "deep4net": DEEP4NET_CONFIG,
    "tcn": TCN_CONFIG,
}


@dataclass
class ModelSpec:
    arch: str
    n_channels: int = 21
    n_classes: int = 2
    input_window_samples: int | None = None
    drop_prob: float | None = None
    arch_params: dict = field(default_factory=dict)

    def config(self):
        if self.arch not in _ARCH_CONFIGS:
            raise UnknownArch(f"unknown architecture {self.arch!r}, expected one of {ARCH_IDS}")
        cfg = dict(_ARCH_CONFIGS[self.arch])
        cfg.update(self.arch_params)
        if self.drop_prob is not None:
            cfg["drop_prob"] = self.drop_prob
        return cfg


class _Ctx:
    """Per-forward state: train flag, dropout rng, activation capture."""

    __slots__ = ("train", "rng", "capture", "wanted")

    def __init__(self, train, rng, wanted=None):
        self.train = train
        self.rng = rng
        self.capture = {}
        self.wanted = wanted

    def record(self, name, out):
        if self.wanted is not None and name in self.wanted:
            self.capture[name] = out.data


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

class _Layer:
    """One named operation; subclasses override forward and geometry."""

    def __init__(self, name):
        self.name = name

    def params(self):
        return {}

    def buffers(self):
        return {}

    def forward(self, x, ctx):
        raise NotImplementedError

    def out_len(self, n):
        return n


class _Lift(_Layer):
    # [B, C, L] -> [B, 1, C, L]
    def forward(self, x, ctx):
        B, C, L = x.shape
        return x.reshape(B, 1, C, L)


class _Squeeze(_Layer):
    # [B, F, 1, L] -> [B, F, L]
    def forward(self, x, ctx):
        B, Fc, H, L = x.shape
        if H != 1:
            raise ShapeMismatch(f"expected collapsed spatial axis, got H={H}")
        return x.reshape(B, Fc, L)


class _Fold(_Layer):
    # [B, C, L] -> [B*C, 1, L]: shared temporal filter per electrode
    def forward(self, x, ctx):
        B, C, L = x.shape
        return x.reshape(B * C, 1, L)


class _Unfold(_Layer):
    # [B*C, F, L] -> [B, C*F, L]
    def __init__(self, name, n_channels):
        super().__init__(name)
        self.n_channels = n_channels

    def forward(self, x, ctx):
        BC, Fc, L = x.shape
        B = BC // self.n_channels
        return x.reshape(B, self.n_channels * Fc, L)


class _Conv1d(_Layer):
    def __init__(self, name, in_ch, out_ch, kernel, rng, dtype, stride=1, dilation=1,
                 groups=1, bias=True, causal=False, padding=0, normed=False):
        super().__init__(name)
        self.stride, self.dilation, self.groups = stride, dilation, groups
        self.causal, self.padding, self.normed = causal, padding, normed
        shape = (out_ch, in_ch // groups, kernel)
        w = _glorot(rng, shape, dtype)
        if normed:
            self.weight_v = Tensor(w, requires_grad=True)
            norms = np.sqrt((w ** 2).sum(axis=(1, 2)))
            self.weight_g = Tensor(norms.astype(dtype), requires_grad=True)
        else:
            self.weight = Tensor(w, requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True) if bias else None
        self.kernel = kernel

    def params(self):
        out = {}
        if self.normed:
            out["weight_v"] = self.weight_v
            out["weight_g"] = self.weight_g
        else:
            out["weight"] = self.weight
        if self.bias is not None:
            out["bias"] = self.bias
        return out

    def forward(self, x, ctx):
        w = F.weight_norm(self.weight_v, self.weight_g) if self.normed else self.weight
        return F.conv1d(x, w, self.bias, stride=self.stride, dilation=self.dilation,
                        groups=self.groups, causal=self.causal, padding=self.padding)

    def out_len(self, n):
        if self.causal:
            return n
        span = self.dilation * (self.kernel - 1) + 1
        n = n + 2 * self.padding
        return (n - span) // self.stride + 1 if n >= span else 0


class _Conv2d(_Layer):
    def __init__(self, name, in_ch, out_ch, kernel, rng, dtype,
                 groups=1, bias=True, padding=(0, 0)):
        super().__init__(name)
        self.kernel, self.groups, self.pad = kernel, groups, padding
        shape = (out_ch, in_ch // groups) + kernel
        self.weight = Tensor(_glorot(rng, shape, dtype), requires_grad=True)
        self.bias = Tensor(np.zeros(out_ch, dtype=dtype), requires_grad=True) if bias else None

    def params(self):
        out = {"weight": self.weight}
        if self.bias is not None:
            out["bias"] = self.bias
        return out

    def forward(self, x, ctx):
        return F.conv2d(x, self.weight, self.bias, groups=self.groups, padding=self.pad)

    def out_len(self, n):
        n = n + 2 * self.pad[1]
        return n - self.kernel[1] + 1 if n >= self.kernel[1] else 0


class _BatchNorm(_Layer):
    def __init__(self, name, n_features, dtype, momentum=0.1, eps=1e-5):
        super().__init__(name)
        self.momentum, self.eps = momentum, eps
        self.gamma = Tensor(np.ones(n_features, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(n_features, dtype=dtype), requires_grad=True)
        self.running_mean = np.zeros(n_features, dtype=dtype)
        self.running_var = np.ones(n_features, dtype=dtype)

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def set_buffer(self, key, value):
        getattr(self, key)[...] = value

    def forward(self, x, ctx):
        return F.batch_norm(x, self.gamma, self.beta, self.running_mean,
                            self.running_var, train=ctx.train,
                            momentum=self.momentum, eps=self.eps)


class _Elu(_Layer):
    def forward(self, x, ctx):
        return F.elu(x)


class _Relu(_Layer):
    def forward(self, x, ctx):
        return F.relu(x)


class _MaxPool(_Layer):
    def __init__(self, name, kernel, stride):
        super().__init__(name)
        self.kernel, self.stride = kernel, stride

    def forward(self, x, ctx):
        return F.max_pool1d(x, self.kernel, self.stride)

    def out_len(self, n):
        return (n - self.kernel) // self.stride + 1 if n >= self.kernel else 0


class _MeanPool(_MaxPool):
    def forward(self, x, ctx):
        return F.mean_pool1d(x, self.kernel, self.stride)


class _Dropout(_Layer):
    def __init__(self, name, p):
        super().__init__(name)
        self.p = p

    def forward(self, x, ctx):
        return F.dropout(x, self.p, train=ctx.train, rng=ctx.rng)


class _Block:
    """A named group of layers; its output is the probe point for CKA."""

    def __init__(self, name, layers):
        self.name = name
        self.layers = layers

    def forward(self, x, ctx):
        for layer in self.layers:
            x = layer.forward(x, ctx)
            ctx.record(f"{self.name}.{layer.name}", x)
        ctx.record(self.name, x)
        return x

    def named_layers(self):
        for layer in self.layers:
            yield f"{self.name}.{layer.name}", layer

    def out_len(self, n):
        for layer in self.layers:
            n = layer.out_len(n)
            if n <= 0:
                return 0
        return n


class _TcnBlock(_Block):
    """Two weight-normed causal convolutions with a residual connection."""

    def __init__(self, name, layers, downsample):
        super().__init__(name, layers)
        self.downsample = downsample

    def forward(self, x, ctx):
        res = self.downsample.forward(x, ctx) if self.downsample is not None else x
        out = x
        for layer in self.layers:
            out = layer.forward(out, ctx)
            ctx.record(f"{self.name}.{layer.name}", out)
        out = F.relu(out + res)
        ctx.record(self.name, out)
        return out

    def named_layers(self):
        yield from super().named_layers()
        if self.downsample is not None:
            yield f"{self.name}.{self.downsample.name}", self.downsample


class _SliceTail(_Layer):
    # keep only output positions with a full receptive field
    def __init__(self, name, drop):
        super().__init__(name)
        self.drop = drop

    def forward(self, x, ctx):
        return x[:, :, self.drop:]

    def out_len(self, n):
        return max(n - self.drop, 0)


def _glorot(rng, shape, dtype):
    fan_in = int(np.prod(shape[1:]))
    fan_out = shape[0] * int(np.prod(shape[2:]))
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


# ---------------------------------------------------------------------------
# model graph
# ---------------------------------------------------------------------------

class ModelGraph:
    def __init__(self, spec, blocks, seed, dtype):
        self.spec = spec
        self.arch = spec.arch
        self.blocks = blocks
        self.seed = seed
        self.dtype = dtype
        self.config = spec.config()
        self._rf = None

    # --- parameters -------------------------------------------------------

    def named_params(self):
        out = {}
        for block in self.blocks:
            for lname, layer in block.named_layers():
                for pname, tensor in layer.params().items():
                    out[f"{lname}.{pname}"] = tensor
        return out

    def named_buffers(self):
        out = {}
        for block in self.blocks:
            for lname, layer in block.named_layers():
                for bname, buf in layer.buffers().items():
                    out[f"{lname}.{bname}"] = buf
        return out

    @property
    def n_params(self):
        return sum(t.size for t in self.named_params().values())

    def parameter_summary(self):
        """Per-tensor breakdown so any count mismatch is diagnosable."""
        rows = [(name, tuple(t.shape), t.size) for name, t in self.named_params().items()]
        rows.append(("TOTAL", (), sum(r[2] for r in rows)))
        return rows

    def layer_groups(self):
        """Parameter-name groups in depth order (input-most first)."""
        groups = []
        for block in self.blocks:
            names = []
            for lname, layer in block.named_layers():
                names.extend(f"{lname}.{pname}" for pname in layer.params())
            if names:
                groups.append((block.name, names))
        return groups

    # --- geometry -----------------------------------------------------------

    def n_outputs(self, window):
        n = window
        for block in self.blocks:
            n = block.out_len(n)
            if n <= 0:
                return 0
        return n

    @property
    def receptive_field(self):
        if self._rf is None:
            w = 1
            while self.n_outputs(w) < 1:
                w += 1
                if w > 1 << 20:
                    raise RuntimeError("receptive-field search diverged")
            self._rf = w
        return self._rf

    @property
    def output_stride(self):
        """Input-sample spacing between consecutive dense output positions."""
        rf = self.receptive_field
        w = rf + 1
        while self.n_outputs(w) < 2:
            w += 1
        return w - rf

    # --- forward ------------------------------------------------------------

    def forward(self, x, train=False, rng=None, capture=None):
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        if x.ndim != 3 or x.shape[1] != self.spec.n_channels:
            raise ShapeMismatch(
                f"expected [B, {self.spec.n_channels}, W] input, got {x.shape}")
        if x.shape[2] < self.receptive_field:
            raise WindowTooShort(
                f"window {x.shape[2]} < receptive field {self.receptive_field}")
        wanted = set(capture) if capture is not None else None
        ctx = _Ctx(train, rng, wanted)
        out = x
        for block in self.blocks:
            out = block.forward(out, ctx)
        B = out.shape[0]
        if out.ndim == 4:
            out = out.reshape(B, out.shape[1], out.shape[3])
        if capture is not None:
            return out, ctx.capture
        return out

    def capturable_names(self):
        names = []
        for block in self.blocks:
            for lname, _ in block.named_layers():
                names.append(lname)
            names.append(block.name)
        return names

    def probe_names(self):
        """Block-output names, the default probe points for similarity maps."""
        return [block.name for block in self.blocks]


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build(spec, seed, dtype=np.float32):
    """Construct a ModelGraph with Glorot-uniform init, deterministic in seed."""
    cfg = spec.config()
    rng = np.random.default_rng(seed)
    builder = {
        "eegnet": _build_eegnet,
        "shallownet": _build_shallownet,
        "deep4net": _build_deep4net,
        "tcn": _build_tcn,
    }[spec.arch]
    model = ModelGraph(spec, builder(spec, cfg, rng, dtype), seed, dtype)
    if spec.input_window_samples is not None and spec.input_window_samples < model.receptive_field:
        raise WindowTooShort(
            f"input_window_samples {spec.input_window_samples} < receptive field "
            f"{model.receptive_field}")
    return model


def receptive_field(spec):
    return build(spec, seed=0).receptive_field


def _build_eegnet(spec, cfg, rng, dtype):
    f1, d = cfg["n_filters_time"], cfg["depth_multiplier"]
    f2 = cfg["n_filters_sep"]
    kl, sk = cfg["kernel_length"], cfg["sep_kernel_length"]
    p = cfg["drop_prob"]
    block0 = _Block("block0", [
        _Lift("lift"),
        _Conv2d("conv_temporal", 1, f1, (1, kl), rng, dtype, bias=False,
                padding=(0, kl // 2)),
        _BatchNorm("bnorm_temporal", f1, dtype),
        _Conv2d("conv_spatial", f1, f1 * d, (spec.n_channels, 1), rng, dtype,
                groups=f1, bias=False),
        _BatchNorm("bnorm_spatial", f1 * d, dtype),
        _Elu("elu"),
        _Squeeze("squeeze"),
        _MeanPool("pool", cfg["pool1"], cfg["pool1"]),
        _Dropout("drop", p),
    ])
    block1 = _Block("block1", [
        _Conv1d("conv_separable_depth", f1 * d, f1 * d, sk, rng, dtype,
                groups=f1 * d, bias=False, padding=sk // 2),
        _Conv1d("conv_separable_point", f1 * d, f2, 1, rng, dtype, bias=False),
        _BatchNorm("bnorm", f2, dtype),
        _Elu("elu"),
        _MeanPool("pool", cfg["pool2"], cfg["pool2"]),
        _Dropout("drop", p),
    ])
    classifier = _Block("classifier", [
        _Conv1d("conv", f2, spec.n_classes, cfg["classifier_length"], rng, dtype),
    ])
    return [block0, block1, classifier]


def _build_shallownet(spec, cfg, rng, dtype):
    ft, fs = cfg["n_filters_time"], cfg["n_filters_spat"]
    p = cfg["drop_prob"]
    block0 = _Block("block0", [
        _Fold("fold"),
        _Conv1d("conv_temporal", 1, ft, cfg["filter_time_length"], rng, dtype),
        _Unfold("unfold", spec.n_channels),
        _Conv1d("conv_spatial", spec.n_channels * ft, fs, 1, rng, dtype, bias=False),
        _BatchNorm("bnorm", fs, dtype),
        _Elu("elu"),
        _MaxPool("pool", cfg["pool_length"], cfg["pool_stride"]),
        _Dropout("drop", p),
    ])
    classifier = _Block("classifier", [
        _Conv1d("conv", fs, spec.n_classes, cfg["classifier_length"], rng, dtype),
    ])
    return [block0, classifier]


def _build_deep4net(spec, cfg, rng, dtype):
    f0, f1, f2, f3 = cfg["n_filters"]
    k = cfg["filter_length"]
    pl, ps = cfg["pool_length"], cfg["pool_stride"]
    p = cfg["drop_prob"]
    block0 = _Block("block0", [
        _Fold("fold"),
        _Conv1d("conv_temporal", 1, f0, k, rng, dtype),
        _Unfold("unfold", spec.n_channels),
        _Conv1d("conv_spatial", spec.n_channels * f0, f0, 1, rng, dtype, bias=False),
        _BatchNorm("bnorm", f0, dtype),
        _Elu("elu"),
        _MaxPool("pool", pl, ps),
    ])
    blocks = [block0]
    for i, (fin, fout) in enumerate(((f0, f1), (f1, f2), (f2, f3)), start=1):
        blocks.append(_Block(f"block{i}", [
            _Dropout("drop", p),
            _Conv1d("conv", fin, fout, k, rng, dtype, bias=False),
            _BatchNorm("bnorm", fout, dtype),
            _Elu("elu"),
            _MaxPool("pool", pl, ps),
        ]))
    blocks.append(_Block("classifier", [
        _Conv1d("conv", f3, spec.n_classes, cfg["classifier_length"], rng, dtype),
    ]))
    return blocks


def _build_tcn(spec, cfg, rng, dtype):
    nf, k = cfg["n_filters"], cfg["kernel_size"]
    p = cfg["drop_prob"]
    blocks = []
    rf_drop = 0
    for i in range(cfg["n_blocks"]):
        dilation = 2 ** i
        in_ch = spec.n_channels if i == 0 else nf
        layers = [
            _Conv1d("conv1", in_ch, nf, k, rng, dtype, dilation=dilation,
                    causal=True, normed=True),
            _Relu("relu1"),
            _Dropout("drop1", p),
            _Conv1d("conv2", nf, nf, k, rng, dtype, dilation=dilation,
                    causal=True, normed=True),
            _Relu("relu2"),
            _Dropout("drop2", p),
        ]
        downsample = None
        if in_ch != nf:
            downsample = _Conv1d("downsample", in_ch, nf, 1, rng, dtype)
        blocks.append(_TcnBlock(f"block{i}", layers, downsample))
        rf_drop += 2 * (k - 1) * dilation
    blocks.append(_Block("classifier", [
        _SliceTail("valid", rf_drop),
        _Conv1d("conv", nf, spec.n_classes, 1, rng, dtype),
    ]))
    return blocks
