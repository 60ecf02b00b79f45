"""Versioned binary checkpoint container.

Layout: magic "EEGCKPT", format version u32, header length u64, a
sorted-key JSON header (arch id, model spec fields, solved config and its
digest, training provenance, array manifest), then the arrays as raw
little-endian float32 in manifest order. Saving what load() returned
reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ArchMismatch, MalformedHeader, NameMismatch, TruncatedFile
from ..models import ModelSpec, build

MAGIC = b"EEGCKPT"
VERSION = 1
_PRELUDE = struct.Struct("<7sIQ")


def config_digest(arch, config):
    text = json.dumps({"arch": arch, "config": config}, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


@dataclass
class Checkpoint:
    arch: str
    spec_fields: dict
    params: dict
    buffers: dict
    seed: int = 0
    epoch: int = 0
    valid_bac: float = 0.0
    optimizer: dict | None = None
    init_scheme: str = "glorot-uniform"

    @staticmethod
    def from_model(model, seed=0, epoch=0, valid_bac=0.0, optimizer=None):
        spec = model.spec
        spec_fields = {
            "arch": spec.arch, "n_channels": spec.n_channels,
            "n_classes": spec.n_classes,
            "input_window_samples": spec.input_window_samples,
            "drop_prob": spec.drop_prob, "arch_params": dict(spec.arch_params),
        }
        params = {k: np.array(t.data, dtype=np.float32)
                  for k, t in model.named_params().items()}
        buffers = {k: np.array(b, dtype=np.float32)
                   for k, b in model.named_buffers().items()}
        opt = None
        if optimizer is not None:
            opt = {"t": optimizer.t,
                   "m": {k: np.array(a, dtype=np.float32) for k, a in optimizer.m.items()},
                   "v": {k: np.array(a, dtype=np.float32) for k, a in optimizer.v.items()}}
        return Checkpoint(spec.arch, spec_fields, params, buffers,
                          seed=seed, epoch=epoch, valid_bac=valid_bac,
                          optimizer=opt)

    def model_spec(self):
        f = self.spec_fields
        return ModelSpec(arch=f["arch"], n_channels=f["n_channels"],
                         n_classes=f["n_classes"],
                         input_window_samples=f["input_window_samples"],
                         drop_prob=f["drop_prob"],
                         arch_params=dict(f["arch_params"]))

    def load_into(self, model):
        """Copy parameters and buffers into a built model, strictly by name."""
        if model.arch != self.arch:
            raise ArchMismatch(f"checkpoint is {self.arch!r}, model is {model.arch!r}")
        target = model.named_params()
        missing = sorted(set(target) - set(self.params))
        extra = sorted(set(self.params) - set(target))
        if missing or extra:
            raise NameMismatch(f"parameter names differ: missing {missing}, extra {extra}")
        for name, tensor in target.items():
            src = self.params[name]
            if tuple(src.shape) != tuple(tensor.shape):
                raise NameMismatch(f"{name}: checkpoint shape {src.shape} != {tensor.shape}")
            tensor.data[...] = src.astype(tensor.data.dtype)
        buffers = model.named_buffers()
        if sorted(buffers) != sorted(self.buffers):
            raise NameMismatch("buffer names differ")
        for name, buf in buffers.items():
            buf[...] = self.buffers[name].astype(buf.dtype)
        return model

    def build_model(self, dtype=np.float32):
        model = build(self.model_spec(), seed=self.seed, dtype=dtype)
        return self.load_into(model)

    # --- serialisation -----------------------------------------------------

    def save(self, path=None):
        spec = self.model_spec()
        header = {
            "arch": self.arch,
            "spec": self.spec_fields,
            "config": spec.config(),
            "digest": config_digest(self.arch, spec.config()),
            "seed": self.seed,
            "epoch": self.epoch,
            "valid_bac": self.valid_bac,
            "init_scheme": self.init_scheme,
            "params": [[k, list(self.params[k].shape)] for k in sorted(self.params)],
            "buffers": [[k, list(self.buffers[k].shape)] for k in sorted(self.buffers)],
            "optimizer": None if self.optimizer is None else {
                "t": self.optimizer["t"],
                "entries": [[k, list(self.optimizer["m"][k].shape)]
                            for k in sorted(self.optimizer["m"])],
            },
        }
        blob = json.dumps(header, sort_keys=True).encode()
        out = [_PRELUDE.pack(MAGIC, VERSION, len(blob)), blob]
        for k in sorted(self.params):
            out.append(np.ascontiguousarray(self.params[k], dtype="<f4").tobytes())
        for k in sorted(self.buffers):
            out.append(np.ascontiguousarray(self.buffers[k], dtype="<f4").tobytes())
        if self.optimizer is not None:
            for k in sorted(self.optimizer["m"]):
                out.append(np.ascontiguousarray(self.optimizer["m"][k], dtype="<f4").tobytes())
                out.append(np.ascontiguousarray(self.optimizer["v"][k], dtype="<f4").tobytes())
        data = b"".join(out)
        if path is not None:
            Path(path).write_bytes(data)
        return data

    @staticmethod
    def load(source):
        raw = Path(source).read_bytes() if isinstance(source, (str, Path)) else bytes(source)
        if len(raw) < _PRELUDE.size:
            raise TruncatedFile("checkpoint shorter than its prelude")
        magic, version, header_len = _PRELUDE.unpack_from(raw)
        if magic != MAGIC:
            raise MalformedHeader(f"bad checkpoint magic {magic!r}")
        if version != VERSION:
            raise MalformedHeader(f"unsupported checkpoint version {version}")
        if len(raw) < _PRELUDE.size + header_len:
            raise TruncatedFile("checkpoint ends inside the header")
        header = json.loads(raw[_PRELUDE.size:_PRELUDE.size + header_len])
        offset = _PRELUDE.size + header_len

        def take(shape):
            nonlocal offset
            count = int(np.prod(shape)) if shape else 1
            end = offset + 4 * count
            if len(raw) < end:
                raise TruncatedFile("checkpoint payload truncated")
            arr = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
            offset = end
            return arr.reshape(shape).copy()

        params = {k: take(shape) for k, shape in header["params"]}
        buffers = {k: take(shape) for k, shape in header["buffers"]}
        optimizer = None
        if header["optimizer"] is not None:
            m, v = {}, {}
            for k, shape in header["optimizer"]["entries"]:
                m[k] = take(shape)
                v[k] = take(shape)
            optimizer = {"t": header["optimizer"]["t"], "m": m, "v": v}
        return Checkpoint(header["arch"], header["spec"], params, buffers,
                          seed=header["seed"], epoch=header["epoch"],
                          valid_bac=header["valid_bac"], optimizer=optimizer,
                          init_scheme=header.get("init_scheme", "glorot-uniform"))
