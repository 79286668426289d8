"""Named-tensor checkpoints (``.wvfm``) and deterministic random init.

File layout, all little-endian::

    b"WVFM"                      magic
    u32                          format version (1)
    u32 x 10, f32                config: stride, enc_dim, dec_dim, chunk_frames,
                                 num_layers, kernel_size, num_classes, heads,
                                 ffn_dim, embed_hidden, sample_rate
    u32                          entry count
    per entry:
        u32 name length, UTF-8 name, u32 ndim, u32 dims..., f32 payload
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ModelConfig

MAGIC = b"WVFM"
VERSION = 1
_INT_FIELDS = ("stride", "enc_dim", "dec_dim", "chunk_frames", "num_layers",
               "kernel_size", "num_classes", "heads", "ffn_dim", "embed_hidden")
_CONFIG_STRUCT = struct.Struct("<10If")


class CheckpointError(Exception):
    pass


class CheckpointFormatError(CheckpointError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"at byte {offset}: {message}")
        self.offset = offset


class CheckpointValidationError(CheckpointError):
    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        detail = "; ".join(f"{k}: {v}" for k, v in sorted(self.problems.items()))
        super().__init__(f"{len(self.problems)} bad tensor(s): {detail}")


@dataclass
class NamedTensorSet:
    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value) -> None:
        self.tensors[name] = np.ascontiguousarray(value, dtype=np.float32)

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def copy(self) -> "NamedTensorSet":
        return NamedTensorSet(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def digest(self) -> str:
        h = hashlib.sha256()
        for name, arr in self.tensors.items():
            h.update(name.encode())
            h.update(np.asarray(arr.shape, dtype="<u4").tobytes())
            h.update(np.ascontiguousarray(arr, dtype="<f4").tobytes())
        return h.hexdigest()


def _attn_shapes(prefix: str, d: int) -> dict:
    shapes = {}
    for p in "qkvo":
        shapes[f"{prefix}.{p}.w"] = (d, d)
        shapes[f"{prefix}.{p}.b"] = (d,)
    return shapes


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every tensor the architecture needs, in canonical file order."""
    e, d, h, f = cfg.enc_dim, cfg.dec_dim, cfg.embed_hidden, cfg.ffn_dim
    span = cfg.frontend_kernel
    shapes: dict[str, tuple[int, ...]] = {
        "front.conv.w": (e, 1, span),
        "front.conv.b": (e,),
    }
    for i in range(cfg.num_layers):
        shapes[f"enc.layer{i}.conv.w"] = (e, e, cfg.kernel_size)
        shapes[f"enc.layer{i}.conv.b"] = (e,)
        shapes[f"enc.layer{i}.norm.g"] = (e,)
        shapes[f"enc.layer{i}.norm.b"] = (e,)
    shapes.update({
        "emb.fc1.w": (h, cfg.num_classes), "emb.fc1.b": (h,),
        "emb.fc2.w": (h, h), "emb.fc2.b": (h,),
        "emb.fc3.w": (e, h), "emb.fc3.b": (e,),
        "dec.proj_self.w": (d, e), "dec.proj_self.b": (d,),
        "dec.proj_cross.w": (d, e), "dec.proj_cross.b": (d,),
    })
    shapes.update(_attn_shapes("dec.xform.self_attn", d))
    shapes.update(_attn_shapes("dec.xform.cross_attn", d))
    for n in (1, 2, 3):
        shapes[f"dec.xform.norm{n}.g"] = (d,)
        shapes[f"dec.xform.norm{n}.b"] = (d,)
    shapes.update({
        "dec.xform.ffn.fc1.w": (f, d), "dec.xform.ffn.fc1.b": (f,),
        "dec.xform.ffn.fc2.w": (d, f), "dec.xform.ffn.fc2.b": (d,),
        "dec.proj_out.w": (e, d), "dec.proj_out.b": (e,),
        "back.deconv.w": (e, 1, span),
        "back.deconv.b": (1,),
    })
    return shapes


def validate(tset: NamedTensorSet) -> None:
    """Raise :class:`CheckpointValidationError` listing every offender."""
    expected = parameter_shapes(tset.config)
    problems = {}
    for name, shape in expected.items():
        if name not in tset.tensors:
            problems[name] = "missing"
        elif tuple(tset.tensors[name].shape) != shape:
            problems[name] = f"shape {tuple(tset.tensors[name].shape)}, expected {shape}"
    for name in tset.tensors:
        if name not in expected:
            problems[name] = "unexpected tensor"
    if problems:
        raise CheckpointValidationError(problems)


def to_bytes(tset: NamedTensorSet) -> bytes:
    cfg = tset.config
    parts = [MAGIC, struct.pack("<I", VERSION),
             _CONFIG_STRUCT.pack(*(getattr(cfg, k) for k in _INT_FIELDS), cfg.sample_rate),
             struct.pack("<I", len(tset.tensors))]
    for name, arr in tset.tensors.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointFormatError(self.pos, f"truncated while reading {what}")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def from_bytes(data: bytes, check: bool = True) -> NamedTensorSet:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise CheckpointFormatError(0, "bad magic, not a .wvfm file")
    version_at = r.pos
    version = r.u32("version")
    if version != VERSION:
        raise CheckpointFormatError(version_at, f"unsupported format version {version}")
    config_at = r.pos
    *ints, fs = _CONFIG_STRUCT.unpack(r.take(_CONFIG_STRUCT.size, "config block"))
    try:
        cfg = ModelConfig(**dict(zip(_INT_FIELDS, ints)), sample_rate=fs)
    except ValueError as exc:
        raise CheckpointFormatError(config_at, f"invalid config: {exc}") from None
    count = r.u32("entry count")
    tensors = {}
    for _ in range(count):
        entry_at = r.pos
        name_len = r.u32("name length")
        try:
            name = r.take(name_len, "name").decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError(entry_at + 4, "tensor name is not UTF-8") from None
        if name in tensors:
            raise CheckpointFormatError(entry_at, f"duplicate tensor {name!r}")
        ndim = r.u32("ndim")
        dims = tuple(r.u32("dims") for _ in range(ndim))
        n = int(np.prod(dims, dtype=np.int64))
        payload = r.take(4 * n, f"payload of {name!r}")
        tensors[name] = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(dims)
    if r.pos != len(data):
        raise CheckpointFormatError(r.pos, "trailing bytes after last entry")
    tset = NamedTensorSet(cfg, tensors)
    if check:
        validate(tset)
    return tset


def save(tset: NamedTensorSet, path) -> None:
    Path(path).write_bytes(to_bytes(tset))


def load(path, check: bool = True) -> NamedTensorSet:
    return from_bytes(Path(path).read_bytes(), check=check)


# --- deterministic initialization -------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK64 = (1 << 64) - 1


def _splitmix64_scalar(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def splitmix64_stream(state: int, n: int) -> np.ndarray:
    """First ``n`` outputs of splitmix64 started from ``state``.

    splitmix64 output ``i`` is ``mix(state + (i+1)*golden)``, so the whole
    stream is computed with wrapping uint64 array arithmetic.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(state) + np.arange(1, n + 1, dtype=np.uint64) * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _fans(shape: tuple[int, ...]) -> tuple[int, int]:
    if len(shape) == 1:
        return shape[0], shape[0]
    receptive = int(np.prod(shape[2:], dtype=np.int64)) if len(shape) > 2 else 1
    return shape[1] * receptive, shape[0] * receptive


def init_bound(shape: tuple[int, ...]) -> np.float32:
    """Largest float32 not above sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = _fans(shape)
    exact = np.sqrt(6.0 / (fan_in + fan_out))
    b = np.float32(exact)
    if float(b) > exact:
        b = np.nextafter(b, np.float32(0))
    return b


def uniform_tensor(name: str, shape: tuple[int, ...], seed: int) -> np.ndarray:
    state = _splitmix64_scalar(seed & _MASK64) ^ _fnv1a64(name.encode("utf-8"))
    n = int(np.prod(shape, dtype=np.int64))
    bits = splitmix64_stream(state, n) >> np.uint64(41)   # 23 random bits
    # (2u - 1) with u = bits / 2**23; the numerator fits a float32 mantissa exactly
    unit = ((bits.astype(np.int64) * 2 - (1 << 23)).astype(np.float32)
            / np.float32(1 << 23))
    return (unit * init_bound(shape)).astype(np.float32).reshape(shape)


def random_init(cfg: ModelConfig, seed: int) -> NamedTensorSet:
    """Uniform Xavier-style weights from per-tensor splitmix64 streams.

    Each tensor's stream is keyed by (seed, tensor name), so adding a tensor
    never changes the values of existing ones. Layer-norm gains are
    ``1 + U(-bound, bound)``; every other tensor is ``U(-bound, bound)``.
    Gains near zero would shrink each residual branch enough that the
    deepest encoder taps fall below float32 resolution.
    """
    tensors = {}
    for name, shape in parameter_shapes(cfg).items():
        t = uniform_tensor(name, shape, seed)
        if is_norm_gain(name):
            t = (t + np.float32(1)).astype(np.float32)
        tensors[name] = t
    return NamedTensorSet(cfg, tensors)


def is_norm_gain(name: str) -> bool:
    return ".norm" in name and name.endswith(".g")
