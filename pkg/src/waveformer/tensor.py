"""Dense numeric kernels on (channels, frames) arrays.

Every kernel accumulates in float64 and returns float32. Weights may be
passed as float32 or float64; float64 copies are used as-is, which lets a
model convert its parameters once instead of on every call.

Multiply-accumulate operations of the conv/linear/attention cores are
reported to any counter opened with :func:`count_macs`.
"""

from __future__ import annotations

import threading
from collections import Counter
from contextlib import contextmanager

import numpy as np

LAYER_NORM_EPS = 1e-5

_local = threading.local()


class MacCounter:
    """Running multiply-accumulate tally, broken down by kernel name."""

    def __init__(self):
        self.by_op = Counter()

    @property
    def total(self) -> int:
        return sum(self.by_op.values())

    def add(self, op: str, n: int) -> None:
        self.by_op[op] += int(n)


@contextmanager
def count_macs():
    """Count MACs performed by kernels on this thread inside the block.

    >>> with count_macs() as c:
    ...     _ = linear(np.ones((2, 3)), np.ones((4, 2)), np.zeros(4))
    >>> c.total
    24
    """
    counter = MacCounter()
    stack = getattr(_local, "counters", None)
    if stack is None:
        stack = _local.counters = []
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.remove(counter)


def _tally(op: str, n: int) -> None:
    for c in getattr(_local, "counters", ()):
        c.add(op, n)


def _as2d(x, name: str) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-D (channels, frames), got shape {x.shape}")
    return x


def _f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def conv1d(x, w, b=None, *, stride: int = 1, dilation: int = 1,
           left_pad: int = 0, right_pad: int = 0) -> np.ndarray:
    """1-D convolution (cross-correlation) with explicit zero padding.

    ``x`` is (in_channels, frames), ``w`` is (out, in, kernel). Output frame
    ``t`` of channel ``o`` is ``b[o] + sum_{i,j} w[o,i,j] * xp[i, t*stride + j*dilation]``
    where ``xp`` is ``x`` with ``left_pad``/``right_pad`` zero frames added.
    """
    x = _as2d(x, "input")
    w = np.asarray(w)
    if w.ndim != 3:
        raise ValueError(f"conv weights must be (out, in, kernel), got {w.shape}")
    out_ch, in_ch, kernel = w.shape
    if x.shape[0] != in_ch:
        raise ValueError(f"input has {x.shape[0]} channels, weights expect {in_ch}")
    if x.shape[1] == 0:
        raise ValueError("zero-length input")
    if min(stride, dilation, kernel) < 1 or min(left_pad, right_pad) < 0:
        raise ValueError("stride, dilation and kernel must be >= 1; padding >= 0")
    if b is not None and np.shape(b) != (out_ch,):
        raise ValueError(f"bias must have length {out_ch}, got {np.shape(b)}")

    padded_len = x.shape[1] + left_pad + right_pad
    span = dilation * (kernel - 1) + 1
    if padded_len < span:
        raise ValueError(f"padded length {padded_len} shorter than kernel span {span}")
    n_out = (padded_len - span) // stride + 1

    xp = np.zeros((in_ch, padded_len))
    xp[:, left_pad:left_pad + x.shape[1]] = x
    # (in, kernel, n_out) gather of the taps feeding each output frame
    idx = np.arange(kernel)[:, None] * dilation + np.arange(n_out)[None, :] * stride
    taps = xp[:, idx].reshape(in_ch * kernel, n_out)
    y = _f64(w).reshape(out_ch, in_ch * kernel) @ taps
    if b is not None:
        y += _f64(b)[:, None]
    _tally("conv1d", out_ch * in_ch * kernel * n_out)
    return y.astype(np.float32)


def conv_transpose1d(x, w, b=None, *, stride: int = 1) -> np.ndarray:
    """Transposed 1-D convolution as overlap-add synthesis.

    ``x`` is (in_channels, frames) and ``w`` is (in, out, kernel). Frame ``t``
    writes ``kernel`` samples starting at ``t*stride``; overlapping
    contributions sum. Output is (out, (frames-1)*stride + kernel).
    """
    x = _as2d(x, "input")
    w = np.asarray(w)
    if w.ndim != 3:
        raise ValueError(f"transposed conv weights must be (in, out, kernel), got {w.shape}")
    in_ch, out_ch, kernel = w.shape
    if x.shape[0] != in_ch:
        raise ValueError(f"input has {x.shape[0]} channels, weights expect {in_ch}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if b is not None and np.shape(b) != (out_ch,):
        raise ValueError(f"bias must have length {out_ch}, got {np.shape(b)}")
    n_in = x.shape[1]
    n_out = (n_in - 1) * stride + kernel if n_in else 0

    # (out, kernel, frames): the sample block each frame scatters
    blocks = np.tensordot(_f64(w), _f64(x), axes=([0], [0]))
    y = np.zeros((out_ch, n_out))
    for j in range(kernel):
        y[:, j:j + (n_in - 1) * stride + 1:stride] += blocks[:, j, :]
    if b is not None:
        y += _f64(b)[:, None]
    _tally("conv_transpose1d", in_ch * out_ch * kernel * n_in)
    return y.astype(np.float32)


def layer_norm(x, gain, bias, eps: float = LAYER_NORM_EPS) -> np.ndarray:
    """Normalize each frame over the channel axis, then scale and shift."""
    x = _as2d(x, "input")
    rows = x.shape[0]
    if rows == 0:
        raise ValueError("layer_norm needs at least one channel")
    if np.shape(gain) != (rows,) or np.shape(bias) != (rows,):
        raise ValueError(f"gain/bias must have length {rows}")
    xd = _f64(x)
    centered = xd - xd.mean(axis=0, keepdims=True)
    var = np.mean(centered * centered, axis=0, keepdims=True)
    y = centered / np.sqrt(var + eps)
    y = y * _f64(gain)[:, None] + _f64(bias)[:, None]
    return y.astype(np.float32)


def linear(x, w, b=None) -> np.ndarray:
    """Per-frame affine map: ``w @ x + b`` with ``w`` shaped (out, in)."""
    x = _as2d(x, "input")
    w = np.asarray(w)
    if w.ndim != 2 or w.shape[1] != x.shape[0]:
        raise ValueError(f"weights {w.shape} incompatible with input {x.shape}")
    if b is not None and np.shape(b) != (w.shape[0],):
        raise ValueError(f"bias must have length {w.shape[0]}, got {np.shape(b)}")
    y = _f64(w) @ _f64(x)
    if b is not None:
        y += _f64(b)[:, None]
    _tally("linear", w.shape[0] * w.shape[1] * x.shape[1])
    return y.astype(np.float32)


def relu(x) -> np.ndarray:
    return np.maximum(np.asarray(x, dtype=np.float32), np.float32(0))


def _split_heads(x: np.ndarray, heads: int) -> np.ndarray:
    # (channels, frames) -> (heads, frames, head_dim)
    c, t = x.shape
    return x.reshape(heads, c // heads, t).transpose(0, 2, 1)


def attention_weights(queries, keys, heads: int) -> np.ndarray:
    """Softmax attention weights, shape (heads, query_frames, key_frames)."""
    q = _as2d(queries, "queries")
    k = _as2d(keys, "keys")
    if q.shape[0] != k.shape[0]:
        raise ValueError(f"query/key channel mismatch: {q.shape[0]} vs {k.shape[0]}")
    if heads < 1 or q.shape[0] % heads:
        raise ValueError(f"{q.shape[0]} channels not divisible into {heads} heads")
    if k.shape[1] == 0:
        raise ValueError("attention needs at least one key frame")
    head_dim = q.shape[0] // heads
    qh = _split_heads(_f64(q), heads)
    kh = _split_heads(_f64(k), heads)
    scores = qh @ kh.transpose(0, 2, 1) / np.sqrt(head_dim)
    scores -= scores.max(axis=-1, keepdims=True)
    p = np.exp(scores)
    p /= p.sum(axis=-1, keepdims=True)
    return p


def attention(queries, keys, values, heads: int) -> np.ndarray:
    """Multi-head scaled dot-product attention on projected inputs.

    All inputs are (channels, frames); keys and values share a frame count.
    Returns (value_channels, query_frames) with heads concatenated along the
    channel axis.
    """
    v = _as2d(values, "values")
    k = _as2d(keys, "keys")
    if v.shape[1] != k.shape[1]:
        raise ValueError(f"keys have {k.shape[1]} frames, values {v.shape[1]}")
    if heads < 1 or v.shape[0] % heads:
        raise ValueError(f"{v.shape[0]} value channels not divisible into {heads} heads")
    p = attention_weights(queries, keys, heads)
    vh = _split_heads(_f64(v), heads)
    out = p @ vh  # (heads, tq, head_dim)
    tq, tk = p.shape[1], p.shape[2]
    _tally("attention", tq * tk * (np.shape(queries)[0] + v.shape[0]))
    return out.transpose(0, 2, 1).reshape(v.shape[0], tq).astype(np.float32)
