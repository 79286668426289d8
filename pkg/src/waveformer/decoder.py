"""Query embedding and the query-conditioned streaming transformer decoder.

The decoder sees a fixed window of two chunks (previous + current). The
unconditioned projection feeds the self-attention block and the
query-conditioned projection is the cross-attention memory. Blocks are
pre-norm with residual adds; there is no positional encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .tensor import attention, layer_norm, linear, relu


def _f64(t) -> np.ndarray:
    return np.asarray(t, dtype=np.float64)


@dataclass
class AttentionWeights:
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray

    @classmethod
    def from_tensors(cls, tensors, prefix: str) -> "AttentionWeights":
        kw = {}
        for p in "qkvo":
            kw["w" + p] = _f64(tensors[f"{prefix}.{p}.w"])
            kw["b" + p] = _f64(tensors[f"{prefix}.{p}.b"])
        return cls(**kw)


@dataclass
class DecoderWeights:
    emb: list[tuple[np.ndarray, np.ndarray]]
    proj_self: tuple[np.ndarray, np.ndarray]
    proj_cross: tuple[np.ndarray, np.ndarray]
    self_attn: AttentionWeights
    cross_attn: AttentionWeights
    norms: list[tuple[np.ndarray, np.ndarray]]
    ffn1: tuple[np.ndarray, np.ndarray]
    ffn2: tuple[np.ndarray, np.ndarray]
    proj_out: tuple[np.ndarray, np.ndarray]
    heads: int

    @classmethod
    def from_tensors(cls, tensors, cfg: ModelConfig) -> "DecoderWeights":
        def pair(prefix, w="w", b="b"):
            return _f64(tensors[f"{prefix}.{w}"]), _f64(tensors[f"{prefix}.{b}"])

        return cls(
            emb=[pair(f"emb.fc{i}") for i in (1, 2, 3)],
            proj_self=pair("dec.proj_self"),
            proj_cross=pair("dec.proj_cross"),
            self_attn=AttentionWeights.from_tensors(tensors, "dec.xform.self_attn"),
            cross_attn=AttentionWeights.from_tensors(tensors, "dec.xform.cross_attn"),
            norms=[pair(f"dec.xform.norm{i}", "g", "b") for i in (1, 2, 3)],
            ffn1=pair("dec.xform.ffn.fc1"),
            ffn2=pair("dec.xform.ffn.fc2"),
            proj_out=pair("dec.proj_out"),
            heads=cfg.heads,
        )


def query_vector(classes, num_classes: int) -> np.ndarray:
    """Multi-hot vector with ones at the given class indices."""
    q = np.zeros(num_classes, dtype=np.float32)
    for c in classes:
        if not 0 <= int(c) < num_classes:
            raise ValueError(f"class index {c} outside [0, {num_classes})")
        q[int(c)] = 1.0
    return q


def embed_query(q, weights: DecoderWeights) -> np.ndarray:
    """Map a one-/multi-hot query to an encoder-width embedding vector."""
    q = np.asarray(q, dtype=np.float32)
    n_in = weights.emb[0][0].shape[1]
    if q.shape != (n_in,):
        raise ValueError(f"query must have length {n_in}, got shape {q.shape}")
    (w1, b1), (w2, b2), (w3, b3) = weights.emb
    h = relu(linear(q[:, None], w1, b1))
    h = relu(linear(h, w2, b2))
    return linear(h, w3, b3)[:, 0]


def project(e: np.ndarray, proj: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    return relu(linear(e, *proj))


def _mha(x: np.ndarray, kv: np.ndarray, w: AttentionWeights, heads: int) -> np.ndarray:
    q = linear(x, w.wq, w.bq)
    k = linear(kv, w.wk, w.bk)
    v = linear(kv, w.wv, w.bv)
    return linear(attention(q, k, v, heads), w.wo, w.bo)


def transformer_layer(tgt_prev: np.ndarray, tgt: np.ndarray, mem_prev: np.ndarray,
                      mem: np.ndarray, weights: DecoderWeights) -> np.ndarray:
    """One pre-norm decoder layer over a two-chunk window.

    Queries come from the current chunk only; keys and values span
    ``[previous chunk, current chunk]`` for both attention blocks.
    """
    (g1, b1), (g2, b2), (g3, b3) = weights.norms
    window = np.concatenate([tgt_prev, tgt], axis=1)
    normed = layer_norm(window, g1, b1)
    k = tgt.shape[1]
    x = tgt + _mha(normed[:, -k:], normed, weights.self_attn, weights.heads)

    memory = np.concatenate([mem_prev, mem], axis=1)
    x = x + _mha(layer_norm(x, g2, b2), memory, weights.cross_attn, weights.heads)

    h = relu(linear(layer_norm(x, g3, b3), *weights.ffn1))
    return x + linear(h, *weights.ffn2)


def decode_projected(e_cond: np.ndarray, pe: np.ndarray, pe_cond: np.ndarray,
                     pe_prev: np.ndarray, pe_cond_prev: np.ndarray,
                     weights: DecoderWeights) -> np.ndarray:
    """Mask from already-projected inputs (lets a stream cache projections)."""
    pm = transformer_layer(pe_prev, pe, pe_cond_prev, pe_cond, weights)
    return project(pm, weights.proj_out) + e_cond


def decode_chunk(e: np.ndarray, e_prev: np.ndarray, embedding: np.ndarray,
                 weights: DecoderWeights) -> np.ndarray:
    """Latent mask for chunk ``e`` given the previous encoded chunk.

    Pass zeros as ``e_prev`` for the first chunk of a stream.
    """
    e = np.asarray(e, dtype=np.float32)
    e_prev = np.asarray(e_prev, dtype=np.float32)
    embedding = np.asarray(embedding, dtype=np.float32)
    if e.ndim != 2 or e_prev.shape != e.shape:
        raise ValueError(f"encoded chunks must share a 2-D shape, got {e.shape} and {e_prev.shape}")
    if embedding.shape != (e.shape[0],):
        raise ValueError(f"embedding length {embedding.shape} does not match {e.shape[0]} channels")
    e_cond = e * embedding[:, None]
    e_cond_prev = e_prev * embedding[:, None]
    return decode_projected(
        e_cond,
        project(e, weights.proj_self), project(e_cond, weights.proj_cross),
        project(e_prev, weights.proj_self), project(e_cond_prev, weights.proj_cross),
        weights,
    )


class StreamingDecoder:
    """Decoder with a one-chunk cache of the previous chunk's projections.

    The cache starts as the projection of an all-zero chunk, matching
    :func:`decode_chunk` called with ``e_prev = 0``.
    """

    def __init__(self, weights: DecoderWeights, embedding: np.ndarray, chunk_frames: int):
        self.weights = weights
        self.embedding = np.asarray(embedding, dtype=np.float32)
        zero = np.zeros((self.embedding.shape[0], chunk_frames), dtype=np.float32)
        self.pe_prev = project(zero, weights.proj_self)
        self.pe_cond_prev = project(zero, weights.proj_cross)

    def step(self, e: np.ndarray) -> np.ndarray:
        e_cond = e * self.embedding[:, None]
        pe = project(e, self.weights.proj_self)
        pe_cond = project(e_cond, self.weights.proj_cross)
        mask = decode_projected(e_cond, pe, pe_cond, self.pe_prev, self.pe_cond_prev,
                                self.weights)
        self.pe_prev, self.pe_cond_prev = pe, pe_cond
        return mask
