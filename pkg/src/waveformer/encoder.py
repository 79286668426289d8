"""Dilated causal convolution encoder with per-layer streaming context."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .tensor import conv1d, layer_norm, relu


@dataclass
class DccLayer:
    conv_w: np.ndarray      # (E, E, P), float64
    conv_b: np.ndarray
    norm_g: np.ndarray
    norm_b: np.ndarray
    dilation: int

    @property
    def context_width(self) -> int:
        return (self.conv_w.shape[2] - 1) * self.dilation


@dataclass
class EncoderWeights:
    layers: list[DccLayer]

    @classmethod
    def from_tensors(cls, tensors, cfg: ModelConfig) -> "EncoderWeights":
        layers = []
        for i in range(cfg.num_layers):
            p = f"enc.layer{i}."
            layers.append(DccLayer(
                conv_w=np.asarray(tensors[p + "conv.w"], dtype=np.float64),
                conv_b=np.asarray(tensors[p + "conv.b"], dtype=np.float64),
                norm_g=np.asarray(tensors[p + "norm.g"], dtype=np.float64),
                norm_b=np.asarray(tensors[p + "norm.b"], dtype=np.float64),
                dilation=2 ** i,
            ))
        return cls(layers)


@dataclass
class DccLayerState:
    """Raw (pre-norm) input frames retained as left context for one layer."""

    context: np.ndarray

    @classmethod
    def zeros(cls, channels: int, width: int) -> "DccLayerState":
        return cls(np.zeros((channels, width), dtype=np.float32))


def initial_states(weights: EncoderWeights) -> list[DccLayerState]:
    return [DccLayerState.zeros(layer.conv_w.shape[0], layer.context_width)
            for layer in weights.layers]


def _layer_body(padded: np.ndarray, layer: DccLayer) -> np.ndarray:
    h = layer_norm(padded, layer.norm_g, layer.norm_b)
    return relu(conv1d(h, layer.conv_w, layer.conv_b, dilation=layer.dilation))


def dcc_layer_step(chunk: np.ndarray, state: DccLayerState,
                   layer: DccLayer) -> tuple[np.ndarray, DccLayerState]:
    """Run one layer on a chunk, left-padded with the layer's saved context.

    Returns the residual output for the chunk's frames and the new state,
    which holds the rightmost ``context_width`` frames of the padded input.
    """
    chunk = np.asarray(chunk, dtype=np.float32)
    width = layer.context_width
    if chunk.ndim != 2 or chunk.shape[0] != layer.conv_w.shape[1]:
        raise ValueError(f"chunk shape {chunk.shape} does not match layer channels")
    if state.context.shape != (chunk.shape[0], width):
        raise ValueError(f"context shape {state.context.shape}, expected {(chunk.shape[0], width)}")
    padded = np.concatenate([state.context, chunk], axis=1)
    # Only P*K padded frames reach the conv. Lay them out tap-major so a
    # conv with dilation K over the block equals the dilated conv over the
    # padded input; norm is per frame, so normalizing just these frames
    # leaves the result unchanged.
    k = chunk.shape[1]
    taps = layer.conv_w.shape[2]
    idx = (np.arange(taps)[:, None] * layer.dilation + np.arange(k)[None, :]).ravel()
    h = layer_norm(padded[:, idx], layer.norm_g, layer.norm_b)
    out = chunk + relu(conv1d(h, layer.conv_w, layer.conv_b, dilation=k))
    new_state = DccLayerState(padded[:, padded.shape[1] - width:].copy())
    return out, new_state


def encode_chunk(y: np.ndarray, states: list[DccLayerState],
                 weights: EncoderWeights) -> tuple[np.ndarray, list[DccLayerState]]:
    if len(states) != len(weights.layers):
        raise ValueError(f"got {len(states)} layer states for {len(weights.layers)} layers")
    x = y
    new_states = []
    for layer, state in zip(weights.layers, states):
        x, s = dcc_layer_step(x, state, layer)
        new_states.append(s)
    return x, new_states


def encode_sequence(y: np.ndarray, weights: EncoderWeights) -> np.ndarray:
    """Encode a whole latent sequence at once with zero left padding.

    Reference path for the streaming encoder: equal to stepping
    :func:`encode_chunk` over consecutive chunks from zero state.
    """
    x = np.asarray(y, dtype=np.float32)
    for layer in weights.layers:
        padded = np.concatenate(
            [np.zeros((x.shape[0], layer.context_width), dtype=np.float32), x], axis=1)
        x = x + _layer_body(padded, layer)
    return x
