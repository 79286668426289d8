"""Chunked streaming inference and the offline causal reference path.

Sample alignment, with hop ``L`` and chunk ``S = K*L``:

* front-end frame ``t`` reads input samples ``[t*L - L, t*L + 2*L)``, zeros
  before the stream start;
* transposed-conv frame ``t`` writes output samples ``[t*L, t*L + 3*L)``;
* chunk ``k`` is processed once samples up to ``(k+1)*S + 2*L`` have
  arrived, and emits output samples ``[k*S, (k+1)*S)``. The last ``2*L``
  synthesized samples are carried to the next chunk.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioBuffer
from .checkpoint import NamedTensorSet, validate
from .config import ModelConfig
from .decoder import (DecoderWeights, StreamingDecoder, decode_chunk, embed_query,
                      query_vector)
from .encoder import EncoderWeights, encode_chunk, encode_sequence, initial_states
from .tensor import conv1d, conv_transpose1d


class Waveformer:
    """Float64 copy of a validated checkpoint, shareable across sessions."""

    def __init__(self, tset: NamedTensorSet):
        validate(tset)
        self.config: ModelConfig = tset.config
        t = tset.tensors
        self.front_w = np.asarray(t["front.conv.w"], dtype=np.float64)
        self.front_b = np.asarray(t["front.conv.b"], dtype=np.float64)
        self.back_w = np.asarray(t["back.deconv.w"], dtype=np.float64)
        self.back_b = np.asarray(t["back.deconv.b"], dtype=np.float64)
        self.encoder = EncoderWeights.from_tensors(t, self.config)
        self.decoder = DecoderWeights.from_tensors(t, self.config)

    def frontend(self, samples: np.ndarray) -> np.ndarray:
        """Latent frames for a sample window already carrying its padding."""
        return conv1d(np.asarray(samples, dtype=np.float32)[None, :],
                      self.front_w, self.front_b, stride=self.config.stride)

    def query(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float32)
        if q.shape != (self.config.num_classes,):
            raise ValueError(f"query must have length {self.config.num_classes}, got {q.shape}")
        if not np.all((q == 0) | (q == 1)) or not q.any():
            raise ValueError("query must be a 0/1 vector with at least one class set")
        return embed_query(q, self.decoder)

    def session(self, q) -> "StreamSession":
        return StreamSession(self, q)


def _model(weights) -> Waveformer:
    return weights if isinstance(weights, Waveformer) else Waveformer(weights)


def _samples(audio, cfg: ModelConfig) -> np.ndarray:
    if isinstance(audio, AudioBuffer):
        if audio.sample_rate is not None and audio.sample_rate != cfg.sample_rate:
            raise ValueError(f"sample rate {audio.sample_rate} Hz does not match "
                             f"model rate {cfg.sample_rate} Hz")
        return audio.samples
    x = np.asarray(audio, dtype=np.float32).reshape(-1)
    return x


class StreamSession:
    """Per-stream state for chunk-by-chunk extraction.

    Feed samples with :meth:`push`; each call returns whatever whole chunks
    became available. :meth:`flush` ends the stream and returns the rest so
    the total output length equals the total input length. A session must
    be stepped by one thread at a time.
    """

    def __init__(self, model: Waveformer, q):
        self.model = model
        self.config = cfg = model.config
        self.embedding = model.query(q)
        L = cfg.stride
        # Pending input starts at global sample k*S - L for the next chunk k.
        self._pending = np.zeros(L, dtype=np.float32)
        self._states = initial_states(model.encoder)
        self._decoder = StreamingDecoder(model.decoder, self.embedding, cfg.chunk_frames)
        self._tail = np.zeros(2 * L)
        self.chunks_processed = 0
        self.samples_in = 0
        self.samples_out = 0
        self.closed = False

    @property
    def _window(self) -> int:
        cfg = self.config
        # L left overlap + S chunk + 2L lookahead
        return cfg.chunk_samples + 3 * cfg.stride

    def _step(self) -> np.ndarray:
        cfg, model = self.config, self.model
        S = cfg.chunk_samples
        window = self._pending[:S + 2 * cfg.stride]
        self._pending = self._pending[S:]

        y = model.frontend(window)
        e, self._states = encode_chunk(y, self._states, model.encoder)
        mask = self._decoder.step(e)

        synth = conv_transpose1d(y * mask, model.back_w, stride=cfg.stride)[0]
        acc = synth.astype(np.float64)
        acc[:self._tail.shape[0]] += self._tail
        self._tail = acc[S:]
        self.chunks_processed += 1
        return (acc[:S] + model.back_b[0]).astype(np.float32)

    def _drain(self) -> np.ndarray:
        out = []
        while self._pending.shape[0] >= self._window:
            out.append(self._step())
        if not out:
            return np.zeros(0, dtype=np.float32)
        return np.concatenate(out)

    def push(self, samples) -> AudioBuffer:
        if self.closed:
            raise RuntimeError("session already flushed")
        x = _samples(samples, self.config)
        if x.size:
            self._pending = np.concatenate([self._pending, x])
            self.samples_in += x.size
        out = self._drain()
        self.samples_out += out.size
        return AudioBuffer(out, self.config.sample_rate)

    def flush(self) -> AudioBuffer:
        """Zero-pad the end of the stream and emit all remaining samples."""
        if self.closed:
            return AudioBuffer(np.zeros(0, dtype=np.float32), self.config.sample_rate)
        self.closed = True
        remaining = self.samples_in - self.samples_out
        if remaining <= 0:
            return AudioBuffer(np.zeros(0, dtype=np.float32), self.config.sample_rate)
        S = self.config.chunk_samples
        n_chunks = -(-remaining // S)
        need = (n_chunks - 1) * S + self._window
        self._pending = np.concatenate(
            [self._pending, np.zeros(need - self._pending.shape[0], dtype=np.float32)])
        out = self._drain()[:remaining]
        self.samples_out += out.size
        return AudioBuffer(out, self.config.sample_rate)


def new_session(weights, q) -> StreamSession:
    """Start a stream from a checkpoint (or prepared model) and a query vector."""
    return _model(weights).session(q)


def push_samples(session: StreamSession, samples) -> AudioBuffer:
    return session.push(samples)


def flush(session: StreamSession) -> AudioBuffer:
    return session.flush()


def stream_signal(weights, signal, q, block: int | None = None) -> np.ndarray:
    """Run a whole signal through a session in pushes of ``block`` samples."""
    session = new_session(weights, q)
    x = _samples(signal, session.config)
    block = block or x.size or 1
    parts = [session.push(x[i:i + block]).samples for i in range(0, x.size, block)]
    parts.append(session.flush().samples)
    return np.concatenate(parts)


def offline_forward(weights, signal, q) -> AudioBuffer:
    """Single-pass causal reference over the full signal.

    Front end, encoder and synthesis run over the whole sequence; the
    decoder runs per chunk with the true previous encoded chunk.
    """
    model = _model(weights)
    cfg = model.config
    x = _samples(signal, cfg)
    n = x.size
    if n == 0:
        return AudioBuffer(np.zeros(0, dtype=np.float32), cfg.sample_rate)
    L, S, K = cfg.stride, cfg.chunk_samples, cfg.chunk_frames
    n_chunks = -(-n // S)
    padded = np.zeros(L + n_chunks * S + 2 * L, dtype=np.float32)
    padded[L:L + n] = x
    y = model.frontend(padded[:n_chunks * S + 2 * L])
    e = encode_sequence(y, model.encoder)
    embedding = model.query(q)
    masks = []
    e_prev = np.zeros((cfg.enc_dim, K), dtype=np.float32)
    for k in range(n_chunks):
        e_k = e[:, k * K:(k + 1) * K]
        masks.append(decode_chunk(e_k, e_prev, embedding, model.decoder))
        e_prev = e_k
    mask = np.concatenate(masks, axis=1)
    out = conv_transpose1d(y * mask, model.back_w, model.back_b, stride=L)[0]
    return AudioBuffer(out[:n], cfg.sample_rate)


__all__ = ["Waveformer", "StreamSession", "new_session", "push_samples", "flush",
           "offline_forward", "stream_signal", "query_vector"]
