"""Perturbation probes for the streaming invariants.

Each probe returns a :class:`ProbeResult`; ``verify`` on the command line
and the acceptance tests both run these.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import receptive_field_frames
from .decoder import StreamingDecoder, query_vector
from .encoder import encode_chunk, initial_states
from .stream import Waveformer, offline_forward, stream_signal


@dataclass
class ProbeResult:
    name: str
    passed: bool
    detail: str
    value: float = 0.0

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.detail})"


def noise(seconds: float, sample_rate: float, seed: int, amplitude: float = 0.5) -> np.ndarray:
    n = int(round(seconds * sample_rate))
    return np.random.default_rng(seed).uniform(-amplitude, amplitude, n).astype(np.float32)


def random_query(num_classes: int, rng: np.random.Generator) -> np.ndarray:
    k = int(rng.integers(1, min(3, num_classes) + 1))
    return query_vector(rng.choice(num_classes, size=k, replace=False), num_classes)


def stream_offline_diff(model: Waveformer, signal: np.ndarray, q, block: int | None = None) -> float:
    streamed = stream_signal(model, signal, q, block=block)
    reference = offline_forward(model, signal, q).samples
    if streamed.shape != reference.shape:
        return float("inf")
    return float(np.max(np.abs(streamed - reference), initial=0.0))


def probe_stream_offline(model: Waveformer, seconds: float, seed: int,
                         tol: float = 1e-4) -> ProbeResult:
    rng = np.random.default_rng(seed)
    x = noise(seconds, model.config.sample_rate, seed)
    block = int(rng.integers(1, 2 * model.config.chunk_samples))
    diff = stream_offline_diff(model, x, random_query(model.config.num_classes, rng), block)
    return ProbeResult("stream_offline_equiv", diff < tol,
                       f"max_diff={diff:.3g} < {tol:g}" if diff < tol else f"max_diff={diff:.3g}",
                       diff)


def causality_horizon(model: Waveformer, chunk: int) -> int:
    """First input index that must not influence output chunks <= ``chunk``."""
    cfg = model.config
    return (chunk + 1) * cfg.chunk_samples + cfg.lookahead_samples


def probe_causality(model: Waveformer, seed: int, probes: int = 20,
                    chunks: int = 6) -> ProbeResult:
    """Perturb samples at or beyond the lookahead horizon of chunk ``k``.

    The whole perturbed signal is available to both the session (single
    push) and the offline path, so a read past the horizon would show.
    """
    cfg = model.config
    S = cfg.chunk_samples
    rng = np.random.default_rng(seed)
    x = noise(chunks * S / cfg.sample_rate, cfg.sample_rate, seed)
    x = x[:chunks * S]
    q = random_query(cfg.num_classes, rng)
    base_stream = stream_signal(model, x, q)
    base_off = offline_forward(model, x, q).samples
    failures = 0
    for _ in range(probes):
        k = int(rng.integers(0, chunks - 2))
        start = causality_horizon(model, k)
        idx = int(rng.integers(start, x.size))
        y = x.copy()
        y[idx] += np.float32(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0))
        keep = (k + 1) * S
        s = stream_signal(model, y, q)
        o = offline_forward(model, y, q).samples
        if not (np.array_equal(s[:keep], base_stream[:keep])
                and np.array_equal(o[:keep], base_off[:keep])):
            failures += 1
    return ProbeResult("chunk_causality", failures == 0,
                       f"{probes - failures}/{probes} probes unchanged (exact)", failures)


def _encode_last_chunk(model: Waveformer, y: np.ndarray) -> np.ndarray:
    K = model.config.chunk_frames
    states = initial_states(model.encoder)
    e = None
    for c in range(y.shape[1] // K):
        e, states = encode_chunk(y[:, c * K:(c + 1) * K], states, model.encoder)
    return e


def probe_receptive_field(model: Waveformer, seed: int) -> ProbeResult:
    """Perturb one latent frame just outside and just inside the field.

    With the current chunk starting at frame ``c*K``, a frame ``d`` frames
    earlier can only reach the chunk if ``d <= R``. The probe checks
    ``d = R + 1`` (must be bitwise unchanged) and ``d = R`` (must change).
    """
    cfg = model.config
    K = cfg.chunk_frames
    R = receptive_field_frames(cfg.kernel_size, cfg.num_layers)
    n_chunks = -(-(R + 2) // K) + 1
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((cfg.enc_dim, n_chunks * K)).astype(np.float32)
    current = (n_chunks - 1) * K
    base = _encode_last_chunk(model, y)

    # A per-frame constant shift is erased by layer norm, so perturb with
    # an arbitrary vector instead.
    delta = rng.standard_normal(cfg.enc_dim).astype(np.float32)

    def perturbed(distance: int) -> np.ndarray:
        z = y.copy()
        z[:, current - distance] += delta
        return _encode_last_chunk(model, z)

    outside = np.array_equal(perturbed(R + 1), base)
    inside = not np.array_equal(perturbed(R), base)
    detail = (f"R={R}: {'unchanged' if outside else 'CHANGED'} at {R + 1} frames back, "
              f"{'changed' if inside else 'UNCHANGED'} at {R} frames back")
    return ProbeResult("receptive_field", outside and inside, detail, R)


def probe_decoder_window(model: Waveformer, seed: int, chunks: int = 6) -> ProbeResult:
    """Mask of chunk k must ignore encoded chunks older than k-1."""
    cfg = model.config
    rng = np.random.default_rng(seed)
    shape = (cfg.enc_dim, cfg.chunk_frames)
    es = [rng.standard_normal(shape).astype(np.float32) for _ in range(chunks)]
    embedding = model.query(random_query(cfg.num_classes, rng))

    def last_mask(seq):
        dec = StreamingDecoder(model.decoder, embedding, cfg.chunk_frames)
        for e in seq:
            m = dec.step(e)
        return m

    base = last_mask(es)
    unchanged = 0
    for j in range(chunks - 2):
        alt = list(es)
        alt[j] = rng.standard_normal(shape).astype(np.float32)
        unchanged += np.array_equal(last_mask(alt), base)
    alt = list(es)
    alt[-2] = rng.standard_normal(shape).astype(np.float32)
    sensitive = not np.array_equal(last_mask(alt), base)
    ok = unchanged == chunks - 2 and sensitive
    return ProbeResult("decoder_window", ok,
                       f"{unchanged}/{chunks - 2} older chunks ignored, previous chunk "
                       f"{'used' if sensitive else 'IGNORED'}", unchanged)


def run_all(model: Waveformer, seed: int = 0, seconds: float = 2.0) -> list[ProbeResult]:
    return [
        probe_stream_offline(model, seconds, seed),
        probe_causality(model, seed),
        probe_receptive_field(model, seed),
        probe_decoder_window(model, seed),
    ]
