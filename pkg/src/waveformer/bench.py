"""Real-time-factor benchmark: time one chunk push through a primed session."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .config import chunk_geometry
from .stream import Waveformer
from .tensor import count_macs


@dataclass
class BenchReport:
    config_id: str
    chunk_samples: int
    chunk_duration_ms: float
    iterations: int
    mean_us: float
    median_us: float
    p95_us: float
    rtf: float
    macs_per_chunk: int
    threads: int = 1

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def rtf(mean_chunk_seconds: float, chunk_seconds: float) -> float:
    return mean_chunk_seconds / chunk_seconds


def config_id(cfg) -> str:
    return f"E{cfg.enc_dim}-D{cfg.dec_dim}-K{cfg.chunk_frames}-L{cfg.stride}-M{cfg.num_layers}"


def bench_rtf(weights, iterations: int = 200, warmup: int = 16,
              seed: int = 0, query_class: int = 0) -> BenchReport:
    """Time ``iterations`` chunk pushes after ``warmup`` untimed ones.

    The session is primed with the chunk plus lookahead so every timed push
    of ``S`` samples emits exactly one chunk. BLAS pools are limited to one
    thread for the duration.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    model = weights if isinstance(weights, Waveformer) else Waveformer(weights)
    cfg = model.config
    S = cfg.chunk_samples
    q = np.zeros(cfg.num_classes, dtype=np.float32)
    q[query_class] = 1.0
    rng = np.random.default_rng(seed)

    with threadpool_limits(limits=1):
        session = model.session(q)
        session.push(rng.uniform(-0.5, 0.5, S + cfg.lookahead_samples).astype(np.float32))
        chunks = rng.uniform(-0.5, 0.5, (warmup + iterations, S)).astype(np.float32)
        for i in range(warmup):
            session.push(chunks[i])
        with count_macs() as counter:
            session.push(chunks[warmup])
        macs = counter.total
        times = []
        for i in range(warmup, warmup + iterations):
            t0 = time.perf_counter()
            out = session.push(chunks[i])
            times.append(time.perf_counter() - t0)
            assert out.samples.size == S

    times = np.asarray(times)
    chunk_ms = chunk_geometry(cfg)["chunk_duration_ms"]
    return BenchReport(
        config_id=config_id(cfg),
        chunk_samples=S,
        chunk_duration_ms=chunk_ms,
        iterations=iterations,
        mean_us=float(times.mean() * 1e6),
        median_us=float(np.median(times) * 1e6),
        p95_us=float(np.percentile(times, 95) * 1e6),
        rtf=rtf(float(times.mean()), chunk_ms / 1000.0),
        macs_per_chunk=macs,
    )
