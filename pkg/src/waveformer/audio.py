"""Mono WAV reading and writing (16-bit PCM and 32-bit IEEE float)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class WavFormatError(Exception):
    pass


@dataclass
class AudioBuffer:
    samples: np.ndarray
    sample_rate: float | None = None

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float32).reshape(-1)
        if self.sample_rate is not None and not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate if self.sample_rate else float("nan")


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"chunk {cid!r} truncated at byte {pos}")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> AudioBuffer:
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    pcm = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavFormatError("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body)
            if fmt[0] == WAVE_FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise WavFormatError("extensible fmt chunk too short")
                fmt = (struct.unpack_from("<H", body, 24)[0],) + fmt[1:]
        elif cid == b"data":
            pcm = body
    if fmt is None:
        raise WavFormatError("missing fmt chunk")
    if pcm is None:
        raise WavFormatError("missing or truncated data chunk")
    tag, channels, rate, _, _, bits = fmt
    if channels != 1:
        raise WavFormatError(f"mono required, file has {channels} channels")
    if tag == WAVE_FORMAT_PCM and bits == 16:
        usable = len(pcm) - len(pcm) % 2
        samples = np.frombuffer(pcm[:usable], dtype="<i2").astype(np.float32) / np.float32(32768)
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        usable = len(pcm) - len(pcm) % 4
        samples = np.frombuffer(pcm[:usable], dtype="<f4").astype(np.float32)
    else:
        raise WavFormatError(f"unsupported encoding: format tag {tag:#x}, {bits} bits")
    if not np.all(np.isfinite(samples)):
        raise WavFormatError("non-finite samples")
    return AudioBuffer(samples, float(rate))


def quantize16(samples) -> np.ndarray:
    """Scale to 16-bit, rounding half away from zero and clamping."""
    v = np.asarray(samples, dtype=np.float64) * 32768.0
    v = np.sign(v) * np.floor(np.abs(v) + 0.5)
    return np.clip(v, -32768, 32767).astype("<i2")


def write_wav(path, audio: AudioBuffer, bit_depth: int = 16) -> None:
    """Write ``audio`` as mono PCM16 (``bit_depth=16``) or float32 (``32``)."""
    rate = int(round(audio.sample_rate or 44100))
    if bit_depth == 16:
        tag, payload = WAVE_FORMAT_PCM, quantize16(audio.samples).tobytes()
    elif bit_depth == 32:
        tag, payload = WAVE_FORMAT_IEEE_FLOAT, audio.samples.astype("<f4").tobytes()
    else:
        raise ValueError(f"bit_depth must be 16 or 32, got {bit_depth}")
    block = bit_depth // 8
    fmt = struct.pack("<HHIIHH", tag, 1, rate, rate * block, block, bit_depth)
    body = (b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(payload)) + payload)
    Path(path).write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
