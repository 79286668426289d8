import struct

import numpy as np
import pytest

from waveformer.audio import AudioBuffer, WavFormatError, quantize16, read_wav, write_wav


def _noise(n=1000):
    return np.random.default_rng(0).uniform(-1, 1, n).astype(np.float32)


def test_float32_round_trip_exact(tmp_path):
    x = _noise()
    write_wav(tmp_path / "a.wav", AudioBuffer(x, 22050), bit_depth=32)
    back = read_wav(tmp_path / "a.wav")
    assert back.sample_rate == 22050
    assert back.samples.dtype == np.float32 and np.array_equal(back.samples, x)


def test_pcm16_round_trip_error(tmp_path):
    x = _noise()
    write_wav(tmp_path / "a.wav", AudioBuffer(x, 44100))
    back = read_wav(tmp_path / "a.wav").samples
    assert np.max(np.abs(back - x)) <= 1 / 32768


def _pcm16_file(path, values, channels=1, rate=44100):
    data = struct.pack(f"<{len(values)}h", *values)
    fmt = struct.pack("<HHIIHH", 1, channels, rate, rate * 2 * channels, 2 * channels, 16)
    body = b"WAVE" + b"fmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)


def test_pcm16_scaling(tmp_path):
    _pcm16_file(tmp_path / "a.wav", [16384, -32768, 0, 32767])
    s = read_wav(tmp_path / "a.wav").samples
    assert s[0] == 0.5 and s[1] == -1.0 and s[2] == 0.0


def test_stereo_rejected(tmp_path):
    _pcm16_file(tmp_path / "s.wav", [1, 2, 3, 4], channels=2)
    with pytest.raises(WavFormatError, match="mono required"):
        read_wav(tmp_path / "s.wav")


def test_truncated(tmp_path):
    write_wav(tmp_path / "a.wav", AudioBuffer(_noise(), 44100))
    raw = (tmp_path / "a.wav").read_bytes()
    (tmp_path / "t.wav").write_bytes(raw[:-10])
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "t.wav")


def test_not_wav(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"hello world, not audio")
    with pytest.raises(WavFormatError):
        read_wav(tmp_path / "x.wav")


def test_quantize_clamps_and_rounds():
    q = quantize16(np.array([2.0, -2.0, 0.5, 1.5 / 32768, -1.5 / 32768], dtype=np.float32))
    assert q.tolist() == [32767, -32768, 16384, 2, -2]


def test_bad_bit_depth(tmp_path):
    with pytest.raises(ValueError):
        write_wav(tmp_path / "a.wav", AudioBuffer(_noise(), 44100), bit_depth=24)


def test_buffer():
    b = AudioBuffer(np.zeros(441), 44100)
    assert len(b) == 441 and abs(b.duration - 0.01) < 1e-12
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros(3), 0)
