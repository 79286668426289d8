import json

from waveformer.bench import bench_rtf, config_id, rtf
from waveformer.config import total_macs_per_chunk


def test_rtf_arithmetic():
    assert rtf(4.715e-3, 9.43e-3) == 0.5


def test_report(small_weights, small_cfg):
    r = bench_rtf(small_weights, iterations=5, warmup=1)
    assert r.macs_per_chunk == total_macs_per_chunk(small_cfg)
    assert r.iterations == 5 and r.chunk_samples == 416 and r.threads == 1
    assert abs(r.rtf - r.mean_us / 1000 / r.chunk_duration_ms) < 1e-9
    assert r.config_id == config_id(small_cfg)
    assert json.loads(r.to_json())["macs_per_chunk"] == r.macs_per_chunk
    assert "rtf=" in r.to_text()


def test_mac_count_deterministic(small_weights):
    a = bench_rtf(small_weights, iterations=1, warmup=0, seed=1)
    b = bench_rtf(small_weights, iterations=1, warmup=0, seed=2)
    assert a.macs_per_chunk == b.macs_per_chunk
