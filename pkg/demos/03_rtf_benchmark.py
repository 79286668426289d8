"""Single-thread real-time factor for two model widths.

RTF is the mean wall time to process one chunk divided by the chunk's
duration; below 1.0 the model keeps up with live audio on one core.

Run: python3 demos/03_rtf_benchmark.py
"""

from waveformer import ModelConfig
from waveformer.bench import bench_rtf
from waveformer.checkpoint import random_init

for enc, dec in ((256, 128), (512, 256)):
    cfg = ModelConfig(enc_dim=enc, dec_dim=dec)
    report = bench_rtf(random_init(cfg, 0), iterations=50, warmup=5)
    print(f"{report.config_id}: {report.mean_us / 1000:.2f} ms per "
          f"{report.chunk_duration_ms:.2f} ms chunk -> RTF {report.rtf:.2f} "
          f"({report.macs_per_chunk / 1e6:.1f} M MACs)")
