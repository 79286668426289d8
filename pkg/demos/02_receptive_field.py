"""How far back the dilated encoder looks, and what it costs.

Doubling dilations make the context grow exponentially with depth while
compute per chunk grows linearly. The probe perturbs one latent frame just
outside and just inside the field and checks the encoder output.

Run: python3 demos/02_receptive_field.py
"""

from waveformer import ModelConfig, Waveformer, receptive_field_frames
from waveformer.checkpoint import random_init
from waveformer.config import attention_macs_per_chunk, encoder_macs_per_chunk
from waveformer.probes import probe_receptive_field

base = ModelConfig()
print(" M  field(frames)  field(s)  conv MACs/chunk  attention MACs/chunk")
for m in (2, 4, 6, 8, 10, 12):
    cfg = base.replace(num_layers=m)
    r = receptive_field_frames(cfg.kernel_size, m)
    print(f"{m:2d}  {r:13d}  {r * cfg.stride / cfg.sample_rate:8.3f}  "
          f"{encoder_macs_per_chunk(cfg):15,d}  {attention_macs_per_chunk(cfg, r):19,d}")

small = base.replace(enc_dim=64, dec_dim=32, embed_hidden=64)
result = probe_receptive_field(Waveformer(random_init(small, 1)), seed=1)
print(result.line())
