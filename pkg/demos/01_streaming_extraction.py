"""Stream a signal through a session chunk by chunk and compare with offline.

Run: python3 demos/01_streaming_extraction.py
"""

import numpy as np

from waveformer import ModelConfig, Waveformer, chunk_geometry, offline_forward, query_vector
from waveformer.checkpoint import random_init

# A reduced model keeps the demo quick; geometry is the default 13 x 32 samples.
cfg = ModelConfig(enc_dim=128, dec_dim=64, embed_hidden=128)
geo = chunk_geometry(cfg)
print(f"chunk: {geo['samples_per_chunk']} samples ({geo['chunk_duration_ms']:.2f} ms), "
      f"lookahead: {geo['lookahead_samples']} samples ({geo['lookahead_ms']:.2f} ms)")

model = Waveformer(random_init(cfg, seed=0))
q = query_vector([3, 7], cfg.num_classes)    # extract classes 3 and 7 together

# One second of noise, delivered in odd-sized blocks the way a sound card might.
x = np.random.default_rng(0).uniform(-0.5, 0.5, 44100).astype(np.float32)
session = model.session(q)
out = []
for start in range(0, x.size, 300):
    piece = session.push(x[start:start + 300]).samples
    if piece.size and len(out) < 3:
        print(f"push ending at sample {start + 300:5d} -> {piece.size} samples out")
    out.append(piece)
out.append(session.flush().samples)
streamed = np.concatenate(out)
print(f"in={x.size} out={streamed.size} chunks={session.chunks_processed}")

# The offline path sees the whole signal at once; results agree to float32 noise.
reference = offline_forward(model, x, q).samples
print(f"max |stream - offline| = {np.max(np.abs(streamed - reference)):.2e}")
