import numpy as np
import pytest

import oracles
from waveformer.checkpoint import random_init
from waveformer.config import ModelConfig
from waveformer.decoder import (DecoderWeights, StreamingDecoder, decode_chunk, embed_query,
                                query_vector)


@pytest.fixture
def dec(small_weights):
    return DecoderWeights.from_tensors(small_weights.tensors, small_weights.config)


def _chunk(cfg, rng, scale=1.0):
    return (scale * rng.standard_normal((cfg.enc_dim, cfg.chunk_frames))).astype(np.float32)


def test_query_vector():
    q = query_vector([2, 5], 8)
    assert q.tolist() == [0, 0, 1, 0, 0, 1, 0, 0]
    with pytest.raises(ValueError):
        query_vector([8], 8)


def test_zero_embedding_weights(small_weights):
    t = small_weights.copy()
    for name in [n for n in t.tensors if n.startswith("emb.")]:
        t[name] = np.zeros_like(t[name])
    dec = DecoderWeights.from_tensors(t.tensors, t.config)
    l = embed_query(query_vector([1], t.config.num_classes), dec)
    assert l.shape == (t.config.enc_dim,) and not l.any()


def test_default_embedding_length():
    cfg = ModelConfig()
    dec = DecoderWeights.from_tensors(random_init(cfg, 0).tensors, cfg)
    assert embed_query(query_vector([0], 41), dec).shape == (512,)


def test_embedding_matches_oracle(dec, small_weights, small_cfg):
    q = query_vector([0, 3], small_cfg.num_classes)
    ref = oracles.mlp_embedding(small_weights.tensors, q)
    assert np.max(np.abs(embed_query(q, dec) - ref)) < 1e-5


def test_embedding_rejects_wrong_length(dec):
    with pytest.raises(ValueError):
        embed_query(np.zeros(3), dec)


def test_mask_matches_oracle(dec, small_weights, small_cfg, rng):
    for _ in range(5):
        e, e_prev = _chunk(small_cfg, rng), _chunk(small_cfg, rng)
        l = rng.standard_normal(small_cfg.enc_dim).astype(np.float32)
        ref = oracles.decode(small_weights.tensors, e, e_prev, l, small_cfg.heads)
        assert np.max(np.abs(decode_chunk(e, e_prev, l, dec) - ref)) < 1e-5


def test_skip_path_when_output_projection_is_zero(small_weights, small_cfg, rng):
    t = small_weights.copy()
    t["dec.proj_out.w"] = np.zeros_like(t["dec.proj_out.w"])
    t["dec.proj_out.b"] = np.zeros_like(t["dec.proj_out.b"])
    dec = DecoderWeights.from_tensors(t.tensors, small_cfg)
    e = _chunk(small_cfg, rng)
    l = rng.standard_normal(small_cfg.enc_dim).astype(np.float32)
    mask = decode_chunk(e, np.zeros_like(e), l, dec)
    assert np.allclose(mask, e * l[:, None], atol=1e-7)


def test_all_ones_embedding_conditions_nothing(dec, small_weights, small_cfg, rng):
    # with l = 1 the conditioned input equals e, so both projections see e
    e, e_prev = _chunk(small_cfg, rng), _chunk(small_cfg, rng)
    ones = np.ones(small_cfg.enc_dim, dtype=np.float32)
    ref = oracles.decode(small_weights.tensors, e, e_prev, ones, small_cfg.heads)
    assert np.max(np.abs(decode_chunk(e, e_prev, ones, dec) - ref)) < 1e-5


def test_first_chunk_uses_zero_previous(dec, small_cfg, rng):
    l = rng.standard_normal(small_cfg.enc_dim).astype(np.float32)
    e = _chunk(small_cfg, rng)
    stream = StreamingDecoder(dec, l, small_cfg.chunk_frames)
    assert np.array_equal(stream.step(e), decode_chunk(e, np.zeros_like(e), l, dec))


def test_streaming_matches_chunkwise(dec, small_cfg, rng):
    l = rng.standard_normal(small_cfg.enc_dim).astype(np.float32)
    stream = StreamingDecoder(dec, l, small_cfg.chunk_frames)
    prev = np.zeros((small_cfg.enc_dim, small_cfg.chunk_frames), dtype=np.float32)
    for _ in range(4):
        e = _chunk(small_cfg, rng)
        assert np.array_equal(stream.step(e), decode_chunk(e, prev, l, dec))
        prev = e


def test_window_is_two_chunks(dec, small_cfg, rng):
    l = rng.standard_normal(small_cfg.enc_dim).astype(np.float32)
    es = [_chunk(small_cfg, rng) for _ in range(4)]

    def last(seq):
        s = StreamingDecoder(dec, l, small_cfg.chunk_frames)
        for e in seq:
            m = s.step(e)
        return m

    base = last(es)
    assert np.array_equal(last([_chunk(small_cfg, rng)] + es[1:]), base)
    assert np.array_equal(last([es[0], _chunk(small_cfg, rng)] + es[2:]), base)
    assert not np.array_equal(last(es[:2] + [_chunk(small_cfg, rng), es[3]]), base)


def test_shape_checks(dec, small_cfg):
    e = np.zeros((small_cfg.enc_dim, small_cfg.chunk_frames), dtype=np.float32)
    with pytest.raises(ValueError):
        decode_chunk(e, e[:, :2], np.ones(small_cfg.enc_dim), dec)
    with pytest.raises(ValueError):
        decode_chunk(e, e, np.ones(3), dec)
