import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from waveformer.metrics import CLAMP_DB, loss_value, si_snr, si_snri, snr


def _sig(n=500, seed=0):
    return np.random.default_rng(seed).standard_normal(n)


def test_identical_is_clamped():
    x = _sig()
    assert snr(x, x) == CLAMP_DB == 80.0
    assert si_snr(x, x) == 80.0


def test_orthogonal_is_floor():
    ref = np.array([1.0, 0.0, 1.0, 0.0])
    est = np.array([0.0, 1.0, 0.0, -1.0])
    assert si_snr(ref, est) == -80.0


def test_matches_oracle():
    for seed in range(20):
        ref, est = _sig(300, seed), _sig(300, seed + 100) * 0.3 + _sig(300, seed)
        assert abs(si_snr(ref, est) - oracles.si_snr(ref, est)) < 1e-6
        assert abs(snr(ref, est) - oracles.snr(ref, est)) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_scale_invariance(scale, seed):
    ref, est = _sig(200, seed), _sig(200, seed + 1) + _sig(200, seed)
    assert abs(si_snr(ref, scale * est) - si_snr(ref, est)) < 1e-6


def test_si_snri():
    ref, noise = _sig(400, 1), _sig(400, 2)
    mix = ref + noise
    assert si_snri(mix, ref, mix) == 0.0
    assert abs(si_snri(mix, ref, ref) - (80.0 - si_snr(ref, mix))) < 1e-12


def test_loss_value():
    ref, est = _sig(400, 1), _sig(400, 1) + 0.1 * _sig(400, 2)
    assert abs(loss_value(ref, est) + 0.9 * snr(ref, est) + 0.1 * si_snr(ref, est)) < 1e-12


def test_errors():
    with pytest.raises(ValueError):
        snr(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        si_snr(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        snr([], [])
