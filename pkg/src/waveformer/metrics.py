"""SNR-family metrics in dB, clamped to +/-80 dB.

SI-SNR is computed without mean removal.
"""

from __future__ import annotations

import numpy as np

CLAMP_DB = 80.0


def _pair(ref, est) -> tuple[np.ndarray, np.ndarray]:
    ref = np.asarray(ref, dtype=np.float64).reshape(-1)
    est = np.asarray(est, dtype=np.float64).reshape(-1)
    if ref.shape != est.shape:
        raise ValueError(f"length mismatch: {ref.size} vs {est.size}")
    if ref.size == 0:
        raise ValueError("empty signals")
    return ref, est


def _ratio_db(signal_power: float, noise_power: float) -> float:
    if noise_power == 0.0:
        return CLAMP_DB
    if signal_power == 0.0:
        return -CLAMP_DB
    db = 10.0 * np.log10(signal_power / noise_power)
    return float(np.clip(db, -CLAMP_DB, CLAMP_DB))


def snr(ref, est) -> float:
    ref, est = _pair(ref, est)
    noise = ref - est
    return _ratio_db(float(ref @ ref), float(noise @ noise))


def si_snr(ref, est) -> float:
    ref, est = _pair(ref, est)
    ref_power = float(ref @ ref)
    if ref_power == 0.0:
        raise ValueError("SI-SNR undefined for an all-zero reference")
    target = (float(est @ ref) / ref_power) * ref
    err = est - target
    return _ratio_db(float(target @ target), float(err @ err))


def si_snri(mixture, ref, est) -> float:
    """SI-SNR gain of ``est`` over the unprocessed ``mixture``."""
    return si_snr(ref, est) - si_snr(ref, mixture)


def loss_value(ref, est) -> float:
    """Training objective value: negative 90/10 blend of SNR and SI-SNR."""
    return -(0.9 * snr(ref, est) + 0.1 * si_snr(ref, est))
