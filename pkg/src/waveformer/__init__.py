"""Streaming target sound extraction with a dilated-causal-conv encoder and a
query-conditioned transformer decoder."""

from .audio import AudioBuffer, read_wav, write_wav
from .checkpoint import NamedTensorSet, load, random_init, save
from .config import ModelConfig, chunk_geometry, receptive_field_frames
from .decoder import query_vector
from .metrics import loss_value, si_snr, si_snri, snr
from .stream import StreamSession, Waveformer, flush, new_session, offline_forward, push_samples

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "read_wav", "write_wav",
    "NamedTensorSet", "load", "random_init", "save",
    "ModelConfig", "chunk_geometry", "receptive_field_frames",
    "query_vector",
    "loss_value", "si_snr", "si_snri", "snr",
    "StreamSession", "Waveformer", "flush", "new_session", "offline_forward", "push_samples",
]
