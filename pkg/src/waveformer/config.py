"""Architecture hyperparameters and closed-form geometry/complexity."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

# Short symbolic aliases accepted in config files, mapped to field names.
ALIASES = {
    "L": "stride",
    "E": "enc_dim",
    "D": "dec_dim",
    "K": "chunk_frames",
    "M": "num_layers",
    "P": "kernel_size",
    "N_c": "num_classes",
    "F_s": "sample_rate",
}


@dataclass(frozen=True)
class ModelConfig:
    """Waveformer hyperparameters.

    ``stride`` is the front-end hop in samples; the front-end kernel spans
    three hops. ``ffn_dim`` defaults to four times ``dec_dim``.
    """

    stride: int = 32
    enc_dim: int = 512
    dec_dim: int = 256
    chunk_frames: int = 13
    num_layers: int = 10
    kernel_size: int = 3
    num_classes: int = 41
    heads: int = 8
    ffn_dim: int | None = None
    embed_hidden: int = 512
    sample_rate: float = 44100.0

    def __post_init__(self):
        if self.ffn_dim is None:
            object.__setattr__(self, "ffn_dim", 4 * self.dec_dim)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        self.validate()

    def validate(self) -> None:
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "sample_rate":
                if not v > 0:
                    raise ValueError(f"sample_rate must be positive, got {v}")
            elif not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"{f.name} must be a positive integer, got {v!r}")
        if self.kernel_size < 2:
            raise ValueError("kernel_size must be >= 2")
        if self.dec_dim > self.enc_dim:
            raise ValueError(f"dec_dim ({self.dec_dim}) must not exceed enc_dim ({self.enc_dim})")
        if self.dec_dim % self.heads:
            raise ValueError(f"dec_dim ({self.dec_dim}) not divisible by heads ({self.heads})")

    @property
    def chunk_samples(self) -> int:
        return self.chunk_frames * self.stride

    @property
    def lookahead_samples(self) -> int:
        return 2 * self.stride

    @property
    def frontend_kernel(self) -> int:
        return 3 * self.stride

    def dilations(self) -> list[int]:
        return [2 ** i for i in range(self.num_layers)]

    def context_width(self, layer: int) -> int:
        return (self.kernel_size - 1) * 2 ** layer

    def replace(self, **changes) -> "ModelConfig":
        if "dec_dim" in changes and "ffn_dim" not in changes and self.ffn_dim == 4 * self.dec_dim:
            changes["ffn_dim"] = None
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def parse_config(text: str, base: ModelConfig | None = None) -> ModelConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Keys are field names or their symbolic aliases (``L``, ``E``, ...).
    Missing keys keep the values from ``base`` (defaults if not given).
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        name = ALIASES.get(key, key)
        if name not in {f.name for f in dataclasses.fields(ModelConfig)}:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[name] = float(value) if name == "sample_rate" else int(value)
        except ValueError:
            raise ValueError(f"config line {lineno}: bad value for {key}: {value!r}") from None
    base = base or ModelConfig()
    return base.replace(**values)


def load_config(path, base: ModelConfig | None = None) -> ModelConfig:
    return parse_config(Path(path).read_text(), base)


def format_config(cfg: ModelConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.as_dict().items())


def receptive_field_frames(kernel_size: int, num_layers: int) -> int:
    """Latent frames of past context seen by a dilated causal stack.

    Dilations double per layer starting at 1, so the span is
    ``(kernel_size - 1) * (2**num_layers - 1)``.
    """
    if kernel_size < 2 or num_layers < 1:
        raise ValueError("need kernel_size >= 2 and num_layers >= 1")
    return (kernel_size - 1) * (2 ** num_layers - 1)


def chunk_geometry(cfg: ModelConfig) -> dict:
    fs = cfg.sample_rate
    rf = receptive_field_frames(cfg.kernel_size, cfg.num_layers)
    return {
        "samples_per_chunk": cfg.chunk_samples,
        "chunk_duration_ms": 1000.0 * cfg.chunk_samples / fs,
        "lookahead_samples": cfg.lookahead_samples,
        "lookahead_ms": 1000.0 * cfg.lookahead_samples / fs,
        "receptive_field_frames": rf,
        "receptive_field_seconds": rf * cfg.stride / fs,
    }


# MAC counts cover convolution, linear and attention cores only.
# Normalization, activations, masking and residual adds are excluded.

def encoder_layer_macs(cfg: ModelConfig) -> int:
    return cfg.chunk_frames * cfg.kernel_size * cfg.enc_dim ** 2


def encoder_macs_per_chunk(cfg: ModelConfig) -> int:
    return cfg.num_layers * encoder_layer_macs(cfg)


def attention_macs_per_chunk(cfg: ModelConfig, context_frames: int) -> int:
    """MACs for one chunk attending over ``context_frames`` past frames.

    This is the chunk-attention alternative to the convolutional encoder:
    score and value products grow as ``2*K*R*D``; query and output
    projections add ``2*K*D**2`` (key/value projections are assumed cached
    per frame).
    """
    k, d = cfg.chunk_frames, cfg.dec_dim
    return 2 * k * context_frames * d + 2 * k * d * d


def decoder_macs_per_chunk(cfg: ModelConfig) -> int:
    k, e, d, f = cfg.chunk_frames, cfg.enc_dim, cfg.dec_dim, cfg.ffn_dim
    window = 2 * k
    projections = 2 * d * e * k                  # e_k and conditioned e_k to D
    attn_block = d * d * k + 2 * d * d * window + 2 * k * window * d + d * d * k
    ffn = 2 * d * f * k
    back = e * d * k
    return projections + 2 * attn_block + ffn + back


def frontend_macs_per_chunk(cfg: ModelConfig) -> int:
    return cfg.enc_dim * cfg.frontend_kernel * cfg.chunk_frames


def synthesis_macs_per_chunk(cfg: ModelConfig) -> int:
    return cfg.enc_dim * cfg.frontend_kernel * cfg.chunk_frames


def total_macs_per_chunk(cfg: ModelConfig) -> int:
    return (frontend_macs_per_chunk(cfg) + encoder_macs_per_chunk(cfg)
            + decoder_macs_per_chunk(cfg) + synthesis_macs_per_chunk(cfg))


def embedding_macs(cfg: ModelConfig) -> int:
    h = cfg.embed_hidden
    return cfg.num_classes * h + h * h + h * cfg.enc_dim
