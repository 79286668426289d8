"""Command-line entry point: extract, verify, bench, init-weights, eval.

Exit codes: 0 success, 1 validation/format error, 2 I/O error. Errors are
printed as a single ``error: <code>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import checkpoint, metrics
from .audio import AudioBuffer, WavFormatError, read_wav, write_wav
from .bench import bench_rtf
from .config import ModelConfig, load_config
from .decoder import query_vector
from .probes import run_all
from .stream import Waveformer


class CliError(Exception):
    def __init__(self, code: str, message: str, status: int = 1):
        super().__init__(message)
        self.code = code
        self.status = status


def _read_config(path) -> ModelConfig:
    try:
        return load_config(path)
    except OSError as exc:
        raise CliError("io", f"cannot read config {path}: {exc}", 2) from None
    except ValueError as exc:
        raise CliError("config", str(exc)) from None


def _load_weights(path) -> checkpoint.NamedTensorSet:
    try:
        return checkpoint.load(path)
    except OSError as exc:
        raise CliError("io", f"cannot read checkpoint {path}: {exc}", 2) from None
    except checkpoint.CheckpointFormatError as exc:
        raise CliError("checkpoint-format", str(exc)) from None
    except checkpoint.CheckpointValidationError as exc:
        raise CliError("checkpoint-validation", str(exc)) from None


def _read_audio(path) -> AudioBuffer:
    try:
        return read_wav(path)
    except OSError as exc:
        raise CliError("io", f"cannot read {path}: {exc}", 2) from None
    except WavFormatError as exc:
        raise CliError("wav-format", f"{path}: {exc}") from None


def _write_audio(path, audio: AudioBuffer, bit_depth: int) -> None:
    try:
        write_wav(path, audio, bit_depth)
    except OSError as exc:
        raise CliError("io", f"cannot write {path}: {exc}", 2) from None


def _apply_geometry(tset, config_path) -> checkpoint.NamedTensorSet:
    """Take chunk length from a config file; dimensions stay as checkpointed."""
    if not config_path:
        return tset
    override = _read_config(config_path)
    ignored = [k for k, v in override.as_dict().items()
               if k != "chunk_frames" and v != getattr(tset.config, k)]
    if ignored:
        print(f"warning: --config may only change chunk_frames; ignoring {', '.join(ignored)}",
              file=sys.stderr)
    cfg = tset.config.replace(chunk_frames=override.chunk_frames)
    return checkpoint.NamedTensorSet(cfg, tset.tensors)


def _read_labels(path) -> list[str]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise CliError("io", f"cannot read labels {path}: {exc}", 2) from None
    return [line.strip() for line in lines]


def parse_classes(text: str, num_classes: int, labels: list[str] | None = None) -> list[int]:
    """Comma-separated class indices, or names when a label list is given."""
    out = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if item.lstrip("-").isdigit():
            idx = int(item)
        elif labels is not None and item in labels:
            idx = labels.index(item)
        else:
            raise CliError("unknown-class", f"unknown class {item!r}")
        if not 0 <= idx < num_classes:
            raise CliError("unknown-class", f"class {idx} outside [0, {num_classes})")
        out.append(idx)
    if not out:
        raise CliError("unknown-class", "at least one class is required")
    return out


def cmd_extract(args) -> int:
    tset = _apply_geometry(_load_weights(args.weights), args.config)
    cfg = tset.config
    labels = None
    if args.labels:
        labels = _read_labels(args.labels)
    else:
        sidecar = Path(args.weights).with_suffix(".labels")
        if sidecar.exists():
            labels = _read_labels(sidecar)
    classes = parse_classes(args.classes, cfg.num_classes, labels)
    audio = _read_audio(args.input)
    if audio.sample_rate != cfg.sample_rate:
        print(f"warning: input is {audio.sample_rate:g} Hz, model expects "
              f"{cfg.sample_rate:g} Hz; processing without resampling", file=sys.stderr)

    model = Waveformer(tset)
    session = model.session(query_vector(classes, cfg.num_classes))
    t0 = time.perf_counter()
    parts = []
    block = cfg.chunk_samples
    for i in range(0, len(audio), block):
        parts.append(session.push(audio.samples[i:i + block]).samples)
    parts.append(session.flush().samples)
    elapsed = time.perf_counter() - t0
    out = np.concatenate(parts)
    _write_audio(args.output, AudioBuffer(out, audio.sample_rate), args.bit_depth)
    print(f"chunks={session.chunks_processed} samples={out.size} wall_time_s={elapsed:.3f}")
    return 0


def cmd_verify(args) -> int:
    if args.weights:
        tset = _load_weights(args.weights)
    else:
        cfg = _read_config(args.config) if args.config else ModelConfig()
        tset = checkpoint.random_init(cfg, args.seed)
    model = Waveformer(tset)
    results = run_all(model, seed=args.seed, seconds=args.seconds)
    for r in results:
        print(r.line())
    if not all(r.passed for r in results):
        failed = ", ".join(r.name for r in results if not r.passed)
        raise CliError("property-failed", failed)
    return 0


def cmd_bench(args) -> int:
    if args.weights:
        tset = _load_weights(args.weights)
    else:
        cfg = _read_config(args.config) if args.config else ModelConfig()
        tset = checkpoint.random_init(cfg, args.seed)
    report = bench_rtf(tset, iterations=args.iters, warmup=args.warmup)
    print(report.to_json() if args.json else report.to_text(), end="" if not args.json else "\n")
    return 0


def cmd_init_weights(args) -> int:
    cfg = _read_config(args.config) if args.config else ModelConfig()
    tset = checkpoint.random_init(cfg, args.seed)
    try:
        checkpoint.save(tset, args.out)
    except OSError as exc:
        raise CliError("io", f"cannot write {args.out}: {exc}", 2) from None
    print(f"wrote {args.out} tensors={len(tset.tensors)} sha256={tset.digest()}")
    return 0


def cmd_eval(args) -> int:
    ref = _read_audio(args.ref).samples
    est = _read_audio(args.est).samples
    try:
        print(f"snr_db={metrics.snr(ref, est):.4f}")
        print(f"si_snr_db={metrics.si_snr(ref, est):.4f}")
        if args.mix:
            mix = _read_audio(args.mix).samples
            print(f"si_snri_db={metrics.si_snri(mix, ref, est):.4f}")
    except ValueError as exc:
        raise CliError("invalid-argument", str(exc)) from None
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="waveformer", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", help="extract target classes from a WAV file")
    s.add_argument("--weights", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--classes", required=True, help="e.g. 3 or 3,7 or Bark,Cough")
    s.add_argument("--labels", help="label file, one class name per line")
    s.add_argument("--config", help="key = value file; only chunk_frames is applied")
    s.add_argument("--bit-depth", type=int, choices=(16, 32), default=16)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("verify", help="run the streaming invariant probes")
    s.add_argument("--weights")
    s.add_argument("--config", help="config for random weights when --weights is omitted")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--seconds", type=float, default=2.0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bench", help="measure per-chunk real-time factor")
    s.add_argument("--weights")
    s.add_argument("--config", help="config for random weights when --weights is omitted")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--iters", type=int, default=200)
    s.add_argument("--warmup", type=int, default=16)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("init-weights", help="write a deterministic random checkpoint")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_init_weights)

    s = sub.add_parser("eval", help="SNR / SI-SNR (/ SI-SNRi) between WAV files")
    s.add_argument("--ref", required=True)
    s.add_argument("--est", required=True)
    s.add_argument("--mix")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return exc.status
    except ValueError as exc:
        print(f"error: invalid-argument: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
