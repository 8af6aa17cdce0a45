"""Command-line interface.

Exit status is 0 on success, 1 on a usage error and 2 on a data error; errors
are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import wave
from dataclasses import replace
from pathlib import Path

import numpy as np

from .codec import DEFAULT_CONFIG
from .core import GroupingLevel, NoteSequence
from .datasets import (
    DatasetManifest,
    MixtureSpec,
    Stem,
    derive_cerberus4,
    load_midi,
    mix_stems,
    mixture_probabilities,
    parse_manifests,
    sample_examples,
    slakh_augment,
    write_midi,
)
from .errors import DataError
from .frontend import DEFAULT_SPECTROGRAM, AudioSegment, dump_tensor, segment_spectrograms
from .metrics import METRIC_NAMES, MatchCriteria, evaluate, tolerance_sweep
from .segmenter import dump_segments_binary, dump_segments_text, load_segments, split
from .simulate import METRICS, PARAMETERS, CorruptionSpec, degradation_curve, transcribe

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

METRIC_LABELS = {
    "frame": "Frame F1",
    "onset": "Onset F1",
    "onset_offset": "Onset+Offset F1",
    "multi_instrument": "Multi-instrument F1",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_grid(text: str) -> list[float]:
    """``START:STOP:STEP`` with STOP inclusive and an optional ``ms``/``s`` suffix.

    Values are returned as written, without unit conversion.
    """
    m = re.fullmatch(r"\s*([\d.]+):([\d.]+):([\d.]+)\s*(ms|s)?\s*", text)
    if not m:
        raise UsageError(f"bad grid {text!r}, expected START:STOP:STEP[ms|s]")
    start, stop, step = (float(x) for x in m.group(1, 2, 3))
    if step <= 0 or stop < start:
        raise UsageError(f"bad grid {text!r}")
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 9) for i in range(count)]


def grid_seconds(text: str) -> list[float]:
    """A :func:`parse_grid` grid in seconds; values are milliseconds unless suffixed ``s``."""
    scale = 1.0 if text.strip().endswith("s") and not text.strip().endswith("ms") else 1e-3
    return [round(v * scale, 9) for v in parse_grid(text)]


def _read_notes(path: str) -> NoteSequence:
    data = Path(path).read_bytes()
    if data[:4] == b"MThd":
        return load_midi(data)
    return transcribe(load_segments(data))


def _criteria(args) -> MatchCriteria:
    return MatchCriteria(
        onset_tolerance=args.onset_tol / 1000.0,
        offset_ratio=args.offset_ratio,
        offset_min_tolerance=args.offset_min_tol / 1000.0,
    )


def _write_csv(rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerows(rows)


def cmd_encode(args, out) -> None:
    segments = split(_read_notes(args.input))
    if args.format == "text":
        Path(args.output).write_text(dump_segments_text(segments))
    else:
        Path(args.output).write_bytes(dump_segments_binary(segments))


def cmd_decode(args, out) -> None:
    seq = transcribe(load_segments(Path(args.input).read_bytes()))
    Path(args.output).write_bytes(write_midi(seq))


def cmd_eval(args, out) -> None:
    scores = evaluate(_read_notes(args.reference), _read_notes(args.estimate),
                      GroupingLevel(args.grouping), _criteria(args), args.fps)
    if args.csv:
        _write_csv([[f"{n}_f1" for n in METRIC_NAMES],
                    [f"{scores[n].f1:.6f}" for n in METRIC_NAMES]], out)
        return
    for name in METRIC_NAMES:
        s = scores[name]
        out.write(f"{METRIC_LABELS[name]:<20} P={s.precision:.4f} R={s.recall:.4f} F1={s.f1:.4f}\n")


def cmd_sweep(args, out) -> None:
    curve = tolerance_sweep(_read_notes(args.reference), _read_notes(args.estimate),
                            grid_seconds(args.grid),
                            _criteria(args))
    rows = [["t_ms", "f1"]]
    rows += [[f"{t * 1000:g}", f"{f1:.6f}"] for t, f1 in curve]
    _write_csv(rows, out)


def _parse_stem(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise UsageError(f"bad --stem {text!r}, expected CLASS=PATH")
    name, path = text.split("=", 1)
    return name, path


def cmd_augment(args, out) -> None:
    stems = [Stem(name, load_midi(Path(path).read_bytes()))
             for name, path in map(_parse_stem, args.stem)]
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.cerberus4:
        mixes = [mix_stems(combo) for combo in derive_cerberus4(stems)]
        prefix = "cerberus4"
    else:
        mixes = slakh_augment(stems, args.k, args.min_size, args.seed)
        prefix = "mix"
    for i, seq in enumerate(mixes):
        (outdir / f"{prefix}_{i:03d}.mid").write_bytes(write_midi(seq))
    out.write(f"{len(mixes)}\n")


def cmd_mix_plan(args, out) -> None:
    manifests: dict[str, DatasetManifest] = {}
    for path in args.manifest:
        for name, m in parse_manifests(Path(path).read_text()).items():
            if name in manifests:
                raise DataError(f"dataset {name!r} appears in more than one manifest")
            manifests[name] = m
    spec = MixtureSpec.from_manifests(list(manifests.values()), args.exponent, args.exclude)
    counts = dict(spec.datasets)
    rows = [["dataset", "examples", "probability"]]
    rows += [[n, counts[n], f"{p:.6f}"] for n, p in mixture_probabilities(spec)]
    _write_csv(rows, out)
    if args.count:
        if args.seed is None:
            raise UsageError("--count requires --seed")
        draws = sample_examples(spec, manifests, args.count, args.seed)
        buf = io.StringIO()
        _write_csv([["dataset", "track_id"], *draws], buf)
        if args.output:
            Path(args.output).write_text(buf.getvalue())
        else:
            out.write(buf.getvalue())


def cmd_simulate(args, out) -> None:
    seq = _read_notes(args.input)
    base = CorruptionSpec(
        drop_noteoff_rate=args.drop_noteoff_rate,
        drop_tie_rate=args.drop_tie_rate,
        token_substitution_rate=args.token_substitution_rate,
        onset_jitter_std=args.onset_jitter_ms / 1000.0,
        truncate_rate=args.truncate_rate,
        seed=args.seed,
    )
    if args.vary == "onset_jitter_std":
        rates = grid_seconds(args.rates)
    else:
        rates = parse_grid(args.rates)
    metrics = list(METRICS) if args.metric == "all" else [args.metric]
    rows = [["metric", args.vary, "mean_f1", "std_f1"]]
    for name in metrics:
        for p in degradation_curve(seq, rates, name, args.vary, args.seeds, base):
            rows.append([name, f"{p.rate:g}", f"{p.mean_f1:.6f}", f"{p.std_f1:.6f}"])
    _write_csv(rows, out)


def _read_wav(path: str) -> AudioSegment:
    try:
        with wave.open(path, "rb") as w:
            width, channels, rate = w.getsampwidth(), w.getnchannels(), w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise DataError(f"cannot read WAV: {exc}") from None
    if width == 1:
        x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width in (2, 4):
        dtype = "<i2" if width == 2 else "<i4"
        x = np.frombuffer(raw, dtype=dtype).astype(np.float64) / float(2 ** (8 * width - 1))
    else:
        raise DataError(f"unsupported WAV sample width {width}")
    return AudioSegment.from_array(x.reshape(-1, channels), rate)


def cmd_spectrogram(args, out) -> None:
    config = replace(DEFAULT_SPECTROGRAM, mel_bins=args.mel_bins)
    Path(args.output).write_bytes(dump_tensor(segment_spectrograms(_read_wav(args.input), config)))


def _add_criteria(p) -> None:
    p.add_argument("--grouping", choices=[g.value for g in GroupingLevel], default="full")
    p.add_argument("--onset-tol", type=float, default=50.0, metavar="MS")
    p.add_argument("--offset-ratio", type=float, default=0.2, metavar="R")
    p.add_argument("--offset-min-tol", type=float, default=50.0, metavar="MS")
    p.add_argument("--fps", type=float, default=62.5, metavar="F")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="amtkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="MIDI file to segment token stream")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--format", choices=["bin", "text"], default="bin")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="segment token stream to MIDI file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score an estimate against a reference")
    p.add_argument("reference")
    p.add_argument("estimate")
    _add_criteria(p)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="onset+offset F1 over a tolerance grid (CSV)")
    p.add_argument("reference")
    p.add_argument("estimate")
    p.add_argument("--grid", default="10:500:10ms")
    _add_criteria(p)
    p.add_argument("--csv", action="store_true", help="accepted for symmetry; output is CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("augment", help="random stem-subset mixes or Cerberus4 combinations")
    p.add_argument("--stem", action="append", required=True, metavar="CLASS=PATH")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--min-size", type=int, default=4)
    p.add_argument("--cerberus4", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("mix-plan", help="dataset mixture probabilities and draws")
    p.add_argument("manifest", nargs="+")
    p.add_argument("--exclude", action="append", default=[])
    p.add_argument("--exponent", type=float, default=0.3)
    p.add_argument("--count", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_mix_plan)

    p = sub.add_parser("simulate", help="F1 degradation under token corruption (CSV)")
    p.add_argument("input")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--drop-noteoff-rate", type=float, default=0.0)
    p.add_argument("--drop-tie-rate", type=float, default=0.0)
    p.add_argument("--token-substitution-rate", type=float, default=0.0)
    p.add_argument("--onset-jitter-ms", type=float, default=0.0)
    p.add_argument("--truncate-rate", type=float, default=0.0)
    p.add_argument("--vary", choices=PARAMETERS, default="drop_noteoff_rate")
    p.add_argument("--rates", default="0:1:0.25",
                   help="START:STOP:STEP; milliseconds when varying onset_jitter_std")
    p.add_argument("--metric", choices=[*METRICS, "all"], default="onset_offset")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrogram", help="WAV to stacked log-Mel tensor")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mel-bins", type=int, default=DEFAULT_SPECTROGRAM.mel_bins)
    p.set_defaults(func=cmd_spectrogram)
    return parser


def _fail(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def run(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
    except UsageError as exc:
        _fail("UsageError", str(exc))
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        _fail(type(exc).__name__, str(exc))
        return EXIT_DATA
    except ValueError as exc:
        # out-of-range option values rejected by config constructors
        _fail("UsageError", str(exc))
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
