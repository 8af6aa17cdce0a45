"""Mock predictor: corrupt ground-truth token streams the way a model might.

Every corruption kind draws from its own per-segment random stream with a
fixed number of draws, so for a given seed the corruptions applied at a
lower rate are a subset of those applied at a higher one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .codec import (
    DEFAULT_CONFIG,
    DRUM_OFFSET,
    END_TIE_ID,
    NOTE_OFFSET,
    OFF_ID,
    ON_ID,
    CodecConfig,
    Event,
    EventKind,
    decode_segment,
    encode_segment_ids,
)
from .core import GroupingLevel, NoteSequence
from .metrics import frame_f1, multi_instrument_f1, onset_f1, onset_offset_f1
from .segmenter import Segment, decode_segments, reconstruct, split

_JITTER, _NOTEOFF, _TIE, _SUBST, _TRUNC = range(5)


@dataclass(frozen=True)
class CorruptionSpec:
    drop_noteoff_rate: float = 0.0
    drop_tie_rate: float = 0.0
    token_substitution_rate: float = 0.0
    onset_jitter_std: float = 0.0  # seconds
    truncate_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("drop_noteoff_rate", "drop_tie_rate", "token_substitution_rate",
                     "truncate_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.onset_jitter_std < 0:
            raise ValueError("onset_jitter_std must be >= 0")


def _rng(seed: int, segment: int, kind: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, segment, kind]))


def _jitter(tokens: Sequence[int], std: float, rng: np.random.Generator,
            config: CodecConfig) -> list[int]:
    """Shift note-on and drum times in event space, then re-encode.

    A note-on is kept between the previous and next note-off of the same
    pitch and program within the segment, so jitter never reorders a note's
    own on/off pair.
    """
    report = decode_segment(tokens, config)
    events = report.events
    noise = rng.standard_normal(len(events)) * std
    last = (config.num_time_steps - 1) * config.time_step_seconds
    dt = config.time_step_seconds
    off_times: dict[tuple[int, int], list[float]] = {}
    for ev in events:
        if ev.kind is EventKind.OFF:
            off_times.setdefault((ev.program, ev.pitch), []).append(ev.time)
    out = []
    for ev, z in zip(events, noise):
        if ev.kind is EventKind.OFF:
            out.append(ev)
            continue
        lo, hi = 0.0, last
        if ev.kind is EventKind.ON:
            offs = off_times.get((ev.program, ev.pitch), [])
            lo = max([t for t in offs if t <= ev.time], default=0.0)
            hi = min([t - dt for t in offs if t > ev.time], default=last)
        t = float(np.clip(ev.time + z, lo, max(lo, hi)))
        out.append(Event(t, ev.kind, ev.pitch, ev.program))
    return encode_segment_ids(out, report.tie_pitches, config)


def _note_roles(tokens: Sequence[int]) -> list[str]:
    """Role of each token: 'tie' / 'off' / 'on' for NotePitch tokens, else ''."""
    roles = []
    in_tie, state = True, None
    for i in tokens:
        role = ""
        if i == END_TIE_ID:
            in_tie = False
        elif i in (ON_ID, OFF_ID):
            in_tie, state = False, i == ON_ID
        elif i >= DRUM_OFFSET:
            in_tie = False
        elif NOTE_OFFSET <= i < DRUM_OFFSET:
            role = "tie" if in_tie else ("on" if state else "off" if state is not None else "")
        roles.append(role)
    return roles


def _drop_role(tokens: list[int], role: str, rate: float, rng: np.random.Generator) -> list[int]:
    u = rng.random(len(tokens))
    return [t for t, r, x in zip(tokens, _note_roles(tokens), u) if not (r == role and x < rate)]


def corrupt_tokens(tokens: Sequence[int], spec: CorruptionSpec, segment: int = 0,
                   config: CodecConfig = DEFAULT_CONFIG) -> list[int]:
    tokens = list(tokens)
    if spec.onset_jitter_std > 0:
        tokens = _jitter(tokens, spec.onset_jitter_std, _rng(spec.seed, segment, _JITTER), config)
    tokens = _drop_role(tokens, "off", spec.drop_noteoff_rate, _rng(spec.seed, segment, _NOTEOFF))
    tokens = _drop_role(tokens, "tie", spec.drop_tie_rate, _rng(spec.seed, segment, _TIE))

    rng = _rng(spec.seed, segment, _SUBST)
    hit = rng.random(len(tokens)) < spec.token_substitution_rate
    repl = rng.integers(0, config.vocab_size, len(tokens))
    tokens = [int(r) if h else t for t, h, r in zip(tokens, hit, repl)]

    rng = _rng(spec.seed, segment, _TRUNC)
    if rng.random() < spec.truncate_rate:
        tokens = tokens[:int(rng.random() * len(tokens))]
    return tokens


def corrupt(segments: Sequence[Segment], spec: CorruptionSpec,
            config: CodecConfig = DEFAULT_CONFIG) -> list[Segment]:
    """Apply ``spec`` independently to each segment's tokens."""
    return [
        Segment(s.index, s.start, tuple(corrupt_tokens(s.tokens, spec, s.index, config)))
        for s in segments
    ]


MetricFn = Callable[[NoteSequence, NoteSequence], float]

METRICS: dict[str, MetricFn] = {
    "frame": lambda r, e: frame_f1(r, e).f1,
    "onset": lambda r, e: onset_f1(r, e).f1,
    "onset_offset": lambda r, e: onset_offset_f1(r, e).f1,
    "multi_instrument": lambda r, e: multi_instrument_f1(r, e, GroupingLevel.FULL).f1,
}

PARAMETERS = ("drop_noteoff_rate", "drop_tie_rate", "token_substitution_rate",
              "onset_jitter_std", "truncate_rate")


@dataclass(frozen=True)
class CurvePoint:
    rate: float
    mean_f1: float
    std_f1: float


def transcribe(segments: Sequence[Segment], duration: float | None = None,
               config: CodecConfig = DEFAULT_CONFIG) -> NoteSequence:
    return reconstruct(decode_segments(segments, config), config, duration)


def degradation_curve(seq: NoteSequence, rates: Sequence[float], metric: str | MetricFn = "onset_offset",
                      parameter: str = "drop_noteoff_rate", seeds: int = 20,
                      base: CorruptionSpec = CorruptionSpec(),
                      config: CodecConfig = DEFAULT_CONFIG) -> list[CurvePoint]:
    """Mean and standard deviation of F1 over ``seeds`` runs per value of ``parameter``.

    Scores are against the uncorrupted round trip of ``seq``, so the curve
    measures corruption alone and not time quantization.
    """
    if parameter not in PARAMETERS:
        raise ValueError(f"unknown corruption parameter {parameter!r}")
    if seeds < 1:
        raise ValueError("need at least one seed")
    score = METRICS[metric] if isinstance(metric, str) else metric
    segments = split(seq, config)
    ref = transcribe(segments, seq.duration, config)
    curve = []
    for rate in rates:
        values = []
        for s in range(seeds):
            spec = replace(base, seed=base.seed + s, **{parameter: rate})
            est = transcribe(corrupt(segments, spec, config), seq.duration, config)
            values.append(score(ref, est))
        curve.append(CurvePoint(float(rate), float(np.mean(values)), float(np.std(values))))
    return curve
