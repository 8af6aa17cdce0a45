"""MIDI-like token vocabulary and the per-segment encoder/decoder.

Token id layout (normative, layout version 1)::

    0            Pad
    1            EOS
    2            EndTieSection
    3   - 130    Instrument(program 0..127)
    131          OnOff(off)
    132          OnOff(on)
    133 - 260    NotePitch(pitch 0..127)
    261 - 388    Drum(type 0..127)
    389 - 593    Time(step 0..204)

A segment encodes as ``tie section, EndTieSection, body, EOS``. The tie section
lists the ``(program, pitch)`` pairs still sounding at the segment start. The
body is a run-length state machine: Time, Instrument and OnOff tokens are only
emitted when their value changes, and they apply to every following NotePitch.
"""

from __future__ import annotations

import enum
import functools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EventOutOfSegmentError,
    InvalidPitchError,
    InvalidTokenIdError,
    MalformedTokenFileError,
    ProgramOutOfRangeError,
)

LAYOUT_VERSION = 1

PAD_ID = 0
EOS_ID = 1
END_TIE_ID = 2
INSTRUMENT_OFFSET = 3
OFF_ID = 131
ON_ID = 132
NOTE_OFFSET = 133
DRUM_OFFSET = 261
TIME_OFFSET = 389

NUM_PROGRAMS = 128
NUM_PITCHES = 128
NUM_DRUMS = 128


@dataclass(frozen=True)
class CodecConfig:
    segment_seconds: float = 2.048
    time_step_seconds: float = 0.01

    @property
    def num_time_steps(self) -> int:
        return math.ceil(round(self.segment_seconds / self.time_step_seconds, 9))

    @property
    def vocab_size(self) -> int:
        return TIME_OFFSET + self.num_time_steps


DEFAULT_CONFIG = CodecConfig()


class TokenKind(enum.Enum):
    PAD = "pad"
    EOS = "eos"
    END_TIE = "end_tie"
    INSTRUMENT = "instrument"
    ON_OFF = "on_off"
    NOTE = "note"
    DRUM = "drum"
    TIME = "time"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    value: int = 0

    @classmethod
    def pad(cls) -> Token:
        return cls(TokenKind.PAD)

    @classmethod
    def eos(cls) -> Token:
        return cls(TokenKind.EOS)

    @classmethod
    def end_tie(cls) -> Token:
        return cls(TokenKind.END_TIE)

    @classmethod
    def instrument(cls, program: int) -> Token:
        return cls(TokenKind.INSTRUMENT, program)

    @classmethod
    def on(cls) -> Token:
        return cls(TokenKind.ON_OFF, 1)

    @classmethod
    def off(cls) -> Token:
        return cls(TokenKind.ON_OFF, 0)

    @classmethod
    def note(cls, pitch: int) -> Token:
        return cls(TokenKind.NOTE, pitch)

    @classmethod
    def drum(cls, drum_type: int) -> Token:
        return cls(TokenKind.DRUM, drum_type)

    @classmethod
    def time(cls, step: int) -> Token:
        return cls(TokenKind.TIME, step)

    def __repr__(self) -> str:
        if self.kind in (TokenKind.PAD, TokenKind.EOS, TokenKind.END_TIE):
            return self.kind.name
        if self.kind is TokenKind.ON_OFF:
            return "ON" if self.value else "OFF"
        return f"{self.kind.name}({self.value})"


_FAMILY_SIZES = {
    TokenKind.PAD: 1,
    TokenKind.EOS: 1,
    TokenKind.END_TIE: 1,
    TokenKind.INSTRUMENT: NUM_PROGRAMS,
    TokenKind.ON_OFF: 2,
    TokenKind.NOTE: NUM_PITCHES,
    TokenKind.DRUM: NUM_DRUMS,
}


def family_sizes(config: CodecConfig = DEFAULT_CONFIG) -> dict[TokenKind, int]:
    return {**_FAMILY_SIZES, TokenKind.TIME: config.num_time_steps}


def vocab_size(config: CodecConfig = DEFAULT_CONFIG) -> int:
    return config.vocab_size


def token_id(token: Token, config: CodecConfig = DEFAULT_CONFIG) -> int:
    kind, value = token.kind, token.value
    size = family_sizes(config)[kind]
    if not 0 <= value < size:
        raise ValueError(f"{kind.name} value {value} outside [0, {size})")
    if kind is TokenKind.PAD:
        return PAD_ID
    if kind is TokenKind.EOS:
        return EOS_ID
    if kind is TokenKind.END_TIE:
        return END_TIE_ID
    if kind is TokenKind.INSTRUMENT:
        return INSTRUMENT_OFFSET + value
    if kind is TokenKind.ON_OFF:
        return OFF_ID + value
    if kind is TokenKind.NOTE:
        return NOTE_OFFSET + value
    if kind is TokenKind.DRUM:
        return DRUM_OFFSET + value
    return TIME_OFFSET + value


def id_to_token(i: int, config: CodecConfig = DEFAULT_CONFIG) -> Token:
    if not 0 <= i < config.vocab_size:
        raise InvalidTokenIdError(f"token id {i} outside [0, {config.vocab_size})")
    if i == PAD_ID:
        return Token.pad()
    if i == EOS_ID:
        return Token.eos()
    if i == END_TIE_ID:
        return Token.end_tie()
    if i < OFF_ID:
        return Token.instrument(i - INSTRUMENT_OFFSET)
    if i < NOTE_OFFSET:
        return Token(TokenKind.ON_OFF, i - OFF_ID)
    if i < DRUM_OFFSET:
        return Token.note(i - NOTE_OFFSET)
    if i < TIME_OFFSET:
        return Token.drum(i - DRUM_OFFSET)
    return Token.time(i - TIME_OFFSET)


def tokens_to_ids(tokens: Iterable[Token], config: CodecConfig = DEFAULT_CONFIG) -> list[int]:
    return [token_id(t, config) for t in tokens]


def ids_to_tokens(ids: Iterable[int], config: CodecConfig = DEFAULT_CONFIG) -> list[Token]:
    return [id_to_token(int(i), config) for i in ids]


class EventKind(enum.IntEnum):
    # value order is the within-time-step emission order
    OFF = 0
    ON = 1
    DRUM = 2


@dataclass(frozen=True, slots=True)
class Event:
    """A timed note event; ``time`` is seconds relative to the segment start."""

    time: float
    kind: EventKind
    pitch: int
    program: int = 0


class Anomaly(str, enum.Enum):
    ORPHAN_NOTE_OFF = "OrphanNoteOff"
    DUPLICATE_NOTE_ON = "DuplicateNoteOn"
    TIME_NOT_MONOTONIC = "TimeNotMonotonic"
    TOKENS_AFTER_EOS = "TokensAfterEos"
    MISSING_EOS = "MissingEos"
    BODY_TOKEN_BEFORE_TIE = "BodyTokenBeforeTie"
    # a note or drum token arriving before the Time/Instrument/OnOff state it needs
    MISSING_STATE = "MissingState"
    # Pad, a second EndTieSection, or a repeated tie declaration
    STRAY_TOKEN = "StrayToken"
    # raised by segment reconstruction, never by the decoder itself
    UNMATCHED_TIE = "UnmatchedTie"


@dataclass
class DecodeReport:
    events: list[Event] = field(default_factory=list)
    tie_pitches: list[tuple[int, int]] = field(default_factory=list)
    anomaly_counts: Counter = field(default_factory=Counter)

    @property
    def anomaly_total(self) -> int:
        return sum(self.anomaly_counts.values())


def quantize_time(seconds: float, step_seconds: float = 0.01) -> int:
    """Nearest time step; exact midpoints go to the even step."""
    # the inner round strips float noise so 5 ms midpoints are seen as exact
    return int(round(round(seconds / step_seconds, 9)))


def _event_sort_key(item: tuple[int, Event]) -> tuple:
    step, ev = item
    program = 0 if ev.kind is EventKind.DRUM else ev.program
    return (step, ev.kind, program, ev.pitch)


def encode_segment(
    events: Iterable[Event],
    active_at_start: Iterable[tuple[int, int]] = (),
    config: CodecConfig = DEFAULT_CONFIG,
) -> list[Token]:
    """Encode one segment's events and tie declarations to tokens.

    Times are quantized to the nearest step; a time that rounds past the last
    step is clamped onto it. Within a step, note-offs come before note-ons and
    drum hits come last, each group ordered by (program, pitch).
    """
    last_step = config.num_time_steps - 1
    timed: list[tuple[int, Event]] = []
    for ev in events:
        if not 0.0 <= ev.time < config.segment_seconds:
            raise EventOutOfSegmentError(
                f"event time {ev.time} outside [0, {config.segment_seconds})"
            )
        if not 0 <= ev.pitch < NUM_PITCHES:
            raise InvalidPitchError(f"pitch {ev.pitch} outside [0, 127]")
        if not 0 <= ev.program < NUM_PROGRAMS:
            raise ProgramOutOfRangeError(f"program {ev.program} outside [0, 127]")
        EventKind(ev.kind)
        step = min(quantize_time(ev.time, config.time_step_seconds), last_step)
        timed.append((step, ev))
    timed.sort(key=_event_sort_key)

    out: list[Token] = []
    program = None
    for prog, pitch in sorted(set(active_at_start)):
        if not 0 <= pitch < NUM_PITCHES:
            raise InvalidPitchError(f"tie pitch {pitch} outside [0, 127]")
        if not 0 <= prog < NUM_PROGRAMS:
            raise ProgramOutOfRangeError(f"tie program {prog} outside [0, 127]")
        if prog != program:
            out.append(Token.instrument(prog))
            program = prog
        out.append(Token.note(pitch))
    out.append(Token.end_tie())

    current_step = None
    program = None
    state = None
    for step, ev in timed:
        if step != current_step:
            out.append(Token.time(step))
            current_step = step
        if ev.kind is EventKind.DRUM:
            out.append(Token.drum(ev.pitch))
            continue
        if ev.program != program:
            out.append(Token.instrument(ev.program))
            program = ev.program
        if ev.kind != state:
            out.append(Token.on() if ev.kind is EventKind.ON else Token.off())
            state = ev.kind
        out.append(Token.note(ev.pitch))
    out.append(Token.eos())
    return out


def encode_segment_ids(
    events: Iterable[Event],
    active_at_start: Iterable[tuple[int, int]] = (),
    config: CodecConfig = DEFAULT_CONFIG,
) -> list[int]:
    return tokens_to_ids(encode_segment(events, active_at_start, config), config)


@functools.lru_cache(maxsize=8)
def _step_times(config: CodecConfig) -> tuple[float, ...]:
    # rounded so decoded times print and compare cleanly (0.69, not 0.6900000000000001)
    return tuple(round(k * config.time_step_seconds, 9) for k in range(config.num_time_steps))


def decode_segment(ids: Sequence[int], config: CodecConfig = DEFAULT_CONFIG) -> DecodeReport:
    """Decode one segment's token ids, tolerating malformed streams.

    Never fails on content; only ids outside the vocabulary raise. Every
    irregularity is repaired by a fixed rule and counted in
    ``anomaly_counts``:

    * note-off for a note that is not sounding: ignored;
    * note-on for a sounding note: the old note ends and a new one starts;
    * a Time token earlier than the current time: events are dropped until a
      Time token that does not go backwards;
    * tokens after EOS: ignored; a missing EOS is implied at the end;
    * OnOff/Time/Drum before EndTieSection: closes the tie section implicitly;
    * note or drum tokens lacking the Time/OnOff state they need, or a
      note-on with no Instrument yet: dropped;
    * Pad, repeated EndTieSection or repeated tie declarations: ignored.

    The Instrument state carries over from the tie section into the body.
    """
    ids = list(ids)
    vocab = config.vocab_size
    if ids and (min(ids) < 0 or max(ids) >= vocab):
        bad = next(i for i in ids if not 0 <= i < vocab)
        raise InvalidTokenIdError(f"token id {bad} outside [0, {vocab})")

    report = DecodeReport()
    counts = report.anomaly_counts
    events = report.events
    ties = report.tie_pitches
    try:
        eos_at = ids.index(EOS_ID)
    except ValueError:
        counts[Anomaly.MISSING_EOS] += 1
    else:
        if eos_at + 1 < len(ids):
            counts[Anomaly.TOKENS_AFTER_EOS] += len(ids) - eos_at - 1
        ids = ids[:eos_at]

    times = _step_times(config)
    in_tie = True
    program = None
    state = None
    step = None
    dropping = False
    active: set[tuple[int, int]] = set()
    for i in ids:
        if i >= TIME_OFFSET:
            if in_tie:
                in_tie = False
                counts[Anomaly.BODY_TOKEN_BEFORE_TIE] += 1
            v = i - TIME_OFFSET
            if step is not None and v < step:
                counts[Anomaly.TIME_NOT_MONOTONIC] += 1
                dropping = True
            else:
                step = v
                dropping = False
        elif i >= NOTE_OFFSET and i < DRUM_OFFSET:
            pitch = i - NOTE_OFFSET
            if in_tie:
                if program is None:
                    counts[Anomaly.MISSING_STATE] += 1
                elif (program, pitch) in active:
                    counts[Anomaly.STRAY_TOKEN] += 1
                else:
                    active.add((program, pitch))
                    ties.append((program, pitch))
                continue
            if step is None or state is None or (state and program is None):
                counts[Anomaly.MISSING_STATE] += 1
                continue
            if dropping:
                continue
            # with no Instrument yet, a note-off cannot match and is an orphan
            key = (program, pitch)
            t = times[step]
            if state:
                if key in active:
                    counts[Anomaly.DUPLICATE_NOTE_ON] += 1
                    events.append(Event(t, EventKind.OFF, pitch, program))
                else:
                    active.add(key)
                events.append(Event(t, EventKind.ON, pitch, program))
            elif key in active:
                active.remove(key)
                events.append(Event(t, EventKind.OFF, pitch, program))
            else:
                counts[Anomaly.ORPHAN_NOTE_OFF] += 1
        elif i >= INSTRUMENT_OFFSET and i < OFF_ID:
            program = i - INSTRUMENT_OFFSET
        elif i == ON_ID or i == OFF_ID:
            if in_tie:
                in_tie = False
                counts[Anomaly.BODY_TOKEN_BEFORE_TIE] += 1
            state = i == ON_ID
        elif i >= DRUM_OFFSET:
            if in_tie:
                in_tie = False
                counts[Anomaly.BODY_TOKEN_BEFORE_TIE] += 1
            if step is None:
                counts[Anomaly.MISSING_STATE] += 1
            elif not dropping:
                events.append(Event(times[step], EventKind.DRUM, i - DRUM_OFFSET, 0))
        elif i == END_TIE_ID:
            if in_tie:
                in_tie = False
            else:
                counts[Anomaly.STRAY_TOKEN] += 1
        else:
            counts[Anomaly.STRAY_TOKEN] += 1
    return report


# -- token files ---------------------------------------------------------

BINARY_MAGIC = b"TOK" + bytes([LAYOUT_VERSION])
TEXT_MAGIC = f"TOK {LAYOUT_VERSION}"


def _check_ids(ids: Sequence[int], config: CodecConfig) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= config.vocab_size):
        raise InvalidTokenIdError("token id outside the vocabulary")
    return arr


def dump_tokens_binary(ids: Sequence[int], config: CodecConfig = DEFAULT_CONFIG) -> bytes:
    """Magic ``TOK\\x01`` followed by little-endian uint16 ids."""
    return BINARY_MAGIC + _check_ids(ids, config).astype("<u2").tobytes()


def load_tokens_binary(data: bytes, config: CodecConfig = DEFAULT_CONFIG) -> list[int]:
    if data[:4] != BINARY_MAGIC:
        raise MalformedTokenFileError("missing binary token header")
    body = data[4:]
    if len(body) % 2:
        raise MalformedTokenFileError("truncated token file")
    ids = np.frombuffer(body, dtype="<u2").astype(np.int64).tolist()
    _check_ids(ids, config)
    return ids


def dump_tokens_text(ids: Sequence[int], config: CodecConfig = DEFAULT_CONFIG) -> str:
    """Header line ``TOK 1`` followed by one decimal id per line."""
    _check_ids(ids, config)
    return "\n".join([TEXT_MAGIC, *(str(int(i)) for i in ids)]) + "\n"


def load_tokens_text(text: str, config: CodecConfig = DEFAULT_CONFIG) -> list[int]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TEXT_MAGIC:
        raise MalformedTokenFileError("missing text token header")
    try:
        ids = [int(line) for line in lines[1:] if line.strip()]
    except ValueError as exc:
        raise MalformedTokenFileError(str(exc)) from None
    _check_ids(ids, config)
    return ids
