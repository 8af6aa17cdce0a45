"""Cut a note sequence into fixed windows and stitch decoded windows back together."""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .codec import (
    DEFAULT_CONFIG,
    Anomaly,
    CodecConfig,
    DecodeReport,
    Event,
    EventKind,
    decode_segment,
    dump_tokens_binary,
    dump_tokens_text,
    encode_segment_ids,
    load_tokens_binary,
    load_tokens_text,
    quantize_time,
    TEXT_MAGIC,
)
from .core import Note, NoteSequence, validate_sequence
from .errors import MalformedTokenFileError


@dataclass(frozen=True)
class Segment:
    index: int
    start: float
    tokens: tuple[int, ...]


@dataclass
class SegmentEvents:
    """Events of one window before tokenization."""

    events: list[Event]
    ties: list[tuple[int, int]]


def _grid_position(t: float, config: CodecConfig) -> tuple[int, int]:
    """(segment index, time step) of ``t`` on the per-segment time grid.

    Times that would round past the last step of a window are moved onto step
    0 of the next one, so every event lands within half a step of its time.
    """
    seg_len = config.segment_seconds
    k = math.floor(round(t / seg_len, 9))
    local = max(t - k * seg_len, 0.0)
    step = quantize_time(local, config.time_step_seconds)
    if step >= config.num_time_steps:
        return k + 1, 0
    return k, step


def num_segments(duration: float, config: CodecConfig = DEFAULT_CONFIG) -> int:
    return max(1, math.ceil(round(duration / config.segment_seconds, 9)))


def split_events(seq: NoteSequence, config: CodecConfig = DEFAULT_CONFIG) -> list[SegmentEvents]:
    """Per-window events and tie lists for ``seq``.

    A note-off that falls exactly on a window boundary is not emitted: the
    note is simply left out of the next window's tie list, which ends it
    there on reconstruction. Notes that collapse to zero length on the time
    grid are dropped.
    """
    dt = config.time_step_seconds
    placed: list[tuple[int, Event]] = []
    ties: list[tuple[int, tuple[int, int]]] = []
    last = num_segments(seq.duration, config) - 1
    for note in seq.notes:
        on_seg, on_step = _grid_position(note.onset, config)
        if note.is_drum:
            placed.append((on_seg, Event(on_step * dt, EventKind.DRUM, note.pitch, 0)))
            last = max(last, on_seg)
            continue
        off_seg, off_step = _grid_position(note.offset, config)
        if (off_seg, off_step) <= (on_seg, on_step):
            continue
        key = (note.program, note.pitch)
        placed.append((on_seg, Event(on_step * dt, EventKind.ON, note.pitch, note.program)))
        last = max(last, on_seg)
        if off_step > 0:
            placed.append((off_seg, Event(off_step * dt, EventKind.OFF, note.pitch, note.program)))
            last = max(last, off_seg)
            tie_end = off_seg + 1
        else:
            tie_end = off_seg
        for j in range(on_seg + 1, tie_end):
            ties.append((j, key))

    out = [SegmentEvents([], []) for _ in range(last + 1)]
    for seg, ev in placed:
        out[seg].events.append(ev)
    for seg, key in ties:
        if seg <= last:
            out[seg].ties.append(key)
    for s in out:
        s.ties.sort()
    return out


def split(seq: NoteSequence, config: CodecConfig = DEFAULT_CONFIG) -> list[Segment]:
    """Tokenize ``seq`` as consecutive non-overlapping windows.

    Window ``k`` covers ``[k*S, (k+1)*S)`` and declares as ties the notes that
    started before ``k*S`` and are still sounding after it.
    """
    seg_len = config.segment_seconds
    return [
        Segment(k, k * seg_len, tuple(encode_segment_ids(s.events, s.ties, config)))
        for k, s in enumerate(split_events(seq, config))
    ]


def decode_segments(segments: Iterable[Segment | Sequence[int]],
                    config: CodecConfig = DEFAULT_CONFIG) -> list[DecodeReport]:
    return [decode_segment(s.tokens if isinstance(s, Segment) else s, config) for s in segments]


def reconstruct_with_anomalies(
    reports: Sequence[DecodeReport],
    config: CodecConfig = DEFAULT_CONFIG,
    duration: float | None = None,
) -> tuple[NoteSequence, Counter]:
    """Like :func:`reconstruct`, also returning the summed anomaly counts."""
    seg_len = config.segment_seconds
    anomalies: Counter = Counter()
    notes: list[Note] = []
    active: dict[tuple[int, int], float] = {}

    def close(key: tuple[int, int], at: float) -> None:
        onset = active.pop(key)
        if at > onset:
            notes.append(Note(key[1], onset, at, key[0]))

    for k, report in enumerate(reports):
        anomalies.update(report.anomaly_counts)
        start = round(k * seg_len, 9)
        declared = set(report.tie_pitches)
        for key in [key for key in active if key not in declared]:
            close(key, start)
        for key in report.tie_pitches:
            if key not in active:
                anomalies[Anomaly.UNMATCHED_TIE] += 1
                active[key] = start
        for ev in report.events:
            t = round(start + ev.time, 9)
            if ev.kind is EventKind.DRUM:
                notes.append(Note(ev.pitch, t, t, 0, True))
                continue
            key = (ev.program, ev.pitch)
            if ev.kind is EventKind.ON:
                if key in active:
                    close(key, t)
                active[key] = t
            elif key in active:
                close(key, t)

    end = round(len(reports) * seg_len, 9) if duration is None else duration
    for key in list(active):
        close(key, end)
    return validate_sequence(notes, end), anomalies


def reconstruct(
    reports: Sequence[DecodeReport],
    config: CodecConfig = DEFAULT_CONFIG,
    duration: float | None = None,
) -> NoteSequence:
    """Concatenate per-window decodes into one sequence.

    A note still sounding at the end of a window but missing from the next
    window's tie list ends exactly at the boundary. A tie with no sounding
    predecessor opens a note at the boundary (counted as ``UnmatchedTie``).
    Notes open at the end are closed at ``duration``, by default the end of
    the last window.
    """
    return reconstruct_with_anomalies(reports, config, duration)[0]


# -- segment stream files -------------------------------------------------

SEGMENT_BINARY_MAGIC = b"SEG\x01"
SEGMENT_TEXT_MAGIC = "SEG 1"


def dump_segments_binary(segments: Sequence[Segment | Sequence[int]],
                         config: CodecConfig = DEFAULT_CONFIG) -> bytes:
    """``SEG\\x01``, uint32 segment count, then per segment a uint32 byte length
    and that segment's token file (``TOK\\x01`` + uint16 ids), little-endian."""
    parts = [SEGMENT_BINARY_MAGIC, struct.pack("<I", len(segments))]
    for s in segments:
        blob = dump_tokens_binary(s.tokens if isinstance(s, Segment) else s, config)
        parts.append(struct.pack("<I", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def load_segments_binary(data: bytes, config: CodecConfig = DEFAULT_CONFIG) -> list[Segment]:
    if data[:4] != SEGMENT_BINARY_MAGIC or len(data) < 8:
        raise MalformedTokenFileError("missing binary segment header")
    (count,) = struct.unpack_from("<I", data, 4)
    pos = 8
    out = []
    for k in range(count):
        if pos + 4 > len(data):
            raise MalformedTokenFileError("truncated segment stream")
        (size,) = struct.unpack_from("<I", data, pos)
        pos += 4
        blob = data[pos:pos + size]
        if len(blob) != size:
            raise MalformedTokenFileError("truncated segment stream")
        pos += size
        out.append(Segment(k, k * config.segment_seconds, tuple(load_tokens_binary(blob, config))))
    if pos != len(data):
        raise MalformedTokenFileError("trailing bytes after last segment")
    return out


def dump_segments_text(segments: Sequence[Segment | Sequence[int]],
                       config: CodecConfig = DEFAULT_CONFIG) -> str:
    """``SEG 1``, the segment count, then each segment as a text token file."""
    parts = [f"{SEGMENT_TEXT_MAGIC}\n{len(segments)}\n"]
    for s in segments:
        parts.append(dump_tokens_text(s.tokens if isinstance(s, Segment) else s, config))
    return "".join(parts)


def load_segments_text(text: str, config: CodecConfig = DEFAULT_CONFIG) -> list[Segment]:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0].strip() != SEGMENT_TEXT_MAGIC:
        raise MalformedTokenFileError("missing text segment header")
    try:
        count = int(lines[1])
    except ValueError:
        raise MalformedTokenFileError("bad segment count") from None
    blocks: list[list[str]] = []
    for line in lines[2:]:
        if line.strip() == TEXT_MAGIC:
            blocks.append([line])
        elif blocks:
            blocks[-1].append(line)
        elif line.strip():
            raise MalformedTokenFileError("token data before first segment header")
    if len(blocks) != count:
        raise MalformedTokenFileError(f"expected {count} segments, found {len(blocks)}")
    return [
        Segment(k, k * config.segment_seconds, tuple(load_tokens_text("\n".join(b), config)))
        for k, b in enumerate(blocks)
    ]


def load_segments(data: bytes, config: CodecConfig = DEFAULT_CONFIG) -> list[Segment]:
    """Read a segment stream in either format, detected from the header."""
    if data[:4] == SEGMENT_BINARY_MAGIC:
        return load_segments_binary(data, config)
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        raise MalformedTokenFileError("not a segment stream") from None
    return load_segments_text(text, config)
