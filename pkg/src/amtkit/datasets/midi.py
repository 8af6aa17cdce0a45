"""Standard MIDI File ingestion and export.

Parsing of raw SMF chunks is delegated to ``mido``; tempo mapping, program
tracking and note pairing are done here.
"""

from __future__ import annotations

import io
import logging
from bisect import bisect_right
from collections import defaultdict, deque
from dataclasses import dataclass

import mido

from ..core import Note, NoteSequence, validate_sequence
from ..errors import MalformedSmfError, UnsupportedSmfTypeError

log = logging.getLogger(__name__)

DRUM_CHANNEL = 9  # General MIDI channel 10, 0-indexed
DEFAULT_TEMPO = 500_000  # microseconds per quarter note
WRITE_TICKS_PER_BEAT = 220
_MELODIC_CHANNELS = [c for c in range(16) if c != DRUM_CHANNEL]


class TempoMap:
    """Piecewise-constant tempo, converting absolute ticks to seconds."""

    def __init__(self, changes: list[tuple[int, int]], ticks_per_beat: int):
        self.ticks_per_beat = ticks_per_beat
        merged: dict[int, int] = {0: DEFAULT_TEMPO}
        for tick, tempo in sorted(changes, key=lambda c: c[0]):
            merged[tick] = tempo  # later change at the same tick wins
        self.ticks = sorted(merged)
        self.tempos = [merged[t] for t in self.ticks]
        self.seconds = [0.0]
        for i in range(1, len(self.ticks)):
            span = self.ticks[i] - self.ticks[i - 1]
            self.seconds.append(self.seconds[-1] + self._span(span, self.tempos[i - 1]))

    def _span(self, ticks: int, tempo: int) -> float:
        return ticks * tempo / (1e6 * self.ticks_per_beat)

    def to_seconds(self, tick: int) -> float:
        i = bisect_right(self.ticks, tick) - 1
        return self.seconds[i] + self._span(tick - self.ticks[i], self.tempos[i])


@dataclass
class ParsedMidi:
    sequence: NoteSequence
    unmatched_note_ons: int = 0


def _read(data: bytes) -> mido.MidiFile:
    try:
        mf = mido.MidiFile(file=io.BytesIO(data))
    except (OSError, EOFError, ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedSmfError(f"cannot parse MIDI data: {exc}") from None
    if mf.type == 2:
        raise UnsupportedSmfTypeError("SMF type 2 (independent sequences) is not supported")
    if not isinstance(mf.ticks_per_beat, int) or mf.ticks_per_beat <= 0:
        raise MalformedSmfError(f"unsupported time division {mf.ticks_per_beat!r}")
    return mf


def parse_midi(data: bytes) -> ParsedMidi:
    """Parse an SMF (type 0 or 1) into a sequence plus ingestion statistics.

    Tracks are merged. Channel 10 notes become drum hits whose pitch is the
    drum type. Velocities are discarded except that velocity 0 marks a
    note-off. A note-on left without a note-off is closed at the end of its
    track and counted in ``unmatched_note_ons``.
    """
    mf = _read(data)
    tempo_changes = []
    timeline = []  # (tick, track, order, message)
    track_ends = []
    for t, track in enumerate(mf.tracks):
        tick = 0
        for order, msg in enumerate(track):
            tick += msg.time
            if msg.type == "set_tempo":
                tempo_changes.append((tick, msg.tempo))
            elif msg.type in ("note_on", "note_off", "program_change"):
                timeline.append((tick, t, order, msg))
        track_ends.append(tick)
    timeline.sort(key=lambda e: e[:3])
    tempo = TempoMap(tempo_changes, mf.ticks_per_beat)

    channel_program = [0] * 16
    track_program: dict[tuple[int, int], int] = {}
    open_notes: dict[tuple[int, int, int], deque] = defaultdict(deque)
    notes: list[Note] = []
    for tick, t, _, msg in timeline:
        if msg.type == "program_change":
            channel_program[msg.channel] = msg.program
            track_program[(t, msg.channel)] = msg.program
            continue
        seconds = tempo.to_seconds(tick)
        if msg.channel == DRUM_CHANNEL:
            if msg.type == "note_on" and msg.velocity > 0:
                notes.append(Note(msg.note, seconds, seconds, 0, True))
            continue
        key = (t, msg.channel, msg.note)
        if msg.type == "note_on" and msg.velocity > 0:
            program = track_program.get((t, msg.channel), channel_program[msg.channel])
            open_notes[key].append((seconds, program))
        elif open_notes[key]:
            onset, program = open_notes[key].popleft()
            if seconds > onset:
                notes.append(Note(msg.note, onset, seconds, program))

    unmatched = 0
    for (t, _, pitch), pending in open_notes.items():
        end = tempo.to_seconds(track_ends[t])
        for onset, program in pending:
            unmatched += 1
            if end > onset:
                notes.append(Note(pitch, onset, end, program))
    if unmatched:
        log.warning("closed %d note-on(s) without note-off at track end", unmatched)
    duration = tempo.to_seconds(max(track_ends, default=0))
    return ParsedMidi(validate_sequence(notes, duration), unmatched)


def load_midi(data: bytes) -> NoteSequence:
    return parse_midi(data).sequence


def seconds_to_ticks(seconds: float) -> int:
    return int(round(seconds * WRITE_TICKS_PER_BEAT * 1e6 / DEFAULT_TEMPO))


def write_midi(seq: NoteSequence) -> bytes:
    """Encode as SMF type 1 at 220 ticks per beat and 120 BPM.

    Track 0 holds the tempo; then one track per program, then one drum track.
    Drum hits are written one tick long. At equal ticks note-offs precede
    note-ons.
    """
    mf = mido.MidiFile(type=1, ticks_per_beat=WRITE_TICKS_PER_BEAT)
    end_tick = seconds_to_ticks(seq.duration)
    meta = mido.MidiTrack()
    meta.append(mido.MetaMessage("set_tempo", tempo=DEFAULT_TEMPO, time=0))
    meta.append(mido.MetaMessage("end_of_track", time=end_tick))
    mf.tracks.append(meta)

    by_program: dict[int, list[Note]] = defaultdict(list)
    drums: list[Note] = []
    for n in seq.notes:
        (drums if n.is_drum else by_program[n.program]).append(n)

    def emit(events: list[tuple[int, int, mido.Message]], head: list[mido.Message]) -> None:
        track = mido.MidiTrack(head)
        events.sort(key=lambda e: (e[0], e[1]))
        now = 0
        for tick, _, msg in events:
            track.append(msg.copy(time=tick - now))
            now = tick
        track.append(mido.MetaMessage("end_of_track", time=max(end_tick - now, 0)))
        mf.tracks.append(track)

    for i, program in enumerate(sorted(by_program)):
        channel = _MELODIC_CHANNELS[i % len(_MELODIC_CHANNELS)]
        events = []
        for n in by_program[program]:
            events.append((seconds_to_ticks(n.onset), 1,
                           mido.Message("note_on", channel=channel, note=n.pitch, velocity=100)))
            events.append((seconds_to_ticks(n.offset), 0,
                           mido.Message("note_off", channel=channel, note=n.pitch, velocity=0)))
        emit(events, [mido.Message("program_change", channel=channel, program=program, time=0)])
    if drums:
        events = []
        for n in drums:
            tick = seconds_to_ticks(n.onset)
            events.append((tick, 1, mido.Message("note_on", channel=DRUM_CHANNEL,
                                                 note=n.pitch, velocity=100)))
            events.append((tick + 1, 0, mido.Message("note_off", channel=DRUM_CHANNEL,
                                                     note=n.pitch, velocity=0)))
        emit(events, [])

    buf = io.BytesIO()
    mf.save(file=buf)
    return buf.getvalue()
