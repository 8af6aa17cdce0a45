"""Notes, note sequences and instrument taxonomies."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Iterable, Iterator, Sequence

from .errors import (
    DataError,
    NegativeTimeError,
    OffsetBeforeOnsetError,
    PitchOutOfRangeError,
    ProgramOutOfRangeError,
    UnknownSlakhClassError,
)

NUM_PITCHES = 128
NUM_PROGRAMS = 128
PROGRAMS_PER_CLASS = 8
TAXONOMY_VERSION = 1


@dataclass(frozen=True, slots=True)
class Note:
    """A single note. Velocity is deliberately not represented.

    Drum notes use ``pitch`` as the General MIDI drum type and carry an onset
    only; their ``offset`` is stored equal to ``onset``.
    """

    pitch: int
    onset: float
    offset: float
    program: int = 0
    is_drum: bool = False

    @property
    def duration(self) -> float:
        return self.offset - self.onset

    def sort_key(self) -> tuple:
        return (self.onset, self.program, self.pitch, self.is_drum, self.offset)


@dataclass(frozen=True, slots=True)
class NoteSequence:
    """Validated, time-ordered notes of one track. Build with :func:`validate_sequence`."""

    notes: tuple[Note, ...] = ()
    duration: float = 0.0

    def __len__(self) -> int:
        return len(self.notes)

    def __iter__(self) -> Iterator[Note]:
        return iter(self.notes)

    def __getitem__(self, i: int) -> Note:
        return self.notes[i]

    @property
    def programs(self) -> list[int]:
        return sorted({n.program for n in self.notes if not n.is_drum})


class GroupingLevel(enum.Enum):
    FLAT = "flat"
    MIDI_CLASS = "midi-class"
    FULL = "full"


def _check_note(note: Note) -> Note:
    if not (math.isfinite(note.onset) and math.isfinite(note.offset)):
        raise NegativeTimeError(f"note times must be finite: {note}")
    if note.onset < 0 or note.offset < 0:
        raise NegativeTimeError(f"note times must be >= 0: {note}")
    if not 0 <= note.pitch < NUM_PITCHES:
        raise PitchOutOfRangeError(f"pitch {note.pitch} outside [0, 127]")
    if not 0 <= note.program < NUM_PROGRAMS:
        raise ProgramOutOfRangeError(f"program {note.program} outside [0, 127]")
    if note.is_drum:
        # the vocabulary has no drum-kit program and no drum offsets
        if note.offset != note.onset or note.program != 0:
            note = replace(note, offset=note.onset, program=0)
    elif note.offset <= note.onset:
        raise OffsetBeforeOnsetError(
            f"offset {note.offset} not after onset {note.onset} (pitch {note.pitch})"
        )
    return note


def validate_sequence(notes: Iterable[Note], duration: float = 0.0,
                      resolve_overlaps: bool = True) -> NoteSequence:
    """Check, sort and deduplicate notes into a :class:`NoteSequence`.

    Drum notes are normalised to ``offset == onset`` and program 0. Exact
    duplicates on ``(pitch, program, is_drum, onset)`` are dropped, keeping the
    first in sorted order. ``duration`` is extended to cover the last offset.

    With ``resolve_overlaps``, a note still sounding when the same pitch is
    struck again on the same program is ended at the new onset, since one
    key cannot hold two notes at once.
    """
    if not math.isfinite(duration) or duration < 0:
        raise NegativeTimeError(f"duration must be finite and >= 0, got {duration}")
    checked = sorted((_check_note(n) for n in notes), key=Note.sort_key)
    seen: set[tuple] = set()
    kept: list[Note] = []
    for n in checked:
        key = (n.pitch, n.program, n.is_drum, n.onset)
        if key in seen:
            continue
        seen.add(key)
        kept.append(n)
    if resolve_overlaps:
        kept = _resolve_overlaps(kept)
    end = max((n.offset for n in kept), default=0.0)
    return NoteSequence(tuple(kept), max(float(duration), end))


def _resolve_overlaps(notes: list[Note]) -> list[Note]:
    sounding: dict[tuple[int, int], int] = {}
    out = list(notes)
    for i, n in enumerate(out):
        if n.is_drum:
            continue
        key = (n.program, n.pitch)
        j = sounding.get(key)
        if j is not None and out[j].offset > n.onset:
            out[j] = replace(out[j], offset=n.onset)
        sounding[key] = i
    return sorted(out, key=Note.sort_key)


def midi_class(program: int) -> int:
    """Coarse instrument family of a 0-indexed General MIDI program."""
    if not 0 <= program < NUM_PROGRAMS:
        raise ProgramOutOfRangeError(f"program {program} outside [0, 127]")
    return program // PROGRAMS_PER_CLASS


def group_program(program: int, level: GroupingLevel) -> int:
    if level is GroupingLevel.FULL:
        return program
    if level is GroupingLevel.MIDI_CLASS:
        return midi_class(program) * PROGRAMS_PER_CLASS
    return 0


def apply_grouping(seq: NoteSequence, level: GroupingLevel) -> NoteSequence:
    """Map programs to a coarser instrument granularity.

    ``MIDI_CLASS`` maps each program to the lowest program of its class,
    ``FLAT`` maps every program to 0. Drum notes are never touched.
    """
    level = GroupingLevel(level)
    if level is GroupingLevel.FULL:
        return seq
    notes = [
        n if n.is_drum else replace(n, program=group_program(n.program, level))
        for n in seq.notes
    ]
    return validate_sequence(notes, seq.duration, resolve_overlaps=False)


@dataclass(frozen=True)
class Taxonomy:
    class_names: tuple[str, ...]
    program_names: tuple[str, ...]
    program_classes: tuple[int, ...]
    slakh_programs: dict[str, int]
    version: int = TAXONOMY_VERSION


def parse_taxonomy(text: str) -> Taxonomy:
    """Parse the sectioned TSV taxonomy format; raises DataError when malformed."""
    sections: dict[str, list[list[str]]] = {}
    current = None
    version = None
    for raw in text.splitlines():
        line = raw.rstrip("\n")
        if line.startswith("#") and "format version" in line:
            version = int(line.rsplit(" ", 1)[-1])
        if not line.strip() or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
            continue
        if current is None:
            raise DataError(f"taxonomy row outside a section: {line!r}")
        sections[current].append(line.split("\t"))
    if version != TAXONOMY_VERSION:
        raise DataError(f"taxonomy format version {version}, expected {TAXONOMY_VERSION}")
    missing = {"classes", "programs", "slakh"} - sections.keys()
    if missing:
        raise DataError(f"taxonomy is missing sections {sorted(missing)}")

    class_names = tuple(name for _, name in sorted(
        ((int(i), name) for i, name in sections["classes"])))
    rows = sorted((int(p), int(c), name) for p, c, name in sections["programs"])
    if [r[0] for r in rows] != list(range(NUM_PROGRAMS)):
        raise DataError("taxonomy must list every program 0..127 exactly once")
    slakh = {name: int(p) for name, p in sections["slakh"]}
    return Taxonomy(
        class_names=class_names,
        program_names=tuple(r[2] for r in rows),
        program_classes=tuple(r[1] for r in rows),
        slakh_programs=slakh,
    )


@lru_cache(maxsize=1)
def taxonomy() -> Taxonomy:
    """The shipped taxonomy tables (``amtkit/data/taxonomy.tsv``)."""
    text = resources.files("amtkit").joinpath("data/taxonomy.tsv").read_text("utf-8")
    return parse_taxonomy(text)


def slakh_class_to_program(class_name: str) -> int:
    try:
        return taxonomy().slakh_programs[class_name]
    except KeyError:
        raise UnknownSlakhClassError(f"unknown Slakh instrument class {class_name!r}") from None


def program_name(program: int) -> str:
    midi_class(program)
    return taxonomy().program_names[program]


def merge_sequences(seqs: Sequence[NoteSequence]) -> NoteSequence:
    notes = [n for s in seqs for n in s.notes]
    return validate_sequence(notes, max((s.duration for s in seqs), default=0.0))
