"""Random note-sequence generators and comparison helpers shared by the tests."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from amtkit.core import Note, NoteSequence, validate_sequence

SEGMENT = 2.048
QUANTUM = 0.01
# float slack for comparisons that are exact in real arithmetic
EPS = 1e-9


def _representable(notes: list[Note]) -> list[Note]:
    """Drop notes a 10 ms grid cannot hold: sub-quantum notes and drum repeats."""
    while True:
        seq = validate_sequence(notes)
        kept, last_drum = [], {}
        for n in seq.notes:
            if n.is_drum:
                prev = last_drum.get(n.pitch)
                if prev is not None and n.onset - prev < QUANTUM * 1.01:
                    continue
                last_drum[n.pitch] = n.onset
            elif n.offset - n.onset < QUANTUM * 1.01:
                continue
            kept.append(n)
        if len(kept) == len(seq.notes):
            return list(seq.notes)
        notes = kept


def random_sequence(rng: np.random.Generator, max_programs: int = 16, max_notes: int = 500,
                    drums: bool = True, min_programs: int = 1, pitch_range=(21, 109),
                    max_seconds: float = 16.0) -> NoteSequence:
    """A random representable sequence with one note spanning at least three segments."""
    n_programs = int(rng.integers(min_programs, max_programs + 1))
    programs = rng.choice(128, size=n_programs, replace=False).tolist()
    n_notes = int(rng.integers(1, max_notes + 1))
    notes = [
        # crosses the boundaries at 2.048 and 4.096
        Note(int(rng.integers(*pitch_range)), float(rng.uniform(0, 1.5)),
             float(rng.uniform(4.5, 6.5)), int(programs[0])),
    ]
    for _ in range(n_notes - 1):
        onset = float(rng.uniform(0, max_seconds))
        if drums and rng.random() < 0.12:
            notes.append(Note(int(rng.integers(35, 82)), onset, onset, 0, True))
            continue
        length = float(min(rng.exponential(0.6), 8.0)) + 0.02
        note = Note(int(rng.integers(*pitch_range)), onset, onset + length,
                    int(programs[int(rng.integers(n_programs))]))
        # keep the spanning note's key free so no re-strike cuts it short
        if (note.program, note.pitch) != (notes[0].program, notes[0].pitch):
            notes.append(note)
    return validate_sequence(_representable(notes))


def by_key(seq: NoteSequence) -> dict[tuple, list[Note]]:
    out: dict[tuple, list[Note]] = defaultdict(list)
    for n in seq.notes:
        out[(n.program, n.pitch, n.is_drum)].append(n)
    for notes in out.values():
        notes.sort(key=lambda n: n.onset)
    return dict(out)


def max_time_error(x: NoteSequence, y: NoteSequence) -> float:
    """Largest onset/offset difference between corresponding notes, inf if unpaired.

    Notes correspond by (program, pitch, is_drum) and onset order, which is
    stable under quantization because same-key notes never overlap.
    """
    kx, ky = by_key(x), by_key(y)
    if kx.keys() != ky.keys():
        return float("inf")
    worst = 0.0
    for key, xs in kx.items():
        ys = ky[key]
        if len(xs) != len(ys):
            return float("inf")
        for a, b in zip(xs, ys):
            worst = max(worst, abs(a.onset - b.onset), abs(a.offset - b.offset))
    return worst


def small_instance(rng: np.random.Generator, max_notes: int = 8) -> tuple[list[Note], list[Note]]:
    """Dense tiny matching instance: few pitches and programs, clustered onsets."""
    def notes(n: int) -> list[Note]:
        out = []
        for _ in range(n):
            onset = float(rng.uniform(0, 0.25))
            if rng.random() < 0.15:
                out.append(Note(int(rng.integers(36, 38)), onset, onset, 0, True))
            else:
                out.append(Note(int(rng.integers(60, 63)), onset,
                                onset + float(rng.uniform(0.02, 0.4)), int(rng.integers(0, 2))))
        return out

    return notes(int(rng.integers(1, max_notes + 1))), notes(int(rng.integers(0, max_notes + 1)))
