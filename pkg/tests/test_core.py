import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amtkit.core import (
    GroupingLevel,
    Note,
    NoteSequence,
    apply_grouping,
    merge_sequences,
    midi_class,
    parse_taxonomy,
    program_name,
    slakh_class_to_program,
    taxonomy,
    validate_sequence,
)
from amtkit.errors import (
    DataError,
    NegativeTimeError,
    OffsetBeforeOnsetError,
    PitchOutOfRangeError,
    ProgramOutOfRangeError,
    UnknownSlakhClassError,
)

# General MIDI class table, 1-indexed program ranges as printed, with the
# first and last instrument of each range.
MIDI_CLASS_TABLE = [
    (1, 8, "Piano", "Acoustic Grand Piano", "Clavinet"),
    (9, 16, "Chromatic Percussion", "Celesta", "Dulcimer"),
    (17, 24, "Organ", "Drawbar Organ", "Tango Accordion"),
    (25, 32, "Guitar", "Acoustic Guitar (nylon)", "Electric Guitar (harmonics)"),
    (33, 40, "Bass", "Acoustic Bass", "Synth Bass 2"),
    (41, 48, "Strings", "Violin", "Timpani"),
    (49, 56, "Ensemble", "String Ensemble 1", "Orchestra Hit"),
    (57, 64, "Brass", "Trumpet", "Synth Brass 2"),
    (65, 72, "Reed", "Soprano Sax", "Clarinet"),
    (73, 80, "Pipe", "Piccolo", "Ocarina"),
    (81, 88, "Synth Lead", "Lead 1 (square)", "Lead 8 (bass and lead)"),
    (89, 96, "Synth Pad", "Pad 1 (new age or fantasia)", "Pad 8 (sweep)"),
    (97, 104, "Synth Effects", "FX 1 (rain)", "FX 8 (sci-fi or star theme)"),
    (105, 112, "Other", "Sitar", "Shanai"),
    (113, 120, "Percussive", "Tinkle Bell", "Reverse Cymbal"),
    (121, 128, "Sound Effects", "Guitar Fret Noise", "Gunshot"),
]

SLAKH_TABLE = {
    "Acoustic Piano": 0, "Electric Piano": 4, "Chromatic Percussion": 8, "Organ": 16,
    "Acoustic Guitar": 24, "Clean Electric Guitar": 26, "Distorted Electric Guitar": 29,
    "Acoustic Bass": 32, "Electric Bass": 33, "Violin": 40, "Viola": 41, "Cello": 42,
    "Contrabass": 43, "Orchestral Harp": 46, "Timpani": 47, "String Ensemble": 48,
    "Synth Strings": 50, "Choir and Voice": 52, "Orchestral Hit": 55, "Trumpet": 56,
    "Trombone": 57, "Tuba": 58, "French Horn": 60, "Brass Section": 61,
    "Soprano/Alto Sax": 64, "Tenor Sax": 66, "Baritone Sax": 67, "Oboe": 68,
    "English Horn": 69, "Bassoon": 70, "Clarinet": 71, "Pipe": 73, "Synth Lead": 80,
    "Synth Pad": 88,
}


def _table_class(program_0: int) -> int:
    for index, (first, last, *_rest) in enumerate(MIDI_CLASS_TABLE):
        if first <= program_0 + 1 <= last:
            return index
    raise AssertionError(program_0)


def test_midi_class_matches_table_for_all_programs():
    for p in range(128):
        assert midi_class(p) == _table_class(p)
        assert taxonomy().program_classes[p] == _table_class(p)


def test_class_names_and_boundary_instruments():
    tax = taxonomy()
    for index, (first, last, name, first_name, last_name) in enumerate(MIDI_CLASS_TABLE):
        assert tax.class_names[index] == name
        assert program_name(first - 1) == first_name
        assert program_name(last - 1) == last_name


@pytest.mark.parametrize("program,expected", [(0, 0), (40, 5), (127, 15)])
def test_midi_class_examples(program, expected):
    assert midi_class(program) == expected


@pytest.mark.parametrize("program", [-1, 128])
def test_midi_class_out_of_range(program):
    with pytest.raises(ProgramOutOfRangeError):
        midi_class(program)


def test_slakh_table():
    assert len(taxonomy().slakh_programs) == 34
    for name, program in SLAKH_TABLE.items():
        assert slakh_class_to_program(name) == program
    with pytest.raises(UnknownSlakhClassError):
        slakh_class_to_program("Kazoo")


@pytest.mark.parametrize("text", [
    "# instrument taxonomy, format version 9\n[classes]\n[programs]\n[slakh]\n",
    "# instrument taxonomy, format version 1\n[classes]\n0\tPiano\n",
    "0\tPiano\n",
])
def test_parse_taxonomy_rejects_malformed(text):
    with pytest.raises(DataError):
        parse_taxonomy(text)


def test_validate_examples():
    empty = validate_sequence([], 0.0)
    assert empty.notes == () and empty.duration == 0.0
    one = validate_sequence([Note(60, 0.0, 1.0, 0)])
    assert one.notes == (Note(60, 0.0, 1.0, 0),)
    assert one.duration >= 1.0
    with pytest.raises(OffsetBeforeOnsetError):
        validate_sequence([Note(60, 1.0, 0.5)])


@pytest.mark.parametrize("note,error", [
    (Note(60, -0.1, 1.0), NegativeTimeError),
    (Note(128, 0.0, 1.0), PitchOutOfRangeError),
    (Note(-1, 0.0, 1.0), PitchOutOfRangeError),
    (Note(60, 0.0, 1.0, 128), ProgramOutOfRangeError),
    (Note(60, 0.0, float("nan")), NegativeTimeError),
])
def test_validate_errors(note, error):
    with pytest.raises(error):
        validate_sequence([note])


def test_validate_sorts_and_dedupes():
    seq = validate_sequence([Note(62, 1.0, 2.0), Note(60, 0.5, 1.0), Note(62, 1.0, 2.5)])
    assert [n.pitch for n in seq.notes] == [60, 62]
    assert seq.notes[1].offset == 2.0


def test_validate_normalizes_drums():
    seq = validate_sequence([Note(36, 1.0, 1.5, 10, True)])
    assert seq.notes == (Note(36, 1.0, 1.0, 0, True),)


def test_validate_ends_restruck_note():
    seq = validate_sequence([Note(60, 0.0, 2.0, 3), Note(60, 1.0, 1.5, 3), Note(60, 0.5, 3.0, 4)])
    assert Note(60, 0.0, 1.0, 3) in seq.notes
    assert Note(60, 1.0, 1.5, 3) in seq.notes
    assert Note(60, 0.5, 3.0, 4) in seq.notes


notes_strategy = st.lists(
    st.builds(
        lambda pitch, onset, length, program, drum: Note(pitch, onset, onset + length, program, drum),
        st.integers(0, 127),
        st.floats(0, 20, allow_nan=False),
        st.floats(0.001, 5, allow_nan=False),
        st.integers(0, 127),
        st.booleans(),
    ),
    max_size=40,
)


@given(notes_strategy)
def test_validate_is_idempotent(notes):
    once = validate_sequence(notes)
    assert validate_sequence(once.notes, once.duration) == once
    keys = [(n.pitch, n.program, n.is_drum, n.onset) for n in once.notes]
    assert len(keys) == len(set(keys))
    assert list(once.notes) == sorted(once.notes, key=Note.sort_key)
    assert once.duration >= max((n.offset for n in once.notes), default=0.0)


@given(notes_strategy, st.sampled_from(list(GroupingLevel)))
def test_grouping_idempotent_and_preserves_timing(notes, level):
    seq = validate_sequence(notes)
    grouped = apply_grouping(seq, level)
    assert apply_grouping(grouped, level) == grouped
    before = {(n.pitch, n.onset, n.offset, n.is_drum) for n in seq.notes}
    after = {(n.pitch, n.onset, n.offset, n.is_drum) for n in grouped.notes}
    assert after == before


def test_grouping_examples():
    seq = validate_sequence([Note(60, 0, 1, 4), Note(61, 0, 1, 66), Note(36, 0, 0, 0, True)])
    midi = apply_grouping(seq, GroupingLevel.MIDI_CLASS)
    assert {n.pitch: n.program for n in midi.notes} == {60: 0, 61: 64, 36: 0}
    flat = apply_grouping(seq, GroupingLevel.FLAT)
    assert {n.pitch: n.program for n in flat.notes} == {60: 0, 61: 0, 36: 0}
    assert [n for n in flat.notes if n.is_drum] == [Note(36, 0, 0, 0, True)]
    assert apply_grouping(seq, GroupingLevel.FULL) is seq


def test_grouping_level_values():
    assert {g.value for g in GroupingLevel} == {"flat", "midi-class", "full"}


def test_merge_sequences():
    a = validate_sequence([Note(60, 0, 1, 0)], 3.0)
    b = validate_sequence([Note(62, 0.5, 1, 33)])
    merged = merge_sequences([a, b])
    assert isinstance(merged, NoteSequence)
    assert len(merged.notes) == 2 and merged.duration == 3.0


def test_notes_are_immutable():
    n = Note(60, 0.0, 1.0)
    with pytest.raises(AttributeError):
        n.pitch = 61
    assert np.isclose(n.duration, 1.0)
