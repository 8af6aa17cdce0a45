"""Token codec, segmenting, audio frontend and evaluation for multi-instrument transcription."""

from .codec import CodecConfig, DecodeReport, Event, EventKind, Token, TokenKind
from .core import GroupingLevel, Note, NoteSequence, apply_grouping, midi_class, validate_sequence
from .metrics import MatchCriteria, NoteMatching, Scores
from .segmenter import Segment, reconstruct, split

__version__ = "0.1.0"

__all__ = [
    "CodecConfig",
    "DecodeReport",
    "Event",
    "EventKind",
    "GroupingLevel",
    "MatchCriteria",
    "Note",
    "NoteMatching",
    "NoteSequence",
    "Scores",
    "Segment",
    "Token",
    "TokenKind",
    "apply_grouping",
    "midi_class",
    "reconstruct",
    "split",
    "validate_sequence",
]
