"""Note-level and frame-level transcription scores.

Note metrics pair reference and estimated notes with a maximum bipartite
matching over the pairs that satisfy :class:`MatchCriteria`, then report
precision = matches / estimated notes and recall = matches / reference notes.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .core import GroupingLevel, Note, NoteSequence, apply_grouping, validate_sequence
from .errors import EmptyReferenceError, InstanceTooLargeError
from .matching import brute_force_matching, hopcroft_karp

FRAMES_PER_SECOND = 62.5
BRUTE_FORCE_LIMIT = 10
# time differences are rounded before comparison so a 50 ms gap counts as 50 ms
_DECIMALS = 9


@dataclass(frozen=True)
class MatchCriteria:
    onset_tolerance: float = 0.05
    offset_ratio: float | None = 0.2  # None disables the offset check
    offset_min_tolerance: float = 0.05
    require_program: bool = False
    drums_onset_only: bool = True

    def __post_init__(self):
        if self.onset_tolerance <= 0 or self.offset_min_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.offset_ratio is not None and self.offset_ratio < 0:
            raise ValueError("offset_ratio must be non-negative")

    def offset_tolerance(self, ref_duration: float) -> float:
        return max(self.offset_ratio * ref_duration, self.offset_min_tolerance)


ONSET = MatchCriteria(offset_ratio=None)
ONSET_OFFSET = MatchCriteria()
MULTI_INSTRUMENT = MatchCriteria(require_program=True)


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, matched: int, n_ref: int, n_est: int) -> Scores:
        precision = matched / n_est if n_est else 1.0
        recall = matched / n_ref if n_ref else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(precision, recall, f1)


@dataclass(frozen=True)
class NoteMatching(Scores):
    pairs: tuple[tuple[int, int], ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.pairs)


def _notes(seq: NoteSequence | Iterable[Note]) -> Sequence[Note]:
    return seq.notes if isinstance(seq, NoteSequence) else list(seq)


def _within(diff: float, tolerance: float) -> bool:
    return round(abs(diff), _DECIMALS) <= round(tolerance, _DECIMALS)


def feasible(ref: Note, est: Note, criteria: MatchCriteria = ONSET_OFFSET) -> bool:
    """Whether ``est`` may be matched to ``ref`` under ``criteria``.

    Drum hits match on drum type and onset alone (with ``drums_onset_only``).
    """
    if ref.is_drum != est.is_drum or ref.pitch != est.pitch:
        return False
    if not _within(ref.onset - est.onset, criteria.onset_tolerance):
        return False
    if ref.is_drum and criteria.drums_onset_only:
        return True
    if criteria.require_program and ref.program != est.program:
        return False
    if criteria.offset_ratio is not None:
        tol = criteria.offset_tolerance(ref.offset - ref.onset)
        if not _within(ref.offset - est.offset, tol):
            return False
    return True


def candidate_edges(ref: Sequence[Note], est: Sequence[Note],
                    criteria: MatchCriteria) -> list[list[int]]:
    """Feasible estimate indices per reference note, ascending."""
    by_key: dict[tuple[bool, int], list[tuple[float, int]]] = defaultdict(list)
    for j, n in enumerate(est):
        by_key[(n.is_drum, n.pitch)].append((n.onset, j))
    for bucket in by_key.values():
        bucket.sort()
    # prefilter window is a strict superset of the onset test
    slack = criteria.onset_tolerance + 1e-6
    adjacency = []
    for r in ref:
        bucket = by_key.get((r.is_drum, r.pitch), [])
        lo = bisect.bisect_left(bucket, (r.onset - slack, -1))
        hi = bisect.bisect_right(bucket, (r.onset + slack, len(est)))
        adjacency.append(sorted(j for _, j in bucket[lo:hi] if feasible(r, est[j], criteria)))
    return adjacency


def match_notes(ref, est, criteria: MatchCriteria = ONSET_OFFSET) -> NoteMatching:
    """Maximum matching between reference and estimated notes (Hopcroft-Karp)."""
    ref, est = _notes(ref), _notes(est)
    if not ref:
        raise EmptyReferenceError("metrics are undefined for an empty reference")
    match = hopcroft_karp(candidate_edges(ref, est, criteria), len(est))
    pairs = tuple((i, j) for i, j in enumerate(match) if j >= 0)
    s = Scores.from_counts(len(pairs), len(ref), len(est))
    return NoteMatching(s.precision, s.recall, s.f1, pairs)


def brute_force_match(ref, est, criteria: MatchCriteria = ONSET_OFFSET) -> NoteMatching:
    """Test oracle: exhaustive search over all matchings of tiny instances."""
    ref, est = _notes(ref), _notes(est)
    if len(ref) > BRUTE_FORCE_LIMIT or len(est) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"brute force limited to {BRUTE_FORCE_LIMIT} notes per side")
    if not ref:
        raise EmptyReferenceError("metrics are undefined for an empty reference")
    pairs = tuple(sorted(brute_force_matching(
        len(ref), len(est), lambda i, j: feasible(ref[i], est[j], criteria))))
    s = Scores.from_counts(len(pairs), len(ref), len(est))
    return NoteMatching(s.precision, s.recall, s.f1, pairs)


def onset_f1(ref, est, criteria: MatchCriteria = ONSET) -> NoteMatching:
    return match_notes(ref, est, replace(criteria, offset_ratio=None, require_program=False))


def onset_offset_f1(ref, est, criteria: MatchCriteria = ONSET_OFFSET) -> NoteMatching:
    if criteria.offset_ratio is None:
        criteria = replace(criteria, offset_ratio=ONSET_OFFSET.offset_ratio)
    return match_notes(ref, est, replace(criteria, require_program=False))


def _as_sequence(seq) -> NoteSequence:
    return seq if isinstance(seq, NoteSequence) else validate_sequence(seq)


def multi_instrument_f1(ref, est, grouping: GroupingLevel = GroupingLevel.FULL,
                        criteria: MatchCriteria = MULTI_INSTRUMENT) -> NoteMatching:
    """Onset+offset matching that also requires equal programs after grouping."""
    if criteria.offset_ratio is None:
        criteria = replace(criteria, offset_ratio=MULTI_INSTRUMENT.offset_ratio)
    ref = apply_grouping(_as_sequence(ref), grouping)
    est = apply_grouping(_as_sequence(est), grouping)
    return match_notes(ref, est, replace(criteria, require_program=True))


@dataclass(frozen=True)
class Pianoroll:
    fps: float
    grid: np.ndarray  # bool, (frames, 128)


def _frame(t: float, fps: float, up: bool) -> int:
    x = round(t * fps, _DECIMALS)
    return math.ceil(x) if up else math.floor(x)


def pianoroll(seq, fps: float = FRAMES_PER_SECOND, n_frames: int | None = None) -> Pianoroll:
    """Binary (frames x 128) roll; frame k is sampled at time k / fps.

    A note covers frames with ``onset <= k/fps < offset``; a drum hit marks
    only the frame containing its onset.
    """
    notes = _notes(seq)
    if n_frames is None:
        duration = seq.duration if isinstance(seq, NoteSequence) else 0.0
        duration = max([duration] + [n.offset for n in notes])
        n_frames = _frame(duration, fps, up=True)
    grid = np.zeros((n_frames, 128), dtype=bool)
    for n in notes:
        if n.is_drum:
            k = _frame(n.onset, fps, up=False)
            if k < n_frames:
                grid[k, n.pitch] = True
        else:
            grid[_frame(n.onset, fps, up=True):_frame(n.offset, fps, up=True), n.pitch] = True
    return Pianoroll(fps, grid)


def frame_f1(ref, est, fps: float = FRAMES_PER_SECOND) -> Scores:
    ref_notes, est_notes = _notes(ref), _notes(est)
    if not ref_notes:
        raise EmptyReferenceError("metrics are undefined for an empty reference")
    ends = [n.offset for n in (*ref_notes, *est_notes)]
    for s in (ref, est):
        if isinstance(s, NoteSequence):
            ends.append(s.duration)
    n_frames = _frame(max(ends), fps, up=True) + 1
    r = pianoroll(ref_notes, fps, n_frames).grid
    e = pianoroll(est_notes, fps, n_frames).grid
    return Scores.from_counts(int(np.count_nonzero(r & e)), int(r.sum()), int(e.sum()))


def tolerance_sweep(ref, est, grid: Sequence[float],
                    criteria: MatchCriteria = ONSET_OFFSET) -> list[tuple[float, float]]:
    """Onset+offset F1 with threshold ``t`` used for both onset and offset."""
    grid = [float(t) for t in grid]
    if not grid or grid[0] <= 0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be positive and strictly increasing")
    return [
        (t, onset_offset_f1(ref, est, replace(criteria, onset_tolerance=t,
                                              offset_min_tolerance=t)).f1)
        for t in grid
    ]


METRIC_NAMES = ("frame", "onset", "onset_offset", "multi_instrument")


def evaluate(ref, est, grouping: GroupingLevel = GroupingLevel.FULL,
             criteria: MatchCriteria = ONSET_OFFSET,
             fps: float = FRAMES_PER_SECOND) -> dict[str, Scores]:
    """All four scores for one track, keyed by :data:`METRIC_NAMES`."""
    ref, est = _as_sequence(ref), _as_sequence(est)
    return {
        "frame": frame_f1(ref, est, fps),
        "onset": onset_f1(ref, est, criteria),
        "onset_offset": onset_offset_f1(ref, est, criteria),
        "multi_instrument": multi_instrument_f1(ref, est, grouping, criteria),
    }


def mean_scores(per_track: Sequence[dict[str, Scores]]) -> dict[str, Scores]:
    """Unweighted mean over tracks of each metric's precision, recall and F1."""
    if not per_track:
        raise ValueError("no tracks to average")
    out = {}
    for name in per_track[0]:
        vals = np.array([[t[name].precision, t[name].recall, t[name].f1] for t in per_track])
        p, r, f = vals.mean(axis=0)
        out[name] = Scores(float(p), float(r), float(f))
    return out
