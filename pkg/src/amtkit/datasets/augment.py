"""Stem-subset augmentation for multitrack (Slakh-style) data."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..core import NoteSequence, merge_sequences, slakh_class_to_program, validate_sequence
from ..errors import TooFewStemsError

DRUMS_CLASS = "Drums"

CERBERUS4_FAMILIES = {
    "piano": frozenset({"Acoustic Piano", "Electric Piano"}),
    "guitar": frozenset({"Acoustic Guitar", "Clean Electric Guitar", "Distorted Electric Guitar"}),
    "bass": frozenset({"Acoustic Bass", "Electric Bass"}),
}


@dataclass(frozen=True)
class Stem:
    instrument_class: str
    sequence: NoteSequence
    is_drum: bool = False

    @property
    def drum(self) -> bool:
        return self.is_drum or self.instrument_class.lower() == DRUMS_CLASS.lower()


def stem_notes(stem: Stem) -> NoteSequence:
    """The stem's notes with its class's program applied (drums untouched)."""
    if stem.drum:
        return stem.sequence
    program = slakh_class_to_program(stem.instrument_class)
    return validate_sequence(
        [n if n.is_drum else replace(n, program=program) for n in stem.sequence.notes],
        stem.sequence.duration)


def mix_stems(stems: Sequence[Stem]) -> NoteSequence:
    return merge_sequences([stem_notes(s) for s in stems])


def sample_stem_subsets(n_stems: int, k: int = 10, min_size: int = 4,
                        seed: int = 0) -> list[tuple[int, ...]]:
    """``k`` random stem index subsets, each of at least ``min_size`` stems.

    Each draw picks a size uniformly from ``[min_size, n_stems]`` and then a
    uniform subset of that size. Draws are independent; repeats can occur.
    """
    if n_stems < min_size:
        raise TooFewStemsError(f"{n_stems} stems, need at least {min_size}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(k):
        size = int(rng.integers(min_size, n_stems + 1))
        out.append(tuple(sorted(rng.choice(n_stems, size=size, replace=False).tolist())))
    return out


def slakh_augment(stems: Sequence[Stem], k: int = 10, min_size: int = 4,
                  seed: int = 0) -> list[NoteSequence]:
    """Mix ``k`` random subsets of at least ``min_size`` stems."""
    return [mix_stems([stems[i] for i in subset])
            for subset in sample_stem_subsets(len(stems), k, min_size, seed)]


def cerberus4_family(stem: Stem) -> str | None:
    if stem.drum:
        return "drums"
    for family, classes in CERBERUS4_FAMILIES.items():
        if stem.instrument_class in classes:
            return family
    return None


def derive_cerberus4(stems: Sequence[Stem]) -> list[tuple[Stem, Stem, Stem, Stem]]:
    """Every (piano, guitar, bass, drums) combination with one stem per family."""
    groups: dict[str, list[Stem]] = {f: [] for f in ("piano", "guitar", "bass", "drums")}
    for s in stems:
        family = cerberus4_family(s)
        if family is not None:
            groups[family].append(s)
    return list(itertools.product(groups["piano"], groups["guitar"],
                                  groups["bass"], groups["drums"]))
