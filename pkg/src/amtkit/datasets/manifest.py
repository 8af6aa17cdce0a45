"""Dataset split manifests.

A manifest file is tab-separated, one track per line::

    dataset<TAB>track_id<TAB>path[;path...]<TAB>split

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

from ..errors import DataError

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class ManifestEntry:
    track_id: str
    paths: tuple[str, ...]
    split: str


@dataclass
class DatasetManifest:
    name: str
    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.split not in SPLITS:
                raise DataError(f"{self.name}/{e.track_id}: unknown split {e.split!r}")
            if e.track_id in seen:
                raise DataError(f"{self.name}: duplicate track id {e.track_id!r}")
            seen.add(e.track_id)

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    @property
    def example_count(self) -> int:
        """Number of training examples (train-split entries)."""
        return len(self.split("train"))


def parse_manifests(text: str) -> dict[str, DatasetManifest]:
    rows: dict[str, list[ManifestEntry]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError(f"line {lineno}: expected 4 tab-separated fields")
        name, track_id, paths, split = parts
        rows.setdefault(name, []).append(
            ManifestEntry(track_id, tuple(p for p in paths.split(";") if p), split.strip()))
    return {name: DatasetManifest(name, entries) for name, entries in rows.items()}


def format_manifests(manifests: Iterable[DatasetManifest]) -> str:
    lines = []
    for m in manifests:
        for e in m.entries:
            lines.append("\t".join([m.name, e.track_id, ";".join(e.paths), e.split]))
    return "\n".join(lines) + "\n"


URMP_PIECES = range(1, 45)
URMP_VALIDATION_PIECES = frozenset({1, 2, 12, 13, 24, 25, 31, 38, 39})


def urmp_manifest() -> DatasetManifest:
    """URMP pieces 1-44; the fixed validation pieces, everything else train."""
    text = resources.files("amtkit").joinpath("data/urmp_split.tsv").read_text("utf-8")
    return parse_manifests(text)["urmp"]


_GUITARSET_ID = re.compile(r"^\d{2}_(?P<style>[A-Za-z]+)(?P<progression>[123])-")


def guitarset_split(track_id: str) -> str:
    """Split for a GuitarSet excerpt id such as ``00_BN1-129-Eb_comp``.

    Progressions 1 and 2 of each style train, progression 3 is validation.
    """
    m = _GUITARSET_ID.match(track_id)
    if not m:
        raise ValueError(f"not a GuitarSet excerpt id: {track_id!r}")
    return "validation" if m["progression"] == "3" else "train"
