"""Temperature-scaled sampling across training datasets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyMixtureError, EmptySplitError
from .manifest import DatasetManifest

DEFAULT_EXPONENT = 0.3


@dataclass(frozen=True)
class MixtureSpec:
    datasets: tuple[tuple[str, int], ...]
    exponent: float = DEFAULT_EXPONENT
    excluded: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple((str(n), int(c)) for n, c in self.datasets))
        object.__setattr__(self, "excluded", frozenset(self.excluded))
        for name, count in self.datasets:
            if count <= 0:
                raise ValueError(f"dataset {name!r} needs a positive example count")
        if len({n for n, _ in self.datasets}) != len(self.datasets):
            raise ValueError("dataset names must be unique")

    @classmethod
    def from_manifests(cls, manifests: Sequence[DatasetManifest], exponent: float = DEFAULT_EXPONENT,
                       excluded=frozenset()) -> MixtureSpec:
        return cls(tuple((m.name, m.example_count) for m in manifests), exponent, frozenset(excluded))

    def leave_out(self, name: str) -> MixtureSpec:
        return MixtureSpec(self.datasets, self.exponent, self.excluded | {name})


def mixture_probabilities(spec: MixtureSpec) -> list[tuple[str, float]]:
    """``p_i = n_i**e / sum_j n_j**e`` over the datasets not excluded.

    Scaling every ``n_i`` by the total first gives the same result, so this is
    the renormalised form of ``(n_i / sum_j n_j) ** e``.
    """
    kept = [(n, c) for n, c in spec.datasets if n not in spec.excluded]
    if not kept:
        raise EmptyMixtureError("no datasets left in the mixture")
    counts = np.array([c for _, c in kept], dtype=np.float64)
    weights = counts / counts.sum()
    if spec.exponent != 1.0:
        weights = weights ** spec.exponent
    probs = weights / weights.sum()
    return [(n, float(p)) for (n, _), p in zip(kept, probs)]


def sample_examples(spec: MixtureSpec, manifests: Mapping[str, DatasetManifest],
                    count: int, seed: int) -> list[tuple[str, str]]:
    """Draw ``count`` (dataset, track_id) pairs.

    Datasets are drawn i.i.d. from :func:`mixture_probabilities`, then a track
    uniformly from that dataset's train split.
    """
    probs = mixture_probabilities(spec)
    names = [n for n, _ in probs]
    pools = []
    for name in names:
        if name not in manifests:
            raise EmptySplitError(f"no manifest for dataset {name!r}")
        train = [e.track_id for e in manifests[name].split("train")]
        if not train:
            raise EmptySplitError(f"dataset {name!r} has no train entries")
        pools.append(train)
    rng = np.random.default_rng(seed)
    which = rng.choice(len(names), size=count, p=[p for _, p in probs])
    picks = rng.random(count)
    return [
        (names[d], pools[d][min(int(u * len(pools[d])), len(pools[d]) - 1)])
        for d, u in zip(which.tolist(), picks.tolist())
    ]
