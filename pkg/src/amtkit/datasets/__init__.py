from .augment import Stem, derive_cerberus4, mix_stems, slakh_augment
from .manifest import DatasetManifest, ManifestEntry, parse_manifests, urmp_manifest
from .midi import load_midi, parse_midi, write_midi
from .mixture import MixtureSpec, mixture_probabilities, sample_examples

__all__ = [
    "DatasetManifest",
    "ManifestEntry",
    "MixtureSpec",
    "Stem",
    "derive_cerberus4",
    "load_midi",
    "mix_stems",
    "mixture_probabilities",
    "parse_manifests",
    "parse_midi",
    "sample_examples",
    "slakh_augment",
    "urmp_manifest",
    "write_midi",
]
