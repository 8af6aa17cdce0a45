import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amtkit.codec import EOS_ID, decode_segment
from amtkit.core import Note, validate_sequence
from amtkit.segmenter import decode_segments, reconstruct, split
from amtkit.simulate import (
    METRICS,
    PARAMETERS,
    CorruptionSpec,
    corrupt,
    corrupt_tokens,
    degradation_curve,
    transcribe,
)
from helpers import EPS, SEGMENT, random_sequence


def _dense(seed=0, notes=300):
    rng = np.random.default_rng(seed)
    return random_sequence(rng, max_notes=notes, max_seconds=8.0)


def test_corruption_settings_validated():
    for name in ("drop_noteoff_rate", "drop_tie_rate", "token_substitution_rate", "truncate_rate"):
        with pytest.raises(ValueError):
            CorruptionSpec(**{name: 1.5})
    with pytest.raises(ValueError):
        CorruptionSpec(onset_jitter_std=-0.1)


def test_zero_rates_are_identity():
    segs = split(_dense())
    assert corrupt(segs, CorruptionSpec(seed=5)) == segs


def test_zero_corruption_scores_one_for_every_metric():
    x = _dense(1)
    for name in METRICS:
        [point] = degradation_curve(x, [0.0], name, seeds=2)
        assert point.mean_f1 == 1.0 and point.std_f1 == 0.0


def test_dropping_every_note_off():
    x = _dense(2)
    segs = split(x)
    baseline = transcribe(segs)
    out = transcribe(corrupt(segs, CorruptionSpec(drop_noteoff_rate=1.0)))
    ends = {(n.program, n.pitch, n.onset): n.offset for n in out.notes}
    for n in baseline.notes:
        if n.is_drum:
            continue
        end = ends[(n.program, n.pitch, n.onset)]
        k = int(np.floor(round(n.onset / SEGMENT, 9)))
        # a note ends at a segment boundary, or where its key is struck again
        on_boundary = abs(end / SEGMENT - round(end / SEGMENT)) < 1e-9
        restruck = any(m.onset == end for m in baseline.notes
                       if (m.program, m.pitch) == (n.program, n.pitch) and not m.is_drum)
        assert on_boundary or restruck
        assert end >= n.offset - EPS
        assert end > k * SEGMENT


def test_full_substitution_decodes_with_anomalies():
    segs = split(_dense(3))
    bad = corrupt(segs, CorruptionSpec(token_substitution_rate=1.0, seed=1))
    assert all(0 <= t < 594 for s in bad for t in s.tokens)
    reports = decode_segments(bad)
    assert sum(r.anomaly_total for r in reports) > 0
    out = reconstruct(reports)
    assert validate_sequence(out.notes, out.duration) == out


def test_truncation_and_tie_dropping():
    segs = split(_dense(4))
    cut = corrupt(segs, CorruptionSpec(truncate_rate=1.0, seed=2))
    assert all(len(c.tokens) <= len(s.tokens) for c, s in zip(cut, segs))
    assert any(EOS_ID not in c.tokens for c in cut)
    untied = corrupt(segs, CorruptionSpec(drop_tie_rate=1.0))
    assert all(decode_segment(s.tokens).tie_pitches == [] for s in untied)


def test_corruption_is_deterministic_per_seed():
    segs = split(_dense(5))
    spec = CorruptionSpec(0.3, 0.3, 0.05, 0.02, 0.2, seed=11)
    assert corrupt(segs, spec) == corrupt(segs, spec)
    assert corrupt(segs, spec) != corrupt(segs, CorruptionSpec(0.3, 0.3, 0.05, 0.02, 0.2, seed=12))


@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
       st.floats(0, 0.3), st.floats(0, 1))
@settings(max_examples=40)
def test_no_setting_breaks_decoding(seed, off, tie, sub, jitter, trunc):
    x = random_sequence(np.random.default_rng(seed), max_notes=80, max_seconds=6.0)
    spec = CorruptionSpec(off, tie, sub, jitter, trunc, seed=seed)
    out = transcribe(corrupt(split(x), spec))
    assert validate_sequence(out.notes, out.duration) == out
    assert all(n.is_drum or n.offset > n.onset for n in out.notes)


def test_jitter_hurts_onset_f1():
    x = _dense(6, notes=400)
    [point] = degradation_curve(x, [0.2], "onset", "onset_jitter_std", seeds=20)
    assert point.mean_f1 < 0.5


@pytest.mark.parametrize("parameter,rates", [
    ("drop_noteoff_rate", [0.0, 0.25, 0.5, 0.75, 1.0]),
    ("drop_tie_rate", [0.0, 0.25, 0.5, 0.75, 1.0]),
    ("token_substitution_rate", [0.0, 0.02, 0.05, 0.1, 0.2]),
    ("onset_jitter_std", [0.0, 0.02, 0.05, 0.1, 0.2]),
    ("truncate_rate", [0.0, 0.25, 0.5, 0.75, 1.0]),
])
def test_mean_f1_non_increasing_in_rate(parameter, rates):
    x = _dense(7, notes=250)
    curve = degradation_curve(x, rates, "onset_offset", parameter, seeds=20)
    means = [p.mean_f1 for p in curve]
    assert means[0] == 1.0
    assert all(b <= a + 1e-12 for a, b in zip(means, means[1:])), means
    assert means[-1] < 1.0


def test_curve_arguments_checked():
    x = _dense(8, notes=20)
    with pytest.raises(ValueError):
        degradation_curve(x, [0.1], parameter="volume")
    with pytest.raises(ValueError):
        degradation_curve(x, [0.1], seeds=0)
    assert set(PARAMETERS) == {"drop_noteoff_rate", "drop_tie_rate", "token_substitution_rate",
                               "onset_jitter_std", "truncate_rate"}


def test_jitter_keeps_note_order():
    seq = validate_sequence([Note(60, 0.5, 0.52), Note(60, 0.52, 1.0)])
    segs = split(seq)
    for s in range(30):
        tokens = corrupt_tokens(segs[0].tokens, CorruptionSpec(onset_jitter_std=0.3, seed=s))
        report = decode_segment(tokens)
        assert report.anomaly_total == 0
