import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percolab.core import EnvSymbol, Params, StochOrder, iter_words, symbol_leq
from percolab.game import (
    ClassGrid,
    DrawEstimate,
    GameClass,
    GameVersion,
    SiteLabel,
    classify_line,
    draw_fraction,
    kernel_correspondence,
    out_set,
    sample_labels,
    solve_sample,
    wilson_interval,
)
from percolab.pca import SeededStream

W, D, L = GameClass.W, GameClass.D, GameClass.L
TRAP, OPEN, TARGET = SiteLabel.TRAP, SiteLabel.OPEN, SiteLabel.TARGET

PARAM_GRID = [
    Params(Fraction(1, 3), Fraction(1, 5)),
    Params(0, 1),
    Params(1, 0),
    Params(Fraction(1, 2), Fraction(1, 2)),
    Params(Fraction(1, 100), Fraction(1, 100)),
]


# ------------------------------------------------------------------ out sets

def test_out_set_examples():
    assert out_set(GameVersion.V1, 0, 0) == ((0, 2), (1, 1), (2, 0))
    assert out_set(GameVersion.V4, 5, -2) == ((4, -1), (5, -1), (6, -1))
    assert out_set(GameVersion.V3, 0, 0) == ((1, 0), (0, 1), (-1, 2))
    assert out_set(GameVersion.V2, 1, 1) == ((1, 2), (2, 2), (3, 2))


@given(st.integers(-50, 50), st.integers(-50, 50), st.sampled_from(list(GameVersion)))
def test_out_set_respects_line_structure(x, y, v):
    k = v.line_of(x, y)
    outs = out_set(v, x, y)
    # successors all on the next line, and their x-indices form the window x+i..x+i+2
    assert all(v.line_of(*s) == k + v.line_step for s in outs)
    assert sorted(s[0] for s in outs) == [x + v.offset + j for j in range(3)]


def test_v1_parity():
    for x, y in [(0, 0), (3, -1), (-2, 5)]:
        for s in out_set(GameVersion.V1, x, y):
            assert (s[0] + s[1]) % 2 == (x + y) % 2


# ------------------------------------------------------------- classification

def _reference_class(label, nxt):
    if label == TRAP:
        return W
    if label == TARGET:
        return L
    if L in nxt:
        return W
    if all(c == W for c in nxt):
        return L
    return D


def test_classify_line_spec_cases():
    v = GameVersion.V1
    assert classify_line([TRAP], [L, L, L], v)[0] == W
    assert classify_line([OPEN], [W, D, W], v)[0] == D
    assert classify_line([TARGET], [W, W, W], v)[0] == L
    assert classify_line([OPEN], [W, W, W], v)[0] == L
    assert classify_line([OPEN], [D, L, D], v)[0] == W


def test_classify_line_exhaustive_single_site():
    for v in GameVersion:
        for label in SiteLabel:
            for nxt in itertools.product((W, D, L), repeat=3):
                got = classify_line([label], list(nxt), v)[0]
                assert got == _reference_class(label, nxt), (label, nxt)


def test_classify_line_width_checks():
    with pytest.raises(ValueError):
        classify_line([OPEN, OPEN], [W, W, W], GameVersion.V2)
    with pytest.raises(ValueError):
        classify_line([OPEN], [W, W, W, W, W], GameVersion.V2)


def test_classify_line_locality():
    rng = np.random.RandomState(0)
    v = GameVersion.V3
    for _ in range(60):
        labels = rng.randint(0, 3, size=8).astype(np.int8)
        nxt = rng.randint(0, 3, size=10).astype(np.int8)
        base = classify_line(labels, nxt, v)
        for j in range(10):
            for new in range(3):
                if new == nxt[j]:
                    continue
                bumped = nxt.copy()
                bumped[j] = new
                diff = np.nonzero(classify_line(labels, bumped, v) != base)[0]
                assert set(diff) <= {j - 2, j - 1, j}


def test_classify_line_stacked_rows_match_loop():
    rng = np.random.RandomState(1)
    labels = rng.randint(0, 3, size=(5, 7)).astype(np.int8)
    nxt = rng.randint(0, 3, size=(5, 9)).astype(np.int8)
    stacked = classify_line(labels, nxt, GameVersion.V2)
    for i in range(5):
        assert np.array_equal(stacked[i], classify_line(labels[i], nxt[i], GameVersion.V2))


# ------------------------------------------------------------- correspondence

@pytest.mark.parametrize("params", PARAM_GRID, ids=str)
@pytest.mark.parametrize("version", list(GameVersion), ids=lambda v: v.value)
def test_kernel_correspondence_exact(version, params):
    report = kernel_correspondence(version, params)
    assert len(report.comparisons) == 27
    assert report.passed and report.mismatch_count == 0
    assert report.to_json_dict()["mismatches"] == []


def test_kernel_correspondence_spot_values():
    p, q = Fraction(1, 3), Fraction(1, 5)
    report = kernel_correspondence(GameVersion.V1, Params(p, q))
    by_triple = {c.triple: c.induced for c in report.comparisons}
    Z, Q, O = EnvSymbol.ZERO, EnvSymbol.QMARK, EnvSymbol.ONE
    assert by_triple[(Z, Z, Z)].as_dict() == {"0": p, "?": Fraction(0), "1": 1 - p}
    assert by_triple[(Z, Q, Z)].as_dict() == {"0": p, "?": 1 - p - q, "1": q}
    assert by_triple[(O, Z, Z)].as_dict() == {"0": 1 - q, "?": Fraction(0), "1": q}


# ------------------------------------------------------------- label sampling

def test_sample_labels_keying_and_degenerate_params():
    stream = SeededStream(10)
    a = sample_labels(Params(Fraction(1, 4), Fraction(1, 4)), stream, 3, -2, 7)
    b = sample_labels(Params(Fraction(1, 4), Fraction(1, 4)), stream, 3, -2, 7)
    assert np.array_equal(a, b)
    # same sites, different line index -> fresh field
    c = sample_labels(Params(Fraction(1, 4), Fraction(1, 4)), stream, 4, -2, 7)
    assert not np.array_equal(a, c)
    assert (sample_labels(Params(1, 0), stream, 0, 0, 50) == TRAP).all()
    assert (sample_labels(Params(0, 1), stream, 0, 0, 50) == TARGET).all()
    assert (sample_labels(Params(0, 0), stream, 0, 0, 50) == OPEN).all()


def test_sample_labels_frequencies():
    params = Params(Fraction(1, 5), Fraction(3, 10))
    labels = sample_labels(params, SeededStream(77), 0, 0, 100_000)
    freqs = [(labels == s).mean() for s in SiteLabel]
    for freq, prob in zip(freqs, (0.2, 0.5, 0.3)):
        assert abs(freq - prob) < 3 * np.sqrt(prob * (1 - prob) / 100_000)


# ------------------------------------------------------------- grid solving

def test_solve_sample_geometry():
    for version in GameVersion:
        grid = solve_sample(version, Params(Fraction(1, 4), Fraction(1, 4)), 5, SeededStream(3))
        step_k = version.line_step
        assert sorted(grid.lines) == [s * step_k for s in range(6)]
        for s in range(6):
            k = s * step_k
            assert grid.lines[k].size == 1 + 2 * s
            assert grid.origins[k] == s * version.offset
        assert (grid.lines[5 * step_k] == D).all()
        assert grid.origin_class() in (W, D, L)


def test_solve_sample_matches_batch():
    params = Params(Fraction(1, 4), Fraction(1, 4))
    stream = SeededStream(2024)
    for version in GameVersion:
        est = draw_fraction(version, params, horizon=8, samples=30, stream=stream)
        single = [
            solve_sample(version, params, 8, stream.child(i)).origin_class()
            for i in range(30)
        ]
        assert est.draws == sum(1 for c in single if c == D)


def test_horizon_refinement_is_pathwise():
    # same label field: a longer horizon may only resolve D's, never flip W/L
    params = Params(Fraction(1, 5), Fraction(3, 10))
    stream = SeededStream(99)
    for version in (GameVersion.V1, GameVersion.V3):
        for i in range(25):
            child = stream.child(i)
            prev = None
            for horizon in range(7):
                cls = solve_sample(version, params, horizon, child).origin_class()
                if prev is not None:
                    assert symbol_leq(StochOrder.PARTIAL, EnvSymbol(int(cls)), EnvSymbol(int(prev)))
                prev = cls


# ------------------------------------------------------------- draw estimates

def test_draw_fraction_degenerate():
    stream = SeededStream(5)
    for version in GameVersion:
        assert draw_fraction(version, Params(1, 0), 5, 200, stream).fraction == 0.0
        assert draw_fraction(version, Params(0, 1), 5, 200, stream).fraction == 0.0
        # no traps or targets: nothing ever resolves
        assert draw_fraction(version, Params(0, 0), 5, 200, stream).fraction == 1.0
    assert draw_fraction(GameVersion.V2, Params(Fraction(1, 4), Fraction(1, 4)), 0, 50, stream).fraction == 1.0


def test_draw_fraction_deterministic_and_monotone():
    params = Params(Fraction(1, 4), Fraction(1, 4))
    stream = SeededStream(314)
    fractions = []
    for horizon in (2, 5, 10, 20):
        est = draw_fraction(GameVersion.V1, params, horizon, 400, stream)
        again = draw_fraction(GameVersion.V1, params, horizon, 400, stream)
        assert est.draws == again.draws
        fractions.append(est.fraction)
    assert fractions == sorted(fractions, reverse=True)
    est = draw_fraction(GameVersion.V1, params, 20, 400, stream)
    lo, hi = est.ci
    assert 0.0 <= lo <= est.fraction <= hi <= 1.0
    d = est.to_json_dict()
    assert d["horizon"] == 20 and d["samples"] == 400 and d["seed"] == 314


def test_draw_fraction_input_checks():
    stream = SeededStream(1)
    with pytest.raises(ValueError):
        draw_fraction(GameVersion.V1, Params(0, 0), -1, 10, stream)
    with pytest.raises(ValueError):
        draw_fraction(GameVersion.V1, Params(0, 0), 5, 0, stream)


def test_wilson_interval_values():
    lo, hi = wilson_interval(50, 100)
    assert round(lo, 3) == 0.404 and round(hi, 3) == 0.596
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0.0 < hi < 0.05
    lo, hi = wilson_interval(100, 100)
    assert 0.95 < lo < 1.0 and hi == 1.0
    with pytest.raises(ValueError):
        wilson_interval(0, 0)
