"""Piecewise tables: evaluation, canonical form, and the max-combination."""

import random
from fractions import Fraction

import pytest

from tvgcast.segments import (
    FLAT,
    SLOPE,
    SegmentTable,
    SegmentTableError,
    aggregate,
    aggregate_all,
    min_windows,
    zero_table,
)


def table(entries, p=100):
    return SegmentTable.of(entries, p)


def rational(rng, hi):
    return Fraction(rng.randint(0, hi * 12), 12)


def random_table(rng, p):
    """A structurally valid table: alternating-ish flat/slope entries."""
    n = rng.randint(1, 6)
    dates = sorted(rng.sample(range(0, p * 2), n))
    entries = []
    for i, d2 in enumerate(dates):
        trend = rng.choice([FLAT, SLOPE])
        value = Fraction(rng.randint(1, 4 * p), 4)
        entries.append((Fraction(d2, 2), value, trend))
    return table(entries, p)


def test_eval_flat_and_slope(triangle):
    t = table([(9, 2, FLAT), (19, 2, SLOPE), (20, 1, FLAT), (59, 52, SLOPE)])
    assert t.eval_at(9) == 2
    assert t.eval_at(15) == 2          # flat holds over its span
    assert t.eval_at(19) == 2
    assert t.eval_at(Fraction(39, 2)) == Fraction(3, 2)  # slope decreases at rate 1
    assert t.eval_at(25) == 1
    assert t.eval_at(59) == 52
    assert t.eval_at(99) == 12
    assert t.eval_at(Fraction(0)) == 11  # wrap: slope continues into [0, 9)
    assert t.eval_at(105) == t.eval_at(5)  # periodic


def test_canonicalize_merges_collinear_runs():
    t = table([(0, 5, FLAT), (10, 5, FLAT), (20, 30, SLOPE), (30, 20, SLOPE)])
    c = t.canonicalize()
    assert c.as_rows() == [(0, 5, FLAT), (20, 30, SLOPE)]
    # evaluation unchanged everywhere
    for x in range(0, 100, 7):
        assert c.eval_at(x) == t.eval_at(x)


def test_zero_table_and_min_windows():
    z = zero_table(100)
    assert z.eval_at(Fraction(13, 7)) == 0
    t = table([(9, 2, FLAT), (19, 2, SLOPE), (20, 1, FLAT), (59, 52, SLOPE)])
    m, wins = min_windows(t)
    assert m == 1
    assert wins == [(20, 59)]


def test_aggregate_reference_result():
    left = table([(0, 1, FLAT), (29, 2, FLAT), (38, 33, SLOPE), (59, 42, SLOPE)])
    right = table([(9, 2, FLAT), (19, 2, SLOPE), (20, 1, FLAT), (59, 52, SLOPE)])
    out = aggregate(left, right)
    assert out.as_rows() == [
        (0, 11, SLOPE), (9, 2, FLAT), (19, 2, SLOPE), (20, 1, FLAT),
        (29, 2, FLAT), (38, 33, SLOPE), (59, 52, SLOPE)]


def test_aggregate_is_pointwise_max_random():
    rng = random.Random(3)
    for _ in range(60):
        p = rng.randint(10, 50)
        a, b = random_table(rng, p), random_table(rng, p)
        out = aggregate(a, b)
        for _ in range(40):
            x = rational(rng, p - 1)
            assert out.eval_at(x) == max(a.eval_at(x), b.eval_at(x)), (a, b, x)


def test_aggregate_idempotent_commutative():
    rng = random.Random(4)
    for _ in range(40):
        p = rng.randint(10, 50)
        a, b = random_table(rng, p), random_table(rng, p)
        ab, ba = aggregate(a, b), aggregate(b, a)
        assert ab.as_rows() == ba.as_rows()
        # idempotence / absorption hold up to the fully wrap-merged form
        assert aggregate(a, a).merge_wrap().as_rows() == \
            a.canonicalize().merge_wrap().as_rows()
        assert aggregate(ab, b).merge_wrap().as_rows() == ab.merge_wrap().as_rows()


def test_aggregate_all_matches_pairwise_fold():
    rng = random.Random(5)
    tables = [random_table(rng, 20) for _ in range(4)]
    folded = tables[0]
    for t in tables[1:]:
        folded = aggregate(folded, t)
    assert aggregate_all(tables).as_rows() == folded.as_rows()


def test_period_mismatch_rejected():
    with pytest.raises(SegmentTableError):
        aggregate(zero_table(10), zero_table(20))
