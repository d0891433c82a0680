"""Piecewise-linear segment tables over one period.

A table is an ordered list of (date, value, trend) entries with dates in
[0, p).  Each entry defines the function on [date_i, date_{i+1}) — wrapping
at p — as a constant (``flat``) or a rate-minus-one decrease (``slope``).
Supports alignment, crossing elimination, segment-wise maximum and
minimum-window extraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from .graph import Time, as_time, normalize_date

FLAT = "flat"
SLOPE = "slope"


class SegmentTableError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    date: Time
    value: Time
    trend: str

    def value_at(self, t: Time) -> Time:
        """Value at t >= date within this segment's span."""
        if self.trend == FLAT:
            return self.value
        return self.value - (t - self.date)


@dataclass(frozen=True)
class SegmentTable:
    entries: Tuple[Segment, ...]
    period: Time

    @staticmethod
    def of(entries: Iterable, period) -> "SegmentTable":
        p = as_time(period)
        segs = []
        for d, v, tr in entries:
            if tr not in (FLAT, SLOPE):
                raise SegmentTableError(f"unknown trend {tr!r}")
            segs.append(Segment(as_time(d), as_time(v), tr))
        segs.sort(key=lambda s: s.date)
        for a, b in zip(segs, segs[1:]):
            if a.date == b.date:
                raise SegmentTableError(f"duplicate date {a.date}")
        if segs and (segs[0].date < 0 or segs[-1].date >= p):
            raise SegmentTableError("dates must lie in [0, period)")
        return SegmentTable(tuple(segs), p)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def as_rows(self):
        return [(s.date, s.value, s.trend) for s in self.entries]

    def _segment_index(self, t: Time) -> int:
        """Index of the entry whose span covers t in [0, p)."""
        idx = None
        for i, s in enumerate(self.entries):
            if s.date <= t:
                idx = i
        if idx is None:
            idx = len(self.entries) - 1  # wrap: t precedes the first date
        return idx

    def span_of(self, i: int) -> Tuple[Time, Time]:
        """Absolute [start, end) of entry i; the last span ends at first+p."""
        s = self.entries[i]
        if i + 1 < len(self.entries):
            return s.date, self.entries[i + 1].date
        return s.date, self.entries[0].date + self.period

    def eval_at(self, t: Time) -> Time:
        """Value of the piecewise function at t (t reduced modulo p)."""
        if not self.entries:
            raise SegmentTableError("empty table")
        t = normalize_date(as_time(t), self.period)
        i = self._segment_index(t)
        s = self.entries[i]
        off = t - s.date if t >= s.date else t + self.period - s.date
        return s.value if s.trend == FLAT else s.value - off

    def split_at(self, t: Time) -> "SegmentTable":
        """Insert a breakpoint at t without changing the function."""
        t = normalize_date(as_time(t), self.period)
        if any(s.date == t for s in self.entries):
            return self
        i = self._segment_index(t)
        s = self.entries[i]
        new = Segment(t, self.eval_at(t), s.trend)
        segs = sorted(self.entries + (new,), key=lambda x: x.date)
        return SegmentTable(tuple(segs), self.period)

    def canonicalize(self) -> "SegmentTable":
        """Merge consecutive entries that continue the same line.

        Merging is in linear date order only; the first entry is never
        folded into the wrapping last segment.
        """
        if len(self.entries) <= 1:
            return self
        out = [self.entries[0]]
        for s in self.entries[1:]:
            prev = out[-1]
            if s.trend == prev.trend and s.value == prev.value_at(s.date):
                continue
            out.append(s)
        return SegmentTable(tuple(out), self.period)

    def merge_wrap(self) -> "SegmentTable":
        """Drop a leading entry that merely continues the wrapping last
        segment; a constant table is pinned to date 0 (unique form)."""
        out = self
        if len(out.entries) >= 2:
            first, last = out.entries[0], out.entries[-1]
            if first.trend == last.trend and first.value == last.value_at(first.date + out.period):
                out = SegmentTable(out.entries[1:], out.period)
        if len(out.entries) == 1 and out.entries[0].trend == FLAT and out.entries[0].date != 0:
            out = SegmentTable.of([(Fraction(0), out.entries[0].value, FLAT)], out.period)
        return out


def zero_table(period) -> SegmentTable:
    """The all-zero flat table (an emitter's distance to itself)."""
    return SegmentTable.of([(0, 0, FLAT)], period)


def align_tables(a: SegmentTable, b: SegmentTable):
    """Split both tables so they share the same date set (always including 0)."""
    if a.period != b.period:
        raise SegmentTableError("period mismatch")
    if not a.entries or not b.entries:
        raise SegmentTableError("empty table")
    dates = {Fraction(0)}
    dates.update(s.date for s in a.entries)
    dates.update(s.date for s in b.entries)
    for t in sorted(dates):
        a = a.split_at(t)
        b = b.split_at(t)
    return a, b


def decross(a: SegmentTable, b: SegmentTable):
    """Split aligned tables at flat/slope crossing points (at most one each)."""
    if [s.date for s in a.entries] != [s.date for s in b.entries]:
        raise SegmentTableError("tables must be aligned")
    cuts = []
    for i, (sa, sb) in enumerate(zip(a.entries, b.entries)):
        lo, hi = a.span_of(i)
        length = hi - lo
        if sa.trend == sb.trend:
            continue
        flat, slope = (sa, sb) if sa.trend == FLAT else (sb, sa)
        delta = slope.value - flat.value
        if 0 < delta < length:
            cuts.append(lo + delta)
    for t in cuts:
        a = a.split_at(t)
        b = b.split_at(t)
    return a, b


def aggregate(a: SegmentTable, b: SegmentTable) -> SegmentTable:
    """Segment-wise maximum of two tables, in canonical form."""
    a, b = align_tables(a, b)
    a, b = decross(a, b)
    out = []
    for sa, sb in zip(a.entries, b.entries):
        if sa.value > sb.value or (sa.value == sb.value and sa.trend == FLAT):
            out.append(sa)
        else:
            out.append(sb)
    return SegmentTable(tuple(out), a.period).canonicalize()


def aggregate_all(tables, period=None) -> SegmentTable:
    tables = list(tables)
    if period is not None:
        acc = zero_table(period)
    else:
        acc = tables.pop(0)
    for t in tables:
        acc = aggregate(acc, t)
    return acc


def min_windows(tbl: SegmentTable):
    """Minimum attained value and the maximal sub-intervals attaining it.

    Returns (value, windows) where each window (lo, hi) denotes [lo, hi) if
    lo < hi and the single point {lo} if lo == hi.  A slope's limit value is
    attained at its right endpoint: the departure closing the waiting
    continuum is still valid there even when the table jumps up just after.
    """
    if not tbl.entries:
        raise SegmentTableError("empty table")
    attained = []  # (value, lo, hi) candidate windows
    for i, s in enumerate(tbl.entries):
        lo, hi = tbl.span_of(i)
        if s.trend == FLAT:
            attained.append((s.value, lo, hi))
        else:
            d = normalize_date(hi, tbl.period)
            attained.append((s.value_at(hi), d, d))
    m = min(v for v, _, _ in attained)
    pts = sorted((lo, hi) for v, lo, hi in attained if v == m)
    # drop degenerate points swallowed by an adjacent half-open window
    wins: List[Tuple[Time, Time]] = []
    for lo, hi in pts:
        if wins and lo <= wins[-1][1] and wins[-1][0] < wins[-1][1]:
            wins[-1] = (wins[-1][0], max(wins[-1][1], hi))
            continue
        if wins and wins[-1][0] == wins[-1][1] == lo:
            wins[-1] = (lo, hi)
            continue
        wins.append((normalize_date(lo, tbl.period), normalize_date(lo, tbl.period) + (hi - lo)))
    return m, wins
