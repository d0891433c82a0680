"""Receptor-side inference of the temporal-distance table to a fixed emitter.

Consumes levelChanged / dateImproved notifications and records, one period
long, the flat and slope segments of the distance function.  Values become
known only at the *end* of each view segment, so the state always carries a
pending emission date whose distance is not yet recorded.  Terminates exactly
one period after the first processed update.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from .graph import NodeId, Time, as_time, normalize_date
from .segments import FLAT, SLOPE, SegmentTable
from .sim import format_time
from .tclocks import INF


class LearnerError(RuntimeError):
    pass


def _fmt_level(level) -> str:
    return "+inf" if level is INF or level == INF else str(level)


class DistanceLearner:
    """Observer for a T-Clock layer, tracking one emitter.

    `now_fn` supplies the local current time (a simulator context's now, or
    any callable in direct-drive tests).  `on_terminate` is called once, at
    the termination instant, if provided.
    """

    def __init__(self, node: NodeId, emitter: NodeId, period, latency,
                 now_fn: Callable[[], Time],
                 on_terminate: Optional[Callable[[], None]] = None):
        if node == emitter:
            raise LearnerError("the emitter does not learn its own distance")
        self.node = node
        self.emitter = emitter
        self.period = as_time(period)
        self.latency = as_time(latency)
        self.now_fn = now_fn
        self.on_terminate = on_terminate
        self.entries: List[Tuple[Time, Time, str]] = []
        self.current_level = INF
        self.start_d: Optional[Time] = None
        self.pending_ed: Optional[Time] = None
        self.terminated = False
        self.trace: List[str] = []

    # -- event handlers -----------------------------------------------------

    def on_level_changed(self, src: NodeId, level, proxy, snapshot: bool = False):
        if src != self.emitter or self.terminated:
            return
        if snapshot:
            # registration snapshot primes the level without starting recording
            self.current_level = level
            self._log(f"levelChanged({_fmt_level(level)})*", f"currentLevel <- {_fmt_level(level)}")
            return
        event = f"levelChanged({_fmt_level(level)})"
        if level is not INF:
            self._update(self.now_fn() - level * self.latency, event)
        elif self.current_level is not INF:
            # the direct continuum just ended; its last served emission date
            self._update(self.now_fn() - self.current_level * self.latency, event)
        self.current_level = level
        self._log(event, f"currentLevel <- {_fmt_level(level)}")

    def on_date_improved(self, src: NodeId, date: Time, proxy):
        if src != self.emitter or self.terminated:
            return
        self._update(as_time(date), f"dateImproved({format_time(as_time(date))})")

    # -- core algorithm -----------------------------------------------------

    def _update(self, new_ed: Time, event: str):
        now = self.now_fn()
        if self.start_d is None:
            self.start_d = now
            self.pending_ed = new_ed
            self._log(event, f"startD <- {format_time(now)}")
            self._log(event, f"pendingED <- {format_time(new_ed)}")
            return
        if now > self.start_d + self.period:
            raise LearnerError(
                f"event at {now} after one full period from {self.start_d}: "
                "periodicity violated")
        self._update_flat(event)
        self._update_slope(new_ed, event)
        if now == self.start_d + self.period:
            self.terminated = True
            self._log(event, "terminate")
            if self.on_terminate is not None:
                self.on_terminate()

    def _update_flat(self, event: str):
        if self.current_level is INF:
            return
        best_ed = self.now_fn() - self.current_level * self.latency
        if best_ed > self.pending_ed:
            self._add(self.pending_ed, self.current_level * self.latency, FLAT, event)
            self.pending_ed = best_ed

    def _update_slope(self, new_ed: Time, event: str):
        if new_ed > self.pending_ed:
            self._add(self.pending_ed, self.now_fn() - self.pending_ed, SLOPE, event)
            self.pending_ed = new_ed

    def _add(self, date: Time, value: Time, trend: str, event: str):
        self.entries.append((date, value, trend))
        self._log(event, f"add({format_time(date)},{format_time(value)},{trend})")

    def _log(self, event: str, action: str):
        self.trace.append(f"{format_time(self.now_fn())} | {event} | {action}")

    def conclude_constant(self) -> bool:
        """Fallback for event-free streams: if no update arrived within one
        full period of the (periodic) stream, the level never changes, so the
        distance is the constant level·latency.  No-op once recording started;
        returns whether the learner terminated."""
        if self.terminated or self.start_d is not None:
            return self.terminated
        if self.current_level is INF:
            return False  # no journey observed at all; caller reports
        self.entries = [(Fraction(0), self.current_level * self.latency, FLAT)]
        self.pending_ed = self.period
        self.terminated = True
        self._log("quiescent", f"add(0,{format_time(self.current_level * self.latency)},flat)")
        self._log("quiescent", "terminate")
        if self.on_terminate is not None:
            self.on_terminate()
        return True

    # -- results ------------------------------------------------------------

    def finalize(self) -> SegmentTable:
        """Build the one-period table from the recorded segments.

        The recording covers emission dates from the initial pending date up
        to the final one.  The head of the first segment can be stale: its
        serving receptions predate the first observed event, and the correct
        values for those dates were re-observed one period later (pushing the
        final pending date past start+period by exactly the stale length).
        Keep precisely the last full period of emission dates.
        """
        if not self.terminated:
            raise LearnerError("learner has not terminated")
        lo = self.pending_ed - self.period
        kept = []
        for i, (d, val, trend) in enumerate(self.entries):
            end = self.entries[i + 1][0] if i + 1 < len(self.entries) else self.pending_ed
            if end <= lo:
                continue
            if d < lo:
                if trend == SLOPE:
                    val = val - (lo - d)
                d = lo
            kept.append((normalize_date(d, self.period), val, trend))
        # relay changes can split one continuum into collinear records
        return SegmentTable.of(kept, self.period).canonicalize()
