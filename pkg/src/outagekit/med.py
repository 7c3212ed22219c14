"""Major event day detection (2.5-beta method) and detector comparison.

A day is a major event day (MED) when its daily SAIDI exceeds

    t_med = exp(mu_log + 2.5 * sigma_log)

where mu_log and sigma_log are the mean and sample standard deviation of
ln(daily SAIDI) over positive-SAIDI days in the preceding window
(five years by default). Zero days are excluded from the statistics, the
log being undefined there.

The comparison half of this module lines MED classifications up against
regression influence flags on the same events. A single extreme day in the
threshold window inflates t_med for the following years, so genuinely
large events can pass as normal; influence points do not inherit that
fragility, and `compare_detectors` quantifies the disagreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

from .ingest import OutageEvent
from .reliability import kahan_sum


class InsufficientHistory(ValueError):
    """Too few positive-SAIDI days in the threshold window."""


@dataclass(frozen=True)
class DailySaidiSeries:
    """Daily SAIDI (hours per customer per day) for one region."""

    dates: tuple[date, ...]
    saidi: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.saidi):
            raise ValueError("dates and saidi differ in length")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise ValueError("dates must be strictly increasing")
        if any(s < 0 for s in self.saidi):
            raise ValueError("daily SAIDI must be nonnegative")

    def window(self, start: date, end: date) -> "DailySaidiSeries":
        pairs = [(d, s) for d, s in zip(self.dates, self.saidi)
                 if start <= d <= end]
        return DailySaidiSeries(
            dates=tuple(d for d, _ in pairs),
            saidi=tuple(s for _, s in pairs),
        )


def daily_saidi(
    events: Sequence[OutageEvent],
    n_t: int,
    start: date,
    end: date,
) -> DailySaidiSeries:
    """Aggregate events into a contiguous daily SAIDI series.

    Each event contributes duration * customers / n_t to the day containing
    its begin timestamp; days without events get zero.
    """
    if n_t <= 0:
        raise ValueError("n_t must be positive")
    if end < start:
        raise ValueError("end before start")
    by_day: dict[date, list[float]] = {}
    for e in events:
        day = e.began.date()
        if start <= day <= end:
            by_day.setdefault(day, []).append(
                e.elapsed_hours * e.customers_affected / n_t
            )
    n_days = (end - start).days + 1
    dates = tuple(start + timedelta(days=i) for i in range(n_days))
    saidi = tuple(kahan_sum(by_day.get(d, ())) for d in dates)
    return DailySaidiSeries(dates=dates, saidi=saidi)


@dataclass(frozen=True)
class MedThreshold:
    """The 2.5-beta threshold and the log statistics behind it."""

    mu_log: float
    sigma_log: float
    t_med: float
    window_start: date
    window_end: date
    n_days_used: int
    multiplier: float = 2.5


def med_threshold(
    series: DailySaidiSeries,
    evaluation_year: int | None = None,
    window_years: int = 5,
    min_positive_days: int = 30,
    multiplier: float = 2.5,
) -> MedThreshold:
    """Threshold from ln(daily SAIDI) statistics over positive days.

    With an evaluation year, the window is the `window_years` calendar
    years preceding it; without one, the whole series is the window (the
    in-sample form used for calibration checks). Sample (n-1) standard
    deviation; a window with fewer than `min_positive_days` positive days
    raises InsufficientHistory.
    """
    if evaluation_year is not None:
        window_start = date(evaluation_year - window_years, 1, 1)
        window_end = date(evaluation_year - 1, 12, 31)
        windowed = series.window(window_start, window_end)
    else:
        window_start, window_end = series.dates[0], series.dates[-1]
        windowed = series

    logs = [math.log(s) for s in windowed.saidi if s > 0.0]
    if len(logs) < min_positive_days:
        raise InsufficientHistory(
            f"{len(logs)} positive-SAIDI days in window, need {min_positive_days}"
        )
    n = len(logs)
    mu = math.fsum(logs) / n
    if n > 1:
        var = math.fsum((v - mu) ** 2 for v in logs) / (n - 1)
    else:
        var = 0.0
    sigma = math.sqrt(var)
    return MedThreshold(
        mu_log=mu,
        sigma_log=sigma,
        t_med=math.exp(mu + multiplier * sigma),
        window_start=window_start,
        window_end=window_end,
        n_days_used=n,
        multiplier=multiplier,
    )


def classify_days(
    series: DailySaidiSeries, threshold: MedThreshold
) -> list[tuple[date, bool]]:
    """Mark each day: MED iff its SAIDI strictly exceeds t_med."""
    return [(d, s > threshold.t_med) for d, s in zip(series.dates, series.saidi)]


@dataclass(frozen=True)
class DetectorAgreement:
    """Per-event MED vs influence flags plus the confusion counts."""

    rows: tuple[tuple[str, bool, bool], ...]  # (label, med, influence)
    both: int
    med_only: int
    influence_only: int
    neither: int

    @property
    def divergent(self) -> int:
        return self.med_only + self.influence_only


def compare_detectors(
    events: Sequence[OutageEvent],
    med_days: Iterable[tuple[date, bool]] | Mapping[date, bool],
    influence_flags: Sequence[bool],
    labels: Sequence[str] | None = None,
) -> DetectorAgreement:
    """Cross-tabulate MED day flags against influence flags per event.

    An event counts as MED-flagged when the day its outage began was
    classified as a major event day. influence_flags aligns with events.
    """
    if len(influence_flags) != len(events):
        raise ValueError("influence flags do not align with events")
    med_map = dict(med_days) if not isinstance(med_days, Mapping) else dict(med_days)
    rows = []
    both = med_only = influence_only = neither = 0
    for i, (e, inf_flag) in enumerate(zip(events, influence_flags)):
        med_flag = med_map.get(e.began.date(), False)
        label = labels[i] if labels else (str(e.source_row) if e.source_row else str(i + 1))
        rows.append((label, med_flag, bool(inf_flag)))
        if med_flag and inf_flag:
            both += 1
        elif med_flag:
            med_only += 1
        elif inf_flag:
            influence_only += 1
        else:
            neither += 1
    return DetectorAgreement(
        rows=tuple(rows), both=both, med_only=med_only,
        influence_only=influence_only, neither=neither,
    )
