"""IEEE 1366 reliability metrics over arbitrary groupings of outage events.

The three indices, for events with duration r_i hours, customers
interrupted N_i, and N_T customers served in the studied region:

    SAIDI = sum(r_i * N_i) / N_T      [hours per customer]
    SAIFI = sum(N_i) / N_T            [interruptions per customer]
    CAIDI = sum(r_i * N_i) / sum(N_i) [hours per interruption]

A weight w_i > 0 may be attached to each event (to normalize for social
vulnerability, economic exposure, or any other per-event factor); weights
multiply every per-event term, so with unit weights the weighted metrics
reduce to the classical ones bit for bit. CAIDI for a group with no events
is reported as absent (None), never zero: no recorded outages is itself a
reliability statement, not a zero-duration one.

All accumulations use compensated (Kahan) summation so results are stable
under event reordering.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence

from .ingest import CauseCategory, CustomerBase, NERC_REGIONS, OutageEvent, base_index

log = logging.getLogger(__name__)

# Year-range presets. The overlapping pair splits an 18-year record into
# two 9-year halves that share the pivot year; the disjoint pair is the
# variant used for side-by-side period maps.
YEAR_RANGES_OVERLAPPING = ((2002, 2011), (2011, 2019))
YEAR_RANGES_DISJOINT = ((2002, 2010), (2011, 2019))

YEAR_RANGE_PRESETS = {
    "overlapping": YEAR_RANGES_OVERLAPPING,
    "disjoint": YEAR_RANGES_DISJOINT,
}


class EmptyGroupNT(ValueError):
    """Customers-served total for a group is not positive."""


class MissingBaseYears(LookupError):
    """No customer-base rows exist for a group's states within its years."""


def kahan_sum(values: Iterable[float]) -> float:
    """Compensated summation; order-stable to ~1 ulp."""
    total = 0.0
    carry = 0.0
    for v in values:
        y = v - carry
        t = total + y
        carry = (t - total) - y
        total = t
    return total


class WeightScheme:
    """Per-event positive weights; defaults to unit weights."""

    def __init__(self, fn: Callable[[OutageEvent], float] | None = None,
                 label: str = "unit"):
        self._fn = fn
        self.label = label

    @property
    def is_unit(self) -> bool:
        return self._fn is None

    def weight(self, event: OutageEvent) -> float:
        if self._fn is None:
            return 1.0
        w = float(self._fn(event))
        if not w > 0:
            raise ValueError(f"weight {w} for event row {event.source_row} is not positive")
        return w

    @classmethod
    def unit(cls) -> "WeightScheme":
        return cls()

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, float], default: float = 1.0,
                     label: str = "by_source_row") -> "WeightScheme":
        """Weights keyed by event source_row; unlisted rows get `default`."""
        return cls(lambda e: mapping.get(e.source_row, default), label=label)

    @classmethod
    def scaled(cls, inner: "WeightScheme", factor: float) -> "WeightScheme":
        return cls(lambda e: inner.weight(e) * factor, label=f"{inner.label}*{factor:g}")


@dataclass(frozen=True)
class GroupKey:
    """A grouping cell: any subset of state, cause, region, year range."""

    state: str | None = None
    cause: CauseCategory | None = None
    nerc_region: str | None = None
    year_range: tuple[int, int] | None = None

    def __post_init__(self):
        if (self.state is None and self.cause is None
                and self.nerc_region is None and self.year_range is None):
            raise ValueError("group key needs at least one dimension")
        if self.year_range is not None and self.year_range[0] > self.year_range[1]:
            raise ValueError("year_range start after end")

    def matches(self, event: OutageEvent) -> bool:
        if self.state is not None and event.state != self.state:
            return False
        if self.cause is not None and event.cause is not self.cause:
            return False
        if self.nerc_region is not None and event.nerc_region != self.nerc_region:
            return False
        if self.year_range is not None:
            if not (self.year_range[0] <= event.year <= self.year_range[1]):
                return False
        return True


@dataclass(frozen=True)
class MetricTriple:
    """SAIDI/SAIFI/CAIDI for one group. caidi is None when n_events == 0."""

    key: GroupKey | None
    saidi: float
    saifi: float
    caidi: float | None
    n_events: int
    n_t: int
    weights_applied: bool = False

    @property
    def caidi_days(self) -> float | None:
        return None if self.caidi is None else self.caidi / 24.0


def compute_metrics(
    events: Sequence[OutageEvent],
    n_t: int,
    weights: WeightScheme | None = None,
    key: GroupKey | None = None,
) -> MetricTriple:
    """Compute the metric triple for one group of events.

    Weighted forms: SAIDI = sum(w r N)/N_T, SAIFI = sum(w N)/N_T,
    CAIDI = sum(w r N)/sum(w N). Events whose own customer count exceeds
    n_t are kept but logged, since reported counts sometimes do exceed the
    customers-served total for the year.
    """
    if n_t <= 0:
        raise EmptyGroupNT(f"customers served must be positive, got {n_t}")
    weights = weights or WeightScheme.unit()

    if not events:
        return MetricTriple(key=key, saidi=0.0, saifi=0.0, caidi=None,
                            n_events=0, n_t=n_t,
                            weights_applied=not weights.is_unit)

    for e in events:
        if e.customers_affected > n_t:
            log.warning(
                "event row %d: customers affected %d exceeds group N_T %d",
                e.source_row, e.customers_affected, n_t,
            )

    w = [weights.weight(e) for e in events]
    customer_hours = kahan_sum(
        wi * e.elapsed_hours * e.customers_affected for wi, e in zip(w, events)
    )
    customers = kahan_sum(wi * e.customers_affected for wi, e in zip(w, events))
    return MetricTriple(
        key=key,
        saidi=customer_hours / n_t,
        saifi=customers / n_t,
        caidi=customer_hours / customers,
        n_events=len(events),
        n_t=n_t,
        weights_applied=not weights.is_unit,
    )


class NTMode(Enum):
    """How customers served is formed for a multi-year group."""

    MEAN = "mean"               # arithmetic mean of yearly totals
    FINAL_YEAR = "final-year"   # last year in the window
    PER_YEAR = "per-year"       # normalize each event by its own year's total


def split_year_ranges(
    events: Sequence[OutageEvent],
    boundaries: Sequence[tuple[int, int]],
) -> dict[tuple[int, int], list[OutageEvent]]:
    """Partition events into inclusive year intervals.

    Intervals may overlap; an event lands in every interval containing its
    begin year (the overlapping preset shares its pivot year between both
    halves).
    """
    parts: dict[tuple[int, int], list[OutageEvent]] = {
        tuple(b): [] for b in boundaries
    }
    for e in events:
        for (start, end) in parts:
            if start <= e.year <= end:
                parts[(start, end)].append(e)
    return parts


def nt_for_group(
    key: GroupKey,
    index: Mapping[tuple[str, int], int],
    mode: NTMode,
) -> tuple[int, dict[int, int]]:
    """Customers served for a group key, plus the per-year totals used.

    State-keyed groups use that state's counts; otherwise counts are
    summed across every state in the base (region/cause/national groups).
    Multi-year totals are combined per `mode`.
    """
    states = sorted({s for (s, _) in index})
    if key.state is not None:
        states = [key.state]
    years = sorted({y for (_, y) in index})
    if key.year_range is not None:
        years = [y for y in years if key.year_range[0] <= y <= key.year_range[1]]

    yearly: dict[int, int] = {}
    for y in years:
        total = sum(index[(s, y)] for s in states if (s, y) in index)
        if total > 0:
            yearly[y] = total
    if not yearly:
        raise MissingBaseYears(f"no customer counts for {key}")

    if mode is NTMode.FINAL_YEAR:
        n_t = yearly[max(yearly)]
    else:
        n_t = round(sum(yearly.values()) / len(yearly))
    return n_t, yearly


def metrics_by_group(
    events: Sequence[OutageEvent],
    base: Iterable[CustomerBase],
    dims: Sequence[str],
    weights: WeightScheme | None = None,
    year_ranges: Sequence[tuple[int, int]] | None = None,
    nt_mode: NTMode = NTMode.MEAN,
) -> list[MetricTriple]:
    """Metric triples for the full cross product of the requested dims.

    `dims` is a subset of {"state", "cause", "nerc_region", "year_range"}.
    Every combination is emitted, including empty ones (n_events = 0,
    CAIDI absent): a state with no recorded events for a cause is a "gray
    state", and its absence of a CAIDI value is part of the output.

    The state domain comes from the customer base; cause and region domains
    are the full category/region sets. Output order is deterministic:
    sorted by state, cause, region, then range.
    """
    dims = list(dims)
    allowed = {"state", "cause", "nerc_region", "year_range"}
    unknown = set(dims) - allowed
    if unknown:
        raise ValueError(f"unknown grouping dims: {sorted(unknown)}")
    if not dims:
        raise ValueError("at least one grouping dim required")
    if "year_range" in dims and not year_ranges:
        raise ValueError("year_range dim requires explicit year_ranges")

    index = base_index(base)
    state_domain = sorted({s for (s, _) in index}) if "state" in dims else [None]
    cause_domain = list(CauseCategory) if "cause" in dims else [None]
    region_domain = sorted(NERC_REGIONS) if "nerc_region" in dims else [None]
    range_domain = [tuple(r) for r in (year_ranges or [])] if "year_range" in dims else [None]

    triples: list[MetricTriple] = []
    for state in state_domain:
        for cause in cause_domain:
            for region in region_domain:
                for yr in range_domain:
                    key = GroupKey(state=state, cause=cause,
                                   nerc_region=region, year_range=yr)
                    members = [e for e in events if key.matches(e)]
                    if nt_mode is NTMode.PER_YEAR and members:
                        triples.append(
                            _per_year_triple(key, members, index, weights)
                        )
                        continue
                    n_t, _ = nt_for_group(key, index, nt_mode)
                    triples.append(
                        compute_metrics(members, n_t, weights=weights, key=key)
                    )
    triples.sort(key=_triple_sort_key)
    return triples


def _per_year_triple(
    key: GroupKey,
    members: Sequence[OutageEvent],
    index: Mapping[tuple[str, int], int],
    weights: WeightScheme | None,
) -> MetricTriple:
    """Aggregate with each event normalized by its own year's total."""
    weights = weights or WeightScheme.unit()
    missing = sorted({
        (e.state, e.year) for e in members if (e.state, e.year) not in index
    })
    if missing:
        raise MissingBaseYears(f"no customer counts for {missing}")
    w = [weights.weight(e) for e in members]
    saidi = kahan_sum(
        wi * e.elapsed_hours * e.customers_affected / index[(e.state, e.year)]
        for wi, e in zip(w, members)
    )
    saifi = kahan_sum(
        wi * e.customers_affected / index[(e.state, e.year)]
        for wi, e in zip(w, members)
    )
    customer_hours = kahan_sum(
        wi * e.elapsed_hours * e.customers_affected for wi, e in zip(w, members)
    )
    customers = kahan_sum(wi * e.customers_affected for wi, e in zip(w, members))
    n_t = round(
        sum({(e.state, e.year): index[(e.state, e.year)] for e in members}.values())
        / len({(e.state, e.year) for e in members})
    )
    return MetricTriple(
        key=key, saidi=saidi, saifi=saifi, caidi=customer_hours / customers,
        n_events=len(members), n_t=n_t, weights_applied=not weights.is_unit,
    )


def _triple_sort_key(t: MetricTriple):
    k = t.key
    return (
        k.state or "",
        k.cause.value if k.cause else "",
        k.nerc_region or "",
        k.year_range or (0, 0),
    )


def count_by_region_and_cause(
    events: Sequence[OutageEvent],
) -> dict[str, dict[CauseCategory, int]]:
    """Outage counts per NERC region and cause (all 11 regions emitted)."""
    counts = {r: {c: 0 for c in CauseCategory} for r in sorted(NERC_REGIONS)}
    for e in events:
        if e.nerc_region is not None:
            counts[e.nerc_region][e.cause] += 1
    return counts
