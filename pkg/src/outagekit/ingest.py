"""Parse, clean, and join federal outage reports into a canonical event set.

Raw inputs are the two tables most U.S. outage studies start from: an
OE-417-style disturbance log (one row per reported outage) and an
EIA-861-style customer-count table (customers served per state and year).
Parsing keeps every cell verbatim; cleaning applies deterministic,
audit-logged corrections and drops anything it cannot repair. The survivors
are `OutageEvent` records that downstream metric and regression code can
trust without re-validating.
"""

from __future__ import annotations

import csv
import importlib.resources
import io
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, time, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

HOURS_PER_DAY = 24.0

# Correction / provenance flags carried on cleaned events.
AMPM_CORRECTED = "AMPM_CORRECTED"
SIGN_CORRECTED = "SIGN_CORRECTED"
MULTISTATE = "MULTISTATE"

NERC_REGIONS = frozenset(
    {"WECC", "SERC", "RFC", "NPCC", "TRE", "MRO", "SPP", "FRCC", "MISO", "HI", "AK"}
)

_STATE_CODES = {
    "alabama": "AL", "alaska": "AK", "arizona": "AZ", "arkansas": "AR",
    "california": "CA", "colorado": "CO", "connecticut": "CT", "delaware": "DE",
    "district of columbia": "DC", "florida": "FL", "georgia": "GA",
    "hawaii": "HI", "idaho": "ID", "illinois": "IL", "indiana": "IN",
    "iowa": "IA", "kansas": "KS", "kentucky": "KY", "louisiana": "LA",
    "maine": "ME", "maryland": "MD", "massachusetts": "MA", "michigan": "MI",
    "minnesota": "MN", "mississippi": "MS", "missouri": "MO", "montana": "MT",
    "nebraska": "NE", "nevada": "NV", "new hampshire": "NH", "new jersey": "NJ",
    "new mexico": "NM", "new york": "NY", "north carolina": "NC",
    "north dakota": "ND", "ohio": "OH", "oklahoma": "OK", "oregon": "OR",
    "pennsylvania": "PA", "puerto rico": "PR", "rhode island": "RI",
    "south carolina": "SC", "south dakota": "SD", "tennessee": "TN",
    "texas": "TX", "utah": "UT", "vermont": "VT", "virginia": "VA",
    "washington": "WA", "west virginia": "WV", "wisconsin": "WI",
    "wyoming": "WY",
}
_VALID_STATE_CODES = frozenset(_STATE_CODES.values())


class CauseCategory(Enum):
    """The four overarching outage cause categories."""

    NATURAL_HAZARD = "NaturalHazard"
    MECHANICAL_FAILURE = "MechanicalFailure"
    HUMAN_ATTACK = "HumanAttack"
    OPERATIONAL_MAINTENANCE = "OperationalMaintenance"


class IngestError(Exception):
    """Base class for table-level ingest failures."""


class MissingColumn(IngestError):
    """Header lacks one or more required columns."""

    def __init__(self, missing: Sequence[str]):
        self.missing = list(missing)
        super().__init__(f"header is missing required column(s): {', '.join(self.missing)}")


class MalformedRow(IngestError):
    """A data row's cell count does not match the header."""

    def __init__(self, row_number: int, expected: int, got: int):
        self.row_number = row_number
        super().__init__(
            f"row {row_number}: expected {expected} columns, got {got}"
        )


class UnmappedLabel(KeyError):
    """An event-type label is absent from the cause taxonomy."""

    def __init__(self, label: str):
        self.label = label
        super().__init__(
            f"event type {label!r} is not in the cause taxonomy; "
            "add it to the taxonomy file"
        )


class MissingBase(LookupError):
    """Customer-count rows are missing for one or more (state, year) keys."""

    def __init__(self, keys: Sequence[tuple[str, int]]):
        self.keys = sorted(keys)
        listing = ", ".join(f"{s}/{y}" for s, y in self.keys)
        super().__init__(f"no customer count for: {listing}")


@dataclass(frozen=True)
class RawOutageRecord:
    """One OE-417-style row, cells kept verbatim (None = empty cell)."""

    date_began: str | None
    time_began: str | None
    date_restored: str | None
    time_restored: str | None
    area_affected: str | None
    nerc_region: str | None
    event_type: str | None
    customers_affected: str | None
    row_number: int = 0


@dataclass(frozen=True)
class OutageEvent:
    """A cleaned, validated outage event.

    `elapsed_hours` is the canonical duration unit; day-valued views divide
    by 24 at the point of use. `flags` records which automated corrections
    produced this event, `source_row` the raw-table row it came from.
    """

    state: str
    began: datetime
    restored: datetime
    elapsed_hours: float
    customers_affected: int
    cause: CauseCategory
    raw_cause: str
    nerc_region: str | None = None
    flags: frozenset[str] = frozenset()
    source_row: int = 0

    def __post_init__(self):
        if self.restored < self.began:
            raise ValueError("restored before began")
        if self.elapsed_hours < 0:
            raise ValueError("negative elapsed_hours")
        if self.customers_affected < 1:
            raise ValueError("customers_affected must be >= 1")
        if self.state not in _VALID_STATE_CODES:
            raise ValueError(f"unknown state code {self.state!r}")
        if self.nerc_region is not None and self.nerc_region not in NERC_REGIONS:
            raise ValueError(f"unknown NERC region {self.nerc_region!r}")

    @property
    def year(self) -> int:
        return self.began.year


@dataclass(frozen=True)
class CustomerBase:
    """Customers served for one (state, year), from EIA-861-style data."""

    state: str
    year: int
    customers_served: int

    def __post_init__(self):
        if self.customers_served < 1:
            raise ValueError("customers_served must be >= 1")


@dataclass
class CleaningPolicy:
    """Knobs for `clean_events`.

    max_elapsed_hours bounds what counts as a plausible duration when
    deciding whether an AM/PM flip repairs a negative elapsed time.
    """

    max_elapsed_hours: float = 45 * 24.0


@dataclass(frozen=True)
class Rejection:
    """One dropped row: reason code, raw-table row number, human detail."""

    reason: str
    row_number: int
    detail: str

    def as_line(self) -> str:
        return f"{self.reason}\t{self.row_number}\t{self.detail}"


# Rejection reason codes.
MISSING_CUSTOMERS = "MISSING_CUSTOMERS"
BAD_CUSTOMERS = "BAD_CUSTOMERS"
ZERO_CUSTOMERS = "ZERO_CUSTOMERS"
BAD_TIMESTAMP = "BAD_TIMESTAMP"
NEGATIVE_ELAPSED = "NEGATIVE_ELAPSED"
AMBIGUOUS_AMPM = "AMBIGUOUS_AMPM"
NO_STATE = "NO_STATE"
UNMAPPED_CAUSE = "UNMAPPED_CAUSE"


class CauseTaxonomy:
    """Mapping from raw event-type labels to the four cause categories.

    Labels are normalized (case folded, interior whitespace collapsed)
    before lookup, so the taxonomy file does not need to anticipate every
    spelling variant of the same label.
    """

    def __init__(self, mapping: dict[str, CauseCategory], version: str = "unversioned"):
        self._mapping: dict[str, CauseCategory] = {}
        self.version = version
        for label, category in mapping.items():
            key = normalize_label(label)
            if key in self._mapping and self._mapping[key] is not category:
                raise ValueError(f"label {label!r} maps to two categories")
            self._mapping[key] = category

    def __len__(self) -> int:
        return len(self._mapping)

    def __contains__(self, label: str) -> bool:
        return normalize_label(label) in self._mapping

    def category(self, label: str) -> CauseCategory:
        try:
            return self._mapping[normalize_label(label)]
        except KeyError:
            raise UnmappedLabel(label) from None

    def labels(self) -> list[str]:
        return sorted(self._mapping)

    @classmethod
    def from_text(cls, text: str) -> "CauseTaxonomy":
        """Parse the flat "label = Category" config format."""
        mapping: dict[str, CauseCategory] = {}
        version = "unversioned"
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if stripped.startswith("#"):
                m = re.match(r"#\s*version:\s*(\S+)", stripped)
                if m:
                    version = m.group(1)
                continue
            if not stripped:
                continue
            if "=" not in stripped:
                raise ValueError(f"taxonomy line {line_no}: expected 'label = Category'")
            label, _, cat_name = stripped.partition("=")
            label = label.strip()
            cat_name = cat_name.strip()
            try:
                category = CauseCategory(cat_name)
            except ValueError:
                raise ValueError(
                    f"taxonomy line {line_no}: unknown category {cat_name!r}"
                ) from None
            key = normalize_label(label)
            if key in mapping and mapping[key] is not category:
                raise ValueError(f"taxonomy line {line_no}: {label!r} maps to two categories")
            mapping[label] = category
        return cls(mapping, version=version)

    @classmethod
    def from_file(cls, path: str | Path) -> "CauseTaxonomy":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def normalize_label(label: str) -> str:
    return " ".join(label.split()).casefold()


def load_default_taxonomy() -> CauseTaxonomy:
    """Load the taxonomy file shipped with the package."""
    text = (
        importlib.resources.files("outagekit.data")
        .joinpath("cause_taxonomy.txt")
        .read_text(encoding="utf-8")
    )
    return CauseTaxonomy.from_text(text)


def map_cause(raw_label: str, taxonomy: CauseTaxonomy) -> CauseCategory:
    """Resolve a raw event-type label to its cause category.

    Raises UnmappedLabel (carrying the offending label) when the taxonomy
    has no entry, so callers can extend the taxonomy file.
    """
    return taxonomy.category(raw_label)


# ---------------------------------------------------------------------------
# Table parsing
# ---------------------------------------------------------------------------

_OUTAGE_COLUMNS = {
    "date event began": "date_began",
    "time event began": "time_began",
    "date of restoration": "date_restored",
    "time of restoration": "time_restored",
    "area affected": "area_affected",
    "event type": "event_type",
    "number of customers affected": "customers_affected",
}
_OPTIONAL_OUTAGE_COLUMNS = {"nerc region": "nerc_region"}


def _sniff_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def _norm_header(cell: str) -> str:
    return " ".join(cell.split()).casefold()


def _clean_cell(cell: str) -> str | None:
    cell = cell.strip()
    return cell if cell else None


def parse_outage_table(rows: str | Iterable[str]) -> list[RawOutageRecord]:
    """Parse delimited OE-417-style text into raw records.

    The delimiter (comma or tab) is sniffed from the header line. Cells are
    preserved verbatim; empty cells become None. Nothing is coerced here;
    type validation happens in `clean_events`.
    """
    if isinstance(rows, str):
        lines = rows.splitlines()
    else:
        lines = [line.rstrip("\r\n") for line in rows]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise MissingColumn(sorted(c.title() for c in _OUTAGE_COLUMNS))

    delimiter = _sniff_delimiter(lines[0])
    reader = csv.reader(io.StringIO("\n".join(lines)), delimiter=delimiter)
    header = next(reader)
    positions: dict[str, int] = {}
    for idx, cell in enumerate(header):
        name = _norm_header(cell)
        if name in _OUTAGE_COLUMNS:
            positions[_OUTAGE_COLUMNS[name]] = idx
        elif name in _OPTIONAL_OUTAGE_COLUMNS:
            positions[_OPTIONAL_OUTAGE_COLUMNS[name]] = idx

    missing = [
        raw.title()
        for raw, fieldname in _OUTAGE_COLUMNS.items()
        if fieldname not in positions
    ]
    if missing:
        raise MissingColumn(missing)

    records: list[RawOutageRecord] = []
    for row_number, cells in enumerate(reader, start=1):
        if len(cells) != len(header):
            raise MalformedRow(row_number, expected=len(header), got=len(cells))
        values = {
            fieldname: _clean_cell(cells[idx]) for fieldname, idx in positions.items()
        }
        values.setdefault("nerc_region", None)
        records.append(RawOutageRecord(row_number=row_number, **values))
    return records


_CUSTOMER_COLUMNS = {
    "state": "state",
    "year": "year",
    "number of customers": "customers",
    "customers": "customers",
}


def parse_customer_table(rows: str | Iterable[str]) -> list[CustomerBase]:
    """Parse EIA-861-style customers-served counts per state and year."""
    if isinstance(rows, str):
        lines = rows.splitlines()
    else:
        lines = [line.rstrip("\r\n") for line in rows]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise MissingColumn(["State", "Year", "Number Of Customers"])

    delimiter = _sniff_delimiter(lines[0])
    reader = csv.reader(io.StringIO("\n".join(lines)), delimiter=delimiter)
    header = next(reader)
    positions: dict[str, int] = {}
    for idx, cell in enumerate(header):
        name = _norm_header(cell)
        if name in _CUSTOMER_COLUMNS:
            positions.setdefault(_CUSTOMER_COLUMNS[name], idx)
    missing = [c for c in ("state", "year", "customers") if c not in positions]
    if missing:
        raise MissingColumn([m.title() for m in missing])

    seen: dict[tuple[str, int], int] = {}
    out: list[CustomerBase] = []
    for row_number, cells in enumerate(reader, start=1):
        if len(cells) != len(header):
            raise MalformedRow(row_number, expected=len(header), got=len(cells))
        state_cell = _clean_cell(cells[positions["state"]]) or ""
        state = _parse_state_token(state_cell)
        if state is None:
            raise ValueError(f"customer table row {row_number}: unknown state {state_cell!r}")
        year = int(cells[positions["year"]])
        customers = int(cells[positions["customers"]].replace(",", ""))
        if (state, year) in seen:
            raise ValueError(
                f"customer table row {row_number}: duplicate key {state}/{year}"
            )
        seen[(state, year)] = row_number
        out.append(CustomerBase(state=state, year=year, customers_served=customers))
    return out


# ---------------------------------------------------------------------------
# Cleaning
# ---------------------------------------------------------------------------

_DATE_US = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_DATE_ISO = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")
_TIME_AMPM = re.compile(r"^(\d{1,2}):(\d{2})(?::(\d{2}))?\s*([AaPp])\.?[Mm]\.?$")
_TIME_ISO = re.compile(r"^(\d{1,2}):(\d{2})(?::(\d{2}))?$")


def _parse_date(cell: str) -> tuple[int, int, int] | None:
    m = _DATE_US.match(cell)
    if m:
        month, day, year = int(m.group(1)), int(m.group(2)), int(m.group(3))
    else:
        m = _DATE_ISO.match(cell)
        if not m:
            return None
        year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
    try:
        datetime(year, month, day)
    except ValueError:
        return None
    return year, month, day


def _parse_time(cell: str) -> tuple[time, bool] | None:
    """Parse a clock time; returns (time, had_ampm_marker)."""
    m = _TIME_AMPM.match(cell)
    if m:
        hour, minute = int(m.group(1)), int(m.group(2))
        second = int(m.group(3) or 0)
        if not (1 <= hour <= 12 and minute < 60 and second < 60):
            return None
        if m.group(4) in ("a", "A"):
            hour = 0 if hour == 12 else hour
        else:
            hour = 12 if hour == 12 else hour + 12
        return time(hour, minute, second), True
    m = _TIME_ISO.match(cell)
    if m:
        hour, minute = int(m.group(1)), int(m.group(2))
        second = int(m.group(3) or 0)
        if not (hour < 24 and minute < 60 and second < 60):
            return None
        return time(hour, minute, second), False
    return None


def _parse_timestamp(date_cell: str | None, time_cell: str | None) -> tuple[datetime, bool] | None:
    if date_cell is None or time_cell is None:
        return None
    ymd = _parse_date(date_cell)
    parsed_time = _parse_time(time_cell)
    if ymd is None or parsed_time is None:
        return None
    t, has_ampm = parsed_time
    return datetime(*ymd, t.hour, t.minute, t.second), has_ampm


def _flip_half_day(dt: datetime) -> datetime:
    """Toggle the AM/PM half of a timestamp, keeping its date."""
    if dt.hour < 12:
        return dt + timedelta(hours=12)
    return dt - timedelta(hours=12)


_AREA_SPLIT = re.compile(r"[;,:]")


def _parse_state_token(token: str) -> str | None:
    token = " ".join(token.split())
    if not token:
        return None
    if len(token) == 2 and token.upper() in _VALID_STATE_CODES:
        return token.upper()
    return _STATE_CODES.get(token.casefold())


def parse_area_states(area: str) -> list[str]:
    """Extract state codes from an Area Affected string, in order, deduped.

    Tokens that are not a state name or postal code (counties, utility
    names) are ignored.
    """
    states: list[str] = []
    for token in _AREA_SPLIT.split(area):
        state = _parse_state_token(token)
        if state and state not in states:
            states.append(state)
    return states


def _parse_region(cell: str | None) -> str | None:
    if cell is None:
        return None
    token = cell.replace(",", " ").replace(";", " ").split()
    if not token:
        return None
    code = token[0].upper()
    return code if code in NERC_REGIONS else None


def _elapsed_hours(began: datetime, restored: datetime) -> float:
    return (restored - began).total_seconds() / 3600.0


def clean_events(
    records: Iterable[RawOutageRecord],
    policy: CleaningPolicy | None = None,
    taxonomy: CauseTaxonomy | None = None,
) -> tuple[list[OutageEvent], list[Rejection]]:
    """Validate and repair raw records; never aborts.

    Every row either becomes one or more events (multi-state areas split
    into one event per state, each keeping the full customer count and a
    MULTISTATE flag) or lands in the rejection log with a reason code.

    Repairs applied, each recorded as an event flag:
      * negative customer counts are made positive (SIGN_CORRECTED);
      * a negative elapsed time is repaired by flipping the AM/PM half of
        the begin or restoration time, but only when exactly one such flip
        yields an elapsed time within policy.max_elapsed_hours
        (AMPM_CORRECTED). Ambiguous rows are dropped, not guessed.
    """
    policy = policy or CleaningPolicy()
    taxonomy = taxonomy or load_default_taxonomy()
    events: list[OutageEvent] = []
    rejections: list[Rejection] = []

    for rec in records:
        row = rec.row_number
        flags: set[str] = set()

        if rec.customers_affected is None:
            rejections.append(
                Rejection(MISSING_CUSTOMERS, row, "customers affected cell is empty")
            )
            continue
        try:
            customers = int(rec.customers_affected.replace(",", ""))
        except ValueError:
            rejections.append(
                Rejection(BAD_CUSTOMERS, row, f"unparseable count {rec.customers_affected!r}")
            )
            continue
        if customers < 0:
            customers = -customers
            flags.add(SIGN_CORRECTED)
        if customers == 0:
            rejections.append(Rejection(ZERO_CUSTOMERS, row, "zero customers affected"))
            continue

        began_parsed = _parse_timestamp(rec.date_began, rec.time_began)
        restored_parsed = _parse_timestamp(rec.date_restored, rec.time_restored)
        if began_parsed is None or restored_parsed is None:
            bad = "began" if began_parsed is None else "restoration"
            rejections.append(
                Rejection(BAD_TIMESTAMP, row, f"missing or unparseable {bad} timestamp")
            )
            continue
        began, began_ampm = began_parsed
        restored, restored_ampm = restored_parsed

        elapsed = _elapsed_hours(began, restored)
        if elapsed < 0:
            candidates: list[tuple[datetime, datetime, str]] = []
            if began_ampm:
                candidates.append((_flip_half_day(began), restored, "began"))
            if restored_ampm:
                candidates.append((began, _flip_half_day(restored), "restored"))
            valid = [
                c
                for c in candidates
                if 0 <= _elapsed_hours(c[0], c[1]) <= policy.max_elapsed_hours
            ]
            if len(valid) == 1:
                began, restored, side = valid[0]
                elapsed = _elapsed_hours(began, restored)
                flags.add(AMPM_CORRECTED)
            elif len(valid) > 1:
                rejections.append(
                    Rejection(
                        AMBIGUOUS_AMPM,
                        row,
                        f"{len(valid)} AM/PM flips would repair elapsed {elapsed:g}h",
                    )
                )
                continue
            else:
                rejections.append(
                    Rejection(NEGATIVE_ELAPSED, row, f"elapsed {elapsed:g}h, no unique repair")
                )
                continue

        if rec.event_type is None or rec.event_type not in taxonomy:
            rejections.append(
                Rejection(UNMAPPED_CAUSE, row, f"event type {rec.event_type!r}")
            )
            continue
        cause = taxonomy.category(rec.event_type)

        states = parse_area_states(rec.area_affected or "")
        if not states:
            rejections.append(
                Rejection(NO_STATE, row, f"no state recognized in {rec.area_affected!r}")
            )
            continue
        if len(states) > 1:
            flags.add(MULTISTATE)

        region = _parse_region(rec.nerc_region)
        for state in states:
            events.append(
                OutageEvent(
                    state=state,
                    began=began,
                    restored=restored,
                    elapsed_hours=elapsed,
                    customers_affected=customers,
                    cause=cause,
                    raw_cause=rec.event_type,
                    nerc_region=region,
                    flags=frozenset(flags),
                    source_row=row,
                )
            )

    return events, rejections


def events_to_raw(events: Iterable[OutageEvent]) -> list[RawOutageRecord]:
    """Render cleaned events back into raw-record form.

    Used to check cleaning idempotence: re-cleaning this rendering must
    reproduce the events (correction flags excepted; the raw layout has no
    flags column) with an empty rejection log.
    """
    code_to_name = {code: name.title() for name, code in _STATE_CODES.items()}
    out = []
    for i, e in enumerate(events, start=1):
        out.append(
            RawOutageRecord(
                date_began=e.began.strftime("%m/%d/%Y"),
                time_began=e.began.strftime("%H:%M:%S"),
                date_restored=e.restored.strftime("%m/%d/%Y"),
                time_restored=e.restored.strftime("%H:%M:%S"),
                area_affected=code_to_name[e.state],
                nerc_region=e.nerc_region,
                event_type=e.raw_cause,
                customers_affected=str(e.customers_affected),
                row_number=i,
            )
        )
    return out


# ---------------------------------------------------------------------------
# Customer-base join
# ---------------------------------------------------------------------------

def base_index(base: Iterable[CustomerBase]) -> dict[tuple[str, int], int]:
    """Index customer counts by (state, year); rejects duplicate keys."""
    index: dict[tuple[str, int], int] = {}
    for row in base:
        key = (row.state, row.year)
        if key in index:
            raise ValueError(f"duplicate customer base key {key}")
        index[key] = row.customers_served
    return index


def join_customer_base(
    events: Sequence[OutageEvent], base: Iterable[CustomerBase]
) -> list[tuple[OutageEvent, int, float]]:
    """Attach customers-served totals, yielding (event, n_t, fraction).

    fraction = customers affected / customers served. All missing
    (state, year) keys are collected before raising MissingBase so one run
    surfaces every gap in the customer table.
    """
    index = base_index(base)
    missing = {
        (e.state, e.year) for e in events if (e.state, e.year) not in index
    }
    if missing:
        raise MissingBase(sorted(missing))
    joined = []
    for e in events:
        n_t = index[(e.state, e.year)]
        fraction = e.customers_affected / n_t
        if fraction > 1.0:
            log.warning(
                "event row %d: customers affected %d exceeds customers served %d",
                e.source_row, e.customers_affected, n_t,
            )
        joined.append((e, n_t, fraction))
    return joined


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------

CANONICAL_COLUMNS = (
    "state",
    "nerc_region",
    "began",
    "restored",
    "elapsed_hours",
    "customers_affected",
    "cause",
    "raw_cause",
    "flags",
    "source_row",
)


def write_events(events: Iterable[OutageEvent]) -> str:
    """Serialize events to the canonical delimited format (fixed columns)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CANONICAL_COLUMNS)
    for e in events:
        writer.writerow(
            [
                e.state,
                e.nerc_region or "",
                e.began.isoformat(sep="T", timespec="seconds"),
                e.restored.isoformat(sep="T", timespec="seconds"),
                repr(e.elapsed_hours),
                e.customers_affected,
                e.cause.value,
                e.raw_cause,
                "|".join(sorted(e.flags)),
                e.source_row,
            ]
        )
    return buf.getvalue()


def read_events(text: str) -> list[OutageEvent]:
    """Parse the canonical event format back into OutageEvent records."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CANONICAL_COLUMNS:
        raise MissingColumn(
            [c for c in CANONICAL_COLUMNS if c not in header] or ["(column order)"]
        )
    events = []
    for cells in reader:
        if not cells:
            continue
        (state, region, began, restored, elapsed, customers,
         cause, raw_cause, flags, source_row) = cells
        events.append(
            OutageEvent(
                state=state,
                nerc_region=region or None,
                began=datetime.fromisoformat(began),
                restored=datetime.fromisoformat(restored),
                elapsed_hours=float(elapsed),
                customers_affected=int(customers),
                cause=CauseCategory(cause),
                raw_cause=raw_cause,
                flags=frozenset(flags.split("|")) if flags else frozenset(),
                source_row=int(source_row),
            )
        )
    return events


def write_rejections(rejections: Iterable[Rejection]) -> str:
    return "".join(r.as_line() + "\n" for r in rejections)
