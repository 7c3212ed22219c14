"""ETL tests: parsing, cleaning repairs, taxonomy, and the customer join."""

import random
from datetime import datetime, timedelta

import pytest

from outagekit.ingest import (
    AMPM_CORRECTED,
    CauseCategory,
    CauseTaxonomy,
    CleaningPolicy,
    CustomerBase,
    MalformedRow,
    MissingBase,
    MissingColumn,
    OutageEvent,
    RawOutageRecord,
    SIGN_CORRECTED,
    UnmappedLabel,
    clean_events,
    events_to_raw,
    join_customer_base,
    load_default_taxonomy,
    map_cause,
    parse_area_states,
    parse_customer_table,
    parse_outage_table,
    read_events,
    write_events,
)

HEADER = (
    "Date Event Began,Time Event Began,Date of Restoration,Time of Restoration,"
    "Area Affected,NERC Region,Event Type,Number of Customers Affected"
)


def make_row(**overrides) -> str:
    cells = {
        "date_began": "05/16/2014",
        "time_began": "10:00 AM",
        "date_restored": "05/16/2014",
        "time_restored": "10:24 AM",
        "area": "California",
        "region": "WECC",
        "event_type": "Severe Weather - Wildfire",
        "customers": "1400000",
    }
    cells.update(overrides)
    return ",".join(cells.values())


class TestParseOutageTable:
    def test_empty_table_with_header(self):
        assert parse_outage_table(HEADER + "\n") == []

    def test_single_row_fields_populated(self):
        # the May 16, 2014 California wildfire: 1.4M customers, ~0.4 hours
        header7 = (
            "Date Event Began,Time Event Began,Date of Restoration,"
            "Time of Restoration,Area Affected,Event Type,"
            "Number of Customers Affected"
        )
        row = ("05/16/2014,10:00 AM,05/16/2014,10:24 AM,California,"
               "Severe Weather - Wildfire,1400000")
        (rec,) = parse_outage_table(header7 + "\n" + row + "\n")
        assert rec.date_began == "05/16/2014"
        assert rec.time_began == "10:00 AM"
        assert rec.date_restored == "05/16/2014"
        assert rec.time_restored == "10:24 AM"
        assert rec.area_affected == "California"
        assert rec.event_type == "Severe Weather - Wildfire"
        assert rec.customers_affected == "1400000"
        assert rec.nerc_region is None

    def test_missing_cell_preserved_as_none(self):
        rows = [
            make_row(customers="100"),
            make_row(customers="200"),
            make_row(customers=""),
            make_row(customers="400"),
            make_row(customers="500"),
        ]
        records = parse_outage_table("\n".join([HEADER] + rows))
        assert len(records) == 5
        assert [r.customers_affected for r in records] == [
            "100", "200", None, "400", "500",
        ]

    def test_missing_column_error_names_columns(self):
        bad = HEADER.replace("Event Type,", "")
        with pytest.raises(MissingColumn) as err:
            parse_outage_table(bad + "\n")
        assert "Event Type" in str(err.value)

    def test_malformed_row_names_row(self):
        text = HEADER + "\n" + make_row() + ",EXTRA\n"
        with pytest.raises(MalformedRow) as err:
            parse_outage_table(text)
        assert err.value.row_number == 1

    def test_tab_delimited_autodetect(self):
        text = HEADER.replace(",", "\t") + "\n" + make_row().replace(",", "\t")
        (rec,) = parse_outage_table(text)
        assert rec.area_affected == "California"


class TestCleaning:
    def clean_one(self, row: str, **kwargs):
        records = parse_outage_table(HEADER + "\n" + row)
        return clean_events(records, **kwargs)

    def test_negative_customers_sign_corrected(self):
        events, rejections = self.clean_one(make_row(customers="-500"))
        assert not rejections
        (e,) = events
        assert e.customers_affected == 500
        assert SIGN_CORRECTED in e.flags

    def test_ampm_flip_restored(self):
        # began 10:00 AM, restored 8:00 AM the same day: elapsed -2h.
        # Oracle: enumerate the marker flips by hand.
        #   flip began  -> 10:00 PM .. 8:00 AM  = -14h  (invalid)
        #   flip restored -> 10:00 AM .. 8:00 PM = +10h  (valid)
        # Exactly one valid flip, so it is applied.
        events, rejections = self.clean_one(
            make_row(time_began="10:00 AM", time_restored="8:00 AM")
        )
        assert not rejections
        (e,) = events
        assert e.elapsed_hours == 10.0
        assert e.restored == datetime(2014, 5, 16, 20, 0)
        assert AMPM_CORRECTED in e.flags

    def test_ambiguous_flip_rejected(self):
        # began 10:00 PM, restored 11:00 AM: both single flips give +1h.
        events, rejections = self.clean_one(
            make_row(time_began="10:00 PM", time_restored="11:00 AM")
        )
        assert not events
        (r,) = rejections
        assert r.reason == "AMBIGUOUS_AMPM"

    def test_flip_bounded_by_max_elapsed(self):
        # with a tiny ceiling the only candidate flip (+10h) is too long
        events, rejections = self.clean_one(
            make_row(time_began="10:00 AM", time_restored="8:00 AM"),
            policy=CleaningPolicy(max_elapsed_hours=5.0),
        )
        assert not events
        (r,) = rejections
        assert r.reason == "NEGATIVE_ELAPSED"

    def test_began_equals_restored_zero_elapsed(self):
        events, rejections = self.clean_one(make_row(time_restored="10:00 AM"))
        assert not rejections
        (e,) = events
        assert e.elapsed_hours == 0.0
        assert e.flags == frozenset()

    def test_missing_customers_dropped_and_logged(self):
        events, rejections = self.clean_one(make_row(customers=""))
        assert not events
        (r,) = rejections
        assert r.reason == "MISSING_CUSTOMERS"
        assert r.row_number == 1

    def test_iso_times_have_no_flips(self):
        events, rejections = self.clean_one(
            make_row(date_began="2014-05-16", time_began="18:00",
                     date_restored="2014-05-16", time_restored="06:00")
        )
        assert not events
        (r,) = rejections
        assert r.reason == "NEGATIVE_ELAPSED"

    def test_unmapped_cause_rejected(self):
        events, rejections = self.clean_one(make_row(event_type="Space Weather"))
        assert not events
        (r,) = rejections
        assert r.reason == "UNMAPPED_CAUSE"

    def test_multistate_split_keeps_full_count(self):
        events, rejections = self.clean_one(make_row(area='"Washington, Oregon"'))
        assert not rejections
        assert [e.state for e in events] == ["WA", "OR"]
        assert all(e.customers_affected == 1400000 for e in events)
        assert all("MULTISTATE" in e.flags for e in events)


class TestTaxonomy:
    def test_shipped_taxonomy_has_46_labels(self, taxonomy):
        assert len(taxonomy) == 46

    def test_paper_category_examples(self, taxonomy):
        assert map_cause("Vandalism", taxonomy) is CauseCategory.HUMAN_ATTACK
        assert map_cause("Load Shedding", taxonomy) is CauseCategory.OPERATIONAL_MAINTENANCE
        assert map_cause("Transmission Interruption", taxonomy) is CauseCategory.MECHANICAL_FAILURE

    def test_lookup_is_total_over_shipped_labels(self, taxonomy):
        for label in taxonomy.labels():
            assert map_cause(label, taxonomy) in CauseCategory

    def test_normalization(self, taxonomy):
        assert map_cause("  severe   WEATHER ", taxonomy) is CauseCategory.NATURAL_HAZARD

    def test_unmapped_label_surfaces_label(self, taxonomy):
        with pytest.raises(UnmappedLabel) as err:
            map_cause("Meteor Strike", taxonomy)
        assert err.value.label == "Meteor Strike"

    def test_conflicting_mapping_rejected(self):
        text = "A = NaturalHazard\na = HumanAttack\n"
        with pytest.raises(ValueError):
            CauseTaxonomy.from_text(text)


class TestCustomerJoin:
    def test_fraction_exact_tenth(self, taxonomy):
        events, _ = clean_events(
            parse_outage_table(HEADER + "\n" + make_row()), taxonomy=taxonomy
        )
        base = [CustomerBase("CA", 2014, 14_000_000)]
        ((_, n_t, fraction),) = join_customer_base(events, base)
        assert n_t == 14_000_000
        assert fraction == 0.10

    def test_fraction_boundary_one(self, taxonomy):
        events, _ = clean_events(
            parse_outage_table(HEADER + "\n" + make_row()), taxonomy=taxonomy
        )
        ((_, _, fraction),) = join_customer_base(
            events, [CustomerBase("CA", 2014, 1_400_000)]
        )
        assert fraction == 1.0

    def test_three_event_fixture_matches_hand_computation(self, taxonomy):
        rows = [
            make_row(customers="200000"),
            make_row(date_began="03/01/2015", date_restored="03/01/2015",
                     customers="50000"),
            make_row(area="Texas", region="TRE", customers="330000"),
        ]
        events, _ = clean_events(
            parse_outage_table("\n".join([HEADER] + rows)), taxonomy=taxonomy
        )
        base = [
            CustomerBase("CA", 2014, 16_000_000),
            CustomerBase("CA", 2015, 16_100_000),
            CustomerBase("TX", 2014, 11_000_000),
        ]
        joined = join_customer_base(events, base)
        # spreadsheet oracle, one division per row
        assert [f for (_, _, f) in joined] == [
            200000 / 16_000_000,
            50000 / 16_100_000,
            330000 / 11_000_000,
        ]

    def test_missing_base_lists_all_keys(self, taxonomy):
        rows = [make_row(), make_row(area="Texas", date_began="01/01/2010",
                                     date_restored="01/01/2010")]
        events, _ = clean_events(
            parse_outage_table("\n".join([HEADER] + rows)), taxonomy=taxonomy
        )
        with pytest.raises(MissingBase) as err:
            join_customer_base(events, [])
        assert err.value.keys == [("CA", 2014), ("TX", 2010)]


class TestCustomerTable:
    def test_parse_and_duplicate_detection(self):
        text = "State,Year,Number of Customers\nCalifornia,2014,15400000\nCA,2015,15600000\n"
        rows = parse_customer_table(text)
        assert [(r.state, r.year, r.customers_served) for r in rows] == [
            ("CA", 2014, 15_400_000), ("CA", 2015, 15_600_000),
        ]
        with pytest.raises(ValueError):
            parse_customer_table(
                "State,Year,Number of Customers\nCA,2014,1\nCalifornia,2014,2\n"
            )


class TestAreaParsing:
    def test_single_state_and_county(self):
        assert parse_area_states("Orange County, California") == ["CA"]

    def test_county_name_never_matches_as_state(self):
        assert parse_area_states("Washington County, Oregon") == ["OR"]

    def test_code_tokens(self):
        assert parse_area_states("CA; NV") == ["CA", "NV"]

    def test_dedup_preserves_order(self):
        assert parse_area_states("Texas, Texas, Oklahoma") == ["TX", "OK"]


def random_raw_table(rng: random.Random, n_rows: int) -> str:
    """Fuzzed raw table mixing valid rows with every rejection class."""
    states = ["California", "Texas", "Ohio", "Florida", "Vermont"]
    causes = ["Severe Weather", "Vandalism", "Load Shedding", "Unit Trip",
              "Hurricane", "Mystery Cause"]
    lines = [HEADER]
    for _ in range(n_rows):
        began = datetime(2002, 1, 1) + timedelta(
            days=rng.randrange(0, 6500), minutes=rng.randrange(0, 1440)
        )
        duration = timedelta(minutes=rng.randrange(-600, 3000))
        restored = began + duration
        customers = rng.choice(["", "0", str(rng.randrange(-5000, 500000))])
        lines.append(",".join([
            began.strftime("%m/%d/%Y"),
            began.strftime("%I:%M %p").lstrip("0"),
            restored.strftime("%m/%d/%Y"),
            restored.strftime("%I:%M %p").lstrip("0"),
            rng.choice(states),
            rng.choice(["WECC", "TRE", "RFC", ""]),
            rng.choice(causes),
            customers,
        ]))
    return "\n".join(lines)


class TestCleaningProperties:
    def test_conservation_and_invariants_fuzzed(self, taxonomy):
        rng = random.Random(20240501)
        for _ in range(200):
            table = random_raw_table(rng, rng.randrange(0, 25))
            records = parse_outage_table(table)
            events, rejections = clean_events(records, taxonomy=taxonomy)
            # count conservation (single-state areas only in this fuzz)
            assert len(records) == len(events) + len(rejections)
            for e in events:
                assert e.elapsed_hours >= 0
                assert e.customers_affected >= 1
                assert e.restored >= e.began

    def test_cleaning_idempotent_fuzzed(self, taxonomy):
        rng = random.Random(77)
        for _ in range(100):
            table = random_raw_table(rng, rng.randrange(1, 20))
            events, _ = clean_events(parse_outage_table(table), taxonomy=taxonomy)
            again, rejections = clean_events(events_to_raw(events), taxonomy=taxonomy)
            assert rejections == []
            assert len(again) == len(events)
            for before, after in zip(events, again):
                assert after.state == before.state
                assert after.began == before.began
                assert after.restored == before.restored
                assert after.elapsed_hours == before.elapsed_hours
                assert after.customers_affected == before.customers_affected
                assert after.cause is before.cause
                # re-cleaning already-valid data applies no corrections
                assert AMPM_CORRECTED not in after.flags
                assert SIGN_CORRECTED not in after.flags


class TestCanonicalRoundTrip:
    def test_write_read_round_trip(self, california_events):
        text = write_events(california_events)
        back = read_events(text)
        assert back == california_events

    def test_round_trip_preserves_flags(self, taxonomy):
        events, _ = clean_events(
            parse_outage_table(HEADER + "\n" + make_row(customers="-42")),
            taxonomy=taxonomy,
        )
        back = read_events(write_events(events))
        assert back[0].flags == frozenset({SIGN_CORRECTED})
