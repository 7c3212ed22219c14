from pathlib import Path

import pytest

from outagekit import ingest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def taxonomy() -> ingest.CauseTaxonomy:
    return ingest.load_default_taxonomy()


@pytest.fixture(scope="session")
def california_events(taxonomy):
    """The curated three-event California 2014 natural hazard group."""
    records = ingest.parse_outage_table((DATA / "california_2014.csv").read_text())
    events, rejections = ingest.clean_events(records, taxonomy=taxonomy)
    assert not rejections
    assert len(events) == 3
    return events


@pytest.fixture(scope="session")
def customer_base():
    return ingest.parse_customer_table((DATA / "customers.csv").read_text())


CA_NT_2014 = 15_400_000
