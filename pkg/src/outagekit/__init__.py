"""Power-grid outage analysis toolkit.

Subpackages cover the full pipeline: `ingest` (outage/customer table ETL),
`reliability` (IEEE 1366 SAIDI/SAIFI/CAIDI, optionally weighted), `regress`
(through-origin and simple regression with influence diagnostics), `select`
(LASSO + cross-validation + OLS refit predictor selection), `med`
(2.5-beta major event day detection), and `cli` (batch front end).
"""

__version__ = "0.1.0"

from . import ingest, med, regress, reliability, select, tdist  # noqa: F401
