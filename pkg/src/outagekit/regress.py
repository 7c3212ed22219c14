"""Regression on the (fraction affected, duration) plane, with influence.

Each outage event becomes a point whose x is the fraction of the region's
customers it interrupted and whose y is its duration in days. The slope of
the through-origin least-squares line over such points equals

    SAIDI_days / sum(x_i^2)  =  CAIDI_days * SAIFI / sum(x_i^2)

for the same events, so the fitted slope is itself a reliability measure,
and the leave-one-out influence of a point measures how much a single
event moves that reliability. Durations enter this module in days;
reliability metrics stay in hours, and the conversion happens here,
explicitly, never implicitly.

Influence diagnostics (DFBETAS, DFFITS, COVRATIO, Cook's distance,
leverage) use the standard closed-form leave-one-out identities; the test
suite checks every one of them against explicit refits without the
observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import HOURS_PER_DAY, OutageEvent
from .reliability import GroupKey, MetricTriple, WeightScheme, compute_metrics

THROUGH_ORIGIN = "through_origin"
WITH_INTERCEPT = "with_intercept"


class DegenerateDesign(ValueError):
    """The design has no usable variation (all-zero or constant x)."""


class ModelMismatch(ValueError):
    """The fit does not satisfy an operation's model preconditions."""


class InsufficientData(ValueError):
    """Too few observations for leave-one-out diagnostics."""


class NothingFlagged(ValueError):
    """No influence row is flagged under the selected measure."""


@dataclass(frozen=True)
class RegPoint:
    """One observation: x = fraction of customers affected, y = days."""

    x: float
    y: float
    weight: float = 1.0
    label: str = ""

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"x must be positive, got {self.x}")
        if self.y < 0:
            raise ValueError(f"y must be nonnegative, got {self.y}")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


def points_from_events(
    events: Sequence[OutageEvent],
    n_t: int,
    weights: WeightScheme | None = None,
) -> list[RegPoint]:
    """Build regression points from events joined to a customers-served total."""
    scheme = weights or WeightScheme.unit()
    points = []
    for i, e in enumerate(events):
        label = str(e.source_row) if e.source_row else str(i + 1)
        points.append(
            RegPoint(
                x=e.customers_affected / n_t,
                y=e.elapsed_hours / HOURS_PER_DAY,
                weight=scheme.weight(e),
                label=label,
            )
        )
    return points


@dataclass
class RegressionFit:
    """A fitted least-squares model with everything influence needs.

    coefficients is (slope,) for through-origin fits and
    (intercept, slope) otherwise. hat holds the leverage h_i of each
    observation; s2 is the residual variance RSS/(n - p) (NaN when n == p).
    """

    model: str
    coefficients: np.ndarray
    n: int
    p: int
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    residuals: np.ndarray
    hat: np.ndarray
    s2: float
    labels: list[str] = field(default_factory=list)

    @property
    def slope(self) -> float:
        return float(self.coefficients[-1])

    @property
    def intercept(self) -> float | None:
        return float(self.coefficients[0]) if self.model == WITH_INTERCEPT else None

    @property
    def fitted(self) -> np.ndarray:
        return self.y - self.residuals

    def design(self) -> np.ndarray:
        if self.model == THROUGH_ORIGIN:
            return self.x.reshape(-1, 1)
        return np.column_stack([np.ones_like(self.x), self.x])

    @property
    def has_unit_weights(self) -> bool:
        return bool(np.all(self.weights == 1.0))


def _fit(points: Sequence[RegPoint], model: str) -> RegressionFit:
    x = np.array([p.x for p in points], dtype=float)
    y = np.array([p.y for p in points], dtype=float)
    w = np.array([p.weight for p in points], dtype=float)
    labels = [p.label for p in points]
    n = len(points)

    if model == THROUGH_ORIGIN:
        X = x.reshape(-1, 1)
    else:
        X = np.column_stack([np.ones(n), x])
    p_count = X.shape[1]

    xtwx = X.T @ (w[:, None] * X)
    if model == THROUGH_ORIGIN:
        if xtwx[0, 0] == 0.0:
            raise DegenerateDesign("sum of weighted x^2 is zero")
    else:
        if np.ptp(x) == 0.0:
            raise DegenerateDesign("all x values equal")
    xtwx_inv = np.linalg.inv(xtwx)
    beta = xtwx_inv @ (X.T @ (w * y))
    residuals = y - X @ beta
    hat = w * np.einsum("ij,jk,ik->i", X, xtwx_inv, X)
    rss = float(np.sum(w * residuals**2))
    s2 = rss / (n - p_count) if n > p_count else float("nan")
    return RegressionFit(
        model=model, coefficients=beta, n=n, p=p_count,
        x=x, y=y, weights=w, residuals=residuals, hat=hat, s2=s2,
        labels=labels,
    )


def fit_origin(points: Sequence[RegPoint]) -> RegressionFit:
    """Weighted least squares through the origin: slope = sum(wxy)/sum(wx^2)."""
    if not points:
        raise ValueError("need at least one point")
    return _fit(points, THROUGH_ORIGIN)


def fit_intercept(points: Sequence[RegPoint]) -> RegressionFit:
    """Weighted simple linear regression with an intercept. Needs n >= 3."""
    if len(points) < 3:
        raise ValueError(f"need at least 3 points, got {len(points)}")
    return _fit(points, WITH_INTERCEPT)


# ---------------------------------------------------------------------------
# Slope / metric identity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReport:
    """Relative residuals of slope vs SAIDI and CAIDI*SAIFI evaluations."""

    slope: float
    saidi_route: float
    caidi_saifi_route: float
    saidi_residual: float
    caidi_saifi_residual: float
    tolerance: float
    ok: bool


def slope_metric_identity(
    fit: RegressionFit,
    metrics: MetricTriple,
    fractions: Sequence[float],
    tolerance: float = 1e-10,
) -> IdentityReport:
    """Check that the fitted slope equals both metric-based evaluations.

    `metrics` carries hours; both routes convert to days here. Requires a
    through-origin, unit-weight fit over the same events.
    """
    if fit.model != THROUGH_ORIGIN:
        raise ModelMismatch("identity holds only for through-origin fits")
    if not fit.has_unit_weights:
        raise ModelMismatch("identity holds only under unit weights")
    if metrics.caidi is None:
        raise ValueError("metrics have no events")

    denom = math.fsum(f * f for f in fractions)
    saidi_days = metrics.saidi / HOURS_PER_DAY
    caidi_days = metrics.caidi / HOURS_PER_DAY
    saidi_route = saidi_days / denom
    caidi_saifi_route = caidi_days * metrics.saifi / denom
    slope = fit.slope
    saidi_residual = abs(slope - saidi_route) / abs(slope)
    caidi_saifi_residual = abs(slope - caidi_saifi_route) / abs(slope)
    return IdentityReport(
        slope=slope,
        saidi_route=saidi_route,
        caidi_saifi_route=caidi_saifi_route,
        saidi_residual=saidi_residual,
        caidi_saifi_residual=caidi_saifi_residual,
        tolerance=tolerance,
        ok=saidi_residual <= tolerance and caidi_saifi_residual <= tolerance,
    )


# ---------------------------------------------------------------------------
# Influence diagnostics
# ---------------------------------------------------------------------------

MEASURES = ("dfbetas", "dffits", "covratio", "cooks_d", "hat")


@dataclass(frozen=True)
class InfluenceThresholds:
    """Flagging cuts. The conventional size-adjusted defaults are
    dfbetas 2/sqrt(n), dffits 2*sqrt(p/n), covratio band 3p/n around 1,
    cooks 4/n, hat 2p/n; all are configuration, not doctrine."""

    dfbetas_cut: float
    dffits_cut: float
    covratio_band: float
    cooks_cut: float
    hat_cut: float

    def __post_init__(self):
        for name in ("dfbetas_cut", "dffits_cut", "covratio_band",
                     "cooks_cut", "hat_cut"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def conventional(cls, n: int, p: int) -> "InfluenceThresholds":
        return cls(
            dfbetas_cut=2.0 / math.sqrt(n),
            dffits_cut=2.0 * math.sqrt(p / n),
            covratio_band=3.0 * p / n,
            cooks_cut=4.0 / n,
            hat_cut=2.0 * p / n,
        )


@dataclass(frozen=True)
class InfluenceRow:
    """Per-observation leave-one-out diagnostics and their flags."""

    label: str
    dfbetas: tuple[float, ...]
    dffits: float
    covratio: float
    cooks_d: float
    hat: float
    flags: dict[str, bool]

    def flagged_by(self, measure: str) -> bool:
        return self.flags[measure]


def influence(
    fit: RegressionFit,
    thresholds: InfluenceThresholds | None = None,
) -> list[InfluenceRow]:
    """Leave-one-out diagnostics for every observation of a fit.

    Uses the closed-form identities; each value equals what an explicit
    refit without the observation would give. Requires n > p + 1 so the
    externally studentized residual is defined.
    """
    n, p = fit.n, fit.p
    if n <= p + 1:
        raise InsufficientData(f"need n > p + 1, got n={n}, p={p}")
    cuts = thresholds or InfluenceThresholds.conventional(n, p)

    X = fit.design()
    w = fit.weights
    e = fit.residuals
    h = fit.hat
    s2 = fit.s2
    xtwx_inv = np.linalg.inv(X.T @ (w[:, None] * X))
    # beta shift per dropped observation: (X'WX)^-1 x_i * w_i e_i / (1-h_i)
    c = xtwx_inv @ X.T  # p x n
    coef_sd = np.sqrt(np.diag(xtwx_inv))

    rows: list[InfluenceRow] = []
    for i in range(n):
        one_minus_h = 1.0 - h[i]
        s2_i = ((n - p) * s2 - w[i] * e[i] ** 2 / one_minus_h) / (n - p - 1)
        s2_i = max(s2_i, 0.0)
        s_i = math.sqrt(s2_i)
        if s_i == 0.0:
            # exact fit without this observation; influence is unbounded
            t_ext = math.copysign(math.inf, e[i]) if e[i] != 0 else 0.0
        else:
            t_ext = e[i] * math.sqrt(w[i]) / (s_i * math.sqrt(one_minus_h))

        dffits = t_ext * math.sqrt(h[i] / one_minus_h)
        beta_shift = c[:, i] * (w[i] * e[i] / one_minus_h)
        if s_i == 0.0:
            dfbetas = tuple(
                math.copysign(math.inf, b) if b != 0 else 0.0 for b in beta_shift
            )
        else:
            dfbetas = tuple(beta_shift / (s_i * coef_sd))
        cooks = w[i] * e[i] ** 2 * h[i] / (p * s2 * one_minus_h**2)
        covratio = (s2_i / s2) ** p / one_minus_h if s2 > 0 else math.nan

        flags = {
            "dfbetas": any(abs(b) > cuts.dfbetas_cut for b in dfbetas),
            "dffits": abs(dffits) > cuts.dffits_cut,
            "covratio": abs(covratio - 1.0) > cuts.covratio_band,
            "cooks_d": cooks > cuts.cooks_cut,
            "hat": h[i] > cuts.hat_cut,
        }
        label = fit.labels[i] if fit.labels else str(i + 1)
        rows.append(
            InfluenceRow(
                label=label, dfbetas=dfbetas, dffits=dffits,
                covratio=covratio, cooks_d=cooks, hat=float(h[i]),
                flags=flags,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Excision
# ---------------------------------------------------------------------------

def percent_change(before: float, after: float) -> float:
    """Signed percent change from before to after."""
    return (after - before) / before * 100.0


def format_percent(value: float | None) -> str:
    """Render a percent change to one decimal, sign always shown."""
    return "NA" if value is None else f"{value:+.1f}%"


@dataclass(frozen=True)
class ExcisionReport:
    """Metrics with and without the flagged events, plus percent changes."""

    measure: str
    before: MetricTriple
    after: MetricTriple
    removed_labels: tuple[str, ...]
    saidi_pct: float
    saifi_pct: float
    caidi_pct: float | None

    def table_rows(self) -> list[tuple[str, float, float, str]]:
        rows = [
            ("SAIDI [hours per customer]", self.before.saidi, self.after.saidi,
             format_percent(self.saidi_pct)),
            ("SAIFI [interruptions per customer]", self.before.saifi,
             self.after.saifi, format_percent(self.saifi_pct)),
        ]
        if self.before.caidi is not None:
            rows.append(
                ("CAIDI [hours per outage]", self.before.caidi,
                 self.after.caidi if self.after.caidi is not None else math.nan,
                 format_percent(self.caidi_pct))
            )
        return rows


def excise_and_recompute(
    events: Sequence[OutageEvent],
    n_t: int,
    rows: Sequence[InfluenceRow],
    measure: str,
    weights: WeightScheme | None = None,
    key: GroupKey | None = None,
) -> ExcisionReport:
    """Remove events flagged under `measure` and recompute the metrics.

    `rows` must align one-to-one with `events` (as produced by running
    influence on points_from_events output). The after-metrics reuse the
    same customers-served total, so percent changes isolate the flagged
    events' contribution.
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; choose from {MEASURES}")
    if len(rows) != len(events):
        raise ValueError("influence rows do not align with events")
    keep = [e for e, r in zip(events, rows) if not r.flagged_by(measure)]
    removed = tuple(r.label for r in rows if r.flagged_by(measure))
    if not removed:
        raise NothingFlagged(f"no event flagged by {measure}")

    before = compute_metrics(events, n_t, weights=weights, key=key)
    after = compute_metrics(keep, n_t, weights=weights, key=key)
    caidi_pct = (
        percent_change(before.caidi, after.caidi)
        if before.caidi is not None and after.caidi is not None
        else None
    )
    return ExcisionReport(
        measure=measure,
        before=before,
        after=after,
        removed_labels=removed,
        saidi_pct=percent_change(before.saidi, after.saidi),
        saifi_pct=percent_change(before.saifi, after.saifi),
        caidi_pct=caidi_pct,
    )
