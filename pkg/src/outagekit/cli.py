"""Batch command-line front end.

Subcommands mirror the pipeline stages: ingest, metrics, regress,
influence, select, med, and report (the full analysis bundle). Every
command takes --config pointing at a flat key = value file; individual
flags override file values. The CLI adds no computation of its own; it
parses configuration, calls the library, and serializes results.

Exit codes: 0 success, 2 configuration error, 3 unparseable input,
4 empty result, 5 analysis-stage failure (stderr names the stage).

All randomness flows from the single config-level seed, no output embeds
a wall-clock time, and every report table carries the run manifest hash,
so identical config and inputs give byte-identical output bundles.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from . import __version__, ingest, med, regress, reliability, select
from .ingest import CauseCategory

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_EMPTY = 4
EXIT_STAGE = 5

NULL_TOKEN = "NA"


class ConfigError(Exception):
    pass


class EmptyResult(Exception):
    pass


@dataclass
class RunConfig:
    """Effective configuration for one run (file values + flag overrides)."""

    values: dict[str, str] = field(default_factory=dict)

    def get(self, key: str, default: str | None = None) -> str | None:
        return self.values.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.values:
            raise ConfigError(f"missing required config key {key!r}")
        return self.values[key]

    def path(self, key: str, required: bool = False) -> Path | None:
        raw = self.require(key) if required else self.get(key)
        if raw is None:
            return None
        p = Path(raw)
        if not p.exists():
            raise ConfigError(f"config key {key!r}: path does not exist: {p}")
        return p

    def get_float(self, key: str, default: float) -> float:
        raw = self.get(key)
        try:
            return default if raw is None else float(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r}: not a number: {raw!r}") from None

    def get_int(self, key: str, default: int) -> int:
        raw = self.get(key)
        try:
            return default if raw is None else int(raw)
        except ValueError:
            raise ConfigError(f"config key {key!r}: not an integer: {raw!r}") from None

    def canonical(self) -> str:
        return "\n".join(f"{k} = {self.values[k]}" for k in sorted(self.values))


def parse_config_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {line_no}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip()
    return values


def load_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, str] = {}
    if getattr(args, "config", None):
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise ConfigError(f"config file does not exist: {cfg_path}")
        values.update(parse_config_text(cfg_path.read_text(encoding="utf-8")))
    # flags win over file values
    for key, value in vars(args).items():
        if key in ("config", "command", "func", "version") or value is None:
            continue
        values[key] = str(value)
    return RunConfig(values=values)


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

@dataclass
class Manifest:
    config: dict[str, str]
    config_hash: str
    toolkit_version: str
    taxonomy_version: str
    seed: int
    input_digests: dict[str, str]
    row_counts: dict[str, int] = field(default_factory=dict)
    checks: dict[str, object] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "config_hash": self.config_hash,
            "toolkit_version": self.toolkit_version,
            "taxonomy_version": self.taxonomy_version,
            "seed": self.seed,
            "input_digests": self.input_digests,
            "row_counts": self.row_counts,
            "checks": self.checks,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_manifest(cfg: RunConfig, taxonomy_version: str) -> Manifest:
    digests: dict[str, str] = {}
    for key in ("outage_table", "customer_table", "taxonomy", "design_matrix",
                "events_file", "weights"):
        raw = cfg.get(key)
        if raw and Path(raw).exists():
            digests[key] = hashlib.sha256(Path(raw).read_bytes()).hexdigest()
    payload = cfg.canonical() + "\0" + json.dumps(digests, sort_keys=True)
    config_hash = hashlib.sha256(payload.encode("utf-8")).hexdigest()
    return Manifest(
        config=dict(sorted(cfg.values.items())),
        config_hash=config_hash,
        toolkit_version=__version__,
        taxonomy_version=taxonomy_version,
        seed=cfg.get_int("seed", 0),
        input_digests=digests,
    )


def write_table(path: Path, manifest: Manifest, header: list[str],
                rows: list[list[object]], extra_comments: list[str] | None = None) -> None:
    """Write a delimited report table stamped with the manifest hash."""
    lines = [f"# manifest: {manifest.config_hash}"]
    for comment in extra_comments or []:
        lines.append(f"# {comment}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cell(value: object) -> str:
    if value is None:
        return NULL_TOKEN
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value: object) -> object:
    if isinstance(value, float) and value != value:  # NaN
        return None
    return value


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------

def _load_taxonomy(cfg: RunConfig) -> ingest.CauseTaxonomy:
    path = cfg.path("taxonomy")
    return ingest.CauseTaxonomy.from_file(path) if path else ingest.load_default_taxonomy()


def _events_path(cfg: RunConfig) -> Path:
    raw = cfg.get("events_file")
    if raw:
        return Path(raw)
    return _out_dir(cfg) / "events.csv"


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_events(cfg: RunConfig) -> list[ingest.OutageEvent]:
    path = _events_path(cfg)
    if not path.exists():
        raise ConfigError(f"canonical event file does not exist: {path} (run ingest first)")
    return ingest.read_events(path.read_text(encoding="utf-8"))


def _read_base(cfg: RunConfig) -> list[ingest.CustomerBase]:
    path = cfg.path("customer_table", required=True)
    return ingest.parse_customer_table(path.read_text(encoding="utf-8"))


def _read_weights(cfg: RunConfig) -> reliability.WeightScheme:
    raw = cfg.get("weights")
    if not raw:
        return reliability.WeightScheme.unit()
    path = Path(raw)
    if not path.exists():
        raise ConfigError(f"weights file does not exist: {path}")
    mapping: dict[int, float] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        row, _, weight = line.partition("\t")
        mapping[int(row)] = float(weight)
    return reliability.WeightScheme.from_mapping(mapping)


def _parse_year_ranges(cfg: RunConfig) -> tuple[tuple[int, int], ...] | None:
    raw = cfg.get("year_ranges", "none")
    if raw == "none":
        return None
    if raw in reliability.YEAR_RANGE_PRESETS:
        return reliability.YEAR_RANGE_PRESETS[raw]
    ranges = []
    for chunk in raw.split(","):
        start, _, end = chunk.strip().partition("-")
        if not end:
            raise ConfigError(f"bad year_ranges entry {chunk!r}; use START-END")
        ranges.append((int(start), int(end)))
    return tuple(ranges)


def _parse_cause(raw: str | None) -> CauseCategory | None:
    if raw is None or raw == "all":
        return None
    try:
        return CauseCategory(raw)
    except ValueError:
        names = ", ".join(c.value for c in CauseCategory)
        raise ConfigError(f"unknown cause {raw!r}; one of: {names}") from None


def _analysis_group(cfg: RunConfig) -> tuple[list[ingest.OutageEvent], int, reliability.GroupKey]:
    """Events, customers served, and key for the configured analysis group."""
    events = _read_events(cfg)
    base = _read_base(cfg)
    state = cfg.get("state")
    if not state:
        raise ConfigError("missing required config key 'state' for the analysis group")
    cause = _parse_cause(cfg.get("cause"))
    years_raw = cfg.get("years")
    year_range = None
    if years_raw:
        start, _, end = years_raw.partition("-")
        year_range = (int(start), int(end or start))
    key = reliability.GroupKey(state=state, cause=cause, year_range=year_range)
    members = [e for e in events if key.matches(e)]
    index = ingest.base_index(base)
    n_t, _ = reliability.nt_for_group(key, index, reliability.NTMode.MEAN)
    return members, n_t, key


def _thresholds(cfg: RunConfig, n: int, p: int) -> regress.InfluenceThresholds:
    conv = regress.InfluenceThresholds.conventional(n, p)
    return regress.InfluenceThresholds(
        dfbetas_cut=cfg.get_float("dfbetas_cut", conv.dfbetas_cut),
        dffits_cut=cfg.get_float("dffits_cut", conv.dffits_cut),
        covratio_band=cfg.get_float("covratio_band", conv.covratio_band),
        cooks_cut=cfg.get_float("cooks_cut", conv.cooks_cut),
        hat_cut=cfg.get_float("hat_cut", conv.hat_cut),
    )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    table_path = cfg.path("outage_table", required=True)
    try:
        records = ingest.parse_outage_table(table_path.read_text(encoding="utf-8"))
    except ingest.IngestError as exc:
        print(f"error: cannot parse {table_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    policy = ingest.CleaningPolicy(
        max_elapsed_hours=cfg.get_float("max_elapsed_days", 45.0) * 24.0
    )
    events, rejections = ingest.clean_events(records, policy=policy, taxonomy=taxonomy)
    (out / "events.csv").write_text(ingest.write_events(events), encoding="utf-8")
    (out / "rejections.log").write_text(ingest.write_rejections(rejections), encoding="utf-8")
    manifest.row_counts = {
        "raw_records": len(records),
        "events": len(events),
        "rejections": len(rejections),
    }
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print(f"ingest: {len(records)} rows -> {len(events)} events, "
          f"{len(rejections)} rejected")
    if not events:
        return EXIT_EMPTY
    return EXIT_OK


def _triple_row(t: reliability.MetricTriple) -> list[object]:
    k = t.key
    return [
        k.state or "" if k else "",
        k.cause.value if k and k.cause else "",
        (k.nerc_region or "") if k else "",
        k.year_range[0] if k and k.year_range else "",
        k.year_range[1] if k and k.year_range else "",
        t.saidi,
        t.saifi,
        t.caidi,
        t.n_events,
        t.n_t,
    ]


METRIC_HEADER = [
    "state", "cause", "nerc_region", "range_start", "range_end",
    "saidi_hours_per_customer", "saifi_per_customer", "caidi_hours",
    "n_events", "n_t",
]


def cmd_metrics(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    events = _read_events(cfg)
    base = _read_base(cfg)
    weights = _read_weights(cfg)
    dims = [d.strip() for d in cfg.get("group_by", "state,cause").split(",") if d.strip()]
    year_ranges = _parse_year_ranges(cfg)
    if year_ranges and "year_range" not in dims:
        dims.append("year_range")
    nt_mode = reliability.NTMode(cfg.get("nt_mode", "mean"))

    triples = reliability.metrics_by_group(
        events, base, dims, weights=weights, year_ranges=year_ranges, nt_mode=nt_mode
    )
    if not triples:
        print("error: no metric groups produced", file=sys.stderr)
        return EXIT_EMPTY

    write_table(out / "metrics.csv", manifest, METRIC_HEADER,
                [_triple_row(t) for t in triples])
    docs = []
    for t in triples:
        k = t.key
        docs.append({
            "state": k.state if k else None,
            "cause": k.cause.value if k and k.cause else None,
            "nerc_region": k.nerc_region if k else None,
            "year_range": list(k.year_range) if k and k.year_range else None,
            "saidi_hours_per_customer": t.saidi,
            "saifi_per_customer": t.saifi,
            "caidi_hours": t.caidi,
            "n_events": t.n_events,
            "n_t": t.n_t,
        })
    (out / "metrics.json").write_text(
        json.dumps({"manifest": manifest.config_hash, "groups": docs},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    # per-state choropleth export, optionally restricted to one cause
    cause = _parse_cause(cfg.get("choropleth_cause"))
    chor_events = [e for e in events if cause is None or e.cause is cause]
    chor = reliability.metrics_by_group(chor_events, base, ["state"], weights=weights)
    chor_rows = []
    for t in chor:
        log10_caidi = float(np.log10(t.caidi)) if t.caidi else None
        chor_rows.append([
            t.key.state, t.n_events, t.saidi, t.saifi, t.caidi,
            t.caidi_days, log10_caidi,
        ])
    write_table(
        out / "choropleth.csv", manifest,
        ["state", "n_events", "saidi_hours_per_customer", "saifi_per_customer",
         "caidi_hours", "caidi_days", "log10_caidi"],
        chor_rows,
        extra_comments=[f"cause: {cause.value if cause else 'all'}"],
    )

    counts = reliability.count_by_region_and_cause(events)
    count_rows = []
    for region in sorted(counts):
        per_cause = counts[region]
        total = sum(per_cause.values())
        count_rows.append([region, *[per_cause[c] for c in CauseCategory], total])
    write_table(
        out / "counts_by_region.csv", manifest,
        ["nerc_region", *[c.value for c in CauseCategory], "total"],
        count_rows,
    )

    manifest.row_counts = {"events": len(events), "metric_groups": len(triples)}
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print(f"metrics: {len(triples)} groups over {len(events)} events")
    return EXIT_OK


def _run_regress(cfg: RunConfig, manifest: Manifest, out: Path) -> regress.RegressionFit:
    members, n_t, key = _analysis_group(cfg)
    if not members:
        raise EmptyResult("no events in the configured analysis group")
    weights = _read_weights(cfg)
    points = regress.points_from_events(members, n_t, weights=weights)
    fit = regress.fit_origin(points)
    metrics = reliability.compute_metrics(members, n_t, weights=weights, key=key)

    rows = [[p.label, p.x, p.y, fit.slope * p.x] for p in points]
    write_table(out / "scatter.csv", manifest,
                ["label", "fraction_affected", "duration_days", "fitted_days"],
                rows)

    doc: dict[str, object] = {
        "manifest": manifest.config_hash,
        "model": fit.model,
        "slope_days_per_unit_fraction": fit.slope,
        "n": fit.n,
    }
    if weights.is_unit:
        identity = regress.slope_metric_identity(fit, metrics, [p.x for p in points])
        doc["slope_identity"] = {
            "ok": identity.ok,
            "saidi_residual": identity.saidi_residual,
            "caidi_saifi_residual": identity.caidi_saifi_residual,
            "tolerance": identity.tolerance,
        }
        manifest.checks["slope_identity"] = doc["slope_identity"]
    (out / "regress.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return fit


def cmd_regress(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    _run_regress(cfg, manifest, out)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print("regress: wrote scatter.csv and regress.json")
    return EXIT_OK


INFLUENCE_HEADER = [
    "label", "dfbetas_intercept", "dfbetas_slope", "dffits", "covratio",
    "cooks_d", "hat", "dfbetas_flag", "dffits_flag", "covratio_flag",
    "cooks_d_flag", "hat_flag",
]


def _run_influence(
    cfg: RunConfig, manifest: Manifest, out: Path
) -> tuple[list[ingest.OutageEvent], int, reliability.GroupKey, list[regress.InfluenceRow]]:
    members, n_t, key = _analysis_group(cfg)
    if not members:
        raise EmptyResult("no events in the configured analysis group")
    weights = _read_weights(cfg)
    points = regress.points_from_events(members, n_t, weights=weights)
    model = cfg.get("influence_model", regress.WITH_INTERCEPT)
    if model == regress.WITH_INTERCEPT and len(points) >= 3:
        fit = regress.fit_intercept(points)
    else:
        fit = regress.fit_origin(points)
    cuts = _thresholds(cfg, fit.n, fit.p)
    rows = regress.influence(fit, cuts)

    table = []
    for r in rows:
        dfb = list(r.dfbetas) if len(r.dfbetas) == 2 else [None, r.dfbetas[0]]
        table.append([
            r.label, dfb[0], dfb[1], r.dffits, r.covratio, r.cooks_d, r.hat,
            int(r.flags["dfbetas"]), int(r.flags["dffits"]),
            int(r.flags["covratio"]), int(r.flags["cooks_d"]), int(r.flags["hat"]),
        ])
    write_table(
        out / "influence.csv", manifest, INFLUENCE_HEADER, table,
        extra_comments=[
            "cuts: dfbetas=%r dffits=%r covratio_band=%r cooks_d=%r hat=%r"
            % (cuts.dfbetas_cut, cuts.dffits_cut, cuts.covratio_band,
               cuts.cooks_cut, cuts.hat_cut),
            f"model: {fit.model}",
        ],
    )
    return members, n_t, key, rows


def cmd_influence(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    _run_influence(cfg, manifest, out)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print("influence: wrote influence.csv")
    return EXIT_OK


def cmd_select(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    _write_selection(cfg, manifest, out)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print("select: wrote selection.csv and cv_curve.csv")
    return EXIT_OK


def _write_selection(cfg: RunConfig, manifest: Manifest, out: Path) -> None:
    path = cfg.path("design_matrix", required=True)
    response = cfg.require("response")
    dm = select.load_design_matrix(path.read_text(encoding="utf-8"), response)
    k = cfg.get_int("k_folds", 10)
    seed = cfg.get_int("seed", 0)
    p_cut = cfg.get_float("p_cut", 0.10)
    rule = cfg.get("lambda_rule", "min")

    std = select.standardize(dm)
    curve = select.cv_select(std, k=k, seed=seed, rule=rule)
    write_table(
        out / "cv_curve.csv", manifest,
        ["lambda", "mean_mse", "se_mse"],
        [[float(l), float(m), float(s)]
         for l, m, s in zip(curve.lambdas, curve.mean_mse, curve.se_mse)],
        extra_comments=[f"k: {k}", f"seed: {seed}", f"rule: {rule}",
                        f"chosen_lambda: {curve.chosen_lambda!r}"],
    )
    chosen = select.lasso_fit(std, curve.chosen_lambda)
    if chosen.active:
        col_of = {name: i for i, name in enumerate(dm.names)}
        idx = [col_of[name] for name in chosen.active]
        summary = select.ols_refit_filter(
            dm.X[:, idx], dm.y, chosen.active, p_cut=p_cut, response=response,
            lasso_active=chosen.active, chosen_lambda=curve.chosen_lambda,
        )
    else:
        summary = select.SelectionSummary(
            response=response, predictors=(),
            intercept=select.PredictorStat("(intercept)", float(dm.y.mean()),
                                           0.0, float("nan"), float("nan")),
            lasso_active=(), kept_after_filter=(), p_cut=p_cut,
            chosen_lambda=curve.chosen_lambda, empty_after_filter=True,
        )
    rows = [[summary.intercept.name, summary.intercept.coefficient,
             summary.intercept.std_error, summary.intercept.t_value,
             summary.intercept.p_value]]
    rows += [[s.name, s.coefficient, s.std_error, s.t_value, s.p_value]
             for s in summary.predictors]
    write_table(
        out / "selection.csv", manifest,
        ["predictor", "coefficient", "std_error", "t_value", "p_value"],
        rows,
        extra_comments=[
            f"response: {response}",
            f"lasso_active: {'|'.join(summary.lasso_active)}",
            f"kept_after_filter: {'|'.join(summary.kept_after_filter)}",
            f"p_cut: {p_cut!r}",
            f"empty_after_filter: {summary.empty_after_filter}",
        ],
    )
    manifest.row_counts["selected_predictors"] = len(summary.predictors)


def _run_med(cfg: RunConfig, manifest: Manifest, out: Path) -> list[tuple[date, bool]]:
    events = _read_events(cfg)
    base = _read_base(cfg)
    state = cfg.get("med_state") or cfg.get("state")
    if not state:
        raise ConfigError("missing required config key 'med_state'")
    members = [e for e in events if e.state == state]
    if not members:
        raise EmptyResult(f"no events for state {state}")
    index = ingest.base_index(base)
    key = reliability.GroupKey(state=state)
    n_t, _ = reliability.nt_for_group(key, index, reliability.NTMode.MEAN)

    start = date(min(e.year for e in members), 1, 1)
    end = date(max(e.year for e in members), 12, 31)
    series = med.daily_saidi(members, n_t, start, end)
    eval_year = cfg.get_int("med_eval_year", 0) or None
    threshold = med.med_threshold(
        series,
        evaluation_year=eval_year,
        window_years=cfg.get_int("med_window_years", 5),
        min_positive_days=cfg.get_int("med_min_days", 30),
        multiplier=cfg.get_float("med_multiplier", 2.5),
    )
    classified = med.classify_days(series, threshold)
    rows = [[d.isoformat(), s, int(flag), threshold.t_med]
            for (d, flag), s in zip(classified, series.saidi)]
    write_table(
        out / "med.csv", manifest,
        ["date", "saidi", "is_med", "t_med"],
        rows,
        extra_comments=[
            f"state: {state}",
            "window: %s..%s" % (threshold.window_start, threshold.window_end),
            f"n_days_used: {threshold.n_days_used}",
        ],
    )
    manifest.row_counts["med_days"] = len(rows)
    manifest.checks["med_threshold"] = {
        "t_med": threshold.t_med,
        "mu_log": threshold.mu_log,
        "sigma_log": threshold.sigma_log,
    }
    return classified


def cmd_med(cfg: RunConfig) -> int:
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)
    _run_med(cfg, manifest, out)
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print("med: wrote med.csv")
    return EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Full analysis bundle: regression, influence, excision, MED, selection."""
    taxonomy = _load_taxonomy(cfg)
    manifest = build_manifest(cfg, taxonomy.version)
    out = _out_dir(cfg)

    stage = "regress"
    try:
        _run_regress(cfg, manifest, out)
        stage = "influence"
        members, n_t, key, rows = _run_influence(cfg, manifest, out)

        stage = "excision"
        measure = cfg.get("excise_measure", "cooks_d")
        weights = _read_weights(cfg)
        try:
            report = regress.excise_and_recompute(
                members, n_t, rows, measure, weights=weights, key=key
            )
            exc_rows = [[name, before, after, pct]
                        for name, before, after, pct in report.table_rows()]
            write_table(
                out / "excision.csv", manifest,
                ["metric", "with_influential", "without_influential", "pct_change"],
                exc_rows,
                extra_comments=[f"measure: {measure}",
                                f"removed: {'|'.join(report.removed_labels)}"],
            )
            manifest.checks["excision"] = {
                "measure": measure,
                "removed": list(report.removed_labels),
            }
        except regress.NothingFlagged:
            write_table(
                out / "excision.csv", manifest,
                ["metric", "with_influential", "without_influential", "pct_change"],
                [],
                extra_comments=[f"measure: {measure}", "removed: (none flagged)"],
            )

        stage = "med"
        classified = _run_med(cfg, manifest, out)
        med_flags = {d: flag for d, flag in classified}
        agreement = med.compare_detectors(
            members, med_flags,
            [r.flagged_by(measure) for r in rows],
            labels=[r.label for r in rows],
        )
        write_table(
            out / "comparison.csv", manifest,
            ["label", "med_flagged", "influence_flagged"],
            [[label, int(m), int(i)] for label, m, i in agreement.rows],
            extra_comments=[
                "counts: both=%d med_only=%d influence_only=%d neither=%d"
                % (agreement.both, agreement.med_only,
                   agreement.influence_only, agreement.neither),
            ],
        )
        manifest.checks["detector_agreement"] = {
            "both": agreement.both,
            "med_only": agreement.med_only,
            "influence_only": agreement.influence_only,
            "neither": agreement.neither,
        }

        if cfg.get("design_matrix"):
            stage = "select"
            _write_selection(cfg, manifest, out)
    except EmptyResult as exc:
        print(f"error [stage {stage}]: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (regress.DegenerateDesign, regress.InsufficientData,
            med.InsufficientHistory, select.TooFewRows,
            select.AllColumnsDegenerate, ingest.MissingBase) as exc:
        print(f"error [stage {stage}]: {exc}", file=sys.stderr)
        return EXIT_STAGE

    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print(f"report: bundle written to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="outagekit",
        description="Outage data ETL, reliability metrics, and resilience analysis",
    )
    parser.add_argument(
        "--version", action="store_true", help="print toolkit and taxonomy versions"
    )
    sub = parser.add_subparsers(dest="command")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--seed", type=int)
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "parse and clean the raw outage table")
    p.add_argument("--outage-table", dest="outage_table")
    p.add_argument("--taxonomy")
    p.add_argument("--max-elapsed-days", dest="max_elapsed_days")

    p = add("metrics", cmd_metrics, "reliability metrics by group")
    p.add_argument("--customer-table", dest="customer_table")
    p.add_argument("--events-file", dest="events_file")
    p.add_argument("--group-by", dest="group_by")
    p.add_argument("--year-ranges", dest="year_ranges")
    p.add_argument("--choropleth-cause", dest="choropleth_cause")

    for name, func, help_text in (
        ("regress", cmd_regress, "through-origin regression for one group"),
        ("influence", cmd_influence, "influence diagnostics for one group"),
    ):
        p = add(name, func, help_text)
        p.add_argument("--customer-table", dest="customer_table")
        p.add_argument("--events-file", dest="events_file")
        p.add_argument("--state")
        p.add_argument("--cause")
        p.add_argument("--years")
        if name == "influence":
            p.add_argument("--influence-model", dest="influence_model",
                           choices=[regress.WITH_INTERCEPT, regress.THROUGH_ORIGIN])

    p = add("select", cmd_select, "LASSO + CV + OLS refit predictor selection")
    p.add_argument("--design-matrix", dest="design_matrix")
    p.add_argument("--response")
    p.add_argument("--k-folds", dest="k_folds", type=int)
    p.add_argument("--p-cut", dest="p_cut")
    p.add_argument("--lambda-rule", dest="lambda_rule", choices=["min", "1se"])

    p = add("med", cmd_med, "major event day detection for one state")
    p.add_argument("--customer-table", dest="customer_table")
    p.add_argument("--events-file", dest="events_file")
    p.add_argument("--med-state", dest="med_state")
    p.add_argument("--med-eval-year", dest="med_eval_year", type=int)

    p = add("report", cmd_report, "full analysis bundle")
    p.add_argument("--customer-table", dest="customer_table")
    p.add_argument("--events-file", dest="events_file")
    p.add_argument("--design-matrix", dest="design_matrix")
    p.add_argument("--response")
    p.add_argument("--state")
    p.add_argument("--cause")
    p.add_argument("--years")
    p.add_argument("--excise-measure", dest="excise_measure",
                   choices=list(regress.MEASURES))
    p.add_argument("--med-state", dest="med_state")
    p.add_argument("--med-eval-year", dest="med_eval_year", type=int)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.version:
        cfg = RunConfig()
        taxonomy = ingest.load_default_taxonomy()
        print(f"outagekit {__version__} (taxonomy {taxonomy.version})")
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    try:
        cfg = load_config(args)
        return args.func(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyResult as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except ingest.IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (regress.DegenerateDesign, regress.InsufficientData,
            regress.ModelMismatch, regress.NothingFlagged,
            med.InsufficientHistory, select.TooFewRows,
            select.AllColumnsDegenerate, ingest.MissingBase,
            reliability.MissingBaseYears, reliability.EmptyGroupNT) as exc:
        print(f"error [stage {args.command}]: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
