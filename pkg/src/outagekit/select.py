"""LASSO predictor selection with cross-validation and an OLS refit.

The selection protocol is deliberately literal: fit a LASSO path, pick the
penalty by k-fold cross-validation, take the active set, fit OLS on it,
drop predictors whose two-sided p-value is at or above the cut, and refit
once on the survivors. No iterative backward elimination.

The LASSO objective is the coordinate-descent standard

    (1 / 2n) * ||y - X beta||^2 + lambda * ||beta||_1

with an unpenalized intercept fitted on centered data. Predictors are
standardized to mean 0, variance 1 (population variance) before the
penalty is applied; reported coefficients are always back-transformed to
the original predictor scale.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tdist import two_sided_p

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000
DEFAULT_GRID_SIZE = 100
DEFAULT_GRID_RATIO = 1e-4


class AllColumnsDegenerate(ValueError):
    """Every predictor column has zero variance."""


class TooFewRows(ValueError):
    """Fewer rows than cross-validation folds."""


@dataclass
class DesignMatrix:
    """Predictor matrix plus response, with standardization bookkeeping.

    col_means/col_sds are None until `standardize` has run; afterwards they
    hold the parameters needed to map coefficients back to the original
    predictor scale. `dropped` lists columns removed for zero variance.
    """

    names: list[str]
    X: np.ndarray
    y: np.ndarray
    response: str = "response"
    col_means: np.ndarray | None = None
    col_sds: np.ndarray | None = None
    dropped: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    @property
    def is_standardized(self) -> bool:
        return self.col_means is not None


def load_design_matrix(text: str, response: str) -> DesignMatrix:
    """Read a delimited design matrix; `response` names the y column.

    Non-numeric columns (row identifiers) are dropped with a log entry.
    Missing cells are an error: preprocessing upstream owns imputation.
    """
    delimiter = "\t" if "\t" in text.splitlines()[0] else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    header = [h.strip() for h in next(reader)]
    if response not in header:
        raise ValueError(f"response column {response!r} not in header")
    rows = [r for r in reader if r]
    for i, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise ValueError(f"design matrix row {i}: column count mismatch")
        for j, cell in enumerate(r):
            if not cell.strip():
                raise ValueError(f"design matrix row {i}: missing cell in {header[j]!r}")

    columns: dict[str, list[str]] = {
        name: [r[j] for r in rows] for j, name in enumerate(header)
    }
    y = np.array([float(v) for v in columns.pop(response)])
    names, data = [], []
    for name, cells in columns.items():
        try:
            data.append([float(v) for v in cells])
        except ValueError:
            log.info("dropping non-numeric column %r", name)
            continue
        names.append(name)
    X = np.array(data, dtype=float).T if data else np.empty((len(rows), 0))
    return DesignMatrix(names=names, X=X, y=y, response=response)


def standardize(dm: DesignMatrix) -> DesignMatrix:
    """Scale every column to mean 0, variance 1; drop constant columns.

    Idempotent: standardizing an already-standardized matrix leaves it
    unchanged up to floating-point noise.
    """
    means = dm.X.mean(axis=0)
    sds = dm.X.std(axis=0)  # population sd, matching the variance-1 contract
    keep = sds > 0.0
    dropped = [name for name, k in zip(dm.names, keep) if not k]
    for name in dropped:
        log.info("dropping zero-variance column %r", name)
    if not np.any(keep):
        raise AllColumnsDegenerate("no predictor column has nonzero variance")
    Xs = (dm.X[:, keep] - means[keep]) / sds[keep]
    return DesignMatrix(
        names=[n for n, k in zip(dm.names, keep) if k],
        X=Xs,
        y=dm.y.copy(),
        response=dm.response,
        col_means=means[keep],
        col_sds=sds[keep],
        dropped=dm.dropped + dropped,
    )


# ---------------------------------------------------------------------------
# LASSO by cyclic coordinate descent
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LassoResult:
    """One LASSO solution. Inactive coefficients are exactly zero."""

    lam: float
    coefficients: np.ndarray        # original predictor scale
    intercept: float                # original scale
    coefficients_std: np.ndarray    # standardized scale
    names: tuple[str, ...]
    iterations: int
    converged: bool

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(
            n for n, b in zip(self.names, self.coefficients_std) if b != 0.0
        )

    def predict(self, X_original: np.ndarray) -> np.ndarray:
        return self.intercept + X_original @ self.coefficients


def soft_threshold(z: float, threshold: float) -> float:
    if z > threshold:
        return z - threshold
    if z < -threshold:
        return z + threshold
    return 0.0


def lambda_max(dm: DesignMatrix) -> float:
    """Smallest penalty at which every coefficient is zero: max|X'y| / n."""
    yc = dm.y - dm.y.mean()
    return float(np.max(np.abs(dm.X.T @ yc)) / dm.n)


def lambda_grid(
    dm: DesignMatrix,
    size: int = DEFAULT_GRID_SIZE,
    ratio: float = DEFAULT_GRID_RATIO,
) -> np.ndarray:
    """Descending log-spaced grid from lambda_max down to ratio*lambda_max."""
    lmax = lambda_max(dm)
    if lmax == 0.0:
        return np.zeros(1)
    return np.geomspace(lmax, lmax * ratio, size)


def _cd_solve(
    gram: np.ndarray,
    corr: np.ndarray,
    lam: float,
    beta0: np.ndarray,
    tol: float,
    max_sweeps: int,
) -> tuple[np.ndarray, int, bool]:
    """Cyclic coordinate descent on the Gram formulation.

    gram = X'X/n, corr = X'y/n for centered y. Maintains rho = gram @ beta
    incrementally so each coordinate update is O(m).
    """
    m = len(corr)
    beta = beta0.copy()
    rho = gram @ beta
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(m):
            g_jj = gram[j, j]
            if g_jj == 0.0:
                continue
            old = beta[j]
            z = corr[j] - rho[j] + g_jj * old
            new = soft_threshold(z, lam) / g_jj
            if new != old:
                rho += gram[:, j] * (new - old)
                beta[j] = new
                delta = abs(new - old)
                if delta > max_delta:
                    max_delta = delta
        if max_delta < tol:
            return beta, sweep, True
    return beta, max_sweeps, False


def lasso_fit(
    dm: DesignMatrix,
    lam: float,
    beta0: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> LassoResult:
    """Solve the LASSO at one penalty level on a standardized design.

    A non-converged fit is still returned, flagged via `converged`, so a
    caller can decide whether to tighten or move on.
    """
    if not dm.is_standardized:
        raise ValueError("lasso_fit requires a standardized design matrix")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n = dm.n
    ybar = float(dm.y.mean())
    yc = dm.y - ybar
    gram = dm.X.T @ dm.X / n
    corr = dm.X.T @ yc / n
    start = beta0 if beta0 is not None else np.zeros(dm.m)
    beta, sweeps, converged = _cd_solve(gram, corr, lam, start, tol, max_sweeps)
    if not converged:
        log.warning("lasso did not converge at lambda=%g after %d sweeps", lam, sweeps)

    coef_orig = beta / dm.col_sds
    intercept = ybar - float(coef_orig @ dm.col_means)
    return LassoResult(
        lam=lam,
        coefficients=coef_orig,
        intercept=intercept,
        coefficients_std=beta.copy(),
        names=tuple(dm.names),
        iterations=sweeps,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CvCurve:
    """Cross-validation error along the penalty grid."""

    lambdas: np.ndarray           # strictly decreasing
    mean_mse: np.ndarray
    se_mse: np.ndarray
    k: int
    seed: int
    rule: str
    chosen_lambda: float
    fold_of_row: np.ndarray


def cv_select(
    dm: DesignMatrix,
    k: int = 10,
    seed: int = 0,
    grid: np.ndarray | None = None,
    rule: str = "min",
) -> CvCurve:
    """k-fold cross-validation over the penalty grid.

    Folds come from a seeded shuffle followed by a contiguous split, so the
    whole curve is reproducible from (data, k, seed). rule "min" picks the
    penalty with the smallest mean error; rule "1se" picks the largest
    penalty within one standard error of that minimum.
    """
    if not dm.is_standardized:
        raise ValueError("cv_select requires a standardized design matrix")
    n = dm.n
    if n < k:
        raise TooFewRows(f"need at least k={k} rows, got {n}")
    if rule not in ("min", "1se"):
        raise ValueError(f"unknown rule {rule!r}")
    lambdas = grid if grid is not None else lambda_grid(dm)
    if np.any(np.diff(lambdas) >= 0):
        raise ValueError("lambda grid must be strictly decreasing")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_of_row = np.empty(n, dtype=int)
    for fold_id, chunk in enumerate(np.array_split(order, k)):
        fold_of_row[chunk] = fold_id

    fold_mse = np.empty((len(lambdas), k))
    for fold_id in range(k):
        test = fold_of_row == fold_id
        train = ~test
        sub = DesignMatrix(
            names=dm.names,
            X=dm.X[train],
            y=dm.y[train],
            response=dm.response,
            col_means=dm.col_means,
            col_sds=dm.col_sds,
        )
        ybar = float(sub.y.mean())
        yc = sub.y - ybar
        gram = sub.X.T @ sub.X / sub.n
        corr = sub.X.T @ yc / sub.n
        beta = np.zeros(dm.m)
        for li, lam in enumerate(lambdas):
            beta, _, _ = _cd_solve(gram, corr, lam, beta, DEFAULT_TOL,
                                   DEFAULT_MAX_SWEEPS)
            pred = ybar + dm.X[test] @ beta
            fold_mse[li, fold_id] = float(np.mean((dm.y[test] - pred) ** 2))

    mean_mse = fold_mse.mean(axis=1)
    se_mse = fold_mse.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(len(lambdas))

    best = int(np.argmin(mean_mse))
    if rule == "min":
        chosen = float(lambdas[best])
    else:
        ceiling = mean_mse[best] + se_mse[best]
        within = np.nonzero(mean_mse <= ceiling)[0]
        chosen = float(lambdas[within[0]])  # grid descends, so first = largest
    return CvCurve(
        lambdas=np.asarray(lambdas, dtype=float),
        mean_mse=mean_mse,
        se_mse=se_mse,
        k=k,
        seed=seed,
        rule=rule,
        chosen_lambda=chosen,
        fold_of_row=fold_of_row,
    )


# ---------------------------------------------------------------------------
# OLS refit with p-value filter
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictorStat:
    name: str
    coefficient: float
    std_error: float
    t_value: float
    p_value: float


@dataclass(frozen=True)
class SelectionSummary:
    """Final model plus the trace of how predictors got there."""

    response: str
    predictors: tuple[PredictorStat, ...]
    intercept: PredictorStat
    lasso_active: tuple[str, ...]
    kept_after_filter: tuple[str, ...]
    p_cut: float
    chosen_lambda: float | None = None
    empty_after_filter: bool = False


def _ols_stats(
    X: np.ndarray, y: np.ndarray, names: Sequence[str]
) -> tuple[PredictorStat, list[PredictorStat]]:
    n, p = X.shape
    if n <= p + 1:
        raise ValueError(f"need n > p + 1 for OLS inference, got n={n}, p={p}")
    design = np.column_stack([np.ones(n), X])
    xtx = design.T @ design
    xtx_inv = np.linalg.inv(xtx)
    beta = xtx_inv @ (design.T @ y)
    residuals = y - design @ beta
    df = n - p - 1
    s2 = float(residuals @ residuals) / df
    se = np.sqrt(s2 * np.diag(xtx_inv))
    stats = []
    for j, name in enumerate(("(intercept)", *names)):
        if se[j] == 0.0:
            t = float("inf") if beta[j] != 0 else 0.0
            pv = 0.0 if beta[j] != 0 else 1.0
        else:
            t = float(beta[j] / se[j])
            pv = two_sided_p(t, df)
        stats.append(PredictorStat(name, float(beta[j]), float(se[j]), t, pv))
    return stats[0], stats[1:]


def ols_refit_filter(
    X_active: np.ndarray,
    y: np.ndarray,
    names: Sequence[str],
    p_cut: float = 0.10,
    response: str = "response",
    lasso_active: Sequence[str] | None = None,
    chosen_lambda: float | None = None,
) -> SelectionSummary:
    """OLS on the active set, drop p >= p_cut, refit once on survivors.

    X_active must be on the original predictor scale; reported
    coefficients then need no back-transformation. If nothing survives the
    filter, an intercept-only summary is returned with the flag set.
    """
    if X_active.shape[1] == 0:
        raise ValueError("active set is empty")
    names = list(names)
    _, first_pass = _ols_stats(X_active, y, names)
    kept = [s.name for s in first_pass if s.p_value < p_cut]
    if not kept:
        intercept = PredictorStat(
            "(intercept)", float(y.mean()),
            float(y.std(ddof=1) / np.sqrt(len(y))), float("nan"), float("nan"),
        )
        return SelectionSummary(
            response=response,
            predictors=(),
            intercept=intercept,
            lasso_active=tuple(lasso_active if lasso_active is not None else names),
            kept_after_filter=(),
            p_cut=p_cut,
            chosen_lambda=chosen_lambda,
            empty_after_filter=True,
        )
    keep_idx = [names.index(nm) for nm in kept]
    intercept, final = _ols_stats(X_active[:, keep_idx], y, kept)
    return SelectionSummary(
        response=response,
        predictors=tuple(final),
        intercept=intercept,
        lasso_active=tuple(lasso_active if lasso_active is not None else names),
        kept_after_filter=tuple(kept),
        p_cut=p_cut,
        chosen_lambda=chosen_lambda,
    )


def select_predictors(
    dm: DesignMatrix,
    k: int = 10,
    seed: int = 0,
    p_cut: float = 0.10,
    rule: str = "min",
    grid: np.ndarray | None = None,
) -> SelectionSummary:
    """Run the full protocol: standardize, CV LASSO, OLS refit, p-filter."""
    std = standardize(dm) if not dm.is_standardized else dm
    curve = cv_select(std, k=k, seed=seed, grid=grid, rule=rule)
    chosen = lasso_fit(std, curve.chosen_lambda)
    active = chosen.active
    if not active:
        intercept = PredictorStat(
            "(intercept)", float(dm.y.mean()),
            float(dm.y.std(ddof=1) / np.sqrt(dm.n)), float("nan"), float("nan"),
        )
        return SelectionSummary(
            response=dm.response, predictors=(), intercept=intercept,
            lasso_active=(), kept_after_filter=(), p_cut=p_cut,
            chosen_lambda=curve.chosen_lambda, empty_after_filter=True,
        )
    # refit on the original-scale columns of the active predictors
    col_of = {name: i for i, name in enumerate(dm.names)}
    idx = [col_of[name] for name in active]
    return ols_refit_filter(
        dm.X[:, idx], dm.y, active, p_cut=p_cut, response=dm.response,
        lasso_active=active, chosen_lambda=curve.chosen_lambda,
    )
