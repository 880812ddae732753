"""Covariate balance diagnostics before and after matching.

The workhorse statistic is the standardized mean difference

    smd = (x_bar_treated - x_bar_control) / sqrt((s2_treated + s2_control) / 2)

with n-1 sample variances. Categorical covariates enter as one 0/1 indicator
per level, reference level included, so the table reads like the usual love
plot. Score-distribution overlap is summarized by back-to-back histogram
counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import NUMERIC, Dataset, ModelSpec
from .errors import DataError
from .propensity import PropensityScores

DENOMINATORS = ("stage", "before")


def smd(values, group) -> float:
    """Standardized mean difference of one variable between two groups.

    ``group`` is the 0/1 treatment indicator; the difference is treated
    minus control. Degenerate cases: equal means with zero spread give 0;
    unequal means with zero spread, or a group too small for a sample
    variance, give NaN. An empty group is an error.
    """
    values = np.asarray(values, dtype=np.float64)
    group = np.asarray(group)
    if values.shape != group.shape:
        raise DataError("values and group must have the same length")
    mask = group == 1
    treated = values[mask]
    control = values[~mask]
    if treated.size == 0 or control.size == 0:
        raise DataError("both groups must be non-empty")
    if treated.size < 2 or control.size < 2:
        return float("nan")
    diff = treated.mean() - control.mean()
    pooled = (treated.var(ddof=1) + control.var(ddof=1)) / 2.0
    if pooled == 0.0:
        return 0.0 if diff == 0.0 else float("nan")
    return float(diff / np.sqrt(pooled))


@dataclass(frozen=True)
class BalanceReport:
    """One SMD per indicator, before and after matching.

    ``degenerate`` marks indicators whose SMD carries no balance information
    at some stage: a collapsed (zero-pooled-variance) column or a group too
    small for a sample variance. Degenerate entries may still hold the value
    0 (constant column, equal means) or NaN; either way the summary
    properties skip them. Group sizes are carried for both stages.
    """

    indicators: tuple[str, ...]
    smd_before: np.ndarray
    smd_after: np.ndarray
    degenerate: np.ndarray
    n_treated_before: int
    n_control_before: int
    n_treated_after: int
    n_control_after: int
    denominator: str = "stage"

    def __post_init__(self):
        k = len(self.indicators)
        if self.smd_before.size != k or self.smd_after.size != k or self.degenerate.size != k:
            raise DataError("SMD arrays must match the indicator list")

    def _usable(self, vec: np.ndarray) -> np.ndarray:
        keep = ~self.degenerate & ~np.isnan(vec)
        if not keep.any():
            raise DataError("every indicator is degenerate; no SMD summary exists")
        return vec[keep]

    @property
    def max_abs_after(self) -> float:
        return float(np.abs(self._usable(self.smd_after)).max())

    @property
    def mean_abs_before(self) -> float:
        return float(np.abs(self._usable(self.smd_before)).mean())

    @property
    def mean_abs_after(self) -> float:
        return float(np.abs(self._usable(self.smd_after)).mean())

    @property
    def has_degenerate(self) -> bool:
        """True when any indicator is flagged or holds an undefined SMD."""
        return bool(
            self.degenerate.any()
            or np.isnan(self.smd_before).any()
            or np.isnan(self.smd_after).any()
        )

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "indicator": list(self.indicators),
                "smd_before": self.smd_before,
                "smd_after": self.smd_after,
            }
        )

    def to_csv(self, path) -> None:
        self.to_dataframe().to_csv(path, index=False)


def indicator_matrix(d: Dataset, spec: ModelSpec) -> tuple[np.ndarray, tuple[str, ...]]:
    """Numeric terms as-is; categoricals as one 0/1 column per level.

    Unlike a design matrix, the reference level is kept: balance is about
    observed composition, not identifiability.
    """
    cols: list[np.ndarray] = []
    names: list[str] = []
    for t in spec.terms:
        col = d.column(t.name)
        if t.kind == NUMERIC:
            cols.append(col.values.astype(np.float64))
            names.append(t.name)
        else:
            levels = t.levels if t.levels is not None else col.levels
            for lvl in levels:
                cols.append((col.values == lvl).astype(np.float64))
                names.append(f"{t.name}_{lvl}")
    if not cols:
        raise DataError("no covariate terms to balance")
    return np.column_stack(cols), tuple(names)


def _stage_stats(M: np.ndarray, treated: np.ndarray):
    mt = M[treated]
    mc = M[~treated]
    if mt.shape[0] < 2 or mc.shape[0] < 2:
        raise DataError("need at least two treated and two control rows per stage")
    return mt.mean(axis=0), mc.mean(axis=0), mt.var(axis=0, ddof=1), mc.var(axis=0, ddof=1)


def _smd_vector(diff: np.ndarray, pooled_var: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = np.sqrt(pooled_var / 2.0)
        out = np.where(denom > 0, diff / denom, np.where(diff == 0.0, 0.0, np.nan))
    return out


def balance_report(
    before: Dataset,
    after: Dataset,
    spec: ModelSpec,
    *,
    denominator: str = "stage",
) -> BalanceReport:
    """Before/after SMD table for the covariates of a treatment ModelSpec.

    ``spec`` is the propensity specification: its response is the treatment
    indicator and its terms are the covariates to balance. With
    ``denominator="stage"`` each stage standardizes by its own group
    variances; ``"before"`` reuses the pre-match variances for the after
    column so both columns share a scale.
    """
    if denominator not in DENOMINATORS:
        raise DataError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    treat0 = before.column(spec.response).values.astype(bool)
    treat1 = after.column(spec.response).values.astype(bool)
    M0, names = indicator_matrix(before, spec)
    M1, names1 = indicator_matrix(after, spec)
    if names1 != names:
        raise DataError("before/after datasets disagree on covariate levels")

    mean_t0, mean_c0, var_t0, var_c0 = _stage_stats(M0, treat0)
    mean_t1, mean_c1, var_t1, var_c1 = _stage_stats(M1, treat1)

    smd0 = _smd_vector(mean_t0 - mean_c0, var_t0 + var_c0)
    if denominator == "before":
        smd1 = _smd_vector(mean_t1 - mean_c1, var_t0 + var_c0)
    else:
        smd1 = _smd_vector(mean_t1 - mean_c1, var_t1 + var_c1)

    # Flag indicators whose denominator collapsed at a stage that uses it.
    degenerate = var_t0 + var_c0 == 0.0
    if denominator == "stage":
        degenerate = degenerate | (var_t1 + var_c1 == 0.0)
    degenerate = degenerate | np.isnan(smd0) | np.isnan(smd1)

    return BalanceReport(
        indicators=names,
        smd_before=smd0,
        smd_after=smd1,
        degenerate=degenerate,
        n_treated_before=int(treat0.sum()),
        n_control_before=int((~treat0).sum()),
        n_treated_after=int(treat1.sum()),
        n_control_after=int((~treat1).sum()),
        denominator=denominator,
    )


@dataclass(frozen=True)
class HistogramData:
    """Shared-edge histogram counts for the two groups at one stage."""

    stage: str
    edges: np.ndarray
    treated_counts: np.ndarray
    control_counts: np.ndarray

    def __post_init__(self):
        nbins = self.edges.size - 1
        if self.treated_counts.size != max(nbins, 1) or self.control_counts.size != max(nbins, 1):
            raise DataError("count vectors must have one entry per bin")

    @property
    def n_treated(self) -> int:
        return int(self.treated_counts.sum())

    @property
    def n_control(self) -> int:
        return int(self.control_counts.sum())

    def tv_distance(self) -> float:
        """Total-variation distance between the two binned distributions."""
        pt = self.treated_counts / max(self.n_treated, 1)
        pc = self.control_counts / max(self.n_control, 1)
        return float(np.abs(pt - pc).sum() / 2.0)

    def to_dataframe(self) -> pd.DataFrame:
        if self.edges.size < 2:
            lo = hi = np.repeat(self.edges[0] if self.edges.size else np.nan, 1)
        else:
            lo, hi = self.edges[:-1], self.edges[1:]
        return pd.DataFrame(
            {
                "stage": self.stage,
                "bin_lo": lo,
                "bin_hi": hi,
                "treated_count": self.treated_counts,
                "control_count": self.control_counts,
            }
        )


def histogram_backtoback(
    scores: PropensityScores, stage: str, bins: int = 20
) -> HistogramData:
    """Per-bin treated/control counts on the probability scale.

    Equal-width bins span [min, max] of the scores passed in; pass the full
    score set for the "before" stage and the matched subset for "after".
    When every score is identical the result collapses to a single
    degenerate bin holding each group's size.
    """
    if bins < 2:
        raise DataError("bins must be at least 2")
    if scores.n_rows == 0:
        raise DataError("no scores to bin")
    treated = scores.treated_mask()
    probs = scores.prob
    lo, hi = float(probs.min()), float(probs.max())
    if lo == hi:
        return HistogramData(
            stage=stage,
            edges=np.array([lo]),
            treated_counts=np.array([int(treated.sum())]),
            control_counts=np.array([int((~treated).sum())]),
        )
    edges = np.linspace(lo, hi, bins + 1)
    t_counts, _ = np.histogram(probs[treated], bins=edges)
    c_counts, _ = np.histogram(probs[~treated], bins=edges)
    return HistogramData(
        stage=stage, edges=edges, treated_counts=t_counts, control_counts=c_counts
    )


def histograms_dataframe(*hists: HistogramData) -> pd.DataFrame:
    """Stack per-stage histogram tables into one export frame."""
    if not hists:
        raise DataError("no histograms to export")
    return pd.concat([h.to_dataframe() for h in hists], ignore_index=True)
