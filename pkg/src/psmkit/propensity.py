"""Propensity scores: fitted treatment probabilities per row.

Scores are carried on two scales at once. The log-odds scale is what the
matcher consumes (distances there are affine-invariant to the intercept and
spread out the tails); the probability scale is what plots and summaries
show because it is bounded and directly interpretable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .data import Dataset, DesignMatrix, ModelSpec, encode_design_matrix
from .errors import DataError
from .logit import FittedLogit, fit_logit, predict_linear
from scipy.special import expit


@dataclass(frozen=True)
class PropensityScores:
    """Per-row scores; arrays run parallel and are keyed by ``row_ids``."""

    row_ids: np.ndarray
    treatment: np.ndarray
    logodds: np.ndarray
    prob: np.ndarray

    def __post_init__(self):
        n = self.row_ids.size
        for name in ("treatment", "logodds", "prob"):
            if getattr(self, name).size != n:
                raise DataError(f"{name} length does not match row_ids")

    @property
    def n_rows(self) -> int:
        return int(self.row_ids.size)

    def treated_mask(self) -> np.ndarray:
        return self.treatment == 1

    def subset(self, ids) -> "PropensityScores":
        """Scores restricted to the given row ids (kept in id order)."""
        want = np.unique(np.asarray(ids, dtype=np.int64))
        pos = np.searchsorted(self.row_ids, want)
        ok = (pos < self.row_ids.size) & (
            self.row_ids[np.minimum(pos, self.row_ids.size - 1)] == want
        )
        if not ok.all():
            raise DataError(f"unknown row id(s): {want[~ok][:5].tolist()}")
        return PropensityScores(
            row_ids=self.row_ids[pos],
            treatment=self.treatment[pos],
            logodds=self.logodds[pos],
            prob=self.prob[pos],
        )

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "row_id": self.row_ids,
                "treatment": self.treatment,
                "score_logodds": self.logodds,
                "score_prob": self.prob,
            }
        )

    def to_csv(self, path) -> None:
        self.to_dataframe().to_csv(path, index=False)


def compute_scores(
    fit: FittedLogit, design: DesignMatrix, treatment: np.ndarray | None = None
) -> PropensityScores:
    """Score every design row with a fitted treatment model.

    ``treatment`` defaults to the design's own response, which for a
    propensity model is exactly the treatment indicator.
    """
    if treatment is None:
        treatment = design.y
    treatment = np.asarray(treatment)
    if treatment.shape[0] != design.n_rows:
        raise DataError("treatment vector length does not match the design")
    eta = predict_linear(fit, design.X)
    return PropensityScores(
        row_ids=design.row_ids.copy(),
        treatment=treatment.astype(np.int8),
        logodds=eta,
        prob=expit(eta),
    )


def fit_and_score(d: Dataset, spec: ModelSpec) -> tuple[FittedLogit, PropensityScores]:
    """Convenience wrapper: encode, fit the treatment model, score all rows."""
    design = encode_design_matrix(d, spec)
    fit = fit_logit(design)
    return fit, compute_scores(fit, design)


def read_scores_csv(path) -> PropensityScores:
    """Inverse of :meth:`PropensityScores.to_csv`."""
    df = pd.read_csv(path)
    needed = {"row_id", "treatment", "score_logodds", "score_prob"}
    missing = needed - set(df.columns)
    if missing:
        raise DataError(f"scores file missing column(s): {sorted(missing)}")
    order = np.argsort(df["row_id"].to_numpy(), kind="stable")
    return PropensityScores(
        row_ids=df["row_id"].to_numpy(dtype=np.int64)[order],
        treatment=df["treatment"].to_numpy(dtype=np.int8)[order],
        logodds=df["score_logodds"].to_numpy(dtype=np.float64)[order],
        prob=df["score_prob"].to_numpy(dtype=np.float64)[order],
    )
