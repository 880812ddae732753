"""Outcome modeling on the matched sample.

After matching, the response is regressed on the treatment indicator plus
the original covariates. The headline number is the treatment coefficient;
the report renders it three ways (log-odds, odds ratio, and the logistic
transform) and carries the full inference table alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset, ModelSpec, encode_design_matrix
from .errors import DataError
from .logit import FittedLogit, InferenceTable, fit_logit, wald_inference
from .matching import MatchedPairs


def logit_to_probability(x):
    """Logistic transform exp(x) / (1 + exp(x)), safe for large |x|.

    Scalars come back as floats, arrays as arrays, and the input must be
    finite. ``logit_to_probability(0.0)`` is exactly 0.5.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise DataError("log-odds input must be finite")
    out = expit(arr)
    if np.ndim(x) == 0:
        return float(out)
    return out


def fit_outcome_model(matched: Dataset, spec: ModelSpec) -> FittedLogit:
    """Fit the response model on the matched rows."""
    return fit_logit(encode_design_matrix(matched, spec))


@dataclass(frozen=True)
class EffectReport:
    """Treatment-effect readout from the outcome model.

    ``probability`` is the logistic transform of the treatment coefficient
    by itself: the implied response probability when every other term sits
    at zero or its reference level. It is a readability aid, not an average
    or marginal effect over the sample.
    """

    inference: InferenceTable
    treatment_term: str
    log_odds: float
    odds_ratio: float
    probability: float
    n_pairs: int
    n_rows: int

    @property
    def treatment_row(self) -> dict:
        return self.inference.row(self.treatment_term)

    def to_dict(self) -> dict:
        return {
            "treatment_term": self.treatment_term,
            "log_odds": self.log_odds,
            "odds_ratio": self.odds_ratio,
            "probability": self.probability,
            "probability_note": (
                "logistic transform of the treatment coefficient alone, i.e. the "
                "implied response probability with all other terms at reference; "
                "not a sample-averaged effect"
            ),
            "n_pairs": self.n_pairs,
            "n_rows": self.n_rows,
            "model": self.inference.to_records(),
        }


def effect_summary(
    fit: FittedLogit, pairs: MatchedPairs, treatment_term: str | None = None
) -> EffectReport:
    """Condense a fitted outcome model into the treatment-effect report.

    The treatment term defaults to the first term after the intercept,
    which is where the outcome ModelSpec puts it.
    """
    if treatment_term is None:
        if len(fit.column_names) < 2:
            raise DataError("fitted model has no terms beyond the intercept")
        treatment_term = fit.column_names[1]
    if treatment_term not in fit.column_names:
        raise DataError(f"fitted model has no term {treatment_term!r}")
    est = fit.coefficient(treatment_term)
    return EffectReport(
        inference=wald_inference(fit),
        treatment_term=treatment_term,
        log_odds=est,
        odds_ratio=math.exp(est),
        probability=logit_to_probability(est),
        n_pairs=pairs.n_pairs,
        n_rows=fit.n_obs,
    )
