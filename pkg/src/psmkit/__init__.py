"""Propensity-score matching toolkit.

Estimate treatment propensities with a hand-rolled logistic MLE, pair
treated and control rows by greedy nearest-neighbor matching, check the
covariate balance, and fit the outcome model on the matched sample.
"""

from .balance import (
    BalanceReport,
    HistogramData,
    balance_report,
    histogram_backtoback,
    histograms_dataframe,
    smd,
)
from .data import (
    Column,
    Dataset,
    DesignMatrix,
    ModelSpec,
    StudySpec,
    Term,
    encode_design_matrix,
    load_csv,
    recode_treatment,
    summarize,
)
from .effect import EffectReport, effect_summary, fit_outcome_model, logit_to_probability
from .errors import (
    ConvergenceError,
    DataError,
    NumericError,
    PsmkitError,
    RankDeficiencyError,
    SchemaError,
    SeparationError,
)
from .logit import FittedLogit, InferenceTable, fit_logit, predict_linear, predict_prob, wald_inference
from .matching import (
    MatchOptions,
    MatchedPairs,
    jitter_table,
    match_nearest,
    matched_dataset,
    read_pairs_csv,
)
from .propensity import PropensityScores, compute_scores, fit_and_score, read_scores_csv
from .smokeban import STUDY as SMOKEBAN_STUDY

__version__ = "0.1.0"

__all__ = [
    "BalanceReport",
    "Column",
    "ConvergenceError",
    "DataError",
    "Dataset",
    "DesignMatrix",
    "EffectReport",
    "FittedLogit",
    "HistogramData",
    "InferenceTable",
    "MatchOptions",
    "MatchedPairs",
    "ModelSpec",
    "NumericError",
    "PropensityScores",
    "PsmkitError",
    "RankDeficiencyError",
    "SMOKEBAN_STUDY",
    "SchemaError",
    "SeparationError",
    "StudySpec",
    "Term",
    "balance_report",
    "compute_scores",
    "effect_summary",
    "encode_design_matrix",
    "fit_and_score",
    "fit_logit",
    "fit_outcome_model",
    "histogram_backtoback",
    "histograms_dataframe",
    "jitter_table",
    "load_csv",
    "logit_to_probability",
    "match_nearest",
    "matched_dataset",
    "predict_linear",
    "predict_prob",
    "read_pairs_csv",
    "read_scores_csv",
    "recode_treatment",
    "smd",
    "summarize",
    "wald_inference",
]
