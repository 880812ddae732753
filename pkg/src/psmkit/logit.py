"""Logistic regression by iteratively reweighted least squares.

Fits a binomial GLM with logit link by full Newton steps with step halving,
tracking the deviance. Inference is Wald-style from the inverse observed
information at the optimum. The fitter is deliberately strict: rank-deficient
designs, constant responses, and separated data raise typed errors instead of
returning garbage coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import expit

from .data import DesignMatrix
from .errors import ConvergenceError, DataError, RankDeficiencyError, SeparationError

# Coefficients walking past this magnitude mean the optimum is at infinity
# (separated data); on the logit scale 30 is already a probability of ~1e-13.
DIVERGENCE_BOUND = 30.0

_MIN_WEIGHT = 1e-10


@dataclass(frozen=True)
class FittedLogit:
    """A converged fit: point estimates plus everything inference needs."""

    coefficients: np.ndarray
    column_names: tuple[str, ...]
    covariance: np.ndarray
    deviance: float
    n_iter: int
    n_obs: int
    score_inf_norm: float

    def coefficient(self, name: str) -> float:
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise DataError(f"no coefficient named {name!r}") from None
        return float(self.coefficients[idx])

    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def _deviance(eta: np.ndarray, y: np.ndarray) -> float:
    # -2 * loglik; log(1 + e^eta) via logaddexp keeps large |eta| finite.
    return float(-2.0 * np.sum(y * eta - np.logaddexp(0.0, eta)))


def _validate(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"design matrix must be 2-d, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise DataError(f"response length {y.shape} does not match design {X.shape}")
    if X.shape[0] == 0:
        raise DataError("cannot fit on zero rows")
    if not np.isfinite(X).all():
        raise DataError("design matrix contains NaN or infinite entries")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("response must contain only 0 and 1")
    return X, y


def fit_logit(
    X,
    y: np.ndarray | None = None,
    column_names: tuple[str, ...] | None = None,
    *,
    max_iter: int = 50,
    deviance_tol: float = 1e-8,
    step_tol: float = 1e-10,
) -> FittedLogit:
    """Maximum-likelihood logistic fit.

    Accepts either a :class:`~psmkit.data.DesignMatrix` or a raw (X, y) pair.
    Converges when the deviance change or the step norm drops below tolerance
    and the score X'(y - p) is numerically zero. Raises
    :class:`~psmkit.errors.SeparationError` when the response is constant or
    any coefficient runs past ``DIVERGENCE_BOUND`` on its way to infinity,
    :class:`~psmkit.errors.RankDeficiencyError` for collinear designs, and
    :class:`~psmkit.errors.ConvergenceError` if ``max_iter`` is exhausted.
    """
    if isinstance(X, DesignMatrix):
        if y is not None:
            raise DataError("pass either a DesignMatrix or raw arrays, not both")
        X, y, column_names = X.X, X.y, X.column_names
    elif y is None:
        raise DataError("a response vector is required with a raw design matrix")
    X, y = _validate(X, y)
    n, p = X.shape
    if column_names is None:
        column_names = tuple(f"x{j}" for j in range(p))
    else:
        column_names = tuple(column_names)
        if len(column_names) != p:
            raise DataError(f"{len(column_names)} names for {p} design columns")

    if y.min() == y.max():
        val = int(y[0])
        raise SeparationError(
            f"response is constantly {val}; the model has no interior optimum"
        )
    if n <= p:
        raise RankDeficiencyError(f"need more rows than columns, got {n} rows for {p} columns")
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficiencyError(
            f"design matrix has rank < {p}; drop or combine collinear columns"
        )

    # The score must actually vanish at the reported optimum, not just the
    # deviance flatten out. Scale with n: each residual contributes O(1).
    score_tol = 1e-7 * n

    beta = np.zeros(p)
    eta = X @ beta
    dev = _deviance(eta, y)
    for it in range(1, max_iter + 1):
        probs = expit(eta)
        grad = X.T @ (y - probs)
        w = np.maximum(probs * (1.0 - probs), _MIN_WEIGHT)
        H = (X * w[:, None]).T @ X
        try:
            chol = cho_factor(H, lower=True)
        except LinAlgError:
            raise RankDeficiencyError(
                "weighted information matrix is singular; design columns are collinear"
            ) from None
        direction = cho_solve(chol, grad)

        step = 1.0
        for _ in range(30):
            cand = beta + step * direction
            cand_eta = X @ cand
            cand_dev = _deviance(cand_eta, y)
            if cand_dev <= dev + 1e-12:
                break
            step *= 0.5
        delta = step * direction
        beta, eta = cand, cand_eta
        dev_change = dev - cand_dev
        dev = cand_dev

        if np.abs(beta).max() > DIVERGENCE_BOUND:
            raise SeparationError(
                "coefficients are diverging; the classes are (quasi-)separated"
            )

        score_norm = float(np.abs(X.T @ (y - expit(eta))).max())
        small_move = abs(dev_change) < deviance_tol or np.abs(delta).max() < step_tol
        if small_move and score_norm <= score_tol:
            probs = expit(eta)
            w = np.maximum(probs * (1.0 - probs), _MIN_WEIGHT)
            H = (X * w[:, None]).T @ X
            try:
                chol = cho_factor(H, lower=True)
            except LinAlgError:
                raise RankDeficiencyError(
                    "information matrix is singular at the optimum"
                ) from None
            cov = cho_solve(chol, np.eye(p))
            cov = (cov + cov.T) / 2.0
            return FittedLogit(
                coefficients=beta,
                column_names=column_names,
                covariance=cov,
                deviance=dev,
                n_iter=it,
                n_obs=n,
                score_inf_norm=score_norm,
            )

    raise ConvergenceError(f"no convergence in {max_iter} iterations (deviance {dev:.6g})")


def predict_linear(fit: FittedLogit, X: np.ndarray):
    """Linear predictor for new rows in the fitted column order.

    A single 1-d row gives back a float; a 2-d matrix gives a vector.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != fit.coefficients.size:
        raise DataError(
            f"expected {fit.coefficients.size} columns, got shape {X.shape}"
        )
    eta = X @ fit.coefficients
    return float(eta[0]) if single else eta


def predict_prob(fit: FittedLogit, X: np.ndarray) -> np.ndarray:
    """Fitted probabilities for new rows."""
    return expit(predict_linear(fit, X))


@dataclass(frozen=True)
class InferenceTable:
    """Wald summary per coefficient: estimate, se, z, two-sided p, 95% CI."""

    terms: tuple[str, ...]
    estimates: np.ndarray
    ses: np.ndarray
    zs: np.ndarray
    ps: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray

    def row(self, term: str) -> dict:
        try:
            i = self.terms.index(term)
        except ValueError:
            raise DataError(f"no such term: {term!r}") from None
        return {
            "term": term,
            "estimate": float(self.estimates[i]),
            "se": float(self.ses[i]),
            "z": float(self.zs[i]),
            "p": float(self.ps[i]),
            "ci_lo": float(self.ci_lo[i]),
            "ci_hi": float(self.ci_hi[i]),
        }

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "term": list(self.terms),
                "estimate": self.estimates,
                "se": self.ses,
                "z": self.zs,
                "p": self.ps,
                "ci_lo": self.ci_lo,
                "ci_hi": self.ci_hi,
            }
        )

    def to_csv(self, path) -> None:
        self.to_dataframe().to_csv(path, index=False)

    def to_records(self) -> list[dict]:
        return [self.row(t) for t in self.terms]


def wald_inference(fit: FittedLogit) -> InferenceTable:
    """Normal-approximation inference from the fitted covariance.

    p-values are two-sided; the interval is the conventional estimate
    +/- 1.96 * se. A zero standard error flags the term: its z and p come
    back as NaN rather than a fabricated infinity.
    """
    est = fit.coefficients
    se = fit.standard_errors()
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, est / se, np.nan)
    p = np.array(
        [math.erfc(abs(zi) / math.sqrt(2.0)) if np.isfinite(zi) else np.nan for zi in z]
    )
    return InferenceTable(
        terms=fit.column_names,
        estimates=est.copy(),
        ses=se,
        zs=z,
        ps=p,
        ci_lo=est - 1.96 * se,
        ci_hi=est + 1.96 * se,
    )
