"""Score computation, the two score scales, and CSV round trips."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.special import expit

from conftest import make_dataset
from psmkit.data import DesignMatrix, ModelSpec, Term
from psmkit.errors import DataError
from psmkit.propensity import PropensityScores, compute_scores, fit_and_score, read_scores_csv
from test_logit import make_fit


def toy_design(n=6, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = rng.integers(0, 2, n).astype(np.float64)
    return DesignMatrix(
        X=X,
        y=y,
        column_names=("intercept", "x"),
        response="t",
        row_ids=np.arange(n, dtype=np.int64),
    )


class TestComputeScores:
    def test_null_model_scores_half_everywhere(self):
        design = toy_design()
        fit = make_fit([0.0, 0.0], ("intercept", "x"))
        scores = compute_scores(fit, design)
        assert np.all(scores.logodds == 0.0)
        assert np.all(scores.prob == 0.5)

    def test_prob_is_the_logistic_of_logodds(self):
        design = toy_design(40, seed=3)
        fit = make_fit([0.2, -1.1], ("intercept", "x"))
        scores = compute_scores(fit, design)
        assert scores.prob == pytest.approx(expit(scores.logodds), abs=1e-15)

    def test_treatment_defaults_to_the_design_response(self):
        design = toy_design(12, seed=4)
        fit = make_fit([0.0, 1.0], ("intercept", "x"))
        scores = compute_scores(fit, design)
        assert np.array_equal(scores.treatment, design.y.astype(np.int8))

    def test_treatment_length_mismatch_raises(self):
        design = toy_design()
        fit = make_fit([0.0, 1.0], ("intercept", "x"))
        with pytest.raises(DataError, match="length"):
            compute_scores(fit, design, treatment=np.zeros(3))


class TestFitAndScore:
    def _toy_dataset(self, n=60, seed=9):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=n)
        t = (rng.random(n) < expit(0.8 * x)).astype(np.int8)
        return make_dataset(t=("binary", t), x=x), ModelSpec("t", (Term("x"),))

    def test_duplicate_covariate_rows_score_identically(self):
        d, spec = self._toy_dataset()
        x = d.column("x").values.copy()
        x[5] = x[2]
        d2 = make_dataset(t=("binary", d.column("t").values), x=x)
        _, scores = fit_and_score(d2, spec)
        assert scores.logodds[5] == scores.logodds[2]
        assert scores.prob[5] == scores.prob[2]

    def test_scores_follow_rows_under_permutation(self):
        d, spec = self._toy_dataset()
        _, base = fit_and_score(d, spec)
        perm = np.random.default_rng(1).permutation(d.n_rows)
        d2 = make_dataset(
            t=("binary", d.column("t").values[perm]),
            x=d.column("x").values[perm],
        )
        _, shuffled = fit_and_score(d2, spec)
        assert shuffled.logodds == pytest.approx(base.logodds[perm], abs=1e-8)


class TestScoresContainer:
    def _scores(self):
        ids = np.arange(5, dtype=np.int64)
        eta = np.array([-1.0, 0.0, 0.5, 1.2, 2.0])
        return PropensityScores(
            row_ids=ids,
            treatment=np.array([1, 0, 1, 0, 0], dtype=np.int8),
            logodds=eta,
            prob=expit(eta),
        )

    def test_subset_returns_rows_in_id_order(self):
        s = self._scores().subset([4, 1])
        assert list(s.row_ids) == [1, 4]
        assert s.logodds == pytest.approx([0.0, 2.0])

    def test_subset_unknown_id_raises(self):
        with pytest.raises(DataError, match="unknown row id"):
            self._scores().subset([99])

    def test_mismatched_array_lengths_raise(self):
        with pytest.raises(DataError, match="length"):
            PropensityScores(
                row_ids=np.arange(3, dtype=np.int64),
                treatment=np.zeros(3, dtype=np.int8),
                logodds=np.zeros(3),
                prob=np.zeros(2),
            )

    def test_csv_round_trip(self, tmp_path):
        s = self._scores()
        path = tmp_path / "scores.csv"
        s.to_csv(path)
        back = read_scores_csv(path)
        assert np.array_equal(back.row_ids, s.row_ids)
        assert np.array_equal(back.treatment, s.treatment)
        assert back.logodds == pytest.approx(s.logodds, abs=1e-12)

    def test_scores_csv_needs_all_columns(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("row_id,treatment\n0,1\n")
        with pytest.raises(DataError, match="missing column"):
            read_scores_csv(path)
