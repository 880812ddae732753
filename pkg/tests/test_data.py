"""Dataset loading, recoding, summaries, and design-matrix encoding."""

from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import make_dataset
from psmkit import smokeban
from psmkit.data import (
    BINARY,
    CATEGORICAL,
    NUMERIC,
    Column,
    Dataset,
    ModelSpec,
    StudySpec,
    Term,
    encode_design_matrix,
    load_csv,
    recode_treatment,
    summarize,
)
from psmkit.errors import DataError, SchemaError

TOY_HEADER = "smoker,ban,age,education,afam,hispanic,gender\n"

TOY_ROWS = (
    "yes,yes,24,hs,no,no,female\n"
    "no,no,31,college,no,yes,male\n"
    "no,yes,45,some college,yes,no,female\n"
    "yes,no,52,hs drop out,no,no,male\n"
    "no,no,38,master,no,no,female\n"
    "no,yes,29,college,no,no,male\n"
)


def write_csv(tmp_path, text, name="toy.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadCsv:
    def test_toy_file_loads_with_declared_kinds(self, tmp_path):
        d = load_csv(write_csv(tmp_path, TOY_HEADER + TOY_ROWS), smokeban.SCHEMA)
        assert d.n_rows == 6
        assert d.dropped_rows == 0
        assert d.column("age").kind == NUMERIC
        assert d.column("education").kind == CATEGORICAL
        assert d.column("smoker").kind == CATEGORICAL
        assert list(d.row_ids) == [0, 1, 2, 3, 4, 5]

    def test_header_only_file_gives_zero_rows(self, tmp_path):
        d = load_csv(write_csv(tmp_path, TOY_HEADER), smokeban.SCHEMA)
        assert d.n_rows == 0
        assert d.dropped_rows == 0

    def test_missing_declared_column_is_a_schema_error(self, tmp_path):
        text = "smoker,age,education,afam,hispanic,gender\n"
        with pytest.raises(SchemaError, match="missing column"):
            load_csv(write_csv(tmp_path, text), smokeban.SCHEMA)

    def test_missing_file_is_a_data_error(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "nope.csv", smokeban.SCHEMA)

    def test_blank_and_unparseable_cells_drop_the_row(self, tmp_path):
        rows = (
            "yes,yes,24,hs,no,no,female\n"
            "no,no,,college,no,yes,male\n"          # blank age
            "no,yes,abc,some college,yes,no,female\n"  # junk age
            "yes,no,52,hs drop out,no,no,male\n"
        )
        d = load_csv(write_csv(tmp_path, TOY_HEADER + rows), smokeban.SCHEMA)
        assert d.n_rows == 2
        assert d.dropped_rows == 2
        assert list(d.column("age").values) == [24.0, 52.0]

    @pytest.mark.parametrize("index_header", ["", "Unnamed: 0", "rownames"])
    def test_leading_index_column_is_skipped(self, tmp_path, index_header):
        text = index_header + "," + TOY_HEADER + "".join(
            f"{i}," + row for i, row in enumerate(TOY_ROWS.splitlines(keepends=True), start=1)
        )
        d = load_csv(write_csv(tmp_path, text), smokeban.SCHEMA)
        assert d.n_rows == 6
        assert sorted(d.columns) == sorted(smokeban.SCHEMA)

    def test_undeclared_extra_column_is_ignored(self, tmp_path):
        text = TOY_HEADER.rstrip("\n") + ",extra\n" + "".join(
            row.rstrip("\n") + ",x\n" for row in TOY_ROWS.splitlines(keepends=True)
        )
        d = load_csv(write_csv(tmp_path, text), smokeban.SCHEMA)
        assert "extra" not in d.columns

    def test_binary_schema_rejects_other_numbers(self, tmp_path):
        text = "flag,age\n1,10\n0,11\n2,12\n"
        d = load_csv(write_csv(tmp_path, text), {"flag": BINARY, "age": NUMERIC})
        assert d.n_rows == 2
        assert d.dropped_rows == 1


class TestRecodeTreatment:
    def test_treated_level_maps_to_one(self):
        d = make_dataset(ban=["no", "yes", "no", "yes", "yes"])
        out = recode_treatment(d, "ban", "no")
        assert out.column("ban").kind == BINARY
        assert list(out.column("ban").values) == [1, 0, 1, 0, 0]

    def test_constant_two_level_column_recodes_to_all_ones(self):
        col = Column(CATEGORICAL, np.array(["no", "no", "no"]), ("no", "yes"))
        d = Dataset({"ban": col}, np.arange(3, dtype=np.int64))
        out = recode_treatment(d, "ban", "no")
        assert list(out.column("ban").values) == [1, 1, 1]

    def test_three_level_column_is_rejected(self):
        d = make_dataset(ban=["no", "yes", "maybe"])
        with pytest.raises(SchemaError, match="3 levels"):
            recode_treatment(d, "ban", "no")

    def test_unknown_level_is_rejected(self):
        d = make_dataset(ban=["no", "yes"])
        with pytest.raises(SchemaError, match="not found"):
            recode_treatment(d, "ban", "nah")

    def test_numeric_column_is_rejected(self):
        d = make_dataset(ban=[0.0, 1.0])
        with pytest.raises(SchemaError, match="not categorical"):
            recode_treatment(d, "ban", "no")

    def test_round_trip_recovers_the_original_labels(self):
        labels = ["no", "yes", "yes", "no", "yes", "no", "no"]
        d = make_dataset(ban=labels)
        coded = recode_treatment(d, "ban", "no").column("ban").values
        decoded = np.where(coded == 1, "no", "yes")
        assert list(decoded) == labels


class TestSummarize:
    def test_counts_and_numeric_stats(self):
        d = make_dataset(
            color=["red", "blue", "red", "red"],
            size=[2.0, 4.0, 6.0, 8.0],
        )
        rep = summarize(d)
        assert rep["n_rows"] == 4
        assert rep["columns"]["color"]["counts"] == {"red": 3, "blue": 1}
        stats = rep["columns"]["size"]
        assert stats["mean"] == pytest.approx(5.0)
        assert stats["sd"] == pytest.approx(np.std([2, 4, 6, 8], ddof=1))
        assert (stats["min"], stats["max"]) == (2.0, 8.0)

    def test_single_row_has_no_sd(self):
        rep = summarize(make_dataset(size=[3.5]))
        assert rep["columns"]["size"]["mean"] == 3.5
        assert rep["columns"]["size"]["sd"] is None

    def test_level_counts_ignore_row_order(self):
        rng = np.random.default_rng(5)
        labels = ["a"] * 5 + ["b"] * 3 + ["c"] * 2
        base = summarize(make_dataset(color=labels))
        for _ in range(10):
            shuffled = list(rng.permutation(labels))
            rep = summarize(make_dataset(color=shuffled))
            assert rep["columns"]["color"]["counts"] == base["columns"]["color"]["counts"]


class TestDataset:
    def test_subset_keeps_original_row_ids(self):
        d = make_dataset(x=[10.0, 20.0, 30.0, 40.0])
        s = d.subset([3, 1])
        assert list(s.row_ids) == [1, 3]
        assert list(s.column("x").values) == [20.0, 40.0]

    def test_subset_unknown_id_raises(self):
        d = make_dataset(x=[1.0, 2.0])
        with pytest.raises(DataError, match="unknown row id"):
            d.subset([0, 7])

    def test_row_ids_must_increase(self):
        col = Column(NUMERIC, np.array([1.0, 2.0]))
        with pytest.raises(DataError):
            Dataset({"x": col}, np.array([1, 0], dtype=np.int64))


class TestEncodeDesignMatrix:
    def _toy(self):
        return make_dataset(
            y=("binary", [0, 1, 0, 1, 1]),
            education=(
                "categorical",
                ["college", "hs", "hs drop out", "master", "some college"],
            ),
            age=[20.0, 30.0, 40.0, 50.0, 60.0],
        )

    def test_smokeban_spec_yields_nine_named_columns(self, tmp_path):
        d = load_csv(tmp_path_csv(tmp_path), smokeban.SCHEMA)
        d = smokeban.STUDY.prepare(d)
        design = encode_design_matrix(d, smokeban.STUDY.propensity_spec())
        assert design.column_names == (
            "intercept",
            "education_hs",
            "education_hs drop out",
            "education_master",
            "education_some college",
            "afam_yes",
            "hispanic_yes",
            "gender_male",
            "age",
        )
        assert design.X.shape == (d.n_rows, 9)
        assert (design.X[:, 0] == 1.0).all()

    def test_zero_terms_gives_intercept_only(self):
        d = self._toy()
        design = encode_design_matrix(d, ModelSpec(response="y"))
        assert design.column_names == ("intercept",)
        assert design.X.shape == (5, 1)

    def test_one_hot_row(self):
        d = self._toy()
        spec = ModelSpec(
            response="y",
            terms=(Term("education", CATEGORICAL, reference="college"),),
        )
        design = encode_design_matrix(d, spec)
        hs_col = design.column_names.index("education_hs")
        row = design.X[1]
        assert row[hs_col] == 1.0
        others = [j for j in range(1, design.n_cols) if j != hs_col]
        assert all(row[j] == 0.0 for j in others)

    def test_dummy_sums_are_zero_or_one(self):
        rng = np.random.default_rng(11)
        levels = ("a", "b", "c", "d")
        for _ in range(25):
            vals = rng.choice(levels, size=30)
            d = make_dataset(
                y=("binary", rng.integers(0, 2, 30)),
                cat=("categorical", vals),
            )
            spec = ModelSpec(
                response="y",
                terms=(Term("cat", CATEGORICAL, reference="a", levels=levels),),
            )
            design = encode_design_matrix(d, spec)
            sums = design.X[:, 1:].sum(axis=1)
            assert np.isin(sums, (0.0, 1.0)).all()
            assert ((sums == 0.0) == (vals == "a")).all()

    def test_unknown_level_is_rejected(self):
        d = make_dataset(
            y=("binary", [0, 1]),
            cat=("categorical", ["a", "z"]),
        )
        spec = ModelSpec(
            response="y",
            terms=(Term("cat", CATEGORICAL, reference="a", levels=("a", "b")),),
        )
        with pytest.raises(DataError, match="unknown level"):
            encode_design_matrix(d, spec)

    def test_non_binary_response_is_rejected(self):
        d = make_dataset(y=[0.5, 1.5], age=[1.0, 2.0])
        with pytest.raises(SchemaError, match="0/1"):
            encode_design_matrix(d, ModelSpec(response="y", terms=(Term("age"),)))


class TestSpecs:
    def test_categorical_term_requires_reference(self):
        with pytest.raises(SchemaError, match="reference"):
            Term("education", CATEGORICAL)

    def test_reference_must_be_in_levels(self):
        with pytest.raises(SchemaError, match="not in levels"):
            Term("x", CATEGORICAL, reference="q", levels=("a", "b"))

    def test_study_spec_rejects_duplicate_columns(self):
        with pytest.raises(SchemaError, match="distinct"):
            StudySpec(response="y", treatment="y", covariates=())

    def test_study_spec_json_round_trip(self, tmp_path):
        p = tmp_path / "study.json"
        p.write_text(json.dumps(smokeban.STUDY.to_dict()))
        loaded = StudySpec.from_json_file(p)
        assert loaded == smokeban.STUDY

    def test_malformed_spec_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"response": {"column": "y"}}))
        with pytest.raises(SchemaError, match="malformed"):
            StudySpec.from_json_file(p)

    def test_spec_file_must_exist(self, tmp_path):
        with pytest.raises(DataError, match="no such spec"):
            StudySpec.from_json_file(tmp_path / "ghost.json")

    def test_outcome_spec_puts_treatment_first(self):
        spec = smokeban.STUDY.outcome_spec()
        assert spec.response == "smoker"
        assert spec.terms[0].name == "ban"
        assert spec.terms[0].kind == NUMERIC


def tmp_path_csv(tmp_path):
    p = tmp_path / "toy.csv"
    p.write_text(TOY_HEADER + TOY_ROWS)
    return p
