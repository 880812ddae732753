"""Columnar dataset handling: CSV ingest, treatment recoding, design matrices.

A :class:`Dataset` is an immutable bag of typed columns (numeric, categorical,
binary) with stable 0-based row ids. :func:`encode_design_matrix` expands a
:class:`ModelSpec` into a dense dummy-coded design with an explicit intercept,
using declared reference levels rather than inferring them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"
BINARY = "binary"

_VALID_KINDS = frozenset({NUMERIC, CATEGORICAL, BINARY})

# Header spellings that mark a leading row-index column in exported CSVs.
_INDEX_HEADERS = ("", "Unnamed: 0", "rownames")


@dataclass(frozen=True)
class Column:
    """One typed column; ``values`` runs parallel to the dataset's row ids.

    ``levels`` is the ordered level set of a categorical column
    (first-appearance order unless overridden at load time); None otherwise.
    """

    kind: str
    values: np.ndarray
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in _VALID_KINDS:
            raise SchemaError(f"unknown column kind {self.kind!r}")
        if self.kind == CATEGORICAL and self.levels is None:
            raise SchemaError("categorical column needs an explicit level set")


@dataclass(frozen=True)
class Dataset:
    """Immutable columnar table with stable row ids.

    ``dropped_rows`` counts rows discarded during load because of empty or
    unparseable cells (listwise deletion).
    """

    columns: dict[str, Column]
    row_ids: np.ndarray
    dropped_rows: int = 0

    def __post_init__(self):
        ids = np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "row_ids", ids)
        if ids.size > 1 and not (np.diff(ids) > 0).all():
            raise DataError("row ids must be strictly increasing")
        n = ids.size
        for name, col in self.columns.items():
            if len(col.values) != n:
                raise DataError(f"column {name!r} has {len(col.values)} values for {n} rows")
            if col.kind == BINARY and n and not np.isin(col.values, (0, 1)).all():
                raise DataError(f"binary column {name!r} contains values other than 0/1")
            if col.kind == CATEGORICAL and n:
                known = np.isin(col.values, np.asarray(col.levels, dtype=object))
                if not known.all():
                    bad = sorted(set(np.asarray(col.values)[~known].tolist()))
                    raise DataError(f"column {name!r} has cells outside its level set: {bad}")

    @property
    def n_rows(self) -> int:
        return int(self.row_ids.size)

    def column(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(f"no such column: {name!r}") from None

    def with_column(self, name: str, col: Column) -> "Dataset":
        new = dict(self.columns)
        new[name] = col
        return Dataset(new, self.row_ids, self.dropped_rows)

    def subset(self, ids: Sequence[int]) -> "Dataset":
        """Row subset by original row ids (kept, so later joins stay valid)."""
        want = np.unique(np.asarray(ids, dtype=np.int64))
        pos = np.searchsorted(self.row_ids, want)
        ok = (pos < self.row_ids.size) & (self.row_ids[np.minimum(pos, self.row_ids.size - 1)] == want)
        if not ok.all():
            missing = want[~ok][:5].tolist()
            raise DataError(f"unknown row id(s): {missing}")
        cols = {name: replace(c, values=c.values[pos]) for name, c in self.columns.items()}
        return Dataset(cols, self.row_ids[pos], self.dropped_rows)


def load_csv(path, schema: Mapping[str, str], *, drop_index_column: bool = True) -> Dataset:
    """Load a CSV against a declared column-kind schema.

    Rows with any empty or unparseable cell in a declared column are dropped
    and counted in ``Dataset.dropped_rows``. Undeclared columns are ignored,
    as is a leading unnamed/row-index column.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row; comma separated, double-quote quoting.
    schema : mapping
        column name -> kind ("numeric" | "categorical" | "binary").
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    bad_kinds = {k for k in schema.values() if k not in _VALID_KINDS}
    if bad_kinds:
        raise SchemaError(f"unknown column kind(s) in schema: {sorted(bad_kinds)}")
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"empty file: {path}") from None
    if drop_index_column and len(raw.columns):
        first = raw.columns[0]
        if first in _INDEX_HEADERS and first not in schema:
            raw = raw.iloc[:, 1:]
    missing = [name for name in schema if name not in raw.columns]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")

    n = len(raw)
    bad = np.zeros(n, dtype=bool)
    parsed: dict[str, np.ndarray] = {}
    for name, kind in schema.items():
        cells = raw[name].str.strip()
        empty = cells.values == ""
        if kind == CATEGORICAL:
            bad |= empty
            parsed[name] = cells.values.astype(object)
        else:
            vals = pd.to_numeric(cells, errors="coerce").values.astype(np.float64)
            nan = np.isnan(vals)
            if kind == BINARY:
                nan |= ~np.isin(vals, (0.0, 1.0))
            bad |= empty | nan
            parsed[name] = vals

    keep = ~bad
    columns: dict[str, Column] = {}
    for name, kind in schema.items():
        vals = parsed[name][keep]
        if kind == NUMERIC:
            columns[name] = Column(NUMERIC, vals)
        elif kind == BINARY:
            columns[name] = Column(BINARY, vals.astype(np.int8))
        else:
            levels = tuple(dict.fromkeys(vals.tolist()))
            columns[name] = Column(CATEGORICAL, vals, levels)
    return Dataset(columns, np.arange(int(keep.sum()), dtype=np.int64), dropped_rows=int(bad.sum()))


def recode_treatment(d: Dataset, column: str, treated_level: str) -> Dataset:
    """Replace a two-level categorical column by a 0/1 column (treated -> 1)."""
    col = d.column(column)
    if col.kind != CATEGORICAL:
        raise SchemaError(f"column {column!r} is not categorical")
    if len(col.levels) != 2:
        raise SchemaError(f"column {column!r} has {len(col.levels)} levels, need exactly 2")
    if treated_level not in col.levels:
        raise SchemaError(f"level {treated_level!r} not found in column {column!r}")
    vals = (col.values == treated_level).astype(np.int8)
    return d.with_column(column, Column(BINARY, vals))


def summarize(d: Dataset) -> dict:
    """Per-column summary: level counts, or mean/sd/min/max for numerics.

    Standard deviation uses the n-1 denominator and is reported as None when
    fewer than two rows are present.
    """
    out: dict = {"n_rows": d.n_rows, "dropped_rows": d.dropped_rows, "columns": {}}
    for name, col in d.columns.items():
        if col.kind == CATEGORICAL:
            counts = {lvl: int((col.values == lvl).sum()) for lvl in col.levels}
            out["columns"][name] = {"kind": col.kind, "counts": counts}
        elif col.kind == BINARY:
            v = col.values
            out["columns"][name] = {
                "kind": col.kind,
                "counts": {"0": int((v == 0).sum()), "1": int((v == 1).sum())},
            }
        else:
            v = col.values
            if v.size == 0:
                stats = {"mean": None, "sd": None, "min": None, "max": None}
            else:
                stats = {
                    "mean": float(v.mean()),
                    "sd": float(v.std(ddof=1)) if v.size > 1 else None,
                    "min": float(v.min()),
                    "max": float(v.max()),
                }
            out["columns"][name] = {"kind": col.kind, **stats}
    return out


@dataclass(frozen=True)
class Term:
    """One model term: a numeric column, or a categorical with a reference.

    ``levels`` optionally overrides the dummy expansion order; when given it
    must cover every level observed in the data.
    """

    name: str
    kind: str = NUMERIC
    reference: str | None = None
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"term {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL and self.reference is None:
            raise SchemaError(f"term {self.name!r}: categorical term needs a reference level")
        if self.levels is not None:
            object.__setattr__(self, "levels", tuple(self.levels))
            if self.reference is not None and self.reference not in self.levels:
                raise SchemaError(f"term {self.name!r}: reference {self.reference!r} not in levels")


@dataclass(frozen=True)
class ModelSpec:
    """A binary response plus ordered covariate terms."""

    response: str
    terms: tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def validate(self, d: Dataset) -> None:
        resp = d.column(self.response)
        if resp.kind != BINARY:
            raise SchemaError(f"response {self.response!r} must be a 0/1 column, got {resp.kind}")
        for t in self.terms:
            col = d.column(t.name)
            if t.kind == NUMERIC:
                if col.kind == CATEGORICAL:
                    raise SchemaError(f"term {t.name!r} declared numeric but column is categorical")
            else:
                if col.kind != CATEGORICAL:
                    raise SchemaError(f"term {t.name!r} declared categorical but column is {col.kind}")
                levels = t.levels if t.levels is not None else col.levels
                if t.reference not in levels:
                    raise SchemaError(
                        f"term {t.name!r}: reference {t.reference!r} not among levels {levels}"
                    )


@dataclass(frozen=True)
class DesignMatrix:
    """Dense design with intercept first, plus the extracted 0/1 response."""

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    response: str
    row_ids: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.X.shape[1])


def encode_design_matrix(d: Dataset, spec: ModelSpec) -> DesignMatrix:
    """Expand a ModelSpec into a dummy-coded design matrix.

    Column order is deterministic: intercept, then terms in spec order with
    categorical levels in declared order (reference skipped). Dummy columns
    are named ``<term>_<level>``.
    """
    spec.validate(d)
    n = d.n_rows
    cols: list[np.ndarray] = [np.ones(n)]
    names: list[str] = ["intercept"]
    for t in spec.terms:
        col = d.column(t.name)
        if t.kind == NUMERIC:
            cols.append(col.values.astype(np.float64))
            names.append(t.name)
            continue
        levels = t.levels if t.levels is not None else col.levels
        if n:
            unknown = sorted(set(col.values.tolist()) - set(levels))
            if unknown:
                raise DataError(f"unknown level(s) for term {t.name!r}: {unknown}")
        for lvl in levels:
            if lvl == t.reference:
                continue
            cols.append((col.values == lvl).astype(np.float64))
            names.append(f"{t.name}_{lvl}")
    X = np.column_stack(cols)
    y = d.column(spec.response).values.astype(np.float64)
    return DesignMatrix(X=X, y=y, column_names=tuple(names), response=spec.response, row_ids=d.row_ids)


@dataclass(frozen=True)
class StudySpec:
    """Whole-study configuration: outcome, treatment coding, covariates.

    This is the object behind the CLI's ``--spec`` JSON file. ``positive_level``
    / ``treated_level`` of None mean the column already holds 0/1 values and no
    recode is applied.
    """

    response: str
    treatment: str
    covariates: tuple[Term, ...]
    response_positive: str | None = None
    treated_level: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        names = [self.response, self.treatment] + [t.name for t in self.covariates]
        if len(set(names)) != len(names):
            raise SchemaError("response, treatment and covariates must name distinct columns")

    def schema(self) -> dict[str, str]:
        sch = {
            self.response: CATEGORICAL if self.response_positive is not None else BINARY,
            self.treatment: CATEGORICAL if self.treated_level is not None else BINARY,
        }
        for t in self.covariates:
            sch[t.name] = CATEGORICAL if t.kind == CATEGORICAL else NUMERIC
        return sch

    def prepare(self, d: Dataset) -> Dataset:
        """Apply the declared treatment/outcome recodes, returning a new Dataset."""
        if self.treated_level is not None:
            d = recode_treatment(d, self.treatment, self.treated_level)
        if self.response_positive is not None:
            d = recode_treatment(d, self.response, self.response_positive)
        return d

    def propensity_spec(self) -> ModelSpec:
        return ModelSpec(response=self.treatment, terms=self.covariates)

    def outcome_spec(self) -> ModelSpec:
        return ModelSpec(
            response=self.response,
            terms=(Term(self.treatment, NUMERIC),) + self.covariates,
        )

    def to_dict(self) -> dict:
        terms = []
        for t in self.covariates:
            entry: dict = {"name": t.name, "kind": t.kind}
            if t.reference is not None:
                entry["reference"] = t.reference
            if t.levels is not None:
                entry["levels"] = list(t.levels)
            terms.append(entry)
        return {
            "response": {"column": self.response, "positive_level": self.response_positive},
            "treatment": {"column": self.treatment, "treated_level": self.treated_level},
            "terms": terms,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "StudySpec":
        try:
            resp = obj["response"]
            treat = obj["treatment"]
            terms = tuple(
                Term(
                    name=t["name"],
                    kind=t.get("kind", NUMERIC),
                    reference=t.get("reference"),
                    levels=tuple(t["levels"]) if t.get("levels") else None,
                )
                for t in obj["terms"]
            )
            return cls(
                response=resp["column"],
                treatment=treat["column"],
                covariates=terms,
                response_positive=resp.get("positive_level"),
                treated_level=treat.get("treated_level"),
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed study spec: {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "StudySpec":
        path = Path(path)
        if not path.exists():
            raise DataError(f"no such spec file: {path}")
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"spec file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(obj)
