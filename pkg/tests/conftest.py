"""Shared fixtures: the study CSV, cached full-pipeline objects, helpers.

The heavyweight objects (loaded dataset, propensity fit, matching) are
session-scoped so the whole suite pays for them once. Acceptance checks
that need their own stopwatch re-run the relevant step locally instead of
using these caches.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from psmkit import smokeban
from psmkit.data import Column, Dataset, load_csv
from psmkit.matching import MatchOptions, match_nearest, matched_dataset
from psmkit.propensity import fit_and_score

REPO_ROOT = Path(__file__).resolve().parent.parent

# One CRITERION line per acceptance check, echoed after the run so the
# verdicts are visible even when every test passes.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def resolve_study_csv() -> tuple[Path, str]:
    """Locate the 10,000-row study CSV.

    Preference order: $SMOKEBAN_CSV, then data/SmokeBan.csv (the real
    export, if the user dropped one in), then the bundled reconstruction.
    """
    env = os.environ.get("SMOKEBAN_CSV")
    if env:
        p = Path(env)
        if not p.exists():
            raise FileNotFoundError(f"SMOKEBAN_CSV points at {p}, which does not exist")
        return p, "environment override"
    real = REPO_ROOT / "data" / "SmokeBan.csv"
    if real.exists():
        return real, "local real export"
    bundled = REPO_ROOT / "data" / "SmokeBan_synthetic.csv"
    if bundled.exists():
        return bundled, "bundled reconstruction"
    raise FileNotFoundError("no study CSV found; run `psmkit make-data data/SmokeBan_synthetic.csv`")


@pytest.fixture(scope="session")
def study_csv_path() -> Path:
    path, source = resolve_study_csv()
    ACCEPTANCE_LINES.append(f"study CSV: {path.name} ({source})")
    return path


@pytest.fixture(scope="session")
def study_dataset(study_csv_path):
    d = load_csv(study_csv_path, smokeban.SCHEMA)
    return smokeban.STUDY.prepare(d)


@pytest.fixture(scope="session")
def propensity_run(study_dataset):
    return fit_and_score(study_dataset, smokeban.STUDY.propensity_spec())


@pytest.fixture(scope="session")
def study_pairs(propensity_run):
    _, scores = propensity_run
    return match_nearest(scores, MatchOptions())


@pytest.fixture(scope="session")
def study_matched(study_dataset, study_pairs):
    return matched_dataset(study_dataset, study_pairs)


def make_dataset(**cols) -> Dataset:
    """Tiny Dataset builder for unit tests.

    Values decide the column kind: ints/floats become numeric, strings
    categorical, and anything passed as a (kind, values) pair is taken
    verbatim.
    """
    out = {}
    n = None
    for name, vals in cols.items():
        if isinstance(vals, tuple) and len(vals) == 2 and isinstance(vals[0], str):
            kind, raw = vals
            arr = np.asarray(raw)
            if kind == "categorical":
                arr = arr.astype(str)
                out[name] = Column(kind, arr, tuple(dict.fromkeys(arr.tolist())))
            elif kind == "binary":
                out[name] = Column(kind, arr.astype(np.int8))
            else:
                out[name] = Column(kind, arr.astype(np.float64))
        else:
            arr = np.asarray(vals)
            if arr.dtype.kind in "OU":
                arr = arr.astype(str)
                out[name] = Column("categorical", arr, tuple(dict.fromkeys(arr.tolist())))
            else:
                out[name] = Column("numeric", arr.astype(np.float64))
        n = arr.shape[0] if n is None else n
    return Dataset(out, np.arange(n, dtype=np.int64))


@pytest.fixture(scope="session")
def small_study_csv(tmp_path_factory, study_csv_path):
    """Every 16th row of the study CSV: big enough to fit, fast to run."""
    import pandas as pd

    df = pd.read_csv(study_csv_path).iloc[::16].reset_index(drop=True)
    out = tmp_path_factory.mktemp("smallcsv") / "study_small.csv"
    df.to_csv(out, index=False)
    return out
