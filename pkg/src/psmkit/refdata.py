"""Deterministic construction of the bundled reference dataset.

The original study CSV is public but not always fetchable in offline
environments, so the package ships a synthetic stand-in built here. The
builder works backwards from published summary targets: covariate columns
are exact-count multisets, treatment and outcome flags are assigned by
error-diffusion against generating logistic models so that refitting
recovers the generating coefficients, and the whole pipeline is replayed
for verification before a file is accepted.

Nothing here runs during normal analysis; only the ``make-data`` command
and the data-generation tests touch this module.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
from scipy.optimize import root
from scipy.special import expit
from scipy.stats import gamma as gamma_dist

from . import smokeban
from .balance import balance_report
from .data import BINARY, CATEGORICAL, NUMERIC, Column, Dataset, load_csv, summarize
from .logit import wald_inference
from .matching import MatchOptions, match_nearest, matched_dataset
from .effect import fit_outcome_model
from .propensity import fit_and_score
from .data import encode_design_matrix

N_ROWS = 10_000
TREATED_ROWS = 3_902          # ban == "no"
SMOKERS = 2_423

GENDER_COUNTS = {"female": 5_637, "male": 4_363}
AFAM_COUNTS = {"no": 9_231, "yes": 769}
HISPANIC_COUNTS = {"no": 8_866, "yes": 1_134}
EDUCATION_COUNTS = {
    "hs": 3_266,
    "some college": 2_802,
    "college": 1_972,
    "master": 1_048,
    "hs drop out": 912,
}

AGE_MEAN = 38.69
AGE_SD = 12.11
AGE_LO, AGE_HI = 18, 88

# Generating treatment model, keyed by design-column name. The age slope is
# deliberately absent: it is calibrated at build time so that the expected
# treated count equals TREATED_ROWS exactly with this intercept held fixed.
TREATMENT_MODEL = {
    "intercept": -0.81,
    "education_hs": 0.67,
    "education_hs drop out": 1.0,
    "education_master": -0.13,
    "education_some college": 0.36,
    "afam_yes": -0.10,
    "hispanic_yes": -0.08,
    "gender_male": 0.51,
}
AGE_SLOPE_WINDOW = (-0.0085, -0.0056)

OUTCOME_MODEL = {
    "intercept": -1.647,
    "ban": 0.262,
    "education_hs": 1.081,
    "education_hs drop out": 1.485,
    "education_master": -0.498,
    "education_some college": 0.69,
    "afam_yes": -0.129,
    "hispanic_yes": -0.595,
    "gender_male": 0.2,
    "age": -0.009,
}

# Verification windows. These sit inside the published-figure tolerances so
# that a file passing here has margin to spare downstream.
PROPENSITY_TARGETS = {
    "intercept": -0.81,
    "education_hs": 0.67,
    "education_hs drop out": 1.0,
    "education_master": -0.14,
    "education_some college": 0.36,
    "afam_yes": -0.10,
    "hispanic_yes": -0.08,
    "gender_male": 0.51,
    "age": -0.01,
}
PROPENSITY_TOL = 0.016
SMALL_P_TERMS = ("age", "education_hs", "education_hs drop out",
                 "education_some college", "gender_male")
MID_P_TERMS = ("education_master", "afam_yes", "hispanic_yes")
OUTCOME_TOL = 0.12


def _age_counts() -> np.ndarray:
    """Integer counts per age 18..88 hitting the published mean and sd.

    A discretized shifted gamma supplies the right-skewed shape; its two
    parameters are solved so the discretized moments land on target, then a
    greedy integer polish absorbs the rounding error.
    """
    ages = np.arange(AGE_LO, AGE_HI + 1)
    edges = np.concatenate([[AGE_LO - 0.5], ages + 0.5])

    def pmf_for(params):
        k, theta = params
        cdf = gamma_dist.cdf(edges, a=k, loc=AGE_LO - 0.5, scale=theta)
        pmf = np.diff(cdf)
        total = pmf.sum()
        if total <= 0:
            return np.full_like(pmf, np.nan)
        return pmf / total

    def moments_gap(params):
        pmf = pmf_for(params)
        m = float((pmf * ages).sum())
        v = float((pmf * ages**2).sum() - m * m)
        return [m - AGE_MEAN, np.sqrt(v) - AGE_SD]

    sol = root(moments_gap, x0=[2.9, 7.1])
    if not sol.success:
        raise RuntimeError(f"age distribution solve failed: {sol.message}")
    pmf = pmf_for(sol.x)

    target = pmf * N_ROWS
    counts = np.floor(target).astype(np.int64)
    short = N_ROWS - int(counts.sum())
    for idx in np.argsort(-(target - counts))[:short]:
        counts[idx] += 1
    for endpoint in (0, len(ages) - 1):
        if counts[endpoint] == 0:
            counts[np.argmax(counts)] -= 1
            counts[endpoint] = 1

    return _polish_age_counts(counts, ages)


def _polish_age_counts(counts: np.ndarray, ages: np.ndarray, tol: float = 0.004) -> np.ndarray:
    counts = counts.copy()
    n = int(counts.sum())
    s1 = float((counts * ages).sum())
    s2 = float((counts * ages.astype(np.float64) ** 2).sum())

    def stats(a, b):
        mean = a / n
        sd = np.sqrt((b - a * a / n) / (n - 1))
        return mean, sd

    def err(a, b):
        m, s = stats(a, b)
        return ((m - AGE_MEAN) / tol) ** 2 + ((s - AGE_SD) / tol) ** 2

    for _ in range(4000):
        m, s = stats(s1, s2)
        if abs(m - AGE_MEAN) <= tol and abs(s - AGE_SD) <= tol:
            return counts
        current = err(s1, s2)
        best = None
        for ai, a in enumerate(ages):
            floor_count = 1 if ai in (0, len(ages) - 1) else 0
            if counts[ai] <= floor_count:
                continue
            for db in (-3, -2, -1, 1, 2, 3):
                bi = ai + db
                if not 0 <= bi < len(ages):
                    continue
                b = ages[bi]
                e = err(s1 + (b - a), s2 + float(b) ** 2 - float(a) ** 2)
                if best is None or e < best[0]:
                    best = (e, ai, bi)
        if best is None or best[0] >= current:
            raise RuntimeError("age count polish stalled")
        _, ai, bi = best
        counts[ai] -= 1
        counts[bi] += 1
        a, b = float(ages[ai]), float(ages[bi])
        s1 += b - a
        s2 += b * b - a * a
    raise RuntimeError("age count polish did not converge")


def _multiset(counts: dict[str, int], rng: np.random.Generator) -> np.ndarray:
    values = np.repeat(
        np.array(list(counts.keys()), dtype=object),
        np.array(list(counts.values()), dtype=np.int64),
    )
    rng.shuffle(values)
    return values


def _assemble_dataset(
    ages: np.ndarray,
    education: np.ndarray,
    afam: np.ndarray,
    hispanic: np.ndarray,
    gender: np.ndarray,
    ban01: np.ndarray,
    smoker01: np.ndarray,
) -> Dataset:
    columns = {
        "smoker": Column(BINARY, smoker01.astype(np.int8)),
        "ban": Column(BINARY, ban01.astype(np.int8)),
        "age": Column(NUMERIC, ages.astype(np.float64)),
        "education": Column(CATEGORICAL, education, smokeban.EDUCATION_LEVELS),
        "afam": Column(CATEGORICAL, afam, ("no", "yes")),
        "hispanic": Column(CATEGORICAL, hispanic, ("no", "yes")),
        "gender": Column(CATEGORICAL, gender, ("female", "male")),
    }
    return Dataset(columns, np.arange(N_ROWS, dtype=np.int64))


def _model_vector(model: dict[str, float], names: tuple[str, ...]) -> np.ndarray:
    missing = set(model) - set(names)
    if missing:
        raise RuntimeError(f"model terms not in design: {sorted(missing)}")
    return np.array([model.get(name, 0.0) for name in names])


def _calibrate_age_slope(X: np.ndarray, names: tuple[str, ...]) -> float:
    """Newton solve for the age slope making the expected treated count exact."""
    beta = _model_vector(TREATMENT_MODEL, names)
    base = X @ beta
    age = X[:, names.index("age")]
    b = -0.0066
    for _ in range(80):
        p = expit(base + b * age)
        gap = p.sum() - TREATED_ROWS
        if abs(gap) < 1e-9:
            break
        slope = (p * (1.0 - p) * age).sum()
        b -= gap / slope
    else:
        raise RuntimeError("age slope calibration did not converge")
    if not AGE_SLOPE_WINDOW[0] < b < AGE_SLOPE_WINDOW[1]:
        raise RuntimeError(f"calibrated age slope {b:.5f} outside {AGE_SLOPE_WINDOW}")
    return float(b)


def _diffuse(
    Xw: np.ndarray,
    probs: np.ndarray,
    rng: np.random.Generator,
    count_target: int | None = None,
) -> np.ndarray:
    """Assign 0/1 responses keeping the weighted column residuals near zero.

    Column 0 (the intercept, weight 1) doubles as the count channel: its
    residual is held inside (-1, 1) so the number of ones tracks the
    probability total. The running residual picks up float error over many
    additions, so the guard keeps a margin and ``count_target`` requests an
    exact fix-up afterwards.
    """
    n = Xw.shape[0]
    y = np.zeros(n, dtype=np.int8)
    r = np.zeros(Xw.shape[1])
    guard = 1.0 - 1e-9
    for i in rng.permutation(n):
        xi = Xw[i]
        p = probs[i]
        r1 = r + (1.0 - p) * xi
        r0 = r - p * xi
        if r1[0] >= guard:
            take = False
        elif r0[0] <= -guard:
            take = True
        else:
            take = (r1 @ r1) < (r0 @ r0)
        if take:
            y[i] = 1
            r = r1
        else:
            r = r0

    if count_target is not None:
        delta = Xw.T @ (y - probs)
        diff = int(count_target) - int(y.sum())
        step = 1 if diff > 0 else -1
        for _ in range(abs(diff)):
            rows = np.flatnonzero(y == (0 if step > 0 else 1))
            cands = delta[None, :] + step * Xw[rows]
            pick = rows[int(np.argmin((cands**2).sum(axis=1)))]
            y[pick] += step
            delta = delta + step * Xw[pick]
    return y


def _polish_assignment(
    Xw: np.ndarray,
    probs: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    trials: int = 12_000,
) -> np.ndarray:
    """Count-preserving pair swaps shrinking the residual further."""
    delta = Xw.T @ (y - probs)
    ones = np.flatnonzero(y == 1)
    zeros = np.flatnonzero(y == 0)
    if ones.size == 0 or zeros.size == 0:
        return y
    norm = float(delta @ delta)
    for _ in range(trials):
        a = int(rng.integers(ones.size))
        b = int(rng.integers(zeros.size))
        i, j = ones[a], zeros[b]
        cand = delta + Xw[j] - Xw[i]
        cand_norm = float(cand @ cand)
        if cand_norm < norm - 1e-15:
            delta, norm = cand, cand_norm
            y[i], y[j] = 0, 1
            ones[a], zeros[b] = j, i
    return y


def _column_weights(X: np.ndarray) -> np.ndarray:
    return 1.0 / np.maximum(1.0, np.abs(X).max(axis=0))


def _assemble(seed: int) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    ages = np.repeat(np.arange(AGE_LO, AGE_HI + 1), _age_counts()).astype(np.float64)
    rng.shuffle(ages)
    education = _multiset(EDUCATION_COUNTS, rng)
    afam = _multiset(AFAM_COUNTS, rng)
    hispanic = _multiset(HISPANIC_COUNTS, rng)
    gender = _multiset(GENDER_COUNTS, rng)

    placeholder = np.zeros(N_ROWS, dtype=np.int8)
    bare = _assemble_dataset(ages, education, afam, hispanic, gender, placeholder, placeholder)
    design = encode_design_matrix(bare, smokeban.STUDY.propensity_spec())
    age_slope = _calibrate_age_slope(design.X, design.column_names)
    beta_treat = _model_vector(
        {**TREATMENT_MODEL, "age": age_slope}, design.column_names
    )
    p_treat = expit(design.X @ beta_treat)

    weights = _column_weights(design.X)
    Xw = design.X * weights
    ban01 = _diffuse(Xw, p_treat, rng, count_target=TREATED_ROWS)
    ban01 = _polish_assignment(Xw, p_treat, ban01, rng)
    if int(ban01.sum()) != TREATED_ROWS:
        raise RuntimeError(f"treated count {int(ban01.sum())} != {TREATED_ROWS}")

    with_ban = _assemble_dataset(ages, education, afam, hispanic, gender, ban01, placeholder)
    _, scores = fit_and_score(with_ban, smokeban.STUDY.propensity_spec())
    pairs = match_nearest(scores, MatchOptions())
    if pairs.n_pairs != TREATED_ROWS or pairs.n_unmatched_treated:
        raise RuntimeError("unexpected matching structure during build")

    out_design = encode_design_matrix(with_ban, smokeban.STUDY.outcome_spec())
    beta_out = _model_vector(OUTCOME_MODEL, out_design.column_names)
    p_out = expit(out_design.X @ beta_out)

    matched_pos = pairs.matched_row_ids()
    Xm = out_design.X[matched_pos]
    weights_out = _column_weights(out_design.X)
    smoker_m = _diffuse(Xm * weights_out, p_out[matched_pos], rng)
    smoker_m = _polish_assignment(Xm * weights_out, p_out[matched_pos], smoker_m, rng)

    leftover = SMOKERS - int(smoker_m.sum())
    unmatched = pairs.unmatched_control_ids
    if not 0 < leftover < unmatched.size:
        raise RuntimeError(
            f"{leftover} smokers left for {unmatched.size} unmatched controls"
        )
    q = p_out[unmatched].copy()
    for _ in range(8):
        q *= leftover / q.sum()
        np.clip(q, 0.0, 0.999, out=q)
    smoker_u = _diffuse(np.ones((unmatched.size, 1)), q, rng, count_target=leftover)

    smoker01 = np.zeros(N_ROWS, dtype=np.int8)
    smoker01[matched_pos] = smoker_m
    smoker01[unmatched] = smoker_u
    if int(smoker01.sum()) != SMOKERS:
        raise RuntimeError(f"smoker count {int(smoker01.sum())} != {SMOKERS}")

    return pd.DataFrame(
        {
            "smoker": np.where(smoker01 == 1, "yes", "no"),
            "ban": np.where(ban01 == 1, "no", "yes"),
            "age": ages.astype(np.int64),
            "education": education,
            "afam": afam,
            "hispanic": hispanic,
            "gender": gender,
        }
    )


def verify_reference_csv(path) -> list[str]:
    """Replay the full pipeline on a CSV; returns a list of problems."""
    problems: list[str] = []

    def check(ok: bool, message: str):
        if not ok:
            problems.append(message)

    d = load_csv(path, smokeban.SCHEMA)
    d = smokeban.STUDY.prepare(d)
    check(d.n_rows == N_ROWS, f"{d.n_rows} rows")
    check(d.dropped_rows == 0, f"{d.dropped_rows} dropped rows")

    rep = summarize(d)
    cols = rep["columns"]
    check(cols["smoker"]["counts"] == {"0": N_ROWS - SMOKERS, "1": SMOKERS}, "smoker counts")
    check(cols["ban"]["counts"] == {"0": N_ROWS - TREATED_ROWS, "1": TREATED_ROWS}, "ban counts")
    check(cols["gender"]["counts"] == GENDER_COUNTS, "gender counts")
    check(cols["afam"]["counts"] == AFAM_COUNTS, "afam counts")
    check(cols["hispanic"]["counts"] == HISPANIC_COUNTS, "hispanic counts")
    check(cols["education"]["counts"] == EDUCATION_COUNTS, "education counts")
    age = cols["age"]
    check(abs(age["mean"] - AGE_MEAN) <= 0.008, f"age mean {age['mean']}")
    check(abs(age["sd"] - AGE_SD) <= 0.008, f"age sd {age['sd']}")
    check(age["min"] == AGE_LO and age["max"] == AGE_HI, "age range")

    fit, scores = fit_and_score(d, smokeban.STUDY.propensity_spec())
    table = wald_inference(fit)
    for term, target in PROPENSITY_TARGETS.items():
        got = fit.coefficient(term)
        check(abs(got - target) <= PROPENSITY_TOL, f"propensity {term}: {got:.4f} vs {target}")
    for term in SMALL_P_TERMS:
        p = table.row(term)["p"]
        check(p < 8e-4, f"propensity {term} p-value {p:.2e}")
    for term in MID_P_TERMS:
        p = table.row(term)["p"]
        check(0.06 <= p <= 0.33, f"propensity {term} p-value {p:.3f}")

    pairs = match_nearest(scores, MatchOptions())
    check(pairs.n_pairs == TREATED_ROWS, f"{pairs.n_pairs} pairs")
    check(pairs.n_unmatched_controls == N_ROWS - 2 * TREATED_ROWS,
          f"{pairs.n_unmatched_controls} unmatched controls")
    check(pairs.n_unmatched_treated == 0, "unmatched treated present")

    matched = matched_dataset(d, pairs)
    bal = balance_report(d, matched, smokeban.STUDY.propensity_spec())
    check(bal.max_abs_after < 0.085, f"max |SMD| after {bal.max_abs_after:.3f}")
    check(bal.mean_abs_after + 0.02 < bal.mean_abs_before,
          f"mean |SMD| {bal.mean_abs_before:.3f} -> {bal.mean_abs_after:.3f}")
    check(not bal.has_degenerate, "degenerate balance indicator")

    outcome = fit_outcome_model(matched, smokeban.STUDY.outcome_spec())
    out_table = wald_inference(outcome)
    for term, target in OUTCOME_MODEL.items():
        got = outcome.coefficient(term)
        tol = 0.08 if term == "ban" else OUTCOME_TOL
        check(abs(got - target) <= tol, f"outcome {term}: {got:.4f} vs {target}")
        check(np.sign(got) == np.sign(target), f"outcome {term} sign: {got:.4f}")
    p_treat = out_table.row("ban")["p"]
    check(p_treat < 1e-4, f"outcome treatment p-value {p_treat:.2e}")

    return problems


def build_reference_csv(path, seed: int = 0, attempts: int = 40) -> Path:
    """Build, verify and write the reference CSV; retries over seeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    failures: list[str] = []
    for s in range(seed, seed + attempts):
        try:
            df = _assemble(s)
        except RuntimeError as exc:
            failures.append(f"seed {s}: {exc}")
            continue
        tmp = path.with_name(path.name + ".tmp")
        df.to_csv(tmp, index=False)
        problems = verify_reference_csv(tmp)
        if not problems:
            tmp.replace(path)
            return path
        tmp.unlink()
        failures.append(f"seed {s}: " + "; ".join(problems[:4]))
    raise RuntimeError("could not build a passing dataset:\n" + "\n".join(failures))
