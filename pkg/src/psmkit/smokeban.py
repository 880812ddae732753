"""Built-in study configuration for the workplace smoking-ban dataset.

The dataset has one row per indoor worker with their smoking status, whether
their workplace bans smoking, and a handful of demographic covariates. The
propensity model regresses ban status on the demographics; the outcome model
regresses smoking status on ban status plus the same demographics.
"""

from __future__ import annotations

from .data import CATEGORICAL, NUMERIC, StudySpec, Term

EDUCATION_LEVELS = ("college", "hs", "hs drop out", "master", "some college")

STUDY = StudySpec(
    response="smoker",
    treatment="ban",
    covariates=(
        Term("education", CATEGORICAL, reference="college", levels=EDUCATION_LEVELS),
        Term("afam", CATEGORICAL, reference="no", levels=("no", "yes")),
        Term("hispanic", CATEGORICAL, reference="no", levels=("no", "yes")),
        Term("gender", CATEGORICAL, reference="female", levels=("female", "male")),
        Term("age", NUMERIC),
    ),
    # "yes" means the worker smokes; a workplace *without* a ban is the
    # treated condition in this study, so ban == "no" codes to 1.
    response_positive="yes",
    treated_level="no",
)

SCHEMA = STUDY.schema()
