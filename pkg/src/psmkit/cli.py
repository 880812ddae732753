"""Command-line interface.

Every subcommand reads a CSV, runs part of the matching pipeline, writes
delimited artifacts into an output directory, and prints a short recap.
Exit codes: 0 success, 1 usage error, 2 data or schema problem, 3 numerical
failure (separation, rank deficiency, non-convergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import smokeban
from .balance import DENOMINATORS, balance_report, histogram_backtoback, histograms_dataframe
from .data import Dataset, StudySpec, load_csv, summarize
from .effect import effect_summary, fit_outcome_model
from .errors import DataError, NumericError
from .logit import FittedLogit, wald_inference
from .matching import (
    ORDERS,
    MatchOptions,
    jitter_table,
    match_nearest,
    matched_dataset,
    read_pairs_csv,
)
from .propensity import fit_and_score

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; this CLI promises 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_study(args) -> tuple[StudySpec, Dataset]:
    spec = StudySpec.from_json_file(args.spec) if args.spec else smokeban.STUDY
    d = load_csv(args.csv, spec.schema())
    return spec, spec.prepare(d)


def _write_model(fit: FittedLogit, stem: Path) -> None:
    table = wald_inference(fit)
    table.to_csv(stem.with_suffix(".csv"))
    payload = {
        "terms": table.to_records(),
        "deviance": fit.deviance,
        "iterations": fit.n_iter,
        "n_obs": fit.n_obs,
    }
    stem.with_suffix(".json").write_text(json.dumps(payload, indent=2) + "\n")


def _outdir(args) -> Path:
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_summarize(args) -> int:
    spec, d = _load_study(args)
    report = summarize(d)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        (_outdir(args) / "summary.json").write_text(text + "\n")
    return EXIT_OK


def _cmd_fit_propensity(args) -> int:
    spec, d = _load_study(args)
    fit, scores = fit_and_score(d, spec.propensity_spec())
    out = _outdir(args)
    _write_model(fit, out / "propensity_model")
    scores.to_csv(out / "scores.csv")
    table = wald_inference(fit)
    for row in table.to_records():
        print(f"{row['term']:<28} {row['estimate']:>9.4f}  se {row['se']:.4f}  p {row['p']:.3g}")
    print(f"deviance {fit.deviance:.2f} after {fit.n_iter} iterations on {fit.n_obs} rows")
    return EXIT_OK


def _cmd_match(args) -> int:
    spec, d = _load_study(args)
    _, scores = fit_and_score(d, spec.propensity_spec())
    pairs = match_nearest(scores, MatchOptions(order=args.order))
    out = _outdir(args)
    pairs.to_csv(out / "pairs.csv")
    jitter_table(scores, pairs).to_csv(out / "jitter.csv", index=False)
    print(
        f"{pairs.n_pairs} pairs; {pairs.n_unmatched_controls} unmatched controls; "
        f"{pairs.n_unmatched_treated} unmatched treated"
    )
    return EXIT_OK


def _cmd_balance(args) -> int:
    spec, d = _load_study(args)
    pairs = read_pairs_csv(args.pairs)
    matched = matched_dataset(d, pairs)
    report = balance_report(d, matched, spec.propensity_spec(), denominator=args.denominator)
    _, scores = fit_and_score(d, spec.propensity_spec())
    hist_before = histogram_backtoback(scores, "before", bins=args.bins)
    hist_after = histogram_backtoback(scores.subset(pairs.matched_row_ids()), "after", bins=args.bins)
    out = _outdir(args)
    report.to_csv(out / "love_plot.csv")
    histograms_dataframe(hist_before, hist_after).to_csv(out / "histograms.csv", index=False)
    print(
        f"max |SMD| after: {report.max_abs_after:.4f}; "
        f"mean |SMD| {report.mean_abs_before:.4f} -> {report.mean_abs_after:.4f}"
    )
    return EXIT_OK


def _cmd_estimate(args) -> int:
    spec, d = _load_study(args)
    pairs = read_pairs_csv(args.pairs)
    matched = matched_dataset(d, pairs)
    fit = fit_outcome_model(matched, spec.outcome_spec())
    report = effect_summary(fit, pairs, spec.treatment)
    out = _outdir(args)
    _write_model(fit, out / "outcome_model")
    (out / "effect.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    row = report.treatment_row
    print(
        f"treatment log-odds {report.log_odds:.4f} (se {row['se']:.4f}, p {row['p']:.3g}); "
        f"odds ratio {report.odds_ratio:.4f}; logistic transform {report.probability:.4f}"
    )
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    spec, d = _load_study(args)
    out = _outdir(args)

    report = summarize(d)
    (out / "summary.json").write_text(json.dumps(report, indent=2) + "\n")

    fit, scores = fit_and_score(d, spec.propensity_spec())
    _write_model(fit, out / "propensity_model")
    scores.to_csv(out / "scores.csv")

    pairs = match_nearest(scores, MatchOptions(order=args.order))
    pairs.to_csv(out / "pairs.csv")
    jitter = jitter_table(scores, pairs)
    jitter.to_csv(out / "jitter.csv", index=False)

    matched = matched_dataset(d, pairs)
    bal = balance_report(d, matched, spec.propensity_spec(), denominator=args.denominator)
    bal.to_csv(out / "love_plot.csv")
    hist_before = histogram_backtoback(scores, "before", bins=args.bins)
    hist_after = histogram_backtoback(scores.subset(pairs.matched_row_ids()), "after", bins=args.bins)
    histograms_dataframe(hist_before, hist_after).to_csv(out / "histograms.csv", index=False)

    outcome = fit_outcome_model(matched, spec.outcome_spec())
    _write_model(outcome, out / "outcome_model")
    effect = effect_summary(outcome, pairs, spec.treatment)
    (out / "effect.json").write_text(json.dumps(effect.to_dict(), indent=2) + "\n")

    if not args.no_figures:
        from .figures import render_all  # deferred: matplotlib import is slow

        render_all(out, jitter, histograms_dataframe(hist_before, hist_after), bal)

    row = effect.treatment_row
    print(f"rows {d.n_rows}; pairs {pairs.n_pairs}; unmatched controls {pairs.n_unmatched_controls}")
    print(f"max |SMD| after {bal.max_abs_after:.4f} (mean {bal.mean_abs_before:.4f} -> {bal.mean_abs_after:.4f})")
    print(
        f"treatment log-odds {effect.log_odds:.4f} (se {row['se']:.4f}, p {row['p']:.3g}); "
        f"odds ratio {effect.odds_ratio:.4f}"
    )
    print(f"artifacts in {out}")
    return EXIT_OK


def _cmd_make_data(args) -> int:
    from .refdata import build_reference_csv  # deferred: only this command needs it

    path = build_reference_csv(args.out_csv, seed=args.seed)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psmkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, *, pairs=False, order=False, bal=False,
            out_default=".", out_required=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("csv", help="input CSV file")
        p.add_argument("--spec", help="study spec JSON (default: built-in smoking-ban study)")
        p.add_argument("--out", default=out_default, required=out_required,
                       help="output directory")
        if pairs:
            p.add_argument("--pairs", required=True, help="pairs CSV from the match step")
        if order:
            p.add_argument("--order", choices=ORDERS, default="desc", help="treated sweep order")
        if bal:
            p.add_argument("--denominator", choices=DENOMINATORS, default="stage",
                           help="SMD denominator convention")
            p.add_argument("--bins", type=int, default=20, help="histogram bin count")
        p.set_defaults(func=func)
        return p

    add("summarize", _cmd_summarize, "per-column counts and numeric stats", out_default=None)
    add("fit-propensity", _cmd_fit_propensity, "fit the treatment model and score all rows")
    add("match", _cmd_match, "greedy 1:1 nearest-neighbor matching", order=True)
    add("balance", _cmd_balance, "SMD table and score histograms", pairs=True, bal=True)
    add("estimate", _cmd_estimate, "outcome model and treatment effect", pairs=True)
    pl = add("pipeline", _cmd_pipeline, "run every step and write all artifacts",
             order=True, bal=True, out_default=None, out_required=True)
    pl.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    mk = sub.add_parser("make-data", help="generate the bundled reference dataset")
    mk.add_argument("out_csv", help="where to write the CSV")
    mk.add_argument("--seed", type=int, default=0, help="starting seed for the builder")
    mk.set_defaults(func=_cmd_make_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"psmkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"psmkit: {exc}", file=sys.stderr)
        return EXIT_DATA


def run() -> None:
    sys.exit(main())
