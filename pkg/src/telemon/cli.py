"""Command line for offline experiments and for running the service.

Subcommands: simulate, preprocess, train, search, eval, compare,
triage-sim, serve. Every run with the same inputs and --seed produces
byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from . import cohort_io, features, metrics, mlp, rules, simulate, triage
from .errors import TelemonError
from .pipeline import (
    assemble_samples,
    oversample_minority,
    sample_matrix,
    split_by_patient,
    standardize,
)
from .scoring import ModelScorer, RuleScorer, simulate_triage

COHORT_CONFIG_FILE = "cohort-config"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="seed for all randomized steps")
    parser.add_argument("--out", required=True, help="output file or directory")
    parser.add_argument("--config", help="key=value config file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="telemon")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic cohort")
    _add_common(p)
    p.add_argument("--patients", type=int, default=763)
    p.add_argument("--days", type=int, default=365)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="build labeled, split, standardized sample sets")
    _add_common(p)
    p.add_argument("--data", required=True, help="cohort directory (simulate output)")
    p.add_argument("--horizon", type=int, default=0, help="label horizon in days")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train a risk model end to end")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--hidden", default="35,20,35", help="hidden layer sizes, comma separated")
    p.add_argument("--dropout", default="0.25,0.15,0.3", help="dropout per hidden layer")
    p.add_argument("--activation", default="relu", choices=list(mlp.ACTIVATIONS))
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--batch-size", type=int, default=4096)
    p.add_argument("--epochs", type=int, default=453)
    p.add_argument("--patience", type=int, default=50, help="-1 disables early stopping")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--budget", type=int, default=10)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=4096)
    p.add_argument("--patience", type=int, default=15)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="metrics CSVs for one scorer on the test set")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--model", help="model file; omit to evaluate a rule set")
    p.add_argument("--rules", help="'default' or a .rules file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="model vs rules on the same test set")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--horizon", type=int, default=0)
    p.add_argument("--model", required=True)
    p.add_argument("--rules", default="default")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("triage-sim", help="replay daily worklists over a cohort")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", help="model file; omit to score with rules")
    p.add_argument("--rules", default="default")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--coverage", type=int, default=14)
    p.add_argument("--days", type=int, help="limit the replayed horizon")
    p.set_defaults(func=cmd_triage_sim)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--data", required=True, help="service data directory")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--model", help="model id inside the data directory")
    p.add_argument("--capacity", type=int, default=20)
    p.add_argument("--coverage", type=int, default=14)
    p.add_argument("--mode", choices=["live", "sim"], default="live")
    p.add_argument("--sim-start", help="sim-mode start date (YYYY-MM-DD)")
    p.add_argument("--ui", help="directory with built frontend assets to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def _load_cohort_config(args) -> simulate.CohortConfig:
    if args.config:
        config = simulate.config_from_text(Path(args.config).read_text())
    else:
        config = simulate.CohortConfig()
    config.n_patients = args.patients
    config.horizon_days = args.days
    config.seed = args.seed
    config.validate()
    return config


def cmd_simulate(args) -> int:
    config = _load_cohort_config(args)
    profiles, measurements, events = simulate.generate_cohort(config)
    out = Path(args.out)
    cohort_io.write_cohort(out, profiles, measurements, events)
    (out / COHORT_CONFIG_FILE).write_text(simulate.config_to_text(config))
    summary = simulate.summarize_cohort(profiles, measurements, events)
    print(f"wrote {summary.n_patients} patients, {summary.n_measurements} measurement days, "
          f"{sum(summary.events_by_kind.values())} events to {out}")
    print(f"positive-day rate {summary.positive_day_rate:.4f}, "
          f"missingness {summary.missingness_rate:.4f}, deaths {summary.n_deaths}")
    return 0


def _prepared_split(args):
    profiles, measurements, events = cohort_io.load_cohort_dir(args.data)
    samples = assemble_samples(profiles, measurements, events, horizon=args.horizon)
    split = split_by_patient(samples, seed=args.seed)
    split = replace(split, train=oversample_minority(split.train, seed=args.seed))
    return standardize(split), split


def cmd_preprocess(args) -> int:
    std, raw = _prepared_split(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, samples in (("train", std.train), ("validation", std.validation), ("test", std.test)):
        cohort_io.write_samples(out / f"{name}.csv", samples)
    cohort_io.write_scaler(out / "scaler.csv", std.scaler)
    print(f"train {len(std.train)} / validation {len(std.validation)} / test {len(std.test)} "
          f"samples written to {out}")
    return 0


def _parse_hidden(args) -> tuple[list[int], list[float]]:
    hidden = [int(v) for v in args.hidden.split(",") if v]
    dropout = [float(v) for v in args.dropout.split(",") if v]
    if len(dropout) == 1:
        dropout = dropout * len(hidden)
    return hidden, dropout


def _train_config(args) -> mlp.TrainConfig:
    return mlp.TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=None if args.patience < 0 else args.patience,
        seed=args.seed,
    )


def cmd_train(args) -> int:
    std, raw = _prepared_split(args)
    hidden, dropout = _parse_hidden(args)
    input_dim = std.train[0].features.shape[0]
    model = mlp.init_model([input_dim, *hidden, 1], args.activation, dropout, seed=args.seed)
    model, history = mlp.train(model, std, _train_config(args))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    mlp.save_model(out, model, std.scaler)
    _write_history(out.with_suffix(out.suffix + ".history.csv"), history)
    best = history.val_auc[history.selected_epoch - 1]
    print(f"trained {len(history)} epochs, selected epoch {history.selected_epoch} "
          f"(val AUCROC {best:.4f}); model written to {out}")
    return 0


def _write_history(path: Path, history: mlp.TrainHistory) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss", "val_auc", "selected"])
        for i, (tl, vl, va) in enumerate(zip(history.train_loss, history.val_loss, history.val_auc), 1):
            w.writerow([i, repr(tl), repr(vl), repr(va), int(i == history.selected_epoch)])


def cmd_search(args) -> int:
    std, raw = _prepared_split(args)
    space = mlp.SearchSpace(budget=args.budget, seed=args.seed)
    base = mlp.TrainConfig(batch_size=args.batch_size, max_epochs=args.epochs,
                           patience=args.patience, seed=args.seed)
    input_dim = std.train[0].features.shape[0]
    best_model, best_history, leaderboard = mlp.random_search(space, std, base, input_dim=input_dim)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mlp.save_model(out / "best.model", best_model, std.scaler)
    with open(out / "leaderboard.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "hidden_dims", "activation", "dropout_rates", "val_auc", "selected_epoch"])
        for rank, trial in enumerate(leaderboard, 1):
            w.writerow([
                rank, "|".join(str(d) for d in trial.hidden_dims), trial.activation,
                "|".join(repr(r) for r in trial.dropout_rates), repr(trial.val_auc),
                trial.selected_epoch,
            ])
    print(f"searched {len(leaderboard)} configurations; best val AUCROC "
          f"{leaderboard[0].val_auc:.4f} written to {out}")
    return 0


def _load_ruleset(spec: str | None) -> rules.RuleSet:
    if spec is None or spec == "default":
        return rules.default_ruleset()
    return rules.parse_ruleset(Path(spec).read_text())


def _test_scored(args, scorer):
    _, raw = _prepared_split(args)
    X_test, y_test = sample_matrix(raw.test)
    provenance = [(s.patient_id, s.date.isoformat()) for s in raw.test]
    return metrics.ScoredSet(scorer.score_rows(X_test), y_test, provenance=provenance), X_test, y_test


def cmd_eval(args) -> int:
    if args.model:
        model, scaler = mlp.load_model(args.model)
        scorer = ModelScorer(model, scaler)
    else:
        scorer = RuleScorer(_load_ruleset(args.rules))
    scored, X_test, y_test = _test_scored(args, scorer)
    report = metrics.compute_report(scored)
    out = Path(args.out)
    metrics.write_report_csvs(report, out, prefix=scorer.name)
    importance = metrics.permutation_importance(scorer.score_rows, X_test, y_test,
                                                n_repeats=10, seed=args.seed)
    with open(out / f"{scorer.name}_importance.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "mean_auc_drop"])
        for name, drop in zip(features.FEATURE_NAMES, importance.mean_drop):
            w.writerow([name, repr(float(drop))])
    print(f"{scorer.name}: AUCROC {report.aucroc:.4f}, AUCPR {report.aucpr:.4f} "
          f"({report.n_pos} pos / {report.n_neg} neg); reports in {out}")
    return 0


def cmd_compare(args) -> int:
    model, scaler = mlp.load_model(args.model)
    model_scorer = ModelScorer(model, scaler)
    rule_scorer = RuleScorer(_load_ruleset(args.rules))

    _, raw = _prepared_split(args)
    X_test, y_test = sample_matrix(raw.test)
    provenance = [(s.patient_id, s.date.isoformat()) for s in raw.test]
    model_report = metrics.compute_report(
        metrics.ScoredSet(model_scorer.score_rows(X_test), y_test, provenance=provenance))
    rules_report = metrics.compute_report(
        metrics.ScoredSet(rule_scorer.score_rows(X_test), y_test, provenance=provenance))
    comparison = metrics.compare(model_report, rules_report)

    out = Path(args.out)
    metrics.write_report_csvs(model_report, out, prefix="model")
    metrics.write_report_csvs(rules_report, out, prefix="rules")
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "model", "rules", "delta"])
        w.writerow(["aucroc", repr(comparison.aucroc_a), repr(comparison.aucroc_b),
                    repr(comparison.aucroc_delta)])
        w.writerow(["aucpr", repr(comparison.aucpr_a), repr(comparison.aucpr_b),
                    repr(comparison.aucpr_delta)])
        for spec, (sa, sb, delta) in comparison.sensitivity.items():
            w.writerow([f"sensitivity_at_spec_{spec}", repr(sa), repr(sb), repr(delta)])
    print(f"model AUCROC {comparison.aucroc_a:.4f} vs rules {comparison.aucroc_b:.4f} "
          f"(delta {comparison.aucroc_delta:+.4f}); reports in {out}")
    return 0


def cmd_triage_sim(args) -> int:
    profiles, measurements, _ = cohort_io.load_cohort_dir(args.data)
    if args.model:
        model, scaler = mlp.load_model(args.model)
        scorer = ModelScorer(model, scaler)
    else:
        scorer = RuleScorer(_load_ruleset(args.rules))
    report = simulate_triage(profiles, measurements, scorer,
                             capacity=args.capacity, coverage_days=args.coverage,
                             horizon=args.days)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    triage.write_coverage_csv(report, out / "triage_report.csv")
    feasible = "feasible" if report.guarantee_feasible else "INFEASIBLE (capacity < ceil(N/D))"
    print(f"{report.n_patients} patients, capacity {report.capacity}, coverage {report.coverage_days}d: "
          f"guarantee {feasible}; max gap {report.max_gap_days}d; "
          f"{report.coverage_slot_fraction:.1%} of slots were coverage promotions; "
          f"mean risk reviewed {report.mean_risk_reviewed:.3f} vs unreviewed {report.mean_risk_unreviewed:.3f}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from datetime import date as Date

    from .service import create_app

    app = create_app(
        args.data,
        model_id=args.model,
        capacity=args.capacity,
        coverage_days=args.coverage,
        mode=args.mode,
        sim_start=Date.fromisoformat(args.sim_start) if args.sim_start else None,
        static_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TelemonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
