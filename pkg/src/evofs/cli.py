"""Command-line interface.

Subcommands: ``gen-data``, ``run-ga``, ``run-fastslow``, ``sweep-mu``,
``sweep-alpha``, ``baseline``. Every run/sweep command prints a one-line
summary, writes a JSON or CSV report, and (unless ``--no-plot``) renders a
PNG figure next to the report. ``--config FILE`` loads ``key = value``
defaults; explicit flags win. Exit codes: 0 success, 1 usage/validation
error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

from .dataset import (DEFAULT_TARGET_NAME, Dataset, generate_toy, kfold_split,
                      load_csv, save_csv)
from .errors import ConfigError, IngestionError
from .estimator import (KIND_FOREST, KIND_LOGISTIC, CVScorer, EstimatorSpec)
from .experiments import (PRESETS, alpha_sweep, baseline_no_selection,
                          default_mu_grid, mutation_sweep)
from .fastslow import FastSlowConfig, run_fast_slow
from .ga import GAConfig, run_ga
from .report import RunReport, SweepSummary, _atomic_write, _rounded, emit_report

ESTIMATOR_KINDS = {"logreg": KIND_LOGISTIC, "forest": KIND_FOREST}


class _SubParser(argparse.ArgumentParser):
    """Subcommand parser that shows defaults in --help."""

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _add_dataset_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("dataset source (CSV file or generated toy data)")
    g.add_argument("--data", metavar="CSV", help="input CSV file")
    g.add_argument("--target", metavar="NAME", help="target column name (with --data)")
    g.add_argument("--no-header", action="store_true",
                   help="CSV has no header row (columns named f0, f1, ...)")
    g.add_argument("--samples", type=int, default=None,
                   help="toy dataset rows (default from --preset, else 1000)")
    g.add_argument("--features", type=int, default=50, help="toy dataset columns")
    g.add_argument("--significant", type=int, default=10,
                   help="toy columns that determine the label")
    g.add_argument("--threshold", type=float, default=0.5, help="toy labeling threshold")
    g.add_argument("--data-seed", type=int, default=0, help="toy generator seed")


def _add_estimator_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("estimator")
    g.add_argument("--estimator", choices=sorted(ESTIMATOR_KINDS), default="logreg")
    g.add_argument("--lr-rate", type=float, default=1.0,
                   help="logistic regression learning rate")
    g.add_argument("--lr-epochs", type=int, default=30,
                   help="logistic regression gradient-descent epochs")
    g.add_argument("--lr-l2", type=float, default=1e-4,
                   help="logistic regression L2 penalty")
    g.add_argument("--rf-trees", type=int, default=50, help="forest size")
    g.add_argument("--rf-depth", type=int, default=8, help="forest max depth")
    g.add_argument("--rf-min-leaf", type=int, default=2, help="forest min leaf size")
    g.add_argument("--rf-subsample", type=float, default=None,
                   help="forest per-split feature fraction (default sqrt rule)")
    g.add_argument("--est-seed", type=int, default=0, help="estimator seed (forest)")
    g.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    g.add_argument("--folds-seed", type=int, default=0, help="fold shuffle seed")
    g.add_argument("--stratify", action="store_true",
                   help="stratify folds by class label")


def _add_output_flags(p: argparse.ArgumentParser, plot: bool = True) -> None:
    g = p.add_argument_group("output")
    g.add_argument("-o", "--output", default=None,
                   help="report path (default evofs-<command>.<format>)")
    g.add_argument("--format", choices=["json", "csv"], default="json")
    if plot:
        g.add_argument("--no-plot", action="store_true",
                       help="skip rendering the PNG figure next to the report")
    g.add_argument("--config", metavar="FILE", default=None,
                   help="load 'key = value' defaults; explicit flags win")
    g.add_argument("-v", "--verbose", action="store_true")


def _add_ga_flags(p: argparse.ArgumentParser, with_mu: bool = True) -> None:
    g = p.add_argument_group("evolution")
    g.add_argument("--pop", type=int, default=20, help="population size")
    if with_mu:
        g.add_argument("--mu", type=float, default=0.1, help="per-bit mutation rate")
        g.add_argument("--generations", type=int, default=20)
    g.add_argument("--alpha", type=float, default=1.0,
                   help="accuracy weight in the fitness (1 ignores sparsity)")
    g.add_argument("--init-density", type=float, default=0.5,
                   help="probability a bit starts selected")
    g.add_argument("--seed", type=int, default=0, help="evolution seed")
    g.add_argument("--distinct-parents", action="store_true",
                   help="redraw the second parent until it differs from the first")


def _add_fastslow_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("fast/slow islands")
    g.add_argument("--mu-fast", type=float, default=1.0, help="fast island mutation rate")
    g.add_argument("--mu-slow", type=float, default=0.1, help="slow island mutation rate")
    g.add_argument("--inner", type=int, default=5, help="generations per island per round")
    g.add_argument("--rounds", type=int, default=4, help="outer merge rounds")
    g.add_argument("--serial", action="store_true",
                   help="run the islands back to back instead of in parallel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evofs",
        description="Feature selection with fast- and slow-evolving genetic algorithms.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_SubParser)

    p = sub.add_parser("gen-data", help="write a toy benchmark CSV")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--features", type=int, default=50)
    p.add_argument("--significant", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--seed", "--data-seed", dest="data_seed", type=int, default=0)
    p.add_argument("--target-name", default=DEFAULT_TARGET_NAME)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("-o", "--output", required=True, help="CSV path to write")
    p.add_argument("--config", metavar="FILE", default=None)
    p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("run-ga", help="single genetic algorithm run")
    _add_dataset_flags(p)
    _add_estimator_flags(p)
    _add_ga_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    _add_output_flags(p)

    p = sub.add_parser("run-fastslow", help="two-island fast/slow run")
    _add_dataset_flags(p)
    _add_estimator_flags(p)
    _add_ga_flags(p, with_mu=False)
    _add_fastslow_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    _add_output_flags(p)

    p = sub.add_parser("sweep-mu", help="mutation-rate sweep of single-GA ensembles")
    _add_dataset_flags(p)
    _add_estimator_flags(p)
    _add_ga_flags(p)
    p.add_argument("--mu-values", type=_float_list, default=None,
                   help="comma-separated rates (default: 0.01,0.03,...,0.99)")
    p.add_argument("--runs", type=int, default=None,
                   help="runs per value (default from --preset, else 10)")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    _add_output_flags(p)

    p = sub.add_parser("sweep-alpha", help="accuracy-weight sweep of fast/slow ensembles")
    _add_dataset_flags(p)
    _add_estimator_flags(p)
    _add_ga_flags(p, with_mu=False)
    _add_fastslow_flags(p)
    p.add_argument("--alpha-values", type=_float_list,
                   default=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    _add_output_flags(p)

    p = sub.add_parser("baseline", help="cross-validated score with all features")
    _add_dataset_flags(p)
    _add_estimator_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    _add_output_flags(p, plot=False)

    return parser


def _load_config_file(path: str) -> list[str]:
    """Turn 'key = value' lines into synthetic command-line flags."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IngestionError(f"cannot read config file {path}: {exc}") from exc
    flags: list[str] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}: line {lineno}: empty key")
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            flags.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            flags.extend([flag, value])
    return flags


def _inject_config(argv: list[str]) -> list[str]:
    """Splice config-file flags in after the subcommand; user flags win."""
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            break
    if path is None or not argv:
        return argv
    return [argv[0]] + _load_config_file(path) + argv[1:]


def _resolve_preset(args) -> tuple[int, int]:
    preset = PRESETS[args.preset] if getattr(args, "preset", None) else None
    samples = getattr(args, "samples", None)
    if samples is None:
        samples = preset.n_samples if preset else 1000
    runs = getattr(args, "runs", None)
    if runs is None:
        runs = preset.runs if preset else 10
    return samples, runs


def _build_dataset(args, samples: int) -> tuple[Dataset, list[str] | None]:
    if args.data:
        if not args.target:
            raise ConfigError("--target is required with --data")
        return load_csv(args.data, args.target, header=not args.no_header)
    dataset = generate_toy(samples, args.features, args.significant,
                           args.threshold, args.data_seed)
    return dataset, None


def _build_spec(args) -> EstimatorSpec:
    return EstimatorSpec(
        kind=ESTIMATOR_KINDS[args.estimator],
        lr_learning_rate=args.lr_rate,
        lr_epochs=args.lr_epochs,
        lr_l2=args.lr_l2,
        rf_n_trees=args.rf_trees,
        rf_max_depth=args.rf_depth,
        rf_min_leaf=args.rf_min_leaf,
        rf_feature_subsample=args.rf_subsample,
        seed=args.est_seed,
    )


def _build_scorer(args, dataset: Dataset) -> CVScorer:
    labels = dataset.target if args.stratify else None
    folds = kfold_split(dataset.n_samples, args.folds, args.folds_seed,
                        stratify_labels=labels)
    return CVScorer(dataset, _build_spec(args), folds)


def _out_path(args, command: str) -> str:
    if args.output:
        return args.output
    return f"evofs-{command}.{args.format}"


def _emit(args, obj: RunReport | SweepSummary, command: str) -> str:
    path = _out_path(args, command)
    emit_report(obj, args.format, path)
    if not getattr(args, "no_plot", True):
        png = os.path.splitext(path)[0] + ".png"
        from . import plots
        if isinstance(obj, SweepSummary):
            plots.plot_sweep(obj, png)
        else:
            plots.plot_run(obj, png)
        if args.verbose:
            print(f"figure written to {png}", file=sys.stderr)
    return path


def _summary_line(report: RunReport) -> str:
    names = ", ".join(report.selected_features)
    return (f"best score {report.best_score:.4f} | fitness {report.best_fitness:.4f} "
            f"| features {report.best_n_selected}/{report.n_features} | {names}")


def _cmd_gen_data(args) -> int:
    samples, _ = _resolve_preset(args)
    dataset = generate_toy(samples, args.features, args.significant,
                           args.threshold, args.data_seed)
    save_csv(dataset, args.output, target_name=args.target_name)
    print(f"wrote toy dataset: {dataset.n_samples} rows, {dataset.n_features} "
          f"features + target {args.target_name!r} -> {args.output}")
    return 0


def _cmd_run_ga(args) -> int:
    samples, _ = _resolve_preset(args)
    dataset, class_labels = _build_dataset(args, samples)
    scorer = _build_scorer(args, dataset)
    config = GAConfig(population_size=args.pop, mutation_rate=args.mu,
                      alpha=args.alpha, generations=args.generations,
                      init_density=args.init_density, seed=args.seed,
                      distinct_parents=args.distinct_parents)
    report = run_ga(config, dataset, scorer)
    report.class_labels = class_labels
    path = _emit(args, report, "run-ga")
    print(_summary_line(report))
    if args.verbose:
        print(f"report written to {path} in {report.duration_seconds:.2f}s",
              file=sys.stderr)
    return 0


def _cmd_run_fastslow(args) -> int:
    samples, _ = _resolve_preset(args)
    dataset, class_labels = _build_dataset(args, samples)
    scorer = _build_scorer(args, dataset)
    config = FastSlowConfig(
        base=GAConfig(population_size=args.pop, mutation_rate=args.mu_slow,
                      alpha=args.alpha, generations=args.inner,
                      init_density=args.init_density, seed=args.seed,
                      distinct_parents=args.distinct_parents),
        mu_fast=args.mu_fast, mu_slow=args.mu_slow,
        inner_generations=args.inner, outer_rounds=args.rounds)
    report = run_fast_slow(config, dataset, scorer, parallel=not args.serial)
    report.class_labels = class_labels
    path = _emit(args, report, "run-fastslow")
    print(_summary_line(report))
    if args.verbose:
        print(f"report written to {path} in {report.duration_seconds:.2f}s",
              file=sys.stderr)
    return 0


def _cmd_sweep_mu(args) -> int:
    samples, runs = _resolve_preset(args)
    dataset, _ = _build_dataset(args, samples)
    scorer = _build_scorer(args, dataset)
    config = GAConfig(population_size=args.pop, mutation_rate=args.mu,
                      alpha=args.alpha, generations=args.generations,
                      init_density=args.init_density, seed=args.seed,
                      distinct_parents=args.distinct_parents)
    values = args.mu_values if args.mu_values else default_mu_grid()
    summary = mutation_sweep(values, runs, config, dataset, scorer.spec,
                             scorer.folds, base_seed=args.seed, cache=scorer.cache)
    path = _emit(args, summary, "sweep-mu")
    best = max(summary.points, key=lambda p: p.mean_score)
    print(f"best mu {best.value:g}: mean score {best.mean_score:.4f} "
          f"± {best.std_score:.4f} | mean features {best.mean_n_selected:.1f} "
          f"| baseline {summary.baseline_score:.4f}")
    if args.verbose:
        print(f"summary written to {path} in {summary.duration_seconds:.2f}s",
              file=sys.stderr)
    return 0


def _cmd_sweep_alpha(args) -> int:
    samples, runs = _resolve_preset(args)
    dataset, _ = _build_dataset(args, samples)
    scorer = _build_scorer(args, dataset)
    config = FastSlowConfig(
        base=GAConfig(population_size=args.pop, mutation_rate=args.mu_slow,
                      alpha=args.alpha, generations=args.inner,
                      init_density=args.init_density, seed=args.seed,
                      distinct_parents=args.distinct_parents),
        mu_fast=args.mu_fast, mu_slow=args.mu_slow,
        inner_generations=args.inner, outer_rounds=args.rounds)
    summary = alpha_sweep(args.alpha_values, runs, config, dataset, scorer.spec,
                          scorer.folds, base_seed=args.seed, cache=scorer.cache,
                          parallel=not args.serial)
    path = _emit(args, summary, "sweep-alpha")
    best = max(summary.points, key=lambda p: p.mean_score)
    print(f"best alpha {best.value:g}: mean score {best.mean_score:.4f} "
          f"± {best.std_score:.4f} | mean features {best.mean_n_selected:.1f} "
          f"| baseline {summary.baseline_score:.4f}")
    if args.verbose:
        print(f"summary written to {path} in {summary.duration_seconds:.2f}s",
              file=sys.stderr)
    return 0


def _cmd_baseline(args) -> int:
    samples, _ = _resolve_preset(args)
    dataset, class_labels = _build_dataset(args, samples)
    scorer = _build_scorer(args, dataset)
    score = baseline_no_selection(dataset, scorer.spec, scorer.folds, scorer.cache)
    path = _out_path(args, "baseline")
    payload = {
        "schema_version": 1,
        "kind": "baseline",
        "baseline_score": score,
        "n_features": dataset.n_features,
        "n_samples": dataset.n_samples,
        "folds": args.folds,
        "estimator": asdict(scorer.spec),
    }
    if class_labels is not None:
        payload["class_labels"] = class_labels
    if args.format == "json":
        _atomic_write(path, json.dumps(_rounded(payload), indent=2) + "\n")
    else:
        _atomic_write(path, "baseline_score,n_features,n_samples,folds\n"
                      f"{score:.6g},{dataset.n_features},{dataset.n_samples},{args.folds}\n")
    print(f"baseline score {score:.4f} ({dataset.n_features} features, "
          f"{args.folds} folds)")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "run-ga": _cmd_run_ga,
    "run-fastslow": _cmd_run_fastslow,
    "sweep-mu": _cmd_sweep_mu,
    "sweep-alpha": _cmd_sweep_alpha,
    "baseline": _cmd_baseline,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _inject_config(argv)
    except ConfigError as exc:
        print(f"evofs: {exc}", file=sys.stderr)
        return 1
    except IngestionError as exc:
        print(f"evofs: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage problems; map the latter to 1
        return 0 if exc.code in (0, None) else 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"evofs: {exc}", file=sys.stderr)
        return 1
    except IngestionError as exc:
        print(f"evofs: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"evofs: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
