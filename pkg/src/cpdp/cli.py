"""Command-line front end: compare, meta, extract-features, recommend, stats."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import metafeatures as mf
from .classifiers import DataError
from .data import ConfigError, ParseError, SchemaError, load_csv, load_manifest, log_transform
from .evaluation import analyze, cploo, summarize
from .evaluation import plotting, report
from .metalearner import (DEFAULT_LABELS, MetaDataError, MetaModel, best_first_wrapper,
                          build_meta_targets, frequency_best_worst, general_performance,
                          make_meta_dataset, meta_cploo, recommend, train_meta)
from .transfer import CpdpMethod, MethodError, all_methods

log = logging.getLogger("cpdp")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (SchemaError, ParseError, ConfigError, MetaDataError, DataError, FileNotFoundError,
                IsADirectoryError)
META_SETS = {"dist": "ms_dist", "uns": "ms_uns"}
SET_TITLES = {"ms_dist": "MS-Dist", "ms_uns": "MS-Uns"}


class InputError(Exception):
    pass


def _methods(spec: str | None) -> list[CpdpMethod]:
    if not spec:
        return all_methods()
    try:
        return [CpdpMethod.parse(m.strip()) for m in spec.split(",") if m.strip()]
    except (MethodError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _out(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_comparison(table, out: Path, alpha: float, plots: bool) -> None:
    summary = summarize(table)
    stat = analyze(table, alpha)
    report.write_table(table, out / "table.csv")
    report.write_summary(summary, out / "summary.csv", stat)
    report.write_stats(summary, stat, out / "stats.md")
    if stat.posthoc_applicable:
        report.pairwise_csv(stat, out / "pairwise.csv")
    if plots and len(table.methods) > 1 and stat.n_blocks > 0:
        plotting.mean_rank_chart(summary, out / "mean_rank.png", stat)
        plotting.auc_boxplot(table, out / "auc_boxplot.png", [s.method for s in summary])


def cmd_compare(args) -> int:
    datasets = load_manifest(args.manifest)
    methods = _methods(args.methods)
    out = _out(args.out)
    done = [0]
    total = len(datasets) * len(methods)

    def progress(cell):
        done[0] += 1
        log.info("[%d/%d] %s %s auc=%.3f", done[0], total, cell.dataset, cell.method, cell.auc)

    table, cells = cploo(datasets, methods, seed=args.seed, jobs=args.jobs, progress=progress)
    report.write_cells(cells, out / "cells.csv", record_timings=args.record_timings)
    report.write_timings(cells, out / "timings.csv")
    _write_comparison(table, out, args.alpha, not args.no_plots)
    print(f"wrote {out / 'cells.csv'} ({len(table.datasets)} datasets x {len(methods)} methods)")
    return EXIT_OK


def cmd_stats(args) -> int:
    table = report.read_cells(args.cells)
    if args.methods:
        names = [m.strip() for m in args.methods.split(",") if m.strip()]
        unknown = [m for m in names if m not in table.methods]
        if unknown:
            raise InputError(f"method(s) not in {args.cells}: {', '.join(unknown)}")
        table = table.subset(names)
    out = _out(args.out)
    _write_comparison(table, out, args.alpha, not args.no_plots)
    print(report.stats_markdown(summarize(table), analyze(table, args.alpha)))
    return EXIT_OK


def cmd_extract(args) -> int:
    datasets = load_manifest(args.manifest)
    kind = META_SETS[args.meta_set]
    vectors = mf.extract(datasets, kind, args.seed)
    out = _out(args.out)
    path = out / f"meta_features_{kind}.csv"
    mf.write_features(vectors, path)
    print(f"wrote {path} ({len(vectors)} datasets x {len(vectors[0])} features)")
    return EXIT_OK


def _label_table(args, datasets, out: Path, labels):
    cells = Path(args.cells) if args.cells else out / "cells.csv"
    if cells.exists():
        table = report.read_cells(cells)
        missing = [d.name for d in datasets if d.name not in table.datasets]
        if missing:
            raise InputError(f"{cells} lacks dataset(s): {', '.join(missing)}")
        absent = [lab for lab in labels if lab not in table.methods]
        if not absent:
            return table
        if args.cells:
            raise InputError(f"{cells} lacks label method(s): {', '.join(absent)}")
    log.info("no usable comparison results; running the label methods")
    table, cells_ = cploo(datasets, [CpdpMethod.parse(lab) for lab in labels], seed=args.seed,
                         jobs=args.jobs)
    report.write_cells(cells_, out / "cells.csv")
    return table


def cmd_meta(args) -> int:
    datasets = load_manifest(args.manifest)
    kind = META_SETS[args.meta_set]
    title = SET_TITLES[kind]
    labels = tuple(x.strip() for x in args.labels.split(",")) if args.labels else DEFAULT_LABELS
    for lab in labels:
        _methods(lab)
    out = _out(args.out)
    table = _label_table(args, datasets, out, labels)
    vectors = mf.extract(datasets, kind, args.seed)
    mf.write_features(vectors, out / f"meta_features_{kind}.csv")
    targets = build_meta_targets(table, labels)
    md = make_meta_dataset(vectors, targets, datasets, labels)
    if len(md.projects) < 2:
        raise InputError("meta-learning needs at least two projects with meta-targets")
    result = meta_cploo(md, table, seed=args.seed, jobs=args.jobs)

    with open(out / f"meta_{kind}_subsets.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("project", "n_train", "majority_label", "majority_accuracy",
                    "estimated_accuracy", "selected_features"))
        for f in result.folds:
            w.writerow([f.project, f.n_train, f.majority_label, f"{f.majority_accuracy:.3f}",
                        f"{f.estimated_accuracy:.3f}", ";".join(f.subset)])
    with open(out / f"meta_{kind}_recommendations.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("dataset", "recommended", *[f"conf_{lab}" for lab in labels],
                    "relevant", "correct", "auc"))
        for r in result.recommendations:
            w.writerow([r.dataset, r.label, *[f"{c:.4f}" for c in r.confidences],
                        ";".join(r.relevant), int(r.correct),
                        "" if r.auc is None else f"{r.auc:.4f}"])

    perf = general_performance(table, result, title, seed=args.seed)
    summary = summarize(perf)
    stat = analyze(perf, args.alpha)
    best, worst = frequency_best_worst(perf)
    n = int(perf.complete.sum())
    with open(out / f"meta_{kind}_performance.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("method", "mean_rank", "sd_rank", "mean_auc", "sd_auc", "freq_best",
                    "freq_worst"))
        for s in summary:
            j = perf.methods.index(s.method)
            w.writerow([s.method, f"{s.mean_rank:.2f}", f"{s.sd_rank:.2f}", f"{s.mean_auc:.3f}",
                        f"{s.sd_auc:.3f}", int(best[j]), int(worst[j])])
    accs = [f.estimated_accuracy for f in result.folds]
    majs = [f.majority_accuracy for f in result.folds]
    md_text = report.stats_markdown(summary, stat)
    md_text += (f"\nCorrect recommendations: {result.n_correct}/{len(result.recommendations)} "
                f"({result.accuracy:.3f}); mean estimated accuracy {np.nanmean(accs):.3f} "
                f"vs majority {np.mean(majs):.3f}; freq. best out of {n} datasets.\n")
    (out / f"meta_{kind}_stats.md").write_text(md_text, encoding="utf-8")
    if not args.no_plots:
        plotting.accuracy_chart([f.project for f in result.folds], accs, majs,
                                out / f"meta_{kind}_accuracy.png")
        plotting.mean_rank_chart(summary, out / f"meta_{kind}_mean_rank.png", stat)

    # final model for new projects: selection and training on every project
    wr = best_first_wrapper(md, args.seed, jobs=args.jobs)
    model = train_meta(md, wr.subset, args.seed)
    model.save(out / f"metamodel_{kind}.json")
    print(f"{title}: {result.n_correct}/{len(result.recommendations)} correct recommendations; "
          f"final subset {', '.join(wr.subset)} (estimated accuracy {wr.accuracy:.3f})")
    return EXIT_OK


def cmd_recommend(args) -> int:
    model = MetaModel.load(args.model)
    if model.set_kind not in mf.SET_KINDS:
        raise InputError(f"{args.model}: model was not trained on a known meta-feature set")
    d = load_csv(args.target)
    if not args.raw:
        d = log_transform(d)
    # undefined values stay NaN and are mapped to the training mean by the model
    vec = mf.ms_dist(d) if model.set_kind == "ms_dist" else mf.ms_uns(d, model.seed)
    label, conf = recommend(model, vec)
    print(f"recommended: {label}")
    for lab, c in zip(model.label_universe, conf):
        print(f"{lab}\t{c:.4f}")
    if args.report:
        path = Path(args.report)
        new = not path.exists()
        with open(path, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(("dataset", "recommended", *[f"conf_{lab}" for lab in model.label_universe]))
            w.writerow([d.name, label, *[f"{c:.4f}" for c in conf]])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpdp", description="Cross-project defect prediction toolkit")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, manifest=True, seed=True):
        if manifest:
            sp.add_argument("--manifest", required=True, help="lines of '<csv> <project> <version>'")
        sp.add_argument("--out", default="results", help="output directory (created if absent)")
        if seed:
            sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--no-plots", action="store_true")

    sp = sub.add_parser("compare", help="leave-one-project-out comparison of CPDP methods")
    common(sp)
    sp.add_argument("--methods", help="comma-separated method ids (default: all 31)")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--record-timings", action="store_true",
                    help="fill wall_ms in cells.csv (makes it run-dependent)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("stats", help="recompute statistics from a cells.csv")
    common(sp, manifest=False, seed=False)
    sp.add_argument("--cells", required=True)
    sp.add_argument("--methods")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("extract-features", help="write the meta-feature matrix")
    common(sp)
    sp.add_argument("--meta-set", choices=sorted(META_SETS), default="dist")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("meta", help="meta-CPLOO evaluation and final meta-model")
    common(sp)
    sp.add_argument("--meta-set", choices=sorted(META_SETS), default="dist")
    sp.add_argument("--cells", help="comparison results (default: <out>/cells.csv, computed if absent)")
    sp.add_argument("--labels", help="comma-separated label methods")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.set_defaults(func=cmd_meta)

    sp = sub.add_parser("recommend", help="recommend a method for a new dataset")
    sp.add_argument("target", help="metrics CSV of the new project version")
    sp.add_argument("--model", required=True, help="meta-model file written by 'meta'")
    sp.add_argument("--raw", action="store_true", help="target is already log-transformed")
    sp.add_argument("--report", help="append a CSV row to this file")
    sp.set_defaults(func=cmd_recommend)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
