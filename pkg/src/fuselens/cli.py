"""Command-line entry point.

Subcommands cover evaluation (evaluate, domain-eval), sweeps (sweep-alpha,
sweep-static), closed-form and simulated routing analysis (analyze-hmean,
contour, simulate), fixture generation (gen-synthetic), file inspection
(inspect), and the HTTP service (serve).

Contract: reports go to stdout only, diagnostics to stderr only; identical
argv plus identical input files produce byte-identical stdout. Exit codes:
0 success, 2 usage, 3 file/format error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .analysis import (
    ContourGrid,
    HMeanReport,
    MonteCarloReport,
    OperatingPoint,
    contour_grid,
    monte_carlo_hmean,
    proposition_hmean,
)
from .data import (
    SyntheticSpec,
    generate_synthetic,
    load_embeddings,
    read_classifier,
    read_embedding_header,
    read_embeddings_jsonl,
    read_synthetic_spec,
    sniff_format,
    write_bundle,
)
from .errors import FormatError, FuseLensError, InvariantError
from .evaluation import (
    alpha_sweep,
    base_to_novel_eval,
    domain_generalization_eval,
    static_sweep,
    EvalReport,
    EvalSet,
)
from .fusion import (
    FusionConfig,
    FusionTarget,
    SingleClassifierRule,
    format_alpha,
)
from .scores import EnergyNormalization, ScoreMethod

DEFAULT_ALPHAS = "0.5,1,2,4,8,16,32,64,128,inf"
DEFAULT_STATIC_WEIGHTS = "0.05,0.25,0.5,0.75,0.95"

EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_INVARIANT = 4


class _Parser(argparse.ArgumentParser):
    """Argparse with a single-line machine-parseable error prefix."""

    def error(self, message: str) -> None:  # noqa: D401 - argparse contract
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _alpha_arg(text: str) -> float:
    if text.strip().lower() == "inf":
        return math.inf
    try:
        return float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from exc


def _float_list_arg(text: str) -> list[float]:
    try:
        return [_alpha_arg(part) for part in text.split(",") if part.strip()]
    except argparse.ArgumentTypeError as exc:
        raise argparse.ArgumentTypeError(f"invalid list {text!r}") from exc


def _pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def _f4(x: float) -> str:
    return f"{x:.4f}"


def _json_alpha(alpha: float):
    return "inf" if math.isinf(alpha) else alpha


def _config_doc(cfg: FusionConfig) -> dict:
    return {
        "method": cfg.method.value,
        "alpha": _json_alpha(cfg.alpha),
        "target": cfg.target.value,
        "mode": cfg.mode,
        "static_weight": cfg.static_weight,
        "single_classifier_rule": (
            cfg.single_classifier_rule.value if cfg.single_classifier_rule else None
        ),
        "energy_normalization": cfg.energy_normalization.value,
        "prenormalize_rows": cfg.prenormalize_rows,
    }


def _report_doc(report: EvalReport) -> dict:
    return {
        "config": _config_doc(report.config),
        "base_accuracy": report.base_accuracy,
        "novel_accuracy": report.novel_accuracy,
        "harmonic_mean": report.harmonic_mean,
    }


def _report_row(report: EvalReport) -> str:
    return ",".join(
        [
            report.config.describe(),
            _pct(report.base_accuracy),
            _pct(report.novel_accuracy),
            _pct(report.harmonic_mean),
        ]
    )


EVAL_CSV_HEADER = "config,base_acc,novel_acc,h"
ANALYSIS_CSV_HEADER = "rb,rn,pb,pn,h"


def _print_doc(doc: dict) -> None:
    print(json.dumps(doc, indent=2))


def _emit_warnings(path: str, warnings: list[str]) -> None:
    for message in warnings:
        print(f"warning: {path}: {message}", file=sys.stderr)


def _load_classifier(path: str):
    classifier, warnings = read_classifier(path)
    _emit_warnings(path, warnings)
    return classifier


def _load_eval_set(path: str, class_names: tuple[str, ...]) -> EvalSet:
    try:
        return EvalSet(samples=tuple(load_embeddings(path)), class_names=class_names)
    except InvariantError as exc:
        raise InvariantError(f"{path}: {exc}") from exc


def _threads(args) -> int:
    if args.threads is not None:
        value = args.threads
    else:
        env = os.environ.get("FUSELENS_THREADS")
        value = int(env) if env else 1
    if value < 1:
        raise InvariantError("thread count must be >= 1")
    return value


def _fusion_config(args) -> FusionConfig:
    rule = None
    if getattr(args, "single_classifier", None):
        rule = SingleClassifierRule(args.single_classifier)
    return FusionConfig(
        method=ScoreMethod.from_name(args.method),
        alpha=args.alpha,
        target=FusionTarget(args.target),
        static_weight=args.static,
        single_classifier_rule=rule,
        energy_normalization=EnergyNormalization(args.energy_normalization),
        prenormalize_rows=args.prenormalize_rows,
    )


def _add_fusion_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="entropy",
                   help="ID score: msp, maxlogit, energy or entropy (default entropy)")
    p.add_argument("--alpha", type=_alpha_arg, default=64.0,
                   help="scaling factor for the score difference; 'inf' for hard routing")
    p.add_argument("--target", choices=["weights", "posteriors"], default="weights",
                   help="fuse the weight matrices or the posteriors")
    p.add_argument("--static", type=float, default=None, metavar="S",
                   help="use a fixed fusion weight in [0,1] instead of the dynamic score")
    p.add_argument("--single-classifier", choices=[r.value for r in SingleClassifierRule],
                   default=None, help="derive the weight from one classifier's MSP")
    p.add_argument("--energy-normalization", choices=[n.value for n in EnergyNormalization],
                   default="literal")
    p.add_argument("--prenormalize-rows", action="store_true",
                   help="blend unit-norm rows instead of raw rows")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["csv", "json-doc"], default="csv")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for batch evaluation (env FUSELENS_THREADS)")


def _add_pair_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fs-weights", required=True, help="few-shot classifier file")
    p.add_argument("--zs-weights", required=True, help="zero-shot classifier file")


def _add_base_novel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base-emb", required=True, help="base-split embedding file")
    p.add_argument("--novel-emb", required=True, help="novel-split embedding file")
    _add_pair_flags(p)
    p.add_argument("--novel-fs-weights", default=None,
                   help="few-shot classifier over the novel label space "
                        "(defaults to --fs-weights)")
    p.add_argument("--novel-zs-weights", default=None,
                   help="zero-shot classifier over the novel label space "
                        "(defaults to --zs-weights)")


def _load_base_novel(args):
    fs_base = _load_classifier(args.fs_weights)
    zs_base = _load_classifier(args.zs_weights)
    fs_novel = _load_classifier(args.novel_fs_weights) if args.novel_fs_weights else fs_base
    zs_novel = _load_classifier(args.novel_zs_weights) if args.novel_zs_weights else zs_base
    base_set = _load_eval_set(args.base_emb, fs_base.class_names)
    novel_set = _load_eval_set(args.novel_emb, fs_novel.class_names)
    return base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel


def _write_trace(path: str, report: EvalReport) -> None:
    lines = ["sample_id,s,predicted,correct"]
    for row in report.per_sample or ():
        lines.append(
            f"{row.sample_id},{format(row.fusion_weight, '.17g')},"
            f"{row.predicted},{int(row.correct)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_evaluate(args) -> int:
    base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel = _load_base_novel(args)
    cfg = _fusion_config(args)
    report = base_to_novel_eval(
        base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel, cfg,
        with_trace=args.trace is not None, threads=_threads(args),
    )
    if args.trace:
        _write_trace(args.trace, report)
    if args.format == "json-doc":
        _print_doc(_report_doc(report))
    else:
        print(EVAL_CSV_HEADER)
        print(_report_row(report))
    return 0


def _cmd_domain_eval(args) -> int:
    fs = _load_classifier(args.fs_weights)
    zs = _load_classifier(args.zs_weights)
    source = _load_eval_set(args.source_emb, fs.class_names)
    targets = [_load_eval_set(p, fs.class_names) for p in args.target_emb]
    cfg = _fusion_config(args)
    report = domain_generalization_eval(source, targets, fs, zs, cfg, threads=_threads(args))
    if args.format == "json-doc":
        _print_doc(
            {
                "config": _config_doc(cfg),
                "source": {"path": args.source_emb, "accuracy": report.source_accuracy},
                "targets": [
                    {"path": p, "accuracy": a}
                    for p, a in zip(args.target_emb, report.target_accuracies)
                ],
                "target_mean": report.target_mean,
            }
        )
    else:
        print("config,set,accuracy")
        describe = cfg.describe()
        print(f"{describe},source:{Path(args.source_emb).stem},{_pct(report.source_accuracy)}")
        for path, acc in zip(args.target_emb, report.target_accuracies):
            print(f"{describe},target:{Path(path).stem},{_pct(acc)}")
        print(f"{describe},target-mean,{_pct(report.target_mean)}")
    return 0


def _cmd_sweep_alpha(args) -> int:
    base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel = _load_base_novel(args)
    cfg = _fusion_config(args)
    result = alpha_sweep(
        base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel, cfg,
        args.alphas, threads=_threads(args),
    )
    if args.format == "json-doc":
        _print_doc(
            {
                "reports": [_report_doc(r) for r in result.reports],
                "best_alpha": _json_alpha(result.best_alpha),
            }
        )
    else:
        print(EVAL_CSV_HEADER)
        for report in result.reports:
            print(_report_row(report))
        print(f"best_alpha,{format_alpha(result.best_alpha)}")
    return 0


def _cmd_sweep_static(args) -> int:
    base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel = _load_base_novel(args)
    cfg = _fusion_config(args)
    reports = static_sweep(
        base_set, novel_set, fs_base, zs_base, fs_novel, zs_novel,
        args.weights, cfg=cfg, threads=_threads(args),
    )
    if args.format == "json-doc":
        _print_doc({"reports": [_report_doc(r) for r in reports]})
    else:
        print(EVAL_CSV_HEADER)
        for report in reports:
            print(_report_row(report))
    return 0


def _hmean_doc(op: OperatingPoint, report: HMeanReport) -> dict:
    doc = asdict(op)
    doc.update({"pb": report.pb, "pn": report.pn, "h": report.h})
    return doc


def _cmd_analyze_hmean(args) -> int:
    op = OperatingPoint(p0=args.p0, p1=args.p1, q0=args.q0, q1=args.q1,
                        rb=args.rb, rn=args.rn)
    report = proposition_hmean(op)
    if args.format == "json-doc":
        _print_doc(_hmean_doc(op, report))
    else:
        print(ANALYSIS_CSV_HEADER)
        print(",".join([_f4(op.rb), _f4(op.rn), _f4(report.pb), _f4(report.pn), _f4(report.h)]))
    return 0


def _contour_doc(grid: ContourGrid) -> dict:
    return {
        "p0": grid.p0,
        "p1": grid.p1,
        "q0": grid.q0,
        "q1": grid.q1,
        "resolution": grid.resolution,
        "axis_order": grid.axis_order,
        "rb_values": list(grid.rb_values),
        "rn_values": list(grid.rn_values),
        "pb_values": list(grid.pb_values),
        "pn_values": list(grid.pn_values),
        "h": [list(row) for row in grid.h],
    }


def _cmd_contour(args) -> int:
    grid = contour_grid(args.p0, args.p1, args.q0, args.q1, args.resolution)
    if args.format == "json-doc":
        _print_doc(_contour_doc(grid))
    else:
        print(ANALYSIS_CSV_HEADER)
        for i in range(grid.resolution):
            for j in range(grid.resolution):
                print(",".join([
                    _f4(grid.rb_values[i]),
                    _f4(grid.rn_values[j]),
                    _f4(grid.pb_values[i]),
                    _f4(grid.pn_values[j]),
                    _f4(grid.h[i, j]),
                ]))
    return 0


def _simulate_doc(op: OperatingPoint, report: MonteCarloReport) -> dict:
    doc = asdict(op)
    doc.update(asdict(report))
    return doc


def _cmd_simulate(args) -> int:
    op = OperatingPoint(p0=args.p0, p1=args.p1, q0=args.q0, q1=args.q1,
                        rb=args.rb, rn=args.rn)
    report = monte_carlo_hmean(op, args.n_base, args.n_novel, args.seed)
    if args.format == "json-doc":
        _print_doc(_simulate_doc(op, report))
    else:
        print(ANALYSIS_CSV_HEADER)
        print(",".join([_f4(op.rb), _f4(op.rn), _f4(report.pb), _f4(report.pn), _f4(report.h)]))
        for name in ("n_base", "n_novel", "base_fewshot_routed", "novel_fewshot_routed",
                     "base_correct", "novel_correct", "generator", "seed"):
            print(f"{name},{getattr(report, name)}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    if args.spec:
        spec = read_synthetic_spec(args.spec)
        overrides = {}
    else:
        spec = SyntheticSpec()
        overrides = {}
    for field in SyntheticSpec.__dataclass_fields__:
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    if overrides:
        merged = asdict(spec)
        merged.update(overrides)
        spec = SyntheticSpec(**merged)
    bundle = generate_synthetic(spec)
    for path in write_bundle(bundle, args.out_dir):
        print(f"wrote {path}")
    return 0


def _cmd_inspect(args) -> int:
    kind = sniff_format(args.file)
    print(f"format,{kind}")
    if kind == "embedding-binary":
        header = read_embedding_header(args.file)
        print(f"dim,{header.dim}")
        print(f"count,{header.count}")
        print(f"labels,{int(header.has_labels)}")
        print(f"splits,{int(header.has_splits)}")
    elif kind == "embedding-jsonl":
        records = read_embeddings_jsonl(args.file)
        print(f"dim,{records[0].dim}")
        print(f"count,{len(records)}")
        print(f"labels,{int(all(r.label is not None for r in records))}")
        print(f"splits,{int(all(r.split is not None for r in records))}")
    elif kind == "classifier":
        classifier, warnings = read_classifier(args.file)
        print(f"kind,{classifier.kind.value}")
        print(f"n_classes,{classifier.n_classes}")
        print(f"dim,{classifier.dim}")
        print(f"temperature,{format(classifier.temperature, '.17g')}")
        print(f"temperature_defaulted,{int(bool(warnings))}")
    else:
        spec = read_synthetic_spec(args.file)
        for field, value in asdict(spec).items():
            print(f"{field},{value}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fuselens",
                     description="Score-driven dynamic fusion of two cosine classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[], help="base-to-novel evaluation")
    _add_base_novel_flags(p)
    _add_fusion_flags(p)
    _add_common_flags(p)
    p.add_argument("--trace", default=None, metavar="PATH",
                   help="write a per-sample trace CSV to PATH")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("domain-eval", help="source-to-targets evaluation")
    p.add_argument("--source-emb", required=True)
    p.add_argument("--target-emb", action="append", required=True,
                   help="target embedding file (repeatable)")
    _add_pair_flags(p)
    _add_fusion_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_domain_eval)

    p = sub.add_parser("sweep-alpha", help="base-to-novel sweep over alpha")
    _add_base_novel_flags(p)
    _add_fusion_flags(p)
    _add_common_flags(p)
    p.add_argument("--alphas", type=_float_list_arg, default=_float_list_arg(DEFAULT_ALPHAS),
                   help=f"comma-separated alphas (default {DEFAULT_ALPHAS})")
    p.set_defaults(func=_cmd_sweep_alpha)

    p = sub.add_parser("sweep-static", help="base-to-novel sweep over fixed weights")
    _add_base_novel_flags(p)
    _add_fusion_flags(p)
    _add_common_flags(p)
    p.add_argument("--weights", type=_float_list_arg,
                   default=_float_list_arg(DEFAULT_STATIC_WEIGHTS),
                   help=f"comma-separated fixed weights (default {DEFAULT_STATIC_WEIGHTS})")
    p.set_defaults(func=_cmd_sweep_static)

    p = sub.add_parser("analyze-hmean", help="closed-form routing analysis")
    for name in ("p0", "p1", "q0", "q1", "rb", "rn"):
        p.add_argument(f"--{name}", type=float, required=True)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_analyze_hmean)

    p = sub.add_parser("contour", help="H over a uniform (rb, rn) grid")
    for name in ("p0", "p1", "q0", "q1"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--resolution", type=int, default=101)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the routing model")
    for name in ("p0", "p1", "q0", "q1", "rb", "rn"):
        p.add_argument(f"--{name}", type=float, required=True)
    p.add_argument("--n-base", type=int, default=1_000_000)
    p.add_argument("--n-novel", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic evaluation bundle")
    p.add_argument("--spec", default=None, help="generator spec JSON file")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-base-classes", dest="n_base_classes", type=int, default=None)
    p.add_argument("--n-novel-classes", dest="n_novel_classes", type=int, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--per-class-count", dest="per_class_count", type=int, default=None)
    p.add_argument("--class-center-scale", dest="class_center_scale", type=float, default=None)
    p.add_argument("--noise-scale", dest="noise_scale", type=float, default=None)
    p.add_argument("--fs-advantage-base", dest="fs_advantage_base", type=float, default=None)
    p.add_argument("--zs-advantage-novel", dest="zs_advantage_novel", type=float, default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("inspect", help="summarize any repo file format")
    p.add_argument("file")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error[format]: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error[format]: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except InvariantError as exc:
        print(f"error[invariant]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except FuseLensError as exc:
        print(f"error[invariant]: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
