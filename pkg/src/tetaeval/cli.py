"""Command-line interface.

Subcommands: evaluate, convert, perturb, stats, compare. Every run writes a
run manifest (command line, config hash, input digests, tool version,
timestamp) next to its outputs. Report files are byte-deterministic for
identical inputs and flags, independent of --jobs.

Exit codes: 0 success, 2 bad flags, 3 parse errors, 4 evaluation errors.
"""

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .harness import PerturbSpec, compare_metrics, overlap_cdf
from .ingest import FORMATS, IngestOptions, ParseError, parse, sniff_format, write_canonical, write_cocovid, write_mot_csv
from .teta import EvalConfig, evaluate

_FORMAT_ALIASES = {
    "canonical": "canonical_json",
    "mot": "mot_csv",
    "cocovid": "cocovid_json",
}
_MODE_ALIASES = {"incomplete": "incomplete", "complete": "complete", "single": "single_category"}


class FlagError(Exception):
    """Invalid flag combination or value (exit code 2)."""


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tetaeval",
        description="Tracking evaluation: local-cluster metric, HOTA/CLEAR baselines, perturbations",
    )
    parser.add_argument("--version", action="version", version=f"tetaeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--gt", required=True, help="ground-truth file")
        p.add_argument("--pred", required=True, help="prediction file")
        p.add_argument("--gt-format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])
        p.add_argument("--pred-format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])

    def add_eval_flags(p):
        p.add_argument("--alpha", type=float, default=0.5, help="IoU match threshold")
        p.add_argument("--margin", type=float, default=None, help="cluster IoU margin r (default 0.5; 0 in single mode)")
        p.add_argument("--mode", default="incomplete", choices=["incomplete", "complete", "single"])
        p.add_argument("--top-k", type=int, default=None, help="keep k highest-score predictions per frame")
        p.add_argument("--freq-thresholds", default="10,100", help="rare_max,common_max gt-track counts")
        p.add_argument("--jobs", type=int, default=1, help="worker threads (output is identical for any value)")

    p_eval = sub.add_parser("evaluate", help="run the local-cluster metric")
    add_io(p_eval)
    add_eval_flags(p_eval)
    p_eval.add_argument("--out", default=".", help="output directory")

    p_conv = sub.add_parser("convert", help="convert between annotation formats")
    p_conv.add_argument("--input", required=True)
    p_conv.add_argument("--from", dest="from_format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])
    p_conv.add_argument("--to", dest="to_format", required=True, choices=["canonical", "mot", "cocovid"])
    p_conv.add_argument("--role", default="pred", choices=["gt", "pred"])
    p_conv.add_argument("--out", required=True, help="output file")

    p_pert = sub.add_parser("perturb", help="apply a synthetic corruption to predictions")
    p_pert.add_argument("--pred", required=True)
    p_pert.add_argument("--gt", default=None, help="required for --kind merge_tail")
    p_pert.add_argument("--pred-format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])
    p_pert.add_argument("--gt-format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])
    p_pert.add_argument("--kind", required=True, choices=["class_noise", "copy_paste", "merge_tail", "fragment"])
    p_pert.add_argument("--rate", type=float, default=None)
    p_pert.add_argument("--seed", type=int, default=None)
    p_pert.add_argument("--copies", type=int, default=None)
    p_pert.add_argument("--n", type=int, default=None)
    p_pert.add_argument("--period", type=int, default=None)
    p_pert.add_argument("--score", type=float, default=0.01)
    p_pert.add_argument("--out", default=".", help="output directory")

    p_stats = sub.add_parser("stats", help="inter-object overlap CDF of the ground truth")
    p_stats.add_argument("--gt", required=True)
    p_stats.add_argument("--gt-format", default="auto", choices=["auto", "canonical", "mot", "cocovid"])
    p_stats.add_argument("--thresholds", default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    p_stats.add_argument("--out", default="overlap_cdf.csv", help="output CSV file")

    p_cmp = sub.add_parser("compare", help="TETA/HOTA/CLEAR before and after perturbations")
    add_io(p_cmp)
    add_eval_flags(p_cmp)
    p_cmp.add_argument(
        "--perturb",
        action="append",
        default=[],
        help="spec like 'class_noise:rate=1.0,seed=7' (repeatable)",
    )
    p_cmp.add_argument("--out", default=".", help="output directory")

    return parser


def _resolve_format(path, declared):
    if declared != "auto":
        return _FORMAT_ALIASES[declared]
    fmt = sniff_format(path)
    if fmt not in FORMATS:
        raise FlagError(f"cannot determine format of {path}")
    return fmt


def _load(path, role, declared):
    if not Path(path).is_file():
        raise FlagError(f"input file not found: {path}")
    fmt = _resolve_format(path, declared)
    return parse(path, IngestOptions(format=fmt, role=role))


def _eval_config(args):
    mode = _MODE_ALIASES[args.mode]
    margin = args.margin
    if mode == "single_category":
        if margin is not None and margin != 0.0:
            raise FlagError("single mode forces margin r = 0; drop --margin or pass 0")
        margin = 0.0
    elif margin is None:
        margin = 0.5
    try:
        rare_s, common_s = args.freq_thresholds.split(",")
        thresholds = (int(rare_s), int(common_s))
    except ValueError as exc:
        raise FlagError(f"--freq-thresholds must be 'rare_max,common_max': {exc}") from exc
    try:
        return EvalConfig(
            alpha=args.alpha,
            margin_r=margin,
            mode=mode,
            freq_thresholds=thresholds,
            top_k=args.top_k,
        )
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def _digest(path):
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_dir, argv, inputs, config):
    digests = {str(p): _digest(p) for p in inputs}
    hashed = json.dumps({"config": config, "inputs": digests}, sort_keys=True)
    manifest = {
        "command": list(argv),
        "tool_version": __version__,
        "config_hash": "sha256:" + hashlib.sha256(hashed.encode()).hexdigest(),
        "inputs": digests,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def _cmd_evaluate(args, argv):
    gt = _load(args.gt, "gt", args.gt_format)
    pred = _load(args.pred, "pred", args.pred_format)
    cfg = _eval_config(args)
    report = evaluate(gt, pred, cfg, jobs=max(1, args.jobs))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report.to_json_dict(), indent=2) + "\n"
    (out_dir / "teta_report.json").write_text(payload, encoding="utf-8")
    table = report.render_table()
    (out_dir / "teta_report.txt").write_text(table, encoding="utf-8")
    _write_manifest(out_dir, argv, [args.gt, args.pred], cfg.to_json_dict())
    sys.stdout.write(table)
    return 0


def _cmd_convert(args, argv):
    ds = _load(args.input, args.role, args.from_format)
    to_fmt = _FORMAT_ALIASES[args.to_format]
    if to_fmt == "canonical_json":
        payload = write_canonical(ds)
    elif to_fmt == "mot_csv":
        payload = write_mot_csv(ds, args.role)
    else:
        payload = write_cocovid(ds, args.role)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    _write_manifest(out.parent, argv, [args.input], {"to": to_fmt, "role": args.role})
    return 0


def _perturb_spec_from_args(args):
    try:
        return PerturbSpec(
            kind=args.kind,
            rate=args.rate,
            copies=args.copies,
            n=args.n,
            period=args.period,
            score=args.score,
            seed=args.seed,
        )
    except ValueError as exc:
        raise FlagError(str(exc)) from exc


def _cmd_perturb(args, argv):
    spec = _perturb_spec_from_args(args)
    pred = _load(args.pred, "pred", args.pred_format)
    inputs = [args.pred]
    gt = None
    if spec.kind == "merge_tail":
        if args.gt is None:
            raise FlagError("merge_tail needs --gt (the class map is built from gt counts)")
        gt = _load(args.gt, "gt", args.gt_format)
        inputs.append(args.gt)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if spec.kind == "merge_tail":
        gt2, pred2 = spec.apply(gt, pred)
        (out_dir / "gt_perturbed.json").write_bytes(write_canonical(gt2))
    else:
        _, pred2 = spec.apply(None, pred)
    (out_dir / "pred_perturbed.json").write_bytes(write_canonical(pred2))
    _write_manifest(out_dir, argv, inputs, {"perturb": spec.label()})
    return 0


def _cmd_stats(args, argv):
    gt = _load(args.gt, "gt", args.gt_format)
    try:
        thresholds = [float(v) for v in args.thresholds.split(",") if v.strip()]
    except ValueError as exc:
        raise FlagError(f"--thresholds must be comma-separated numbers: {exc}") from exc
    cdf = overlap_cdf(gt, thresholds)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(cdf.to_csv())
    _write_manifest(out.parent, argv, [args.gt], {"thresholds": thresholds})
    return 0


def _parse_perturb_spec(text):
    kind, _, params_text = text.partition(":")
    kind = kind.strip()
    params = {}
    if params_text.strip():
        for item in params_text.split(","):
            key, _, value = item.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise FlagError(f"bad perturbation parameter {item!r} in {text!r}")
            if key in ("seed", "copies", "n", "period"):
                params[key] = int(value)
            elif key in ("rate", "score"):
                params[key] = float(value)
            else:
                raise FlagError(f"unknown perturbation parameter {key!r} in {text!r}")
    try:
        return PerturbSpec(kind=kind, **params)
    except (TypeError, ValueError) as exc:
        raise FlagError(f"bad perturbation spec {text!r}: {exc}") from exc


def _cmd_compare(args, argv):
    gt = _load(args.gt, "gt", args.gt_format)
    pred = _load(args.pred, "pred", args.pred_format)
    cfg = _eval_config(args)
    specs = [_parse_perturb_spec(s) for s in args.perturb]
    table = compare_metrics(gt, pred, specs, cfg, jobs=max(1, args.jobs))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "comparison.csv").write_bytes(table.to_csv())
    (out_dir / "comparison.json").write_text(
        json.dumps(table.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    _write_manifest(
        out_dir,
        argv,
        [args.gt, args.pred],
        {"config": cfg.to_json_dict(), "perturbs": [s.label() for s in specs]},
    )
    return 0


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "convert": _cmd_convert,
    "perturb": _cmd_perturb,
    "stats": _cmd_stats,
    "compare": _cmd_compare,
}


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if code else 0
    try:
        return _COMMANDS[args.command](args, argv)
    except FlagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


def entry():
    sys.exit(main())
