"""Command-line entry point: ``lscl {synth,preprocess,classify,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import preprocess as pp
from .classifier import DEFAULT_K, DEFAULT_LAMBDA, METHODS, ConfigError, LsclConfig, classify_batch
from .dataset import (
    Dataset,
    DatasetError,
    SyntheticSpec,
    SyntheticSpecError,
    generate_synthetic,
    load_dataset,
    read_vectors_csv,
    save_dataset,
)
from .evaluation import DEFAULT_TWO_FOLD_REPS, render_report, run_leave_one_out, run_two_fold
from .sparse import SolverConfig

IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm"}
SCHEMES = {"two_fold": "two_fold", "two-fold": "two_fold", "loo": "leave_one_out", "leave_one_out": "leave_one_out"}


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _k_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError(f"need 1 <= lo <= hi, got {text!r}")
    return lo, hi


def _method_list(text: str) -> list[str]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {','.join(METHODS)}")
    return names


def _hyper_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("classifier")
    g.add_argument("--k", type=_positive_int, default=DEFAULT_K, help="neighbors per class (default 13)")
    g.add_argument("--s-candidates", type=_positive_int, default=None,
                   help="candidate classes kept by stage 1 (default 70, capped at the class count)")
    g.add_argument("--lambda", dest="lam", type=_positive_float, default=DEFAULT_LAMBDA, help="l1 penalty (default 0.01)")
    g.add_argument("--solver", choices=("proximal", "closed-form"), default="proximal")
    g.add_argument("--metric", choices=("euclidean", "cosine"), default="euclidean", help="LMC metric")
    g.add_argument("--max-iters", type=_positive_int, default=1000)
    g.add_argument("--tol", type=_positive_float, default=1e-8)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("table", "json"), default="table")
    g.add_argument("--output", type=Path, default=None, help="write the report here instead of stdout")
    return p


def _config(args) -> LsclConfig:
    solver = SolverConfig(mode=args.solver.replace("-", "_"), max_iters=args.max_iters, tol=args.tol)
    return LsclConfig(k=args.k, S=args.s_candidates, lam=args.lam, solver=solver, metric=args.metric)


def _emit(data: bytes, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(data.decode())
    else:
        output.write_bytes(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lscl", description="Two-stage local-similarity classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    hyper = _hyper_parser()

    s = sub.add_parser("synth", help="write a synthetic Gaussian-cluster dataset")
    s.add_argument("--classes", type=_positive_int, required=True)
    s.add_argument("--per-class", type=_positive_int, required=True)
    s.add_argument("--dim", type=_positive_int, required=True)
    s.add_argument("--separation", type=_nonneg_float, default=8.0)
    s.add_argument("--noise", type=_nonneg_float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", type=Path, required=True, help="dataset CSV path")
    s.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="turn a directory of PGM/PPM images into a feature CSV")
    p.add_argument("input_dir", type=Path, help="one subdirectory per class")
    p.add_argument("--output", type=Path, required=True, help="dataset CSV path")
    p.add_argument("--sigma", type=_positive_float, default=pp.DEFAULT_SIGMA)
    p.add_argument("--canny-low", type=_nonneg_float, default=pp.DEFAULT_LOW, help="fraction of max gradient")
    p.add_argument("--canny-high", type=_nonneg_float, default=pp.DEFAULT_HIGH, help="fraction of max gradient")
    p.set_defaults(func=cmd_preprocess)

    c = sub.add_parser("classify", parents=[hyper], help="classify test vectors against a training CSV")
    c.add_argument("--train", type=Path, required=True)
    c.add_argument("--test", type=Path, required=True, help="CSV with or without a leading label column")
    c.add_argument("--method", type=_method_list, default=None, help="method name (or comma list)")
    c.add_argument("--methods", type=_method_list, default=None)
    c.set_defaults(func=cmd_classify)

    b = sub.add_parser("bench", parents=[hyper], help="cross-validated comparison of methods")
    b.add_argument("data", type=Path)
    b.add_argument("--methods", type=_method_list, default=["lscl"])
    b.add_argument("--scheme", choices=sorted(SCHEMES), default=None,
                   help="default two_fold, or leave-one-out with --sweep-k")
    b.add_argument("--reps", type=_positive_int, default=DEFAULT_TWO_FOLD_REPS, help="two-fold repetitions")
    b.add_argument("--sweep-k", type=_k_range, default=None, metavar="LO:HI")
    b.set_defaults(func=cmd_bench)
    return parser


def cmd_synth(args) -> int:
    spec = SyntheticSpec(args.classes, args.per_class, args.dim, args.separation, args.noise, args.seed)
    try:
        ds = generate_synthetic(spec)
    except SyntheticSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    save_dataset(ds, args.output)
    print(f"wrote {ds.n} samples ({ds.class_count} classes, dim {ds.dim}) to {args.output}")
    return 0


def cmd_preprocess(args) -> int:
    root: Path = args.input_dir
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return 1
    classes = sorted(d for d in root.iterdir() if d.is_dir())
    if not classes:
        print(f"error: {root} has no class subdirectories", file=sys.stderr)
        return 1
    rows, ids, failed = [], [], 0
    for cid, cdir in enumerate(classes):
        images = sorted(f for f in cdir.iterdir() if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES)
        if not images:
            print(f"error: class {cdir.name!r} has no PGM/PPM images", file=sys.stderr)
            return 1
        for f in images:
            try:
                vec = pp.extract_features(pp.read_image(f), args.sigma, args.canny_low, args.canny_high)
            except (pp.ImageError, pp.ZeroNormError, ValueError) as exc:
                print(f"FAIL {f}: {exc}")
                failed += 1
                continue
            rows.append(vec)
            ids.append(cid)
            print(f"ok   {f}")
    if failed:
        print(f"error: {failed} image(s) failed; no dataset written", file=sys.stderr)
        return 1
    ds = Dataset(np.array(rows), np.array(ids), tuple(d.name for d in classes))
    save_dataset(ds, args.output)
    print(f"wrote {ds.n} vectors of dim {ds.dim} to {args.output}")
    return 0


def _decision_record(i, item, labels, truth) -> dict:
    rec = {
        "index": i,
        "prediction": None if item.class_id is None else labels[item.class_id],
        "seconds": item.seconds,
    }
    if truth is not None:
        rec["truth"] = truth
        rec["correct"] = rec["prediction"] == truth
    if item.error:
        rec["error"] = item.error
    d = item.detail
    if d is not None:
        rec["candidates"] = [labels[c] for c in d.candidates]
        rec["candidate_distances"] = list(d.candidate_distances)
        rec["residues"] = {labels[c]: r for c, r in d.residues.as_dict().items()}
        rec["iterations"] = d.iterations
        rec["objective"] = d.objective
        rec["converged"] = d.converged
        rec["solver"] = d.solver_method
        rec["stage1_seconds"] = d.stage1_time
        rec["stage2_seconds"] = d.stage2_time
    return rec


def cmd_classify(args) -> int:
    try:
        train = load_dataset(args.train)
        X, test_labels = read_vectors_csv(args.test)
        if X.shape[1] != train.dim:
            raise DatasetError(f"test vectors have dimension {X.shape[1]}, training set has {train.dim}")
        cfg = _config(args)
    except (DatasetError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    methods = (args.method or []) + [m for m in (args.methods or []) if m not in (args.method or [])]
    methods = methods or ["lscl"]
    results, status = {}, 0
    for method in methods:
        try:
            items = classify_batch(X, train, cfg, method)
        except (ConfigError, ValueError) as exc:
            print(f"error: {method}: {exc}", file=sys.stderr)
            return 2
        recs = [
            _decision_record(i, it, train.labels, None if test_labels is None else test_labels[i])
            for i, it in enumerate(items)
        ]
        summary = {"method": method, "samples": len(recs), "errors": sum(1 for it in items if it.error)}
        if test_labels is not None and recs:
            summary["accuracy"] = sum(1 for r in recs if r["correct"]) / len(recs)
        if summary["errors"]:
            status = 1
        results[method] = {"summary": summary, "decisions": recs}

    if args.format == "json":
        _emit((json.dumps(results, indent=2) + "\n").encode(), args.output)
        return status
    lines = []
    for method, res in results.items():
        lines.append(f"== {method} ==")
        for r in res["decisions"]:
            mark = ""
            if "truth" in r:
                mark = f"  truth={r['truth']} {'ok' if r['correct'] else 'WRONG'}"
            line = f"{r['index']:5d}  pred={r['prediction']}{mark}  {r['seconds'] * 1e3:.2f} ms"
            if "candidates" in r:
                best = sorted(r["residues"].items(), key=lambda kv: kv[1])[:3]
                line += "  candidates=" + ",".join(r["candidates"])
                line += "  residues=" + ",".join(f"{lab}:{v:.4f}" for lab, v in best)
            if "error" in r:
                line += f"  ERROR {r['error']}"
            lines.append(line)
        s = res["summary"]
        acc = f"  accuracy={s['accuracy']:.4f}" if "accuracy" in s else ""
        lines.append(f"{method}: {s['samples']} samples, {s['errors']} errors{acc}")
    _emit(("\n".join(lines) + "\n").encode(), args.output)
    return status


def cmd_bench(args) -> int:
    try:
        ds = load_dataset(args.data)
        cfg = _config(args)
    except (DatasetError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    scheme = SCHEMES[args.scheme] if args.scheme else ("leave_one_out" if args.sweep_k else "two_fold")
    ks = range(args.sweep_k[0], args.sweep_k[1] + 1) if args.sweep_k else [cfg.k]

    reports, curve = [], []
    try:
        for k in ks:
            kcfg = LsclConfig(k=k, S=cfg.S, lam=cfg.lam, solver=cfg.solver, metric=cfg.metric)
            for method in args.methods:
                if scheme == "two_fold":
                    r = run_two_fold(ds, method, kcfg, args.reps, args.seed)
                else:
                    r = run_leave_one_out(ds, method, kcfg)
                reports.append(r)
                curve.append({"k": k, "method": method, "mean_accuracy": r.mean_accuracy, "std_accuracy": r.std_accuracy})
    except (ConfigError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.format == "json":
        if args.sweep_k:
            payload = {"sweep": curve, "reports": [r.to_dict() for r in reports]}
            data = (json.dumps(payload, indent=2) + "\n").encode()
        else:
            data = render_report(reports, "json")
    else:
        data = render_report(reports, "table")
        if args.sweep_k:
            rows = "\n".join(f"{c['k']:4d}  {c['method']:6s}  {c['mean_accuracy']:.4f}" for c in curve)
            data += ("\n   k  method  accuracy\n" + rows + "\n").encode()
    _emit(data, args.output)
    errored = sum(c.errored for r in reports for c in r.counts)
    return 1 if errored else 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
