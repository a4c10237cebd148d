"""Cross-validation harness and report rendering.

Two schemes are supported: repeated random per-class halving (two-fold) and
leave-one-out.  Two-fold standard deviations are taken across repetitions;
leave-one-out runs once, so its standard deviation is taken across classes.
Accuracies are fractions in [0, 1], never percentages.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Literal

import numpy as np

from .classifier import METHODS, ConfigError, LsclConfig, classify_batch
from .dataset import Dataset, leave_one_out_folds, split_two_fold

Scheme = Literal["two_fold", "leave_one_out"]
Predictor = Callable[[np.ndarray, Dataset], int]

DEFAULT_TWO_FOLD_REPS = 50


@dataclass(frozen=True)
class FoldCounts:
    correct: int
    incorrect: int
    errored: int

    @property
    def total(self) -> int:
        return self.correct + self.incorrect + self.errored


@dataclass(frozen=True)
class EvaluationReport:
    method: str
    scheme: str
    repetitions: int
    mean_accuracy: float
    std_accuracy: float
    per_class_accuracy: tuple[float, ...]
    total_wall_time_s: float
    config: dict = field(default_factory=dict)
    std_over: str = "repetitions"
    class_labels: tuple[str, ...] = ()
    per_class_counts: tuple[int, ...] = ()
    rep_accuracies: tuple[float, ...] = ()
    counts: tuple[FoldCounts, ...] = ()
    per_stage_time_s: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        # schema fields first, extras after
        head = ["method", "scheme", "repetitions", "mean_accuracy", "std_accuracy",
                "per_class_accuracy", "total_wall_time_s", "config"]
        out = {key: d[key] for key in head}
        out["units"] = "fraction"
        for key, val in d.items():
            if key not in out:
                out[key] = val
        out["per_class_accuracy"] = list(self.per_class_accuracy)
        out["counts"] = [asdict(c) for c in self.counts]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        return cls(
            method=d["method"],
            scheme=d["scheme"],
            repetitions=int(d["repetitions"]),
            mean_accuracy=float(d["mean_accuracy"]),
            std_accuracy=float(d["std_accuracy"]),
            per_class_accuracy=tuple(float(v) for v in d["per_class_accuracy"]),
            total_wall_time_s=float(d["total_wall_time_s"]),
            config=dict(d.get("config", {})),
            std_over=d.get("std_over", "repetitions"),
            class_labels=tuple(d.get("class_labels", ())),
            per_class_counts=tuple(int(v) for v in d.get("per_class_counts", ())),
            rep_accuracies=tuple(float(v) for v in d.get("rep_accuracies", ())),
            counts=tuple(FoldCounts(**c) for c in d.get("counts", ())),
            per_stage_time_s=d.get("per_stage_time_s"),
        )

    def without_timing(self) -> "EvaluationReport":
        stages = None if self.per_stage_time_s is None else {key: 0.0 for key in self.per_stage_time_s}
        return replace(self, total_wall_time_s=0.0, per_stage_time_s=stages)


class _Tally:
    """Accumulates per-class outcomes and timings over folds."""

    def __init__(self, class_count: int):
        self.correct = np.zeros(class_count, dtype=np.int64)
        self.seen = np.zeros(class_count, dtype=np.int64)
        self.wall = 0.0
        self.stage1 = 0.0
        self.stage2 = 0.0
        self.has_stages = False

    def run(self, tests: np.ndarray, truth: np.ndarray, train: Dataset, method, cfg: LsclConfig) -> FoldCounts:
        correct = incorrect = errored = 0
        t0 = time.perf_counter()
        if callable(method):
            preds = []
            for y in tests:
                try:
                    preds.append(int(method(y, train)))
                except (ValueError, ArithmeticError):
                    preds.append(None)
        else:
            items = classify_batch(tests, train, cfg, method)
            preds = [it.class_id for it in items]
            for it in items:
                if it.detail is not None:
                    self.has_stages = True
                    self.stage1 += it.detail.stage1_time
                    self.stage2 += it.detail.stage2_time
        self.wall += time.perf_counter() - t0
        for p, c in zip(preds, truth):
            self.seen[c] += 1
            if p is None:
                errored += 1
            elif p == c:
                correct += 1
                self.correct[c] += 1
            else:
                incorrect += 1
        return FoldCounts(correct, incorrect, errored)

    def per_class(self) -> tuple[float, ...]:
        return tuple(float(c / s) if s else 0.0 for c, s in zip(self.correct, self.seen))

    def stages(self) -> dict | None:
        return {"stage1": self.stage1, "stage2": self.stage2} if self.has_stages else None


def _method_name(method) -> str:
    if callable(method):
        return getattr(method, "__name__", type(method).__name__)
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    return method


def split_seeds(seed: int, repetitions: int) -> list[int]:
    """Per-repetition split seeds; shared by every method given the same seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(repetitions, dtype=np.uint64)]


def run_two_fold(
    ds: Dataset,
    method: str | Predictor = "lscl",
    cfg: LsclConfig | None = None,
    repetitions: int = DEFAULT_TWO_FOLD_REPS,
    seed: int = 0,
) -> EvaluationReport:
    """Repeated random per-class halving; train on one half, test on the other."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = cfg or LsclConfig()
    name = _method_name(method)
    tally = _Tally(ds.class_count)
    accs, counts = [], []
    for rep_seed in split_seeds(seed, repetitions):
        train, test = split_two_fold(ds, rep_seed)
        fc = tally.run(test.vectors, test.class_ids, train, method, cfg)
        counts.append(fc)
        accs.append(fc.correct / fc.total)
    return EvaluationReport(
        method=name,
        scheme="two_fold",
        repetitions=repetitions,
        mean_accuracy=float(np.mean(accs)),
        std_accuracy=float(np.std(accs)),
        per_class_accuracy=tally.per_class(),
        total_wall_time_s=tally.wall,
        config={**cfg.as_dict(), "seed": seed},
        std_over="repetitions",
        class_labels=ds.labels,
        per_class_counts=tuple(int(v) for v in ds.per_class_counts),
        rep_accuracies=tuple(float(a) for a in accs),
        counts=tuple(counts),
        per_stage_time_s=tally.stages(),
    )


def run_leave_one_out(
    ds: Dataset,
    method: str | Predictor = "lscl",
    cfg: LsclConfig | None = None,
) -> EvaluationReport:
    """One fold per sample.  The reported std is across per-class accuracies."""
    cfg = cfg or LsclConfig()
    name = _method_name(method)
    tally = _Tally(ds.class_count)
    total = FoldCounts(0, 0, 0)
    for train, y, c in leave_one_out_folds(ds):
        fc = tally.run(y[None, :], np.array([c]), train, method, cfg)
        total = FoldCounts(total.correct + fc.correct, total.incorrect + fc.incorrect, total.errored + fc.errored)
    per_class = tally.per_class()
    acc = total.correct / total.total
    return EvaluationReport(
        method=name,
        scheme="leave_one_out",
        repetitions=1,
        mean_accuracy=float(acc),
        std_accuracy=float(np.std(per_class)),
        per_class_accuracy=per_class,
        total_wall_time_s=tally.wall,
        config=cfg.as_dict(),
        std_over="classes",
        class_labels=ds.labels,
        per_class_counts=tuple(int(v) for v in ds.per_class_counts),
        rep_accuracies=(float(acc),),
        counts=(total,),
        per_stage_time_s=tally.stages(),
    )


def format_cell(r: EvaluationReport) -> str:
    """``mean ± std / seconds``, e.g. ``0.8139 ± 0.204 / 86``."""
    return f"{r.mean_accuracy:.4f} ± {r.std_accuracy:.3f} / {r.total_wall_time_s:.4g}"


def render_table(reports: list[EvaluationReport]) -> str:
    header = ("Method", "Scheme", "Accuracy ± std / time(s)", "Std over", "Reps")
    rows = [(r.method, r.scheme, format_cell(r), r.std_over, str(r.repetitions)) for r in reports]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    lines.append("accuracies are fractions in [0, 1]")
    return "\n".join(lines) + "\n"


def render_report(r: EvaluationReport | list[EvaluationReport], fmt: str = "table") -> bytes:
    reports = r if isinstance(r, list) else [r]
    if fmt == "table":
        return render_table(reports).encode()
    if fmt == "json":
        payload = [x.to_dict() for x in reports]
        return (json.dumps(payload if isinstance(r, list) else payload[0], indent=2) + "\n").encode()
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(data: bytes | str) -> EvaluationReport | list[EvaluationReport]:
    obj = json.loads(data)
    if isinstance(obj, list):
        return [EvaluationReport.from_dict(d) for d in obj]
    return EvaluationReport.from_dict(obj)
