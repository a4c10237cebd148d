"""Two-stage classification and a uniform batch interface over all methods.

Stage 1 keeps the ``S`` classes whose local means (``k`` nearest same-class
samples) lie closest to the query.  Stage 2 codes the query over those
``k * S`` samples with a distance-weighted l1 penalty and picks the candidate
class with the smallest reconstruction residue.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .dataset import Dataset
from .neighbors import Metric, NeighborError, lmc_classify, select_candidates
from .sparse import (
    ClassResidues,
    CodingProblem,
    SolverConfig,
    code_and_decide,
    lsrc_classify,
    src_classify,
    wsrc_classify,
)

DEFAULT_K = 13
DEFAULT_S = 70
DEFAULT_LAMBDA = 0.01

Method = Literal["lscl", "lmc", "src", "wsrc", "lsrc"]
METHODS: tuple[str, ...] = ("lscl", "lmc", "src", "wsrc", "lsrc")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LsclConfig:
    """Hyperparameters shared by every method.

    ``S=None`` means the default of 70 candidate classes, reduced to the class
    count (with a warning) on smaller datasets.  An explicit ``S`` larger than
    the class count is an error.
    """

    k: int = DEFAULT_K
    S: int | None = None
    lam: float = DEFAULT_LAMBDA
    solver: SolverConfig = field(default_factory=SolverConfig)
    metric: Metric = "euclidean"

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.S is not None and self.S < 1:
            raise ConfigError("S must be >= 1")
        if not self.lam > 0:
            raise ConfigError("lambda must be positive")
        if self.metric not in ("euclidean", "cosine"):
            raise ConfigError(f"unknown metric {self.metric!r}")

    def resolve_S(self, class_count: int) -> int:
        if self.S is None:
            if class_count < DEFAULT_S:
                warnings.warn(
                    f"S defaults to {DEFAULT_S} but there are only {class_count} classes; using S={class_count}",
                    stacklevel=3,
                )
            return min(DEFAULT_S, class_count)
        if self.S > class_count:
            raise ConfigError(f"S={self.S} exceeds the number of classes ({class_count})")
        return self.S

    def validate_for(self, ds: Dataset) -> int:
        """Check against ``ds`` before any work; returns the effective S."""
        smallest = int(ds.per_class_counts.min())
        if self.k > smallest:
            raise ConfigError(f"k={self.k} exceeds the smallest class size ({smallest})")
        return self.resolve_S(ds.class_count)

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "S": self.S,
            "lambda": self.lam,
            "metric": self.metric,
            "solver": {
                "mode": self.solver.mode,
                "max_iters": self.solver.max_iters,
                "tol": self.solver.tol,
                "epsilon_residual": self.solver.epsilon_residual,
                "kkt_tol": self.solver.kkt_tol,
                "continuation": self.solver.continuation,
            },
        }


@dataclass(frozen=True)
class LsclDecision:
    class_id: int
    candidates: tuple[int, ...]
    candidate_distances: tuple[float, ...]
    residues: ClassResidues
    iterations: int
    objective: float
    converged: bool
    solver_method: str
    stage1_time: float
    stage2_time: float


def lscl_classify(y: np.ndarray, ds: Dataset, cfg: LsclConfig | None = None) -> LsclDecision:
    cfg = cfg or LsclConfig()
    S = cfg.validate_for(ds)

    t0 = time.perf_counter()
    cand = select_candidates(y, ds, cfg.k, S)
    t1 = time.perf_counter()
    problem = CodingProblem(cand.dictionary, cand.query, cfg.lam, cand.weights, cand.atom_class)
    coded = code_and_decide(problem, cfg.solver)
    t2 = time.perf_counter()

    sol = coded.solution
    return LsclDecision(
        class_id=coded.class_id,
        candidates=tuple(cand.class_ids),
        candidate_distances=tuple(float(s.mean_distance) for s in cand.subsets),
        residues=coded.residues,
        iterations=sol.iterations,
        objective=sol.objective,
        converged=sol.converged,
        solver_method=sol.method,
        stage1_time=t1 - t0,
        stage2_time=t2 - t1,
    )


def _check_dataset_for(method: str, ds: Dataset, cfg: LsclConfig) -> None:
    if method == "lscl":
        cfg.validate_for(ds)
    elif method == "lmc" and cfg.k > int(ds.per_class_counts.min()):
        raise ConfigError(f"k={cfg.k} exceeds the smallest class size ({int(ds.per_class_counts.min())})")
    elif method == "lsrc" and cfg.k > ds.n:
        raise ConfigError(f"k={cfg.k} exceeds the number of training samples ({ds.n})")


def classify_one(y: np.ndarray, ds: Dataset, cfg: LsclConfig, method: str = "lscl") -> int | LsclDecision:
    if method == "lscl":
        return lscl_classify(y, ds, cfg)
    if method == "lmc":
        return lmc_classify(y, ds, cfg.k, cfg.metric)
    if method == "src":
        return src_classify(y, ds, cfg.lam, cfg.solver)
    if method == "wsrc":
        return wsrc_classify(y, ds, cfg.lam, cfg.solver)
    if method == "lsrc":
        return lsrc_classify(y, ds, cfg.k, cfg.lam, cfg.solver)
    raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class BatchItem:
    """Outcome for one test vector; ``class_id`` is None when it failed."""

    class_id: int | None
    seconds: float
    error: str | None = None
    detail: LsclDecision | None = None


def classify_batch(
    tests: Sequence[np.ndarray] | np.ndarray,
    ds: Dataset,
    cfg: LsclConfig | None = None,
    method: str = "lscl",
) -> list[BatchItem]:
    """Classify every test vector; a failing sample is recorded, not raised.

    Configuration errors that would fail every sample are raised up front.
    """
    cfg = cfg or LsclConfig()
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {METHODS}")
    _check_dataset_for(method, ds, cfg)
    out = []
    for y in tests:
        t0 = time.perf_counter()
        try:
            res = classify_one(y, ds, cfg, method)
        except (NeighborError, ValueError, ArithmeticError) as exc:
            out.append(BatchItem(None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"))
            continue
        dt = time.perf_counter() - t0
        if isinstance(res, LsclDecision):
            out.append(BatchItem(res.class_id, dt, None, res))
        else:
            out.append(BatchItem(int(res), dt))
    return out


