"""Weighted l1-regularized least squares and residue-based classification.

The objective throughout is

    f(x) = ||A x - y||_2^2 + lam * sum_j w_j |x_j|

with no 1/2 on the quadratic term, so the soft-threshold applied after a
step of size ``s`` along ``-A^T (A x - y)`` is ``lam * w_j * s / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import Dataset
from .neighbors import _prepare_query, pairwise, rank_order

UNIT_NORM_TOL = 1e-9
MAX_CONDITION = 1e12
MAX_HALVINGS = 60
REFIT_EVERY = 10
PATH_FACTOR = 0.1


class SolverError(ArithmeticError):
    pass


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    mode: Literal["proximal", "closed_form"] = "proximal"
    max_iters: int = 1000
    tol: float = 1e-8
    epsilon_residual: float = 0.0
    kkt_tol: float = 1e-6
    continuation: bool = True

    def __post_init__(self):
        if self.mode not in ("proximal", "closed_form"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.epsilon_residual < 0:
            raise ValueError("epsilon_residual must be >= 0")
        if not self.kkt_tol > 0:
            raise ValueError("kkt_tol must be positive")


@dataclass(frozen=True)
class CodingProblem:
    """Dictionary with unit columns, target, penalty and per-atom weights."""

    dictionary: np.ndarray
    target: np.ndarray
    lam: float
    weights: np.ndarray | None = None
    atom_class: np.ndarray | None = None

    def __post_init__(self):
        A = np.asarray(self.dictionary, dtype=np.float64)
        y = np.asarray(self.target, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[1] == 0:
            raise ProblemError(f"dictionary must be m x p with p >= 1, got shape {A.shape}")
        if A.shape[0] != y.size:
            raise ProblemError(f"dictionary has {A.shape[0]} rows, target has {y.size} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise SolverError("non-finite values in dictionary or target")
        norms = np.linalg.norm(A, axis=0)
        if np.any(norms == 0):
            raise ProblemError(f"dictionary column {int(np.argmin(norms))} is zero")
        bad = np.flatnonzero(np.abs(norms - 1) > UNIT_NORM_TOL)
        if bad.size:
            raise ProblemError(f"dictionary column {int(bad[0])} has norm {norms[bad[0]]:.12g}, expected 1")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ProblemError("lam must be a positive finite number")
        p = A.shape[1]
        w = np.ones(p) if self.weights is None else np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if w.size != p:
            raise ProblemError(f"{w.size} weights for {p} atoms")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ProblemError("weights must be finite and non-negative")
        ac = np.zeros(p, dtype=np.int64) if self.atom_class is None else np.asarray(self.atom_class, dtype=np.int64)
        if ac.shape != (p,):
            raise ProblemError(f"{ac.size} atom classes for {p} atoms")
        object.__setattr__(self, "dictionary", A)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "atom_class", ac)

    @property
    def p(self) -> int:
        return self.dictionary.shape[1]

    def objective(self, x: np.ndarray) -> float:
        r = self.dictionary @ x - self.target
        return float(r @ r + self.lam * (self.weights @ np.abs(x)))


@dataclass(frozen=True)
class SparseSolution:
    coefficients: np.ndarray
    objective: float
    iterations: int
    converged: bool
    method: str = "proximal"
    objective_trace: tuple[float, ...] = field(default=(), repr=False)


def soft_threshold(v: np.ndarray, thresh: np.ndarray | float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


def _refit_support(problem: CodingProblem, x: np.ndarray) -> np.ndarray | None:
    """Solve the optimality equations on the support of ``x`` with its signs fixed.

    Returns the refit point only if it keeps every sign, satisfies the
    off-support conditions and does not raise the objective.
    """
    A, y = problem.dictionary, problem.target
    lw = problem.lam * problem.weights
    support = np.flatnonzero(x)
    if support.size == 0 or support.size > A.shape[0]:
        return None
    As = A[:, support]
    sign = np.sign(x[support])
    G = As.T @ As
    if np.linalg.cond(G) > MAX_CONDITION:
        return None
    xs = np.linalg.solve(G, As.T @ y - 0.5 * lw[support] * sign)
    if np.any(np.sign(xs) != sign):
        return None
    cand = np.zeros_like(x)
    cand[support] = xs
    grad = 2.0 * A.T @ (A @ cand - y)
    off = np.ones(x.size, dtype=bool)
    off[support] = False
    if np.any(np.abs(grad[off]) > lw[off] * (1 + 1e-9) + 1e-12):
        return None
    if problem.objective(cand) > problem.objective(x) * (1 + 1e-12) + 1e-15:
        return None
    return cand


def _apg(
    problem: CodingProblem, cfg: SolverConfig, x0: np.ndarray | None, max_iters: int
) -> tuple[np.ndarray, int, bool, list[float]]:
    A, y, lam = problem.dictionary, problem.target, problem.lam
    w = problem.weights
    thresh_unit = lam * w / 2.0

    x = np.zeros(problem.p) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    F = problem.objective(x)
    trace = [F]
    if cfg.epsilon_residual > 0 and np.sqrt(F) <= cfg.epsilon_residual:
        return x, 0, True, trace
    v = x.copy()
    t = 1.0
    step = 1.0
    converged = False
    last_failed = -REFIT_EVERY
    it = 0
    for it in range(1, max_iters + 1):
        plain = t == 1.0 and np.array_equal(v, x)
        checking = it - last_failed >= REFIT_EVERY
        r_v = A @ v - y
        g = A.T @ r_v
        q_v = float(r_v @ r_v)
        for _ in range(MAX_HALVINGS):
            z = soft_threshold(v - step * g, step * thresh_unit)
            d = z - v
            r_z = A @ z - y
            q_z = float(r_z @ r_z)
            bound = q_v + 2.0 * float(g @ d) + float(d @ d) / step
            if q_z <= bound + 1e-14 * max(1.0, abs(q_v)):
                break
            step *= 0.5
        else:
            raise SolverError("line search failed to find a decreasing step")
        if not np.isfinite(q_z):
            raise SolverError("non-finite objective encountered")
        F_z = q_z + lam * float(w @ np.abs(z))
        rel = (F - F_z) / max(F, np.finfo(float).tiny)
        if plain and checking and rel < cfg.tol:
            cand = z if F_z <= F else x
            refit = _refit_support(problem, cand)
            if refit is not None:
                cand = refit
            if kkt_violation(problem, cand) <= cfg.kkt_tol:
                x, F = cand, min(F, problem.objective(cand))
                trace.append(F)
                converged = True
                break
            last_failed = it
        if F_z > F:
            trace.append(F)
            v, t = x.copy(), 1.0
            continue
        x_prev, x, F = x, z, F_z
        trace.append(F)
        if cfg.epsilon_residual > 0 and np.sqrt(q_z) <= cfg.epsilon_residual:
            converged = True
            break
        refit = _refit_support(problem, x) if it % REFIT_EVERY == 0 or rel < cfg.tol else None
        if refit is not None:
            x, F = refit, min(F, problem.objective(refit))
            trace.append(F)
            v, t = x.copy(), 1.0
        elif (checking and rel < cfg.tol) or float((v - x) @ (x - x_prev)) > 0:
            # confirm small progress with a plain step, or drop uphill momentum
            v, t = x.copy(), 1.0
        else:
            t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            v = x + ((t - 1.0) / t_next) * (x - x_prev)
            t = t_next
    return x, it, converged, trace


def _path(problem: CodingProblem) -> list[float]:
    # decreasing penalties from where the zero vector stops being optimal
    A, y, w = problem.dictionary, problem.target, problem.weights
    pos = w > 0
    if not pos.any():
        return []
    lam_max = float(np.max(np.abs(2.0 * A.T @ y)[pos] / w[pos]))
    out = []
    lam = lam_max * PATH_FACTOR
    while lam > problem.lam:
        out.append(lam)
        lam *= PATH_FACTOR
    return out


def solve_weighted_l1(
    problem: CodingProblem, cfg: SolverConfig | None = None, x0: np.ndarray | None = None
) -> SparseSolution:
    """Accelerated proximal gradient with backtracking and a monotone safeguard.

    Momentum is restarted whenever it points uphill or a candidate would
    raise the objective, so the recorded objective never increases.  The run
    stops once a plain proximal step from the current point lowers the
    objective by a relative amount below ``cfg.tol`` and the optimality
    residual (after an exact refit on the support, when that is valid) is
    at most ``cfg.kkt_tol``.

    With ``cfg.continuation`` and no ``x0``, small penalties are approached
    through a short path of larger ones, each solve warm-starting the next.
    All stages share the ``cfg.max_iters`` budget.  Each stage lowers its own
    objective and the penalty only decreases, so the target objective at
    every stage end is below its value at zero; the trace holds that
    starting value followed by the final stage.
    """
    cfg = cfg or SolverConfig()
    budget = cfg.max_iters
    used = 0
    start = x0
    path = _path(problem) if cfg.continuation and x0 is None else []
    loose = SolverConfig(tol=max(cfg.tol, 1e-6), kkt_tol=max(cfg.kkt_tol, 1e-3), continuation=False)
    for lam in path:
        if budget - used < 2:
            break
        stage = CodingProblem(problem.dictionary, problem.target, lam, problem.weights, problem.atom_class)
        start, it, _, _ = _apg(stage, loose, start, budget - used - 1)
        used += it
    x, it, converged, trace = _apg(problem, cfg, start, budget - used)
    if start is not None and x0 is None:
        trace = [problem.objective(np.zeros(problem.p))] + trace
    return SparseSolution(x, problem.objective(x), used + it, converged, "proximal", tuple(trace))


def solve_closed_form(problem: CodingProblem) -> SparseSolution:
    """``(A^T A + lam diag(w))^{-1} A^T y``.

    This is the stationary point of a weighted ridge objective, not of the l1
    problem; the solution is tagged ``method='closed_form_ridge'``.
    """
    A, y = problem.dictionary, problem.target
    M = A.T @ A + problem.lam * np.diag(problem.weights)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SolverError(f"system is singular or ill-conditioned (condition number {cond:.3g})")
    x = np.linalg.solve(M, A.T @ y)
    return SparseSolution(x, problem.objective(x), 0, True, "closed_form_ridge")


def solve(problem: CodingProblem, cfg: SolverConfig | None = None) -> SparseSolution:
    cfg = cfg or SolverConfig()
    if cfg.mode == "closed_form":
        return solve_closed_form(problem)
    return solve_weighted_l1(problem, cfg)


def solve_lasso(A: np.ndarray, y: np.ndarray, lam: float, cfg: SolverConfig | None = None) -> SparseSolution:
    """Unweighted case: every atom weight is 1."""
    return solve(CodingProblem(A, y, lam), cfg)


def kkt_violation(problem: CodingProblem, x: np.ndarray) -> float:
    """Largest violation of the weighted-lasso optimality conditions at ``x``."""
    grad = 2.0 * problem.dictionary.T @ (problem.dictionary @ x - problem.target)
    lw = problem.lam * problem.weights
    nz = x != 0
    viol = np.where(nz, np.abs(grad + lw * np.sign(x)), np.maximum(np.abs(grad) - lw, 0.0))
    return float(viol.max(initial=0.0))


@dataclass(frozen=True)
class ClassResidues:
    class_ids: tuple[int, ...]
    residues: tuple[float, ...]

    def best(self) -> int:
        """Class with the smallest residue; ties go to the smaller id."""
        r = np.asarray(self.residues)
        tied = [c for c, v in zip(self.class_ids, r) if v == r.min()]
        return min(tied)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.class_ids, self.residues))


def class_reconstructions(problem: CodingProblem, sol: SparseSolution) -> dict[int, np.ndarray]:
    """``y_c`` for each class present among the atoms, built from class-``c`` atoms only."""
    A, x = problem.dictionary, sol.coefficients
    return {int(c): A[:, problem.atom_class == c] @ x[problem.atom_class == c] for c in np.unique(problem.atom_class)}


def class_residues(problem: CodingProblem, sol: SparseSolution, y: np.ndarray | None = None) -> ClassResidues:
    """``||y - y_c||`` where ``y_c`` uses only class-``c`` atoms and coefficients."""
    y = problem.target if y is None else np.asarray(y, dtype=np.float64)
    recon = class_reconstructions(problem, sol)
    return ClassResidues(tuple(recon), tuple(float(np.linalg.norm(y - y_c)) for y_c in recon.values()))


@dataclass(frozen=True)
class CodingDecision:
    class_id: int
    residues: ClassResidues
    solution: SparseSolution


def code_and_decide(problem: CodingProblem, cfg: SolverConfig | None = None) -> CodingDecision:
    sol = solve(problem, cfg)
    res = class_residues(problem, sol)
    return CodingDecision(res.best(), res, sol)


def src_problem(y: np.ndarray, ds: Dataset, lam: float, weighted: bool = False) -> CodingProblem:
    yn = _prepare_query(y, ds)
    X = ds.unit_vectors
    w = pairwise(yn, X) if weighted else None
    return CodingProblem(X.T, yn, lam, w, ds.class_ids)


def src_classify(y: np.ndarray, ds: Dataset, lam: float = 0.01, cfg: SolverConfig | None = None) -> int:
    """Sparse-code ``y`` over every training sample; smallest class residue wins."""
    return code_and_decide(src_problem(y, ds, lam), cfg).class_id


def wsrc_classify(y: np.ndarray, ds: Dataset, lam: float = 0.01, cfg: SolverConfig | None = None) -> int:
    """As :func:`src_classify` with each atom penalized by its distance to ``y``."""
    return code_and_decide(src_problem(y, ds, lam, weighted=True), cfg).class_id


def lsrc_classify(y: np.ndarray, ds: Dataset, k: int, lam: float = 0.01, cfg: SolverConfig | None = None) -> int:
    """Unweighted coding over the ``k`` nearest training samples of any class."""
    if not 1 <= k <= ds.n:
        raise ProblemError(f"k={k} must lie in [1, {ds.n}]")
    yn = _prepare_query(y, ds)
    X = ds.unit_vectors
    near = rank_order(pairwise(yn, X), "euclidean")[:k]
    problem = CodingProblem(X[near].T, yn, lam, None, ds.class_ids[near])
    return code_and_decide(problem, cfg).class_id
