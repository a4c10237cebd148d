"""Two-stage local-similarity classification.

Stage 1 prunes the training set to the classes whose local means lie nearest
the query; stage 2 codes the query over the surviving samples with a
distance-weighted l1 penalty and decides by per-class residue.
"""

from .classifier import LsclConfig, LsclDecision, classify_batch, lscl_classify
from .dataset import Dataset, SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .evaluation import EvaluationReport, render_report, run_leave_one_out, run_two_fold
from .neighbors import lmc_classify, select_candidates
from .sparse import (
    CodingProblem,
    SolverConfig,
    class_residues,
    lsrc_classify,
    solve_closed_form,
    solve_lasso,
    solve_weighted_l1,
    src_classify,
    wsrc_classify,
)

__all__ = [
    "CodingProblem",
    "Dataset",
    "EvaluationReport",
    "LsclConfig",
    "LsclDecision",
    "SolverConfig",
    "SyntheticSpec",
    "class_residues",
    "classify_batch",
    "generate_synthetic",
    "lmc_classify",
    "load_dataset",
    "lscl_classify",
    "lsrc_classify",
    "render_report",
    "run_leave_one_out",
    "run_two_fold",
    "save_dataset",
    "select_candidates",
    "solve_closed_form",
    "solve_lasso",
    "solve_weighted_l1",
    "src_classify",
    "wsrc_classify",
]
