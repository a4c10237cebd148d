"""Distances, per-class k-NN, local means, LMC and stage-1 candidate pruning.

All classifiers here work on unit-normalized vectors: training rows come from
``Dataset.unit_vectors`` and the query is normalized on entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dataset import Dataset

Metric = Literal["euclidean", "cosine"]
METRICS = ("euclidean", "cosine")


class NeighborError(ValueError):
    pass


def _check_metric(metric: str) -> None:
    if metric not in METRICS:
        raise NeighborError(f"unknown metric {metric!r}; expected one of {METRICS}")


def distance(u: np.ndarray, v: np.ndarray, metric: Metric = "euclidean") -> float:
    """Euclidean distance, or cosine similarity (larger is closer) for ``metric='cosine'``."""
    _check_metric(metric)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise NeighborError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if metric == "euclidean":
        return float(np.linalg.norm(u - v))
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise NeighborError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def pairwise(y: np.ndarray, X: np.ndarray, metric: Metric = "euclidean") -> np.ndarray:
    """``distance(y, X[i])`` for every row of ``X``."""
    _check_metric(metric)
    if metric == "euclidean":
        return np.linalg.norm(X - y, axis=1)
    ny = np.linalg.norm(y)
    nx = np.linalg.norm(X, axis=1)
    if ny == 0 or np.any(nx == 0):
        raise NeighborError("cosine similarity is undefined for a zero vector")
    return np.clip(X @ y / (nx * ny), -1.0, 1.0)


def rank_order(scores: np.ndarray, metric: Metric) -> np.ndarray:
    """Indices from closest to farthest; ties keep the lower index first."""
    key = scores if metric == "euclidean" else -scores
    return np.argsort(key, kind="stable")


def _prepare_query(y: np.ndarray, ds: Dataset) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != ds.dim:
        raise NeighborError(f"query has dimension {y.size}, dataset has {ds.dim}")
    if not np.all(np.isfinite(y)):
        raise NeighborError("query contains non-finite values")
    norm = np.linalg.norm(y)
    if norm == 0:
        raise NeighborError("query has zero norm")
    return y / norm


@dataclass(frozen=True)
class NeighborSubset:
    class_id: int
    member_indices: np.ndarray
    member_scores: np.ndarray
    local_mean: np.ndarray
    mean_distance: float


def _knn_subset(
    yn: np.ndarray, X: np.ndarray, idx: np.ndarray, scores: np.ndarray, class_id: int, k: int, metric: Metric
) -> NeighborSubset:
    # scores[i] is the score of X[idx[i]]
    if not 1 <= k <= idx.size:
        raise NeighborError(f"k={k} is outside [1, {idx.size}] for class {class_id}")
    order = rank_order(scores, metric)[:k]
    members = idx[order]
    mean = X[members].mean(axis=0)
    return NeighborSubset(class_id, members, scores[order], mean, distance(yn, mean, metric))


def knn_in_class(y: np.ndarray, ds: Dataset, class_id: int, k: int, metric: Metric = "euclidean") -> NeighborSubset:
    """The ``k`` members of ``class_id`` closest to ``y`` and their local mean."""
    _check_metric(metric)
    if not 0 <= class_id < ds.class_count:
        raise NeighborError(f"class {class_id} does not exist")
    yn = _prepare_query(y, ds)
    idx = ds.class_indices[class_id]
    X = ds.unit_vectors
    return _knn_subset(yn, X, idx, pairwise(yn, X[idx], metric), class_id, k, metric)


def _check_k(ds: Dataset, k: int) -> None:
    smallest = int(ds.per_class_counts.min())
    if not 1 <= k <= smallest:
        raise NeighborError(f"k={k} must lie in [1, {smallest}] (smallest class size)")


def local_mean_scores(
    y: np.ndarray, ds: Dataset, k: int, metric: Metric = "euclidean", renormalize_means: bool = False
) -> tuple[np.ndarray, list[NeighborSubset]]:
    """Score of ``y`` against each class's local mean, plus the subsets."""
    _check_metric(metric)
    _check_k(ds, k)
    yn = _prepare_query(y, ds)
    X = ds.unit_vectors
    every = pairwise(yn, X, metric)
    subsets = [
        _knn_subset(yn, X, idx, every[idx], c, k, metric) for c, idx in enumerate(ds.class_indices)
    ]
    if renormalize_means:
        scores = np.array([distance(yn, s.local_mean / np.linalg.norm(s.local_mean), metric) for s in subsets])
    else:
        scores = np.array([s.mean_distance for s in subsets])
    return scores, subsets


def lmc_classify(
    y: np.ndarray, ds: Dataset, k: int, metric: Metric = "euclidean", renormalize_means: bool = False
) -> int:
    """Local mean-based classifier.

    Nearest local mean under Euclidean distance, or largest cosine similarity
    to it.  Ties go to the smaller class id.
    """
    scores, _ = local_mean_scores(y, ds, k, metric, renormalize_means)
    return int(np.argmin(scores) if metric == "euclidean" else np.argmax(scores))


@dataclass(frozen=True)
class CandidateSet:
    """Stage-1 output.

    ``dictionary`` has unit columns ordered subset-major, ``weights[j]`` is the
    Euclidean distance from the normalized query to column ``j`` and
    ``atom_class[j]`` its class id.
    """

    subsets: tuple[NeighborSubset, ...]
    dictionary: np.ndarray
    weights: np.ndarray
    atom_class: np.ndarray
    atom_index: np.ndarray
    query: np.ndarray

    @property
    def class_ids(self) -> list[int]:
        return [s.class_id for s in self.subsets]


def select_candidates(y: np.ndarray, ds: Dataset, k: int, S: int) -> CandidateSet:
    """Keep the ``S`` classes whose local means are nearest to ``y`` (Euclidean)."""
    if not 1 <= S <= ds.class_count:
        raise NeighborError(f"S={S} must lie in [1, {ds.class_count}] (class count)")
    scores, subsets = local_mean_scores(y, ds, k, "euclidean")
    chosen = tuple(subsets[c] for c in np.argsort(scores, kind="stable")[:S])
    atom_index = np.concatenate([s.member_indices for s in chosen])
    return CandidateSet(
        subsets=chosen,
        dictionary=ds.unit_vectors[atom_index].T.copy(),
        weights=np.concatenate([s.member_scores for s in chosen]),
        atom_class=np.repeat([s.class_id for s in chosen], k),
        atom_index=atom_index,
        query=_prepare_query(y, ds),
    )
