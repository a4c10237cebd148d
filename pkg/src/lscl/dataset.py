"""Labeled sample collections: loading, saving, splitting and synthesis.

A :class:`Dataset` stores samples as rows of an ``(n, m)`` float array with a
parallel array of dense class ids.  The on-disk format is a CSV with header
``label,f0,...,f{m-1}`` plus a JSON manifest sidecar mapping dense ids back to
the original label tokens.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

MAX_SAMPLES = 2**31 - 1
MAX_CENTER_ATTEMPTS = 10_000


class DatasetError(ValueError):
    """Base class for dataset validation failures."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MalformedRowError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class EmptyClassError(DatasetError):
    pass


class NonFiniteValueError(DatasetError):
    pass


class SyntheticSpecError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable labeled samples.

    ``vectors[i]`` is sample ``i``; ``class_ids[i]`` its dense class id in
    ``[0, class_count)``.  ``labels[c]`` is the original token of class ``c``.
    """

    vectors: np.ndarray
    class_ids: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.asarray(self.vectors, dtype=np.float64)
        y = np.asarray(self.class_ids)
        if X.ndim != 2 or X.shape[1] < 1:
            raise DimensionMismatchError(f"vectors must be a 2-D (n, m>=1) array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DimensionMismatchError(f"{y.shape[0] if y.ndim else 0} class ids for {X.shape[0]} samples")
        if X.shape[0] == 0:
            raise EmptyClassError("dataset has no samples")
        if not np.issubdtype(y.dtype, np.integer):
            raise MalformedRowError("class ids must be integers")
        bad = np.flatnonzero(~np.isfinite(X).all(axis=1))
        if bad.size:
            raise NonFiniteValueError("non-finite feature value", row=int(bad[0]))
        if y.min() < 0:
            raise MalformedRowError("negative class id", row=int(np.argmin(y)))
        counts = np.bincount(y)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise EmptyClassError(f"class {int(empty[0])} has no samples")
        labels = tuple(self.labels) if self.labels else tuple(str(c) for c in range(counts.size))
        if len(labels) != counts.size:
            raise MalformedRowError(f"{len(labels)} labels for {counts.size} classes")
        object.__setattr__(self, "vectors", _frozen(X))
        object.__setattr__(self, "class_ids", _frozen(y.astype(np.int64)))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.labels)

    @cached_property
    def per_class_counts(self) -> np.ndarray:
        return _frozen(np.bincount(self.class_ids, minlength=self.class_count))

    @cached_property
    def class_indices(self) -> tuple[np.ndarray, ...]:
        """Sample indices of each class, in ascending order."""
        return tuple(_frozen(np.flatnonzero(self.class_ids == c)) for c in range(self.class_count))

    @cached_property
    def unit_vectors(self) -> np.ndarray:
        """Rows scaled to unit l2 norm; zero rows are rejected."""
        norms = np.linalg.norm(self.vectors, axis=1)
        zero = np.flatnonzero(norms == 0)
        if zero.size:
            raise ZeroDivisionError(f"sample {int(zero[0])} has zero norm and cannot be unit-normalized")
        return _frozen(self.vectors / norms[:, None])

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        """Samples at ``indices`` with class ids and labels unchanged.

        Every class must keep at least one sample.
        """
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.vectors[idx], self.class_ids[idx], self.labels)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.labels == other.labels
            and np.array_equal(self.class_ids, other.class_ids)
            and self.vectors.shape == other.vectors.shape
            and np.array_equal(self.vectors, other.vectors)
        )

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return f"Dataset(C={self.class_count}, n={self.n}, m={self.dim})"


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.json")


def save_dataset(ds: Dataset, path: str | Path, manifest: bool = True) -> Path:
    """Write ``ds`` as CSV (and the manifest sidecar unless disabled).

    Floats are written with ``repr`` so that loading recovers identical bits.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label"] + [f"f{i}" for i in range(ds.dim)])
        for row, c in zip(ds.vectors, ds.class_ids):
            w.writerow([ds.labels[c]] + [repr(float(v)) for v in row])
    if manifest:
        write_manifest(ds.labels, manifest_path(path))
    return path


def write_manifest(labels: Sequence[str], path: str | Path) -> None:
    Path(path).write_text(json.dumps({str(i): lab for i, lab in enumerate(labels)}, indent=2) + "\n")


def read_manifest(path: str | Path) -> list[str]:
    raw = json.loads(Path(path).read_text())
    return [raw[str(i)] for i in range(len(raw))]


def _parse_float(token: str, row: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise MalformedRowError(f"cannot parse {token!r} as a number", row=row) from None
    if not math.isfinite(v):
        raise NonFiniteValueError(f"non-finite value {token!r}", row=row)
    return v


def _all_numeric(tokens: list[str]) -> bool:
    try:
        [float(t) for t in tokens]
    except ValueError:
        return False
    return True


def read_vectors_csv(path: str | Path) -> tuple[np.ndarray, list[str] | None]:
    """Read a feature CSV; labels are returned when the first column is ``label``.

    Unlabeled files may omit the header; a first row that is entirely
    numeric is read as data.  Row numbers in errors are 1-based file lines.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRowError("empty file", row=1) from None
        labeled = bool(header) and header[0].strip() == "label"
        dim = len(header) - 1 if labeled else len(header)
        if dim < 1:
            raise MalformedRowError("header declares no feature columns", row=1)
        rows, labels = [], []
        if not labeled and _all_numeric(header):
            rows.append([_parse_float(t.strip(), 1) for t in header])
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not t.strip() for t in rec):
                continue
            feats = rec[1:] if labeled else rec
            if labeled:
                lab = rec[0].strip()
                if not lab:
                    raise MalformedRowError("empty label", row=lineno)
                labels.append(lab)
            if len(feats) != dim:
                raise DimensionMismatchError(f"expected {dim} features, found {len(feats)}", row=lineno)
            rows.append([_parse_float(t.strip(), lineno) for t in feats])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    return X, (labels if labeled else None)


def load_dataset(path: str | Path) -> Dataset:
    """Load a labeled CSV.

    Class ids are assigned densely in order of first appearance.  If a
    manifest sidecar exists, every label it lists must have at least one row.
    """
    X, labels = read_vectors_csv(path)
    if labels is None:
        raise MalformedRowError("first header column must be 'label'", row=1)
    if not labels:
        raise EmptyClassError("no samples", row=2)
    order: dict[str, int] = {}
    ids = np.array([order.setdefault(lab, len(order)) for lab in labels], dtype=np.int64)
    mpath = manifest_path(path)
    if mpath.exists():
        for lab in read_manifest(mpath):
            if lab not in order:
                raise EmptyClassError(f"class {lab!r} listed in manifest has no rows")
    return Dataset(X, ids, tuple(order))


@dataclass(frozen=True)
class SyntheticSpec:
    class_count: int
    samples_per_class: int
    dim: int
    class_separation: float = 8.0
    noise_scale: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.class_count < 1:
            raise SyntheticSpecError("class_count must be >= 1")
        if self.samples_per_class < 1:
            raise SyntheticSpecError("samples_per_class must be >= 1")
        if self.dim < 1:
            raise SyntheticSpecError("dim must be >= 1")
        if self.class_separation < 0 or self.noise_scale < 0:
            raise SyntheticSpecError("class_separation and noise_scale must be >= 0")
        if self.class_count * self.samples_per_class > MAX_SAMPLES:
            raise SyntheticSpecError(
                f"{self.class_count} x {self.samples_per_class} samples exceeds the limit of {MAX_SAMPLES}"
            )


def _place_centers(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    C, m, sep = spec.class_count, spec.dim, spec.class_separation
    # cube large enough that C balls of radius sep/2 fit with room to spare
    half = max(sep, 1.0) * max(1.0, C ** (1.0 / m))
    centers = np.empty((C, m))
    placed = 0
    for _ in range(MAX_CENTER_ATTEMPTS):
        cand = rng.uniform(-half, half, size=m)
        if placed == 0 or np.min(np.linalg.norm(centers[:placed] - cand, axis=1)) >= sep:
            centers[placed] = cand
            placed += 1
            if placed == C:
                return centers
    raise SyntheticSpecError(
        f"could not place {C} centers {sep} apart in dimension {m} "
        f"within {MAX_CENTER_ATTEMPTS} attempts; dim too small"
    )


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Gaussian clusters around pairwise-separated random centers.

    Samples are ordered class by class.  Identical specs give bit-identical
    datasets.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = _place_centers(spec, rng)
    ids = np.repeat(np.arange(spec.class_count), spec.samples_per_class)
    noise = rng.standard_normal((ids.size, spec.dim))
    X = centers[ids] + spec.noise_scale * noise
    return Dataset(X, ids, tuple(f"class{c}" for c in range(spec.class_count)))


def _check_min_per_class(ds: Dataset, minimum: int = 2) -> None:
    small = np.flatnonzero(ds.per_class_counts < minimum)
    if small.size:
        c = int(small[0])
        raise DatasetError(
            f"class {ds.labels[c]!r} has {int(ds.per_class_counts[c])} sample(s); at least {minimum} required"
        )


def split_two_fold(ds: Dataset, seed: int | None = None) -> tuple[Dataset, Dataset]:
    """Random per-class halves; the training half gets the ceiling for odd counts."""
    _check_min_per_class(ds)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for idx in ds.class_indices:
        perm = rng.permutation(idx)
        cut = (idx.size + 1) // 2
        train.append(perm[:cut])
        test.append(perm[cut:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return ds.subset(train_idx), ds.subset(test_idx)


def leave_one_out_folds(ds: Dataset) -> Iterator[tuple[Dataset, np.ndarray, int]]:
    """Yield ``(train, test_vector, test_class)`` holding out each sample in turn."""
    _check_min_per_class(ds)
    mask = np.ones(ds.n, dtype=bool)
    for i in range(ds.n):
        mask[i] = False
        yield ds.subset(np.flatnonzero(mask)), ds.vectors[i], int(ds.class_ids[i])
        mask[i] = True
