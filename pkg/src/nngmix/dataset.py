"""Tabular datasets: CSV loading, synthetic clusters, standardization, and
the train/test and labeled/unlabeled carving used by every experiment."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .randgen import RngStream

__all__ = [
    "Dataset",
    "Standardizer",
    "SplitPlan",
    "Cluster",
    "load_csv",
    "save_csv",
    "standardize",
    "fit_standardizer",
    "make_synthetic_clusters",
    "load_cluster_spec",
    "TWO_BLOB_CLUSTERS",
    "THREE_BLOB_CLUSTERS",
    "split_train_test",
    "carve_split",
]


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus binary labels (1 = anomaly).

    ``row_ids`` track the source row of every sample so splits can be
    checked for disjointness; they default to ``0..n-1``.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray | None = None
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[1] < 1:
            raise DataError("dataset has no feature columns")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        ids = np.arange(X.shape[0]) if self.row_ids is None else np.asarray(self.row_ids)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_anomalies(self) -> int:
        return int(self.labels.sum())

    def subset(self, idx: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(
            name=name or self.name,
            features=self.features[idx],
            labels=self.labels[idx],
            row_ids=self.row_ids[idx],
            feature_names=self.feature_names,
        )


# --------------------------------------------------------------------------
# CSV


def load_csv(path, label_column: str = "label", name: str | None = None) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: no label column {label_column!r} in header")
        li = header.index(label_column)
        feat_cols = [i for i in range(len(header)) if i != li]
        if not feat_cols:
            raise DataError(f"{path}: no feature columns besides {label_column!r}")
        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            raw = rec[li].strip()
            try:
                lab = float(raw)
            except ValueError:
                lab = None
            if lab not in (0.0, 1.0):
                raise DataError(f"{path}:{lineno}: label {raw!r} is not 0 or 1")
            vals = []
            for i in feat_cols:
                try:
                    v = float(rec[i])
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {header[i]!r} has non-numeric value {rec[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {header[i]!r} is not finite")
                vals.append(v)
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(
        name=name or path.stem,
        features=np.array(rows, dtype=float),
        labels=np.array(labels, dtype=np.int64),
        feature_names=tuple(header[i] for i in feat_cols),
    )


def save_csv(path, features: np.ndarray, labels: np.ndarray, feature_names=None,
             label_column: str = "label") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X = np.asarray(features, dtype=float)
    names = list(feature_names) if feature_names else [f"f{i}" for i in range(X.shape[1])]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, label_column])
        for row, lab in zip(X, labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
    return path


# --------------------------------------------------------------------------
# standardization


@dataclass(frozen=True)
class Standardizer:
    """Per-feature affine transform fitted on training data.

    ``ddof`` records the std denominator convention (1 = unbiased).
    Columns whose std is below ``1e-12`` get scale 1, i.e. are only centered.
    """

    mean: np.ndarray
    std: np.ndarray
    scale: np.ndarray
    ddof: int = 1

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "scale": self.scale.tolist(), "ddof": self.ddof}


def fit_standardizer(X: np.ndarray, ddof: int = 1) -> Standardizer:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise DataError("standardization needs at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=ddof)
    scale = np.where(std < 1e-12, 1.0, std)
    return Standardizer(mean=mean, std=std, scale=scale, ddof=ddof)


def standardize(dataset: Dataset) -> tuple[Dataset, Standardizer]:
    st = fit_standardizer(dataset.features)
    return replace(dataset, features=st.transform(dataset.features)), st


# --------------------------------------------------------------------------
# synthetic clusters


@dataclass(frozen=True)
class Cluster:
    center: tuple[float, ...]
    std: float
    count: int
    label: int

    @classmethod
    def from_dict(cls, d: dict) -> "Cluster":
        try:
            return cls(tuple(float(c) for c in d["center"]), float(d["std"]),
                       int(d["count"]), int(d["label"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad cluster entry {d!r}: {e}") from None

    def to_dict(self) -> dict:
        return {"center": list(self.center), "std": self.std, "count": self.count,
                "label": self.label}


# normals at the origin flanked by two anomaly types
TWO_BLOB_CLUSTERS = (
    Cluster((0.0, 0.0), 1.0, 500, 0),
    Cluster((-10.0, 0.0), 0.5, 25, 1),
    Cluster((10.0, 0.0), 0.5, 25, 1),
)

# one unlabeled cluster centrally placed among three labeled-anomaly clusters
THREE_BLOB_CLUSTERS = (
    Cluster((0.0, 0.0), 1.0, 300, 0),
    Cluster((0.0, 6.0), 0.6, 20, 1),
    Cluster((-5.196, -3.0), 0.6, 20, 1),
    Cluster((5.196, -3.0), 0.6, 20, 1),
)


def make_synthetic_clusters(spec, seed: int, name: str = "synthetic") -> Dataset:
    """Isotropic Gaussian blobs, rows shuffled deterministically."""
    clusters = [c if isinstance(c, Cluster) else Cluster.from_dict(c) for c in spec]
    if not clusters:
        raise ConfigError("cluster spec is empty")
    dims = {len(c.center) for c in clusters}
    if len(dims) != 1:
        raise ConfigError(f"clusters disagree on dimension: {sorted(dims)}")
    for c in clusters:
        if c.count < 1 or c.std < 0 or c.label not in (0, 1):
            raise ConfigError(f"invalid cluster {c}")
    rng = RngStream(seed, "synth")
    d = dims.pop()
    blocks, labels = [], []
    for c in clusters:
        z = rng.standard_normal((c.count, d))
        blocks.append(np.asarray(c.center) + c.std * z)
        labels.append(np.full(c.count, c.label))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    order = rng.permutation(len(y))
    return Dataset(name=name, features=X[order], labels=y[order])


def load_cluster_spec(path) -> list[Cluster]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read cluster spec {path}: {e}") from None
    if not isinstance(data, list):
        raise ConfigError("cluster spec must be a JSON array")
    return [Cluster.from_dict(c) for c in data]


# --------------------------------------------------------------------------
# splitting


def split_train_test(dataset: Dataset, train_fraction: float, seed: int):
    """Stratified split; row order within each part follows the source."""
    if not 0 < train_fraction < 1:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    rng = RngStream(seed, "split")
    train_idx = []
    for cls in (0, 1):
        idx = np.flatnonzero(dataset.labels == cls)
        if idx.size == 0:
            continue
        if idx.size < 2:
            raise DataError(f"class {cls} has {idx.size} member(s); cannot stratify")
        n_tr = int(np.floor(train_fraction * idx.size + 0.5))
        n_tr = min(max(n_tr, 1), idx.size - 1)
        train_idx.append(idx[rng.permutation(idx.size)[:n_tr]])
    train_idx = np.sort(np.concatenate(train_idx))
    mask = np.zeros(dataset.n, dtype=bool)
    mask[train_idx] = True
    test_idx = np.flatnonzero(~mask)
    return (dataset.subset(train_idx, f"{dataset.name}:train"),
            dataset.subset(test_idx, f"{dataset.name}:test"))


@dataclass(frozen=True)
class SplitPlan:
    """Labeled anomalies A, unlabeled pool H (treated as normal), and test data."""

    labeled_anomalies: np.ndarray
    unlabeled_pool: np.ndarray
    labeled_ratio: float
    pollution_ratio: float
    seed: int
    a_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    h_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    discarded_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    n_polluting: int = 0
    test_features: np.ndarray | None = None
    test_labels: np.ndarray | None = None

    @property
    def n_labeled(self) -> int:
        return self.labeled_anomalies.shape[0]

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled_pool.shape[0]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def carve_split(train: Dataset, labeled_ratio: float, pollution_ratio: float, seed: int,
                test: Dataset | None = None) -> SplitPlan:
    """Carve ``train`` into A and H.

    ``|A| = ceil(rho * anomalies)`` (at least 1). Of the residual anomalies,
    ``round(gamma * residual)`` join H unlabeled; the rest are dropped.
    H also holds every training normal.
    """
    rho, gamma = labeled_ratio, pollution_ratio
    if not 0 < rho <= 1:
        raise ConfigError(f"labeled ratio must be in (0, 1], got {rho}")
    if not 0 <= gamma <= 1:
        raise ConfigError(f"pollution ratio must be in [0, 1], got {gamma}")
    anom = np.flatnonzero(train.labels == 1)
    norm = np.flatnonzero(train.labels == 0)
    if anom.size == 0:
        raise DataError("training data has no anomalies to label")
    rng = RngStream(seed, "carve")
    # tolerance keeps e.g. 0.07 * 100 from rounding up to 8
    n_a = min(max(math.ceil(rho * anom.size - 1e-9), 1), anom.size)
    perm = anom[rng.permutation(anom.size)]
    a_idx, residual = perm[:n_a], perm[n_a:]
    n_pol = _round_half_up(gamma * residual.size)
    pol, dropped = residual[:n_pol], residual[n_pol:]
    h_idx = np.sort(np.concatenate([norm, pol]))
    a_idx = np.sort(a_idx)
    return SplitPlan(
        labeled_anomalies=train.features[a_idx],
        unlabeled_pool=train.features[h_idx],
        labeled_ratio=rho,
        pollution_ratio=gamma,
        seed=seed,
        a_ids=train.row_ids[a_idx],
        h_ids=train.row_ids[h_idx],
        discarded_ids=train.row_ids[np.sort(dropped)],
        n_polluting=int(n_pol),
        test_features=None if test is None else test.features,
        test_labels=None if test is None else test.labels,
    )
