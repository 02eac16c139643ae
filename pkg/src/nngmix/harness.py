"""Experiment orchestration: single cells, resumable sweeps, intrusion
measurement on synthetic geometry, and 2-D export helpers.

One cell runs split -> standardize (train statistics) -> carve (rho, gamma)
-> generate ``M * |A|`` pseudo-anomalies -> fit -> score test -> AUCROC.
Every random stage draws from its own labeled stream of the cell seed, so
cells sharing a seed share the same split and labeled anomalies no matter
which generator or detector they use.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .augment import GeneratorConfig, PseudoAnomalySet, generate
from .dataset import (THREE_BLOB_CLUSTERS, TWO_BLOB_CLUSTERS, Cluster, Dataset, SplitPlan,
                      carve_split, fit_standardizer, load_csv, make_synthetic_clusters,
                      split_train_test)
from .detect import DetectorConfig, fit_detector
from .errors import ConfigError, DataError, NNGMixError
from .knn import NeighborIndex
from .metrics import (EvalResult, aggregate, auc_roc, write_aggregates_json,
                      write_results_csv)
from .randgen import RngStream

log = logging.getLogger(__name__)

__all__ = [
    "PRESETS",
    "DatasetSource",
    "ExperimentConfig",
    "Cell",
    "Region",
    "IntrusionReport",
    "SweepResult",
    "prepare_split",
    "run_experiment",
    "run_sweep",
    "measure_intrusion",
    "export_score_grid",
    "export_projection",
]

PRESETS = {"two_blobs": TWO_BLOB_CLUSTERS, "three_blobs": THREE_BLOB_CLUSTERS}


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DatasetSource:
    """Either a CSV path or a synthetic cluster layout (preset name or list).

    Synthetic data is redrawn from the run seed unless ``data_seed`` pins it.
    """

    path: str | None = None
    label_column: str = "label"
    synthetic: str | tuple | None = None
    data_seed: int | None = None
    name: str | None = None

    def __post_init__(self):
        if (self.path is None) == (self.synthetic is None):
            raise ConfigError("dataset needs exactly one of 'path' or 'synthetic'")
        if isinstance(self.synthetic, str) and self.synthetic not in PRESETS:
            raise ConfigError(f"unknown synthetic preset {self.synthetic!r}; have {sorted(PRESETS)}")
        if isinstance(self.synthetic, (list, tuple)):
            cl = tuple(c if isinstance(c, Cluster) else Cluster.from_dict(c) for c in self.synthetic)
            if not cl:
                raise ConfigError("synthetic cluster list is empty")
            object.__setattr__(self, "synthetic", cl)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSource":
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad dataset entry {d!r}: {e}") from None

    @property
    def clusters(self) -> tuple[Cluster, ...]:
        if self.synthetic is None:
            raise ConfigError("dataset is not synthetic")
        return PRESETS[self.synthetic] if isinstance(self.synthetic, str) else self.synthetic

    @property
    def display_name(self) -> str:
        if self.name:
            return self.name
        if self.path:
            return Path(self.path).stem
        return self.synthetic if isinstance(self.synthetic, str) else "synthetic"

    def to_dict(self) -> dict:
        d = {"path": self.path, "label_column": self.label_column, "data_seed": self.data_seed,
             "name": self.name}
        if self.synthetic is not None:
            d["synthetic"] = (self.synthetic if isinstance(self.synthetic, str)
                              else [c.to_dict() for c in self.synthetic])
        else:
            d["synthetic"] = None
        return d

    def load(self, seed: int) -> Dataset:
        if self.path is not None:
            return _load_csv_cached(str(self.path), self.label_column)
        s = seed if self.data_seed is None else self.data_seed
        return make_synthetic_clusters(self.clusters, s, name=self.display_name)


@lru_cache(maxsize=8)
def _load_csv_cached(path: str, label_column: str) -> Dataset:
    return load_csv(path, label_column)


def _expand(entry: dict) -> list[dict]:
    """Cartesian expansion of list-valued fields in a generator/detector entry."""
    keys, axes = [], []
    for k, v in entry.items():
        if k == "mask_ratio_range":
            vals = v if v and isinstance(v[0], (list, tuple)) else [v]
        else:
            vals = v if isinstance(v, list) else [v]
        keys.append(k)
        axes.append(vals)
    return [dict(zip(keys, combo)) for combo in itertools.product(*axes)]


def _nonempty(name: str, xs) -> list:
    xs = list(xs)
    if not xs:
        raise ConfigError(f"{name} must be non-empty")
    return xs


@dataclass
class ExperimentConfig:
    dataset: DatasetSource
    name: str = "experiment"
    train_fraction: float = 0.7
    labeled_ratios: list = field(default_factory=lambda: [0.01, 0.05, 0.10])
    pollution_ratios: list = field(default_factory=lambda: [1.0])
    multipliers: list = field(default_factory=lambda: [10])
    generators: list = field(default_factory=lambda: [
        GeneratorConfig(kind=k) for k in ("none", "mixup", "cutout", "cutmix", "gaussian", "nng_mix")])
    detectors: list = field(default_factory=lambda: [
        DetectorConfig(kind=k) for k in ("knn_score", "logistic", "sadlite")])
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    output_dir: str = "runs/experiment"
    region: dict | None = None
    intrusion_samples: int = 10_000
    grid_bounds: tuple | None = None
    grid_resolution: tuple = (101, 101)

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        for nm in ("labeled_ratios", "pollution_ratios", "multipliers", "generators", "detectors", "seeds"):
            setattr(self, nm, _nonempty(nm, getattr(self, nm)))
        self.generators = [g if isinstance(g, GeneratorConfig) else GeneratorConfig.from_dict(g)
                           for g in self.generators]
        self.detectors = [d if isinstance(d, DetectorConfig) else DetectorConfig.from_dict(d)
                          for d in self.detectors]
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "dataset" not in d:
            raise ConfigError("config needs a 'dataset' entry")
        ds = d.pop("dataset")
        ds = DatasetSource.from_dict(ds) if isinstance(ds, dict) else ds
        for key in ("generators", "detectors"):
            if key in d:
                d[key] = [x for e in d[key] for x in (_expand(e) if isinstance(e, dict) else [e])]
        try:
            return cls(dataset=ds, **d)
        except TypeError as e:
            raise ConfigError(f"bad experiment config: {e}") from None

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config {path} is not valid JSON: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def cells(self) -> list["Cell"]:
        """Grid cells in a fixed order, duplicates (after baseline
        canonicalization) removed."""
        seen, out = set(), []
        for rho, gamma, M, g, det in itertools.product(
            self.labeled_ratios, self.pollution_ratios, self.multipliers, self.generators, self.detectors
        ):
            c = Cell(self.dataset, self.train_fraction, float(rho), float(gamma), int(M), g, det)
            if c.fingerprint not in seen:
                seen.add(c.fingerprint)
                out.append(c)
        return out


@dataclass(frozen=True)
class Cell:
    """One point of the experiment grid (seed excluded)."""

    dataset: DatasetSource
    train_fraction: float
    rho: float
    gamma: float
    M: int
    generator: GeneratorConfig
    detector: DetectorConfig

    def __post_init__(self):
        # "no generator" and "M = 0" are the same baseline cell
        if self.M == 0 or self.generator.kind == "none":
            object.__setattr__(self, "M", 0)
            object.__setattr__(self, "generator", GeneratorConfig(kind="none", multiplier=0))
        elif self.generator.multiplier != self.M:
            object.__setattr__(self, "generator", replace(self.generator, multiplier=self.M))

    def to_dict(self) -> dict:
        return {"dataset": self.dataset.to_dict(), "train_fraction": self.train_fraction,
                "rho": self.rho, "gamma": self.gamma, "M": self.M,
                "generator": self.generator.to_dict(), "detector": self.detector.to_dict()}

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def summary(self) -> dict:
        return {"dataset": self.dataset.display_name, "generator": self.generator.label(),
                "detector": self.detector.label(), "rho": self.rho, "gamma": self.gamma, "M": self.M}


# --------------------------------------------------------------------------
# single cell


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if isinstance(ev, NNGMixError) and not str(ev).startswith("["):
            ev.args = (f"[{self.name}] {ev}", *ev.args[1:])
        return False


def prepare_split(source: DatasetSource, train_fraction: float, rho: float, gamma: float,
                  seed: int) -> SplitPlan:
    """Load, split, standardize on train statistics, and carve A / H."""
    with _Stage("load"):
        data = source.load(seed)
    with _Stage("split"):
        train, test = split_train_test(data, train_fraction, seed)
    with _Stage("standardize"):
        st = fit_standardizer(train.features)
        train = replace(train, features=st.transform(train.features))
        test = replace(test, features=st.transform(test.features))
    with _Stage("carve"):
        return carve_split(train, rho, gamma, seed, test=test)


def run_experiment(cell: Cell, seed: int, return_artifacts: bool = False):
    plan = prepare_split(cell.dataset, cell.train_fraction, cell.rho, cell.gamma, seed)
    with _Stage("generate"):
        gen = generate(plan.labeled_anomalies, plan.unlabeled_pool, cell.generator,
                       RngStream(seed, "generate"))
    with _Stage("fit"):
        model = fit_detector(cell.detector, plan.labeled_anomalies, gen.samples, plan.unlabeled_pool,
                             RngStream(seed, "detector"))
    with _Stage("score"):
        scores = model.score(plan.test_features)
        auc = auc_roc(scores, plan.test_labels)
    res = EvalResult(auc=auc, fingerprint=cell.fingerprint, seed=int(seed), cell=cell.summary())
    if return_artifacts:
        return res, {"plan": plan, "generated": gen, "model": model, "scores": scores}
    return res


# --------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    results: list
    aggregates: list
    n_computed: int
    out_dir: Path | None = None


def _run_cell(args):
    cell, seed = args
    return run_experiment(cell, seed).to_dict()


def _load_existing(path: Path) -> dict:
    done = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                r = EvalResult.from_dict(json.loads(line))
                done[(r.fingerprint, r.seed)] = r
    return done


def run_sweep(config: ExperimentConfig, out_dir=None, jobs: int = 1) -> SweepResult:
    """Run every (cell, seed); cells already in ``results.jsonl`` are skipped.

    Writes ``results.jsonl`` (append-only), ``results.csv`` and
    ``aggregates.json`` under the output directory.
    """
    out = Path(out_dir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        jsonl = out / "results.jsonl"
        jsonl.touch()
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}") from None
    cells = config.cells()
    done = _load_existing(jsonl)
    todo = [(c, s) for c in cells for s in config.seeds if (c.fingerprint, s) not in done]
    log.info("sweep: %d cells x %d seeds, %d to run", len(cells), len(config.seeds), len(todo))

    with jsonl.open("a") as fh:
        def record(d):
            fh.write(json.dumps(d, sort_keys=True) + "\n")
            fh.flush()
            r = EvalResult.from_dict(d)
            done[(r.fingerprint, r.seed)] = r

        if jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                futs = [ex.submit(_run_cell, t) for t in todo]
                for f in as_completed(futs):
                    record(f.result())
        else:
            for t in todo:
                record(_run_cell(t))

    results = [done[(c.fingerprint, s)] for c in cells for s in config.seeds]
    aggs = [aggregate([done[(c.fingerprint, s)] for s in config.seeds]) for c in cells]
    write_results_csv(out / "results.csv", results)
    write_aggregates_json(out / "aggregates.json", aggs)
    return SweepResult(results, aggs, len(todo), out)


# --------------------------------------------------------------------------
# intrusion


@dataclass(frozen=True)
class Region:
    """Declared normal region: a Euclidean ball, or the set of points whose
    k-NN distance to H is within the ``tau`` quantile of H's own
    (leave-one-out) k-NN distances."""

    kind: str = "ball"
    center: tuple | None = None
    radius: float | None = None
    tau: float = 0.95
    k: int = 10

    def __post_init__(self):
        if self.kind not in ("ball", "knn_quantile"):
            raise ConfigError(f"unknown region kind {self.kind!r}")
        if self.kind == "ball":
            if self.center is None or self.radius is None:
                raise ConfigError("ball region needs center and radius")
            if not self.radius > 0:
                raise ConfigError(f"region radius must be > 0, got {self.radius}")
        elif not 0 < self.tau <= 1:
            raise ConfigError(f"tau must be in (0, 1], got {self.tau}")

    @classmethod
    def default_for(cls, clusters) -> "Region":
        normal = next((c for c in clusters if c.label == 0), None)
        if normal is None:
            raise ConfigError("cluster layout has no normal cluster")
        return cls("ball", tuple(normal.center), 2.0 * normal.std)

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        d = dict(d)
        if d.get("center") is not None:
            d["center"] = tuple(float(x) for x in d["center"])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad region {d!r}: {e}") from None

    def contains(self, X: np.ndarray, H: np.ndarray | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.kind == "ball":
            return np.linalg.norm(X - np.asarray(self.center), axis=1) <= self.radius
        if H is None:
            raise ConfigError("knn_quantile region needs the unlabeled pool")
        idx = NeighborIndex(H)
        k = min(self.k, idx.m - 1)
        # k+1-th neighbor of an H row skips itself
        ref = idx.kth_distance(H, k + 1)
        thr = np.quantile(ref, self.tau)
        return idx.kth_distance(X, k) <= thr


@dataclass
class IntrusionReport:
    region: Region
    n_samples: int
    seeds: list
    fractions: dict  # generator name -> per-seed fractions
    counts: dict

    @property
    def mean(self) -> dict:
        return {g: float(np.mean(f)) for g, f in self.fractions.items()}

    def to_dict(self) -> dict:
        return {"region": asdict(self.region), "n_samples": self.n_samples, "seeds": self.seeds,
                "fractions": self.fractions, "counts": self.counts, "mean": self.mean}


def measure_intrusion(generators, clusters, region: Region | None = None, n_samples: int = 10_000,
                      seeds=(0, 1, 2, 3, 4)) -> IntrusionReport:
    """Fraction of generated rows landing inside the normal region.

    The synthetic layout's label-1 rows serve as A and label-0 rows as H,
    in raw (unstandardized) coordinates.
    """
    clusters = [c if isinstance(c, Cluster) else Cluster.from_dict(c) for c in clusters]
    if not any(c.label == 1 for c in clusters) or not any(c.label == 0 for c in clusters):
        raise ConfigError("intrusion needs both anomaly and normal clusters")
    region = region or Region.default_for(clusters)
    fractions, counts = {}, {}
    for g in generators:
        g = g if isinstance(g, GeneratorConfig) else GeneratorConfig.from_dict(g)
        name = g.label()
        if name in fractions:
            name = f"{name}#{len(fractions)}"
        fractions[name], counts[name] = [], []
        for seed in seeds:
            data = make_synthetic_clusters(clusters, seed)
            A = data.features[data.labels == 1]
            H = data.features[data.labels == 0]
            gen = generate(A, H, g, RngStream(seed, "generate"), n=n_samples)
            inside = int(region.contains(gen.samples, H).sum()) if gen.n else 0
            counts[name].append(inside)
            fractions[name].append(inside / n_samples if n_samples else 0.0)
    return IntrusionReport(region, n_samples, list(seeds), fractions, counts)


# --------------------------------------------------------------------------
# 2-D exports


def _model_dim(model) -> int:
    for attr in ("weights", "W"):
        v = getattr(model, attr, None)
        if v is not None:
            return np.asarray(v).shape[-1]
    return model.index.d


def export_score_grid(model, bounds, resolution, path=None) -> np.ndarray:
    """Score a regular mesh; returns and optionally writes rows (x, y, score).

    ``bounds = (xmin, xmax, ymin, ymax)``, ``resolution = (nx, ny)``.
    """
    if _model_dim(model) != 2:
        raise DataError(f"score grid needs a 2-feature model, got {_model_dim(model)}")
    xmin, xmax, ymin, ymax = map(float, bounds)
    nx, ny = map(int, resolution)
    if nx < 1 or ny < 1:
        raise ConfigError(f"resolution must be positive, got {resolution}")
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    grid = np.column_stack([pts, model.score(pts)])
    if not np.all(np.isfinite(grid)):
        raise DataError("score grid contains non-finite values")
    if path is not None:
        _write_rows(path, ("x", "y", "score"), grid)
    return grid


def export_projection(points, labels, path=None):
    """Top-two principal component scores with labels.

    Component signs are fixed so each eigenvector's largest-magnitude entry
    is positive. One-feature input gets a zero second component. Returns
    ``(projection, eigenvalues_descending)``.
    """
    X = np.asarray(points, dtype=float)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("projection needs at least 2 rows")
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    flip = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])] < 0
    vecs[:, flip] *= -1
    P = Xc @ vecs[:, :2]
    if P.shape[1] < 2:
        P = np.column_stack([P, np.zeros(len(P))])
    if path is not None:
        _write_rows(path, ("pc1", "pc2", "label"), P, labels=y)
    return P, vals


def _write_rows(path, header, rows, labels=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, r in enumerate(rows):
            cells = [repr(float(v)) for v in r]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)
    return path


def generated_for(config: ExperimentConfig, seed: int) -> tuple[SplitPlan, PseudoAnomalySet]:
    """Split and generate for the first grid point of ``config``."""
    cell = config.cells()[0]
    plan = prepare_split(cell.dataset, cell.train_fraction, cell.rho, cell.gamma, seed)
    with _Stage("generate"):
        gen = generate(plan.labeled_anomalies, plan.unlabeled_pool, cell.generator,
                       RngStream(seed, "generate"))
    return plan, gen
