"""AUCROC and multi-seed aggregation."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = ["EvalResult", "Aggregate", "auc_roc", "aggregate", "RESULT_COLUMNS",
           "write_results_csv", "write_aggregates_json"]

RESULT_COLUMNS = ("dataset", "generator", "detector", "rho", "gamma", "M", "seed", "auc")


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC with ties credited 0.5, from one sort.

    Within each group of tied scores every anomaly beats all normals below
    the group and half of the normals inside it.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(f"scores {s.shape} and labels {y.shape} must be equal-length vectors")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUCROC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    s_sorted, pos_sorted = s[order], pos[order]
    # boundaries of tie groups
    starts = np.flatnonzero(np.r_[True, s_sorted[1:] != s_sorted[:-1]])
    grp_pos = np.add.reduceat(pos_sorted.astype(np.int64), starts)
    grp_size = np.diff(np.r_[starts, len(s)])
    grp_neg = grp_size - grp_pos
    neg_below = np.cumsum(grp_neg) - grp_neg
    wins = np.sum(grp_pos * neg_below) + 0.5 * np.sum(grp_pos * grp_neg)
    return float(wins / (n_pos * n_neg))


@dataclass(frozen=True)
class EvalResult:
    auc: float
    fingerprint: str
    seed: int
    cell: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0:
            raise DataError(f"auc {self.auc} outside [0, 1]")

    def row(self) -> dict:
        c = self.cell
        return {"dataset": c.get("dataset", ""), "generator": c.get("generator", ""),
                "detector": c.get("detector", ""), "rho": c.get("rho", ""),
                "gamma": c.get("gamma", ""), "M": c.get("M", ""),
                "seed": self.seed, "auc": self.auc}

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalResult":
        return cls(auc=float(d["auc"]), fingerprint=d["fingerprint"], seed=int(d["seed"]),
                   cell=d.get("cell", {}))


@dataclass(frozen=True)
class Aggregate:
    mean_auc: float
    std_auc: float
    n_seeds: int
    fingerprint: str = ""
    cell: dict = field(default_factory=dict)


def aggregate(results) -> Aggregate:
    """Mean and unbiased std of AUC across seeds of one configuration."""
    results = list(results)
    if not results:
        raise DataError("cannot aggregate an empty result list")
    fps = {r.fingerprint for r in results}
    if len(fps) > 1:
        raise DataError(f"results mix {len(fps)} configurations: {sorted(fps)}")
    aucs = np.array([r.auc for r in results])
    std = float(aucs.std(ddof=1)) if len(aucs) > 1 else 0.0
    return Aggregate(float(aucs.mean()), std, len(aucs), results[0].fingerprint, results[0].cell)


def write_results_csv(path, results) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        w.writeheader()
        for r in results:
            w.writerow(r.row())
    return path


def write_aggregates_json(path, aggregates) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([asdict(a) for a in aggregates], indent=1))
    return path
