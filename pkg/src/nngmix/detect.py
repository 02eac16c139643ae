"""Small anomaly detectors trained on labeled anomalies, pseudo-anomalies,
and the unlabeled pool (treated as normal).

All detectors score so that larger means more anomalous.

``knn_score``  distance to the k-th nearest unlabeled row; ignores labels.
``logistic``   linear logit trained by full-batch gradient descent.
``sadlite``    linear embedding ``z = W x`` pulling H toward a frozen center
               and pushing anomalies away through an inverse-distance term.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .knn import NeighborIndex

__all__ = [
    "DETECTOR_KINDS",
    "DetectorConfig",
    "KnnScoreDetector",
    "LogisticDetector",
    "SadLiteDetector",
    "fit_knn_score",
    "fit_logistic",
    "fit_sadlite",
    "fit_detector",
    "logistic_loss_grad",
    "sadlite_loss_grad",
]

DETECTOR_KINDS = ("knn_score", "logistic", "sadlite")


@dataclass(frozen=True)
class DetectorConfig:
    kind: str = "logistic"
    k_score: int = 5
    learning_rate: float | None = None
    epochs: int | None = None
    l2: float = 1e-3
    eta: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ConfigError(f"unknown detector {self.kind!r}; expected one of {DETECTOR_KINDS}")
        # per-kind defaults
        lr_default, ep_default = {"logistic": (0.1, 500), "sadlite": (0.01, 300)}.get(self.kind, (0.1, 1))
        if self.learning_rate is None:
            object.__setattr__(self, "learning_rate", lr_default)
        if self.epochs is None:
            object.__setattr__(self, "epochs", ep_default)
        if int(self.k_score) < 1:
            raise ConfigError(f"k_score must be >= 1, got {self.k_score}")
        if int(self.epochs) < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if self.l2 < 0 or self.eta < 0:
            raise ConfigError("l2 and eta must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad detector config {d!r}: {e}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def label(self) -> str:
        """Kind plus any non-default settings, e.g. ``logistic[epochs=50]``."""
        base = asdict(DetectorConfig(kind=self.kind))
        diff = [f"{k}={v}" for k, v in asdict(self).items() if k != "kind" and v != base[k]]
        return f"{self.kind}[{','.join(diff)}]" if diff else self.kind


def _stack_training(A, D, H):
    A = np.asarray(A, dtype=float)
    H = np.asarray(H, dtype=float)
    D = np.empty((0, A.shape[1])) if D is None or len(D) == 0 else np.asarray(D, dtype=float)
    pos = np.vstack([A, D])
    return pos, H


class _Detector:
    config: DetectorConfig

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    def to_json(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"config": self.config.to_dict(), "params": self.params()}, indent=1))
        return path


# --------------------------------------------------------------------------
# k-NN distance


class KnnScoreDetector(_Detector):
    def __init__(self, H, config: DetectorConfig):
        self.config = config
        self.index = NeighborIndex(H)
        if self.index.m < config.k_score:
            raise DataError(f"unlabeled pool has {self.index.m} rows, fewer than k_score={config.k_score}")

    def score(self, X) -> np.ndarray:
        return self.index.kth_distance(X, self.config.k_score)

    def params(self) -> dict:
        return {"n_reference": self.index.m, "k_score": self.config.k_score}


def fit_knn_score(H, k_score: int = 5) -> KnnScoreDetector:
    return KnnScoreDetector(H, DetectorConfig(kind="knn_score", k_score=k_score))


# --------------------------------------------------------------------------
# logistic regression


def _log1pexp(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_loss_grad(theta, X, y, l2):
    """Mean cross-entropy + ``l2/2 * |w|^2``; ``theta = [w..., b]``.

    Returns ``(loss, grad)``; the bias is not penalized.
    """
    w, b = theta[:-1], theta[-1]
    z = X @ w + b
    # -[y log s(z) + (1-y) log(1-s(z))] = log(1+e^z) - y z
    loss = np.mean(_log1pexp(z) - y * z) + 0.5 * l2 * (w @ w)
    r = (_sigmoid(z) - y) / len(y)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + l2 * w
    grad[-1] = r.sum()
    return loss, grad


class LogisticDetector(_Detector):
    def __init__(self, config: DetectorConfig, d: int):
        self.config = config
        self.theta = np.zeros(d + 1)
        self.losses: list[float] = []

    def fit(self, pos, neg):
        X = np.vstack([pos, neg])
        y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        cfg = self.config
        for epoch in range(cfg.epochs):
            loss, g = logistic_loss_grad(self.theta, X, y, cfg.l2)
            if not np.isfinite(loss):
                raise NumericalError(f"logistic loss became non-finite at epoch {epoch}")
            self.losses.append(float(loss))
            self.theta = self.theta - cfg.learning_rate * g
        self.losses.append(float(logistic_loss_grad(self.theta, X, y, cfg.l2)[0]))
        return self

    @property
    def weights(self) -> np.ndarray:
        return self.theta[:-1]

    @property
    def bias(self) -> float:
        return float(self.theta[-1])

    def score(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def params(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "final_loss": self.losses[-1]}


def fit_logistic(A, D, H, config: DetectorConfig | None = None, rng=None) -> LogisticDetector:
    config = config or DetectorConfig(kind="logistic")
    pos, neg = _stack_training(A, D, H)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("logistic detector needs at least one anomaly and one unlabeled row")
    return LogisticDetector(config, pos.shape[1]).fit(pos, neg)


# --------------------------------------------------------------------------
# linear one-class embedding with anomaly repulsion


def sadlite_loss_grad(W, c, Xn, Xa, eta, eps, l2=0.0):
    """Loss and gradient w.r.t. ``W``.

    ``mean_H |Wx-c|^2 + eta * mean_{A,D} 1/(|Wx-c|^2 + eps) + l2/2 * |W|_F^2``
    """
    Rn = Xn @ W.T - c
    loss = np.mean(np.sum(Rn * Rn, axis=1))
    G = (2.0 / len(Xn)) * Rn.T @ Xn
    if len(Xa) and eta > 0:
        Ra = Xa @ W.T - c
        s = np.sum(Ra * Ra, axis=1) + eps
        loss += eta * np.mean(1.0 / s)
        G -= (2.0 * eta / len(Xa)) * (Ra / (s * s)[:, None]).T @ Xa
    if l2:
        loss += 0.5 * l2 * np.sum(W * W)
        G += l2 * W
    return loss, G


class SadLiteDetector(_Detector):
    def __init__(self, config: DetectorConfig, d: int):
        self.config = config
        self.W = np.eye(d)
        self.c = np.zeros(d)
        self.losses: list[float] = []

    def fit(self, pos, neg):
        cfg = self.config
        self.c = (neg @ self.W.T).mean(axis=0)
        with np.errstate(over="ignore", invalid="ignore"):
            for epoch in range(cfg.epochs):
                loss, G = sadlite_loss_grad(self.W, self.c, neg, pos, cfg.eta, cfg.eps, cfg.l2)
                if not np.isfinite(loss) or not np.all(np.isfinite(G)):
                    raise NumericalError(f"sadlite loss diverged at epoch {epoch}")
                self.losses.append(float(loss))
                self.W = self.W - cfg.learning_rate * G
            final = sadlite_loss_grad(self.W, self.c, neg, pos, cfg.eta, cfg.eps, cfg.l2)[0]
        if not np.isfinite(final):
            raise NumericalError(f"sadlite loss diverged at epoch {cfg.epochs}")
        self.losses.append(float(final))
        return self

    def score(self, X) -> np.ndarray:
        R = np.asarray(X, dtype=float) @ self.W.T - self.c
        return np.sum(R * R, axis=1)

    def params(self) -> dict:
        return {"W": self.W.tolist(), "center": self.c.tolist(), "final_loss": self.losses[-1]}


def fit_sadlite(A, D, H, config: DetectorConfig | None = None, rng=None) -> SadLiteDetector:
    config = config or DetectorConfig(kind="sadlite")
    pos, neg = _stack_training(A, D, H)
    if len(neg) < 2:
        raise DataError("sadlite needs at least 2 unlabeled rows")
    return SadLiteDetector(config, neg.shape[1]).fit(pos, neg)


def fit_detector(config: DetectorConfig, A, D, H, rng=None) -> _Detector:
    if config.kind == "knn_score":
        return KnnScoreDetector(H, config)
    if config.kind == "logistic":
        return fit_logistic(A, D, H, config, rng)
    return fit_sadlite(A, D, H, config, rng)
