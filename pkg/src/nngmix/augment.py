"""Pseudo-anomaly generators.

Every generator maps labeled anomalies ``A`` (and, for the mixing variants
that use unlabeled data, the pool ``H``) to ``N`` synthetic rows, all
labeled anomalous. Draws are vectorized: each generator consumes its stream
in a fixed order (documented per function), so output is a deterministic
function of ``(A, H, config, N, stream)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import save_csv
from .errors import ConfigError, DataError
from .knn import NeighborIndex
from .randgen import RngStream, sample_beta, sample_gaussian_vec, sample_uniform

__all__ = [
    "KINDS",
    "GeneratorConfig",
    "Provenance",
    "PseudoAnomalySet",
    "cut_mask",
    "gen_mixup",
    "gen_cutout",
    "gen_cutmix",
    "gen_gaussian",
    "gen_nng_mix",
    "gen_ablation",
    "generate",
]

KINDS = ("none", "mixup", "cutout", "cutmix", "gaussian", "nng_mix", "mixup_all", "nng_no_gn")

# partner source codes stored in provenance
NO_PARTNER, FROM_A, FROM_H = 0, 1, 2
_SOURCE_NAMES = {NO_PARTNER: "", FROM_A: "A", FROM_H: "H"}


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "nng_mix"
    alpha: float = 0.2
    k: int = 10
    sigma: float = 0.01
    mask_ratio_range: tuple[float, float] = (0.1, 0.3)
    n_runs: int = 1
    multiplier: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if int(self.k) < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        lo, hi = self.mask_ratio_range
        if not 0 < lo < hi < 1:
            raise ConfigError(f"mask ratio range must satisfy 0 < low < high < 1, got {(lo, hi)}")
        if int(self.n_runs) < 1:
            raise ConfigError(f"n_runs must be >= 1, got {self.n_runs}")
        if int(self.multiplier) < 0:
            raise ConfigError(f"multiplier must be >= 0, got {self.multiplier}")
        object.__setattr__(self, "mask_ratio_range", (float(lo), float(hi)))

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        if "mask_ratio_range" in d:
            d["mask_ratio_range"] = tuple(d["mask_ratio_range"])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(f"bad generator config {d!r}: {e}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mask_ratio_range"] = list(self.mask_ratio_range)
        return d

    def label(self) -> str:
        """Kind plus any non-default settings, e.g. ``nng_mix[k=3,sigma=0.1]``."""
        base = asdict(GeneratorConfig(kind=self.kind))
        diff = [f"{k}={v}" for k, v in asdict(self).items()
                if k not in ("kind", "multiplier") and v != base[k]]
        return f"{self.kind}[{','.join(diff)}]" if diff else self.kind


@dataclass
class Provenance:
    """Per-row generation record.

    ``parent`` indexes A. ``partner`` indexes A or H according to
    ``partner_source`` (0 none, 1 A, 2 H). ``lam`` is NaN for non-mixing
    generators. Mask runs are ``(start, length)`` pairs, -1 when unused.
    For NNG-Mix, ``pool_rank`` is the partner's rank in the neighbor list of
    its parent, and ``fallback`` marks rows whose A-pool was empty.
    """

    kind: str
    parent: np.ndarray
    partner: np.ndarray
    partner_source: np.ndarray
    lam: np.ndarray
    mask_start: np.ndarray
    mask_len: np.ndarray
    pool_rank: np.ndarray
    fallback: np.ndarray
    noise_a: np.ndarray | None = None
    noise_b: np.ndarray | None = None

    @classmethod
    def empty(cls, kind: str, n: int, n_runs: int = 1) -> "Provenance":
        neg = lambda *s: np.full(s, -1, dtype=np.int64)  # noqa: E731
        return cls(
            kind=kind,
            parent=neg(n),
            partner=neg(n),
            partner_source=np.zeros(n, dtype=np.int64),
            lam=np.full(n, np.nan),
            mask_start=neg(n, n_runs),
            mask_len=neg(n, n_runs),
            pool_rank=neg(n),
            fallback=np.zeros(n, dtype=bool),
        )

    def to_records(self) -> list[dict]:
        recs = []
        for i in range(len(self.parent)):
            r = {"parent": int(self.parent[i])}
            if self.partner_source[i] != NO_PARTNER:
                r["partner"] = int(self.partner[i])
                r["partner_source"] = _SOURCE_NAMES[int(self.partner_source[i])]
            if not np.isnan(self.lam[i]):
                r["lambda"] = float(self.lam[i])
            if self.mask_start[i, 0] >= 0:
                r["mask_runs"] = [[int(s), int(n)] for s, n in zip(self.mask_start[i], self.mask_len[i])]
            if self.pool_rank[i] >= 0:
                r["pool_rank"] = int(self.pool_rank[i])
                r["fallback"] = bool(self.fallback[i])
            recs.append(r)
        return recs


@dataclass
class PseudoAnomalySet:
    samples: np.ndarray
    provenance: Provenance
    config: GeneratorConfig
    neighbor_pools: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return np.ones(self.n, dtype=np.int64)

    def to_csv(self, path, feature_names=None) -> Path:
        return save_csv(path, self.samples, self.labels, feature_names)

    def provenance_dict(self) -> dict:
        return {
            "generator": self.config.to_dict(),
            "n": self.n,
            "neighbor_pools": {
                src: [p.tolist() for p in pools] for src, pools in self.neighbor_pools.items()
            },
            "rows": self.provenance.to_records(),
        }

    def write_provenance(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.provenance_dict(), indent=1))
        return path


# --------------------------------------------------------------------------
# helpers


def _as_matrix(X, what: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError(f"{what} must be a non-empty 2-D matrix, got shape {X.shape}")
    return X


def _pick(rng: RngStream, n_items: int, size: int) -> np.ndarray:
    return rng.integers(n_items, size=size)


def _run_lengths(d: int, ratios: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(ratios * d + 0.5).astype(np.int64), 1, d)


def cut_mask(d: int, ratio: float, start: int) -> np.ndarray:
    """Binary keep-mask of length ``d`` with one zero run of ``round(ratio*d)``
    (at least 1) entries beginning at ``start``; no wraparound."""
    run = int(_run_lengths(d, np.array([ratio]))[0])
    if not 0 <= start <= d - run:
        raise ValueError(f"start {start} out of range for run {run} in {d} features")
    m = np.ones(d)
    m[start : start + run] = 0.0
    return m


def _draw_masks(rng: RngStream, n: int, d: int, cfg: GeneratorConfig):
    lo, hi = cfg.mask_ratio_range
    starts = np.empty((n, cfg.n_runs), dtype=np.int64)
    lens = np.empty((n, cfg.n_runs), dtype=np.int64)
    keep = np.ones((n, d))
    cols = np.arange(d)
    for j in range(cfg.n_runs):
        r = lo + (hi - lo) * sample_uniform(rng, n)
        run = _run_lengths(d, r)
        start = np.floor(sample_uniform(rng, n) * (d - run + 1)).astype(np.int64)
        keep[(cols >= start[:, None]) & (cols < (start + run)[:, None])] = 0.0
        starts[:, j], lens[:, j] = start, run
    return keep, starts, lens


# --------------------------------------------------------------------------
# baseline generators


def gen_mixup(A, config: GeneratorConfig, N: int, rng: RngStream) -> PseudoAnomalySet:
    """Convex combinations of two labeled anomalies.

    Draw order: parent indices, partner indices, lambda.
    """
    A = _as_matrix(A, "labeled anomalies")
    i1 = _pick(rng, len(A), N)
    i2 = _pick(rng, len(A), N)
    lam = sample_beta(rng, config.alpha, N)
    X = lam[:, None] * A[i1] + (1.0 - lam[:, None]) * A[i2]
    prov = Provenance.empty("mixup", N, config.n_runs)
    prov.parent, prov.partner, prov.lam = i1, i2, lam
    prov.partner_source[:] = FROM_A
    return PseudoAnomalySet(X, prov, config)


def gen_cutout(A, config: GeneratorConfig, N: int, rng: RngStream) -> PseudoAnomalySet:
    """Zero a contiguous feature run of a labeled anomaly.

    Draw order: parent indices, then per run (ratio, start).
    """
    A = _as_matrix(A, "labeled anomalies")
    i1 = _pick(rng, len(A), N)
    keep, starts, lens = _draw_masks(rng, N, A.shape[1], config)
    prov = Provenance.empty("cutout", N, config.n_runs)
    prov.parent, prov.mask_start, prov.mask_len = i1, starts, lens
    return PseudoAnomalySet(keep * A[i1], prov, config)


def gen_cutmix(A, config: GeneratorConfig, N: int, rng: RngStream) -> PseudoAnomalySet:
    """Splice a contiguous feature run of a second anomaly into the first.

    Draw order: parent indices, partner indices, then per run (ratio, start).
    """
    A = _as_matrix(A, "labeled anomalies")
    i1 = _pick(rng, len(A), N)
    i2 = _pick(rng, len(A), N)
    keep, starts, lens = _draw_masks(rng, N, A.shape[1], config)
    X = keep * A[i1] + (1.0 - keep) * A[i2]
    prov = Provenance.empty("cutmix", N, config.n_runs)
    prov.parent, prov.partner = i1, i2
    prov.partner_source[:] = FROM_A
    prov.mask_start, prov.mask_len = starts, lens
    return PseudoAnomalySet(X, prov, config)


def gen_gaussian(A, config: GeneratorConfig, N: int, rng: RngStream) -> PseudoAnomalySet:
    """Labeled anomaly plus isotropic Gaussian noise of std ``sigma``.

    Draw order: parent indices, noise.
    """
    A = _as_matrix(A, "labeled anomalies")
    i1 = _pick(rng, len(A), N)
    eps = sample_gaussian_vec(rng, A.shape[1], config.sigma, size=N)
    prov = Provenance.empty("gaussian", N, config.n_runs)
    prov.parent, prov.noise_a = i1, eps
    return PseudoAnomalySet(A[i1] + eps, prov, config)


# --------------------------------------------------------------------------
# nearest-neighbor Gaussian mixup


def neighbor_pools(A: np.ndarray, H: np.ndarray, k: int):
    """k-NN lists of every labeled anomaly within A (exact duplicates
    excluded) and within H."""
    pools_a, _ = NeighborIndex(A).query_batch(A, k, exclude_exact_match=True)
    pools_h, _ = NeighborIndex(H).query_batch(A, k)
    return pools_a, pools_h


def gen_nng_mix(A, H, config: GeneratorConfig, N: int, rng: RngStream,
                sigma: float | None = None) -> PseudoAnomalySet:
    """Mix each sampled anomaly with one of its k nearest neighbors.

    Per row: pick ``a1`` from A; with ``u > 0.5`` the partner pool is a1's
    k-NN in A (exact matches excluded), otherwise its k-NN in H; pick the
    partner uniformly from the pool; perturb both points with N(0, sigma^2)
    noise; mix with lambda ~ Beta(alpha, alpha). An empty A-pool (A holds no
    point distinct from a1) falls back to the H-pool and is flagged.

    Draw order: parent indices, coin flips, pool positions, noise for a1,
    noise for a2, lambda. Neighbor pools are computed once per distinct
    parent; they do not depend on the stream.
    """
    A = _as_matrix(A, "labeled anomalies")
    H = _as_matrix(H, "unlabeled pool")
    if A.shape[1] != H.shape[1]:
        raise DataError(f"A has {A.shape[1]} features but H has {H.shape[1]}")
    sigma = config.sigma if sigma is None else sigma
    d = A.shape[1]
    pools_a, pools_h = neighbor_pools(A, H, int(config.k))
    size_a = np.array([len(p) for p in pools_a])
    size_h = np.array([len(p) for p in pools_h])

    i1 = _pick(rng, len(A), N)
    u = sample_uniform(rng, N)
    pos_u = sample_uniform(rng, N)
    eps1 = sample_gaussian_vec(rng, d, sigma, size=N)
    eps2 = sample_gaussian_vec(rng, d, sigma, size=N)
    lam = sample_beta(rng, config.alpha, N)

    want_a = u > 0.5
    fallback = want_a & (size_a[i1] == 0)
    use_a = want_a & ~fallback
    sizes = np.where(use_a, size_a[i1], size_h[i1])
    rank = np.minimum(np.floor(pos_u * sizes).astype(np.int64), sizes - 1)
    partner = np.empty(N, dtype=np.int64)
    for r in range(N):
        pool = pools_a[i1[r]] if use_a[r] else pools_h[i1[r]]
        partner[r] = pool[rank[r]]

    a1 = A[i1] + eps1
    a2 = np.empty((N, d))
    a2[use_a] = A[partner[use_a]]
    a2[~use_a] = H[partner[~use_a]]
    a2 += eps2
    X = lam[:, None] * a1 + (1.0 - lam[:, None]) * a2

    kind = config.kind if config.kind in ("nng_mix", "nng_no_gn") else "nng_mix"
    prov = Provenance.empty(kind, N, config.n_runs)
    prov.parent, prov.partner, prov.lam = i1, partner, lam
    prov.partner_source = np.where(use_a, FROM_A, FROM_H)
    prov.pool_rank, prov.fallback = rank, fallback
    prov.noise_a, prov.noise_b = eps1, eps2
    return PseudoAnomalySet(X, prov, config, {"A": pools_a, "H": pools_h})


def gen_ablation(A, H, config: GeneratorConfig, N: int, rng: RngStream) -> PseudoAnomalySet:
    """NNG-Mix with parts switched off.

    ``mixup_all``: partner uniform over A followed by H, no k-NN, no noise.
    Draw order: parent indices, partner indices over ``|A| + |H|``, lambda.
    ``nng_no_gn``: :func:`gen_nng_mix` with sigma forced to 0.
    """
    if config.kind == "nng_no_gn":
        return gen_nng_mix(A, H, config, N, rng, sigma=0.0)
    if config.kind != "mixup_all":
        raise ConfigError(f"not an ablation kind: {config.kind!r}")
    A = _as_matrix(A, "labeled anomalies")
    H = _as_matrix(H, "unlabeled pool")
    pool = np.vstack([A, H])
    i1 = _pick(rng, len(A), N)
    j = _pick(rng, len(pool), N)
    lam = sample_beta(rng, config.alpha, N)
    X = lam[:, None] * A[i1] + (1.0 - lam[:, None]) * pool[j]
    prov = Provenance.empty("mixup_all", N, config.n_runs)
    in_a = j < len(A)
    prov.parent, prov.lam = i1, lam
    prov.partner = np.where(in_a, j, j - len(A))
    prov.partner_source = np.where(in_a, FROM_A, FROM_H)
    return PseudoAnomalySet(X, prov, config)


def generate(A, H, config: GeneratorConfig, rng: RngStream, n: int | None = None) -> PseudoAnomalySet:
    """Dispatch on ``config.kind``; ``n`` defaults to ``multiplier * |A|``."""
    A = _as_matrix(A, "labeled anomalies")
    N = config.multiplier * len(A) if n is None else int(n)
    if N < 0:
        raise ConfigError(f"row count must be >= 0, got {N}")
    if config.kind == "none" or N == 0:
        return PseudoAnomalySet(np.empty((0, A.shape[1])), Provenance.empty(config.kind, 0), config)
    if config.kind == "mixup":
        return gen_mixup(A, config, N, rng)
    if config.kind == "cutout":
        return gen_cutout(A, config, N, rng)
    if config.kind == "cutmix":
        return gen_cutmix(A, config, N, rng)
    if config.kind == "gaussian":
        return gen_gaussian(A, config, N, rng)
    if config.kind == "nng_mix":
        return gen_nng_mix(A, H, config, N, rng)
    return gen_ablation(A, H, config, N, rng)
