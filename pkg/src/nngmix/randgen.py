"""Seeded random streams and the samplers every generator draws from.

All randomness goes through :class:`RngStream`, a thin wrapper over numpy's
PCG64 bit generator. A stream is identified by ``(seed, label)``; child
streams are derived by extending the label path (``"cell/split"``,
``"cell/generate"``), which hashes into the :class:`numpy.random.SeedSequence`
entropy. Two streams with the same seed and label path produce identical
sequences on any machine; different labels give independent streams.

Documented stream labels used by the harness:

``split``     stratified train/test shuffling
``carve``     choice of labeled anomalies and polluting anomalies
``generate``  pseudo-anomaly synthesis
``detector``  detector fitting (reserved; current detectors are deterministic)
``synth``     synthetic cluster datasets
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = [
    "RngStream",
    "sample_uniform",
    "sample_gaussian_vec",
    "sample_beta",
    "sample_log_gamma",
]


def _label_words(label: str) -> list[int]:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


class RngStream:
    """A labeled, reproducible PRNG stream.

    Not thread-safe; parallel tasks must call :meth:`child` with a distinct
    label each and use their own stream.
    """

    def __init__(self, seed: int, label: str = "root"):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.label = label
        ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, *_label_words(label)])
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, label: str) -> "RngStream":
        return RngStream(self.seed, f"{self.label}/{label}")

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"

    # raw draws -----------------------------------------------------------
    def uniform(self, size=None):
        return self._gen.random(size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, high: int, size=None):
        return self._gen.integers(0, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)


def sample_uniform(rng: RngStream, size=None):
    """Uniform draw(s) on [0, 1)."""
    return rng.uniform(size)


def sample_gaussian_vec(rng: RngStream, d: int, sigma: float, size=None) -> np.ndarray:
    """i.i.d. N(0, sigma^2) vector of length ``d`` (or ``size`` such vectors).

    ``sigma`` is a standard deviation. ``sigma == 0`` yields exact zeros
    without consuming the stream.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    shape = (d,) if size is None else (size, d)
    if sigma == 0:
        return np.zeros(shape)
    return sigma * rng.standard_normal(shape)


def _log_gamma_ge1(rng: RngStream, shape: float, n: int) -> np.ndarray:
    # Marsaglia & Tsang squeeze-free acceptance test, vectorized over the
    # still-rejected slots.
    d = shape - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(n)
    todo = np.arange(n)
    while todo.size:
        m = todo.size
        x = rng.standard_normal(m)
        u = rng.uniform(m)
        v = 1.0 + c * x
        ok = v > 0
        v3 = np.where(ok, v, 1.0) ** 3
        with np.errstate(divide="ignore"):
            accept = ok & (np.log(u) < 0.5 * x * x + d - d * v3 + d * np.log(v3))
        out[todo[accept]] = np.log(d) + np.log(v3[accept])
        todo = todo[~accept]
    return out


def sample_log_gamma(rng: RngStream, shape: float, n: int) -> np.ndarray:
    """``log`` of ``n`` Gamma(shape, 1) draws.

    For ``shape < 1`` draws Gamma(shape + 1) and applies the ``U**(1/shape)``
    correction in log space, so tiny variates (common at shape 0.2) never
    underflow to an exact zero.
    """
    if shape <= 0:
        raise ValueError(f"gamma shape must be > 0, got {shape}")
    if shape >= 1:
        return _log_gamma_ge1(rng, shape, n)
    lg = _log_gamma_ge1(rng, shape + 1.0, n)
    u = rng.uniform(n)
    # 1 - u lies in (0, 1]; avoids log(0)
    return lg + np.log1p(-u) / shape


def sample_beta(rng: RngStream, alpha: float, size=None):
    """Symmetric Beta(alpha, alpha) draw(s) via two Gamma(alpha, 1) variates."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    n = 1 if size is None else int(np.prod(size))
    lg1 = sample_log_gamma(rng, alpha, n)
    lg2 = sample_log_gamma(rng, alpha, n)
    # G1 / (G1 + G2) = 1 / (1 + exp(lg2 - lg1)); stable in both tails
    t = lg2 - lg1
    lam = np.empty(n)
    pos = t > 0
    e = np.exp(-np.abs(t))
    lam[pos] = e[pos] / (1.0 + e[pos])
    lam[~pos] = 1.0 / (1.0 + e[~pos])
    if size is None:
        return float(lam[0])
    return lam.reshape(size)
