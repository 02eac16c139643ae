"""Independent Monte Carlo estimate of intrusion fractions on the two-cluster
layout (normals at the origin, anomaly blobs at (+-10, 0)).

Shares no code with the package: plain numpy draws, numpy's own Beta
sampler, and an argsort-per-point neighbor search. The printed fractions
were used to freeze the bands in tests/test_acceptance.py.

    python3 scripts/intrusion_oracle.py [n_samples] [n_reps]
"""

import sys

import numpy as np

N_NORMAL, N_ANOM = 500, 25
ALPHA, K, SIGMA, RADIUS = 0.2, 10, 0.01, 2.0


def layout(rng):
    H = rng.normal(0.0, 1.0, (N_NORMAL, 2))
    A = np.vstack([rng.normal((-10, 0), 0.5, (N_ANOM, 2)), rng.normal((10, 0), 0.5, (N_ANOM, 2))])
    return A, H


def knn_rows(point, pool, k, skip_self):
    d = np.sqrt(((pool - point) ** 2).sum(axis=1))
    order = np.argsort(d, kind="stable")
    if skip_self:
        order = order[d[order] > 0]
    return order[:k]


def mixup_a(rng, A, H, n):
    out = np.empty((n, 2))
    for i in range(n):
        a, b = A[rng.integers(len(A))], A[rng.integers(len(A))]
        lam = rng.beta(ALPHA, ALPHA)
        out[i] = lam * a + (1 - lam) * b
    return out


def mixup_all(rng, A, H, n):
    pool = np.vstack([A, H])
    out = np.empty((n, 2))
    for i in range(n):
        a, b = A[rng.integers(len(A))], pool[rng.integers(len(pool))]
        lam = rng.beta(ALPHA, ALPHA)
        out[i] = lam * a + (1 - lam) * b
    return out


def nng(rng, A, H, n):
    out = np.empty((n, 2))
    for i in range(n):
        a = A[rng.integers(len(A))]
        if rng.random() > 0.5:
            cand = A[knn_rows(a, A, K, True)]
        else:
            cand = H[knn_rows(a, H, K, False)]
        b = cand[rng.integers(len(cand))]
        a = a + rng.normal(0, SIGMA, 2)
        b = b + rng.normal(0, SIGMA, 2)
        lam = rng.beta(ALPHA, ALPHA)
        out[i] = lam * a + (1 - lam) * b
    return out


def inside(X):
    return float(np.mean(np.linalg.norm(X, axis=1) <= RADIUS))


def main(n=10_000, reps=20):
    rng = np.random.default_rng(12345)
    res = {"nng_mix": [], "mixup": [], "mixup_all": []}
    for _ in range(reps):
        A, H = layout(rng)
        res["nng_mix"].append(inside(nng(rng, A, H, n)))
        res["mixup"].append(inside(mixup_a(rng, A, H, n)))
        res["mixup_all"].append(inside(mixup_all(rng, A, H, n)))
    for k, v in res.items():
        v = np.array(v)
        print(f"{k:>10}: mean {v.mean():.5f}  min {v.min():.5f}  max {v.max():.5f}  sd {v.std(ddof=1):.5f}")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    main(*args)
