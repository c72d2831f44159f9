"""Chronology-preserving partitions of the time axis.

Every partition returned here is a list of contiguous, ordered, non-empty
ranges ``[start, end)`` covering ``0..T-1``, so that all periods of cluster k
precede all periods of cluster k+1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .instance import GepInstance

__all__ = [
    "ChronoPartition",
    "feature_matrix",
    "sequential_partition",
    "uniform_partition",
    "kmeans_assign",
    "gmm_assign",
    "chronologize",
    "dp_segmentation",
    "segmentation_sse",
    "make_partition",
]


@dataclass(frozen=True)
class ChronoPartition:
    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        r = tuple((int(a), int(b)) for a, b in self.ranges)
        object.__setattr__(self, "ranges", r)
        if not r:
            raise ValueError("partition needs at least one cluster")
        if r[0][0] != 0:
            raise ValueError("partition must start at period 0")
        for (a, b), (c, _) in zip(r, r[1:]):
            if b != c:
                raise ValueError(f"ranges [{a},{b}) and [{c},...) are not adjacent")
        for a, b in r:
            if b <= a:
                raise ValueError(f"empty range [{a},{b})")

    @classmethod
    def from_breakpoints(cls, T: int, breakpoints) -> "ChronoPartition":
        """Breakpoints are the start indices of clusters 1..K-1."""
        bp = [0] + sorted(int(b) for b in breakpoints) + [int(T)]
        return cls(tuple(zip(bp[:-1], bp[1:])))

    @classmethod
    def from_labels(cls, labels) -> "ChronoPartition":
        """Runs of equal consecutive labels become clusters."""
        labels = np.asarray(labels)
        starts = np.flatnonzero(np.diff(labels)) + 1
        return cls.from_breakpoints(len(labels), starts)

    @property
    def K(self) -> int:
        return len(self.ranges)

    @property
    def T(self) -> int:
        return self.ranges[-1][1]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([b - a for a, b in self.ranges])

    @property
    def starts(self) -> np.ndarray:
        return np.array([a for a, _ in self.ranges])

    @property
    def breakpoints(self) -> list[int]:
        return [a for a, _ in self.ranges[1:]]

    def labels(self) -> np.ndarray:
        return np.repeat(np.arange(self.K), self.sizes)

    def to_json(self) -> str:
        return json.dumps([list(r) for r in self.ranges])

    @classmethod
    def from_json(cls, text: str) -> "ChronoPartition":
        return cls(tuple(tuple(r) for r in json.loads(text)))


def feature_matrix(inst: GepInstance, standardize: bool = True) -> np.ndarray:
    """Per-period features (demand, capacity factors, references), z-scored per column."""
    F = np.column_stack([inst.demand, inst.cap_factor, inst.z_ref])
    if standardize:
        mu = F.mean(axis=0)
        sd = F.std(axis=0)
        sd[sd == 0] = 1.0
        F = (F - mu) / sd
    return F


def _check_k(T, K):
    if not 1 <= K <= T:
        raise ValueError(f"need 1 <= K <= T, got K={K}, T={T}")


def sequential_partition(T: int, K: int, seed) -> ChronoPartition:
    """K-1 breakpoints drawn uniformly without replacement from 1..T-1."""
    _check_k(T, K)
    rng = np.random.default_rng(seed)
    bp = rng.choice(np.arange(1, T), size=K - 1, replace=False) if K > 1 else []
    return ChronoPartition.from_breakpoints(T, bp)


def uniform_partition(T: int, K: int) -> ChronoPartition:
    _check_k(T, K)
    q, r = divmod(T, K)
    sizes = np.full(K, q)
    sizes[:r] += 1
    return ChronoPartition.from_breakpoints(T, np.cumsum(sizes)[:-1])


def _as2d(features):
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    return X


def _sqdist(X, C):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_assign(features, K: int, seed, tol: float = 1e-6, max_iter: int = 100) -> np.ndarray:
    """Lloyd's k-means with k-means++ seeding; ties go to the lower centroid index."""
    X = _as2d(features)
    T = X.shape[0]
    _check_k(T, K)
    rng = np.random.default_rng(seed)
    C = np.empty((K, X.shape[1]))
    C[0] = X[rng.integers(T)]
    d2 = _sqdist(X, C[:1])[:, 0]
    for k in range(1, K):
        tot = d2.sum()
        if tot <= 0:
            i = rng.integers(T)
        else:
            i = int(np.searchsorted(np.cumsum(d2), rng.uniform(0, tot), side="right"))
            i = min(i, T - 1)
        C[k] = X[i]
        d2 = np.minimum(d2, _sqdist(X, C[k:k + 1])[:, 0])
    labels = np.argmin(_sqdist(X, C), axis=1)
    for _ in range(max_iter):
        newC = C.copy()
        for k in range(K):
            members = labels == k
            if members.any():
                newC[k] = X[members].mean(axis=0)
        shift = np.sqrt(((newC - C) ** 2).sum(1)).max()
        C = newC
        labels = np.argmin(_sqdist(X, C), axis=1)
        if shift <= tol:
            break
    return labels


def gmm_assign(features, K: int, seed, max_iter: int = 200, var_floor: float = 1e-6,
               tol: float = 1e-10, return_loglik: bool = False):
    """Diagonal-covariance Gaussian mixture fitted by EM; labels = argmax responsibility."""
    X = _as2d(features)
    T, d = X.shape
    _check_k(T, K)
    init = kmeans_assign(X, K, seed)
    resp = np.zeros((T, K))
    resp[np.arange(T), init] = 1.0
    history = []
    for _ in range(max_iter):
        # M step
        nk = resp.sum(0) + 1e-12
        w = nk / T
        mu = (resp.T @ X) / nk[:, None]
        var = (resp.T @ (X * X)) / nk[:, None] - mu * mu
        var = np.maximum(var, var_floor)
        # E step
        logp = (-0.5 * (((X[:, None, :] - mu[None]) ** 2) / var[None]).sum(-1)
                - 0.5 * np.log(2 * np.pi * var).sum(-1)[None] + np.log(w)[None])
        mx = logp.max(1, keepdims=True)
        lse = mx[:, 0] + np.log(np.exp(logp - mx).sum(1))
        resp = np.exp(logp - lse[:, None])
        ll = float(lse.sum())
        history.append(ll)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= tol * max(1.0, abs(ll)):
            break
    labels = np.argmax(resp, axis=1)
    return (labels, history) if return_loglik else labels


def _prefix(X):
    z = np.zeros((1, X.shape[1]))
    S1 = np.vstack([z, np.cumsum(X, axis=0)])
    S2 = np.concatenate([[0.0], np.cumsum((X * X).sum(1))])
    return S1, S2


def _contiguous_dp(cost, K):
    """Minimize the sum of cost[i, j] over K contiguous segments [i, j) covering 0..T.

    ``cost`` is (T+1, T+1) with +inf where i >= j. Ties go to the lower breakpoint.
    """
    T = cost.shape[0] - 1
    best = np.full((K + 1, T + 1), np.inf)
    arg = np.zeros((K + 1, T + 1), dtype=int)
    best[0, 0] = 0.0
    for k in range(1, K + 1):
        # best[k, j] = min_i best[k-1, i] + cost[i, j]
        tot = best[k - 1][:, None] + cost
        arg[k] = np.argmin(tot, axis=0)
        best[k] = tot[arg[k], np.arange(T + 1)]
    bps, j = [], T
    for k in range(K, 0, -1):
        i = int(arg[k, j])
        bps.append(i)
        j = i
    bps = sorted(bps)[1:]
    return ChronoPartition.from_breakpoints(T, bps), float(best[K, T])


def _sse_costs(X):
    T = X.shape[0]
    S1, S2 = _prefix(X)
    n = np.arange(T + 1)
    cnt = n[None, :] - n[:, None]
    seg1 = S1[None, :, :] - S1[:, None, :]
    seg2 = S2[None, :] - S2[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = seg2 - (seg1 ** 2).sum(-1) / cnt
    cost = np.maximum(cost, 0.0)
    cost[cnt <= 0] = np.inf
    return cost


def segmentation_sse(features, partition: ChronoPartition) -> float:
    X = _as2d(features)
    return float(sum(((X[a:b] - X[a:b].mean(0)) ** 2).sum() for a, b in partition.ranges))


def dp_segmentation(features, K: int) -> ChronoPartition:
    """Exact minimum-SSE contiguous K-segmentation, O(T^2 K) with prefix sums."""
    X = _as2d(features)
    _check_k(X.shape[0], K)
    part, _ = _contiguous_dp(_sse_costs(X), K)
    return part


def chronologize(labels, features, K: int) -> ChronoPartition:
    """Closest chronological K-partition to an unconstrained label assignment.

    Centroids are fixed to the label means; each contiguous segment is charged
    the squared distance of its members to the best single centroid, and the
    K-segment split of minimum total charge is found by dynamic programming.
    """
    X = _as2d(features)
    labels = np.asarray(labels)
    T = X.shape[0]
    if labels.shape != (T,):
        raise ValueError(f"labels has length {labels.size}, expected {T}")
    _check_k(T, K)
    uniq = np.unique(labels)
    cents = np.array([X[labels == u].mean(0) for u in uniq])
    S1, S2 = _prefix(X)
    n = np.arange(T + 1)
    cnt = (n[None, :] - n[:, None]).astype(float)
    seg2 = S2[None, :] - S2[:, None]
    cost = np.full((T + 1, T + 1), np.inf)
    for c in cents:
        lin = S1 @ c
        seg = seg2 - 2.0 * (lin[None, :] - lin[:, None]) + cnt * float(c @ c)
        cost = np.minimum(cost, seg)
    cost = np.maximum(cost, 0.0)
    cost[cnt <= 0] = np.inf
    part, _ = _contiguous_dp(cost, K)
    return part


CLUSTERINGS = ("sequential", "uniform", "kmeans", "gmm", "dp")


def make_partition(method: str, inst: GepInstance, K: int, seed) -> ChronoPartition:
    """Dispatch to one of the clustering techniques; k-means/GMM labels are chronologized."""
    T = inst.T
    if method == "sequential":
        return sequential_partition(T, K, seed)
    if method == "uniform":
        return uniform_partition(T, K)
    X = feature_matrix(inst)
    if method == "kmeans":
        return chronologize(kmeans_assign(X, K, seed), X, K)
    if method == "gmm":
        return chronologize(gmm_assign(X, K, seed), X, K)
    if method == "dp":
        return dp_segmentation(X, K)
    raise ValueError(f"unknown clustering {method!r}; expected one of {CLUSTERINGS}")
