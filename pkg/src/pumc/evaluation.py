"""Metrics and link-prediction baselines.

Undirected graphs are stored as symmetric ObservedOnes; all ranking is over
unordered pairs (i < j) with self-pairs excluded. False-positive denominators
are computed in closed form, never by enumerating the complement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import ObservedOnes, as_dense
from .errors import DataError


def mse(x_hat, m) -> float:
    """Mean squared entrywise difference."""
    x_hat = as_dense(x_hat)
    m = as_dense(m)
    if x_hat.shape != m.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {m.shape}")
    return float(np.mean((x_hat - m) ** 2))


def recovery_error(x_hat, y, q) -> float:
    """Fraction of entries where the strict threshold I(x > q) disagrees with binary Y."""
    x_hat = as_dense(x_hat)
    y = as_dense(y)
    if x_hat.shape != y.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {y.shape}")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError("recovery error requires a 0/1 matrix")
    return float(np.mean((x_hat > q) != (y > 0.5)))


def clustering_sign_error(x_hat, labels) -> float:
    """Fraction of pairs whose sign(2 x - 1) disagrees with the +-1 co-membership matrix."""
    x_hat = as_dense(x_hat)
    labels = np.asarray(labels).ravel()
    if x_hat.shape[0] != labels.size or x_hat.shape[1] != labels.size:
        raise ValueError("labels length must match both matrix dims")
    same = labels[:, None] == labels[None, :]
    pred_pos = x_hat > 0.5
    return float(np.mean(pred_pos != same))


def _canonical_keys(obs: ObservedOnes):
    lo = np.minimum(obs.rows, obs.cols)
    hi = np.maximum(obs.rows, obs.cols)
    off = lo != hi  # self-pairs never rank
    return np.unique(lo[off] * obs.n + hi[off])


@dataclass
class RankedPredictions:
    """Candidate pairs (i < j) sorted by score descending; training pairs never appear."""

    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray
    excluded: ObservedOnes

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not (self.rows.size == self.cols.size == self.scores.size):
            raise DataError("ranked prediction arrays must align")
        if np.any(self.rows >= self.cols):
            raise DataError("candidates must be unordered pairs with row < col")
        if np.any(np.diff(self.scores) > 0):
            raise DataError("scores must be sorted non-increasing")
        keys = self.rows * self.excluded.n + self.cols
        if np.unique(keys).size != keys.size:
            raise DataError("duplicate candidate pairs")
        if np.intersect1d(keys, _canonical_keys(self.excluded)).size:
            raise DataError("candidates overlap the excluded training pairs")

    def __len__(self):
        return self.rows.size


def _sorted_predictions(rows, cols, scores, excluded):
    order = np.lexsort((cols, rows, -scores))
    return RankedPredictions(rows[order], cols[order], scores[order], excluded)


@dataclass
class FprFnrCurve:
    ks: np.ndarray
    fpr: np.ndarray
    fnr: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.fpr) < -1e-12) or np.any(np.diff(self.fnr) > 1e-12):
            raise DataError("FPR must be nondecreasing and FNR nonincreasing in k")

    def at_k(self, k):
        i = min(int(k), len(self.ks) - 1)
        return float(self.fpr[i]), float(self.fnr[i])


def fpr_fnr(pred: RankedPredictions, test_edges: ObservedOnes,
            universe="all_pairs") -> FprFnrCurve:
    """FPR/FNR over every prefix size k of the ranked candidates (k = 0 included).

    FPR counts predicted pairs that are not test links against the non-friend
    pairs (universe minus training minus test); FNR is the fraction of test
    links not yet predicted.
    """
    if universe not in ("all_pairs", "given_candidates"):
        raise ValueError(f"unknown universe {universe!r}")
    test_keys = _canonical_keys(test_edges)
    excl_keys = _canonical_keys(pred.excluded)
    if np.intersect1d(test_keys, excl_keys).size:
        raise DataError("test edges overlap the excluded training pairs")
    if test_keys.size == 0:
        raise DataError("no test edges to rank against")
    cand_keys = pred.rows * pred.excluded.n + pred.cols
    is_hit = np.isin(cand_keys, test_keys)
    hits = np.concatenate([[0], np.cumsum(is_hit)])
    ks = np.arange(len(pred) + 1)
    if universe == "all_pairs":
        n = pred.excluded.n
        negatives = n * (n - 1) // 2 - excl_keys.size - test_keys.size
    else:
        negatives = len(pred) - int(is_hit.sum())
    misses = ks - hits
    fpr = misses / negatives if negatives > 0 else np.zeros_like(misses, dtype=float)
    fnr = 1.0 - hits / test_keys.size
    return FprFnrCurve(ks, fpr, fnr)


def score_model_pairs(model, train: ObservedOnes, cap=10**8) -> RankedPredictions:
    """Rank every non-training unordered pair by the model's symmetrized prediction."""
    x = model.materialize(cap)
    n = train.n
    if x.shape != (n, n):
        raise ValueError("pair scoring needs a square model matching the graph")
    s = 0.5 * (x + x.T)
    iu, ju = np.triu_indices(n, k=1)
    keys = iu * n + ju
    keep = ~np.isin(keys, _canonical_keys(train))
    return _sorted_predictions(iu[keep], ju[keep], s[iu[keep], ju[keep]], train)


def _adjacency(train: ObservedOnes):
    if train.m != train.n:
        raise DataError("link-prediction baselines need a square adjacency")
    return sp.csr_matrix((np.ones(train.nnz), (train.rows, train.cols)),
                         shape=(train.m, train.n))


def _collect_sparse_scores(s, train):
    coo = sp.coo_matrix(sp.triu(s, k=1))
    keys = coo.row.astype(np.int64) * train.n + coo.col
    keep = (coo.data > 0) & ~np.isin(keys, _canonical_keys(train))
    return _sorted_predictions(coo.row[keep].astype(np.int64),
                               coo.col[keep].astype(np.int64),
                               coo.data[keep], train)


def baseline_common_neighbors(train: ObservedOnes) -> RankedPredictions:
    """score(i, j) = |N(i) & N(j)| via the sparse square of the adjacency.

    Pairs with zero common neighbors carry no score and are omitted.
    """
    a = _adjacency(train)
    return _collect_sparse_scores(a @ a, train)


def _spectral_radius_estimate(a, iters=30):
    v = np.ones(a.shape[0]) / np.sqrt(a.shape[0])
    for _ in range(iters):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
    return float(np.linalg.norm(a @ v))


def baseline_katz(train: ObservedOnes, beta=0.005, max_len=4) -> RankedPredictions:
    """Truncated Katz score sum_{l=2..max_len} beta^l (A^l)_ij over non-training pairs."""
    a = _adjacency(train)
    sigma = _spectral_radius_estimate(a)
    if beta * sigma >= 1.0:
        warnings.warn(f"beta * sigma1 = {beta * sigma:.3f} >= 1; truncated Katz may be "
                      "dominated by the longest paths", stacklevel=2)
    power = a @ a
    scores = beta**2 * power
    for length in range(3, max_len + 1):
        power = power @ a
        scores = scores + beta**length * power
    return _collect_sparse_scores(scores, train)


def baseline_svd_katz(train: ObservedOnes, rank_k, beta=0.005, max_len=4) -> RankedPredictions:
    """Katz evaluated on the rank-k spectral approximation of A.

    Powers run in the k-dimensional core: A_k^l = U S (B S)^(l-1) Vᵀ with
    B = Vᵀ U, so only one dense n x n pass materializes the scores.
    """
    a = _adjacency(train)
    n = train.n
    if rank_k >= min(a.shape):
        u, s, vt = np.linalg.svd(a.toarray(), full_matrices=False)
        u, s, vt = u[:, :rank_k], s[:rank_k], vt[:rank_k]
    else:
        v0 = np.ones(n) / np.sqrt(n)
        u, s, vt = sp.linalg.svds(a.astype(np.float64), k=rank_k, v0=v0)
        order = np.argsort(s)[::-1]
        u, s, vt = u[:, order], s[order], vt[order]
    b = vt @ u
    bs = b * s[None, :]
    core = np.zeros((rank_k, rank_k))
    term = np.diag(s) @ bs  # S (B S)^1, the l=2 core
    for length in range(2, max_len + 1):
        core += beta**length * term
        term = term @ bs
    dense = u @ core @ vt
    dense = 0.5 * (dense + dense.T)
    iu, ju = np.triu_indices(n, k=1)
    keys = iu * n + ju
    keep = ~np.isin(keys, _canonical_keys(train))
    return _sorted_predictions(iu[keep], ju[keep], dense[iu[keep], ju[keep]], train)
