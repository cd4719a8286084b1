"""Matrix-free spectral kernel: structured operators, randomized top-k SVD,
singular-value soft thresholding, and the proximal step for convex biased completion.

The gradient-step operator G = X - eta * grad f_b(X) is applied to tall-thin
blocks through its structured decomposition

    G P = (1 - 2 eta (1-alpha)) W (Hᵀ P) + 2 eta (1-alpha) A P - 2 eta (2 alpha - 1) R P,

where R holds the residual X - A on the observed ones, so one application
costs O((m+n) k c + |Omega_1| c) for c columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import FlopCounter, LowRankFactors, ObservedOnes
from .errors import NumericError


class MatrixFreeOperator:
    """Linear map given by closures for G @ P and Gᵀ @ U on 2-D blocks."""

    def __init__(self, rows, cols, matmat, rmatmat, flops_per_col=0, counter=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self._matmat = matmat
        self._rmatmat = rmatmat
        self.flops_per_col = int(flops_per_col)
        self.counter = counter

    def _tally(self, ncols):
        if self.counter is not None:
            self.counter.add(self.flops_per_col * ncols)

    def apply(self, p):
        p = np.atleast_2d(np.asarray(p, dtype=np.float64).T).T  # 1-D -> column
        if p.shape[0] != self.cols:
            raise ValueError(f"operand has {p.shape[0]} rows, operator expects {self.cols}")
        self._tally(p.shape[1])
        return self._matmat(p)

    def apply_t(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=np.float64).T).T
        if u.shape[0] != self.rows:
            raise ValueError(f"operand has {u.shape[0]} rows, operator expects {self.rows}")
        self._tally(u.shape[1])
        return self._rmatmat(u)


def operator_from_dense(g, counter=None):
    g = np.asarray(g, dtype=np.float64)
    return MatrixFreeOperator(g.shape[0], g.shape[1],
                              lambda p: g @ p, lambda u: g.T @ u,
                              flops_per_col=g.size, counter=counter)


def operator_from_factors(model: LowRankFactors, counter=None):
    w, h = model.w, model.h
    return MatrixFreeOperator(w.shape[0], h.shape[0],
                              lambda p: w @ (h.T @ p), lambda u: h @ (w.T @ u),
                              flops_per_col=(w.shape[0] + h.shape[0]) * model.rank,
                              counter=counter)


def gradient_operator_bias(model: LowRankFactors, obs: ObservedOnes, alpha, eta,
                           counter=None) -> MatrixFreeOperator:
    """Operator for G = X - eta * grad f_b(X) at X = W Hᵀ, residual kept sparse on Omega_1."""
    m, n = model.shape
    if (m, n) != (obs.m, obs.n):
        raise ValueError(f"model shape {model.shape} does not match observations "
                         f"({obs.m}, {obs.n})")
    w, h, k = model.w, model.h, model.rank
    resid = model.values_at(obs.rows, obs.cols) - 1.0
    a_sp = sp.csr_matrix((np.ones(obs.nnz), obs.cols, obs.row_ptr), shape=(m, n))
    r_sp = sp.csr_matrix((resid, obs.cols, obs.row_ptr), shape=(m, n))
    a_t = a_sp.T.tocsr()
    r_t = r_sp.T.tocsr()
    c1 = 1.0 - 2.0 * eta * (1.0 - alpha)
    c2 = 2.0 * eta * (1.0 - alpha)
    c3 = 2.0 * eta * (2.0 * alpha - 1.0)

    def matmat(p):
        return c1 * (w @ (h.T @ p)) + c2 * (a_sp @ p) - c3 * (r_sp @ p)

    def rmatmat(u):
        return c1 * (h @ (w.T @ u)) + c2 * (a_t @ u) - c3 * (r_t @ u)

    return MatrixFreeOperator(m, n, matmat, rmatmat,
                              flops_per_col=(m + n) * k + 2 * obs.nnz, counter=counter)


def adjointness_residual(op: MatrixFreeOperator, n_probes=5, seed=0):
    """max |<G v, u> - <v, Gᵀ u>| over random probes, normalized by the probe scale."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_probes):
        v = rng.standard_normal(op.cols)
        u = rng.standard_normal(op.rows)
        gv = op.apply(v)[:, 0]
        gtu = op.apply_t(u)[:, 0]
        scale = max(1.0, abs(gv @ u), abs(v @ gtu))
        worst = max(worst, abs(gv @ u - v @ gtu) / scale)
    return worst


@dataclass
class TruncatedSvd:
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.T


def topk_svd(op: MatrixFreeOperator, k, max_iters=100, tol=1e-9, seed=0) -> TruncatedSvd:
    """Randomized subspace iteration: Gaussian start, QR re-orthonormalization per pass.

    Stops when the top-k singular value estimates move by less than tol * sigma_1
    between passes, or after max_iters. Deterministic given the seed.
    """
    if k < 1 or k > min(op.rows, op.cols):
        raise ValueError(f"k={k} must be in [1, min(rows, cols)={min(op.rows, op.cols)}]")
    rng = np.random.default_rng(seed)
    block = min(k + 6, min(op.rows, op.cols))
    y = op.apply(rng.standard_normal((op.cols, block)))
    if not np.all(np.isfinite(y)):
        raise NumericError("operator produced non-finite values")
    q, _ = np.linalg.qr(y)
    s_prev = None
    for _ in range(max_iters):
        z = op.apply_t(q)
        s_est = np.linalg.svd(z, compute_uv=False)[:k]
        if s_prev is not None:
            top = max(s_est[0], 1e-300)
            if np.max(np.abs(s_est - s_prev)) <= tol * top:
                s_prev = s_est
                break
        s_prev = s_est
        qz, _ = np.linalg.qr(z)
        y = op.apply(qz)
        if not np.all(np.isfinite(y)):
            raise NumericError("operator produced non-finite values")
        q, _ = np.linalg.qr(y)
    b = op.apply_t(q)  # cols x block; Bᵀ = Qᵀ G
    ub, s, vtb = np.linalg.svd(b.T, full_matrices=False)
    return TruncatedSvd(u=q @ ub[:, :k], singular_values=s[:k], v=vtb[:k].T)


def soft_threshold(svd: TruncatedSvd, lam) -> LowRankFactors:
    """Keep components with sigma > lam, shrink them by lam, split symmetrically."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    keep = svd.singular_values > lam
    root = np.sqrt(svd.singular_values[keep] - lam)
    return LowRankFactors(svd.u[:, keep] * root, svd.v[:, keep] * root)


def nuclear_norm(model) -> float:
    """Exact nuclear norm of the model's implied matrix from its factored form."""
    if isinstance(model, LowRankFactors):
        if model.rank == 0:
            return 0.0
        rw = np.linalg.qr(model.w, mode="r")
        rh = np.linalg.qr(model.h, mode="r")
        core = rw @ rh.T
    else:  # InductiveModel
        ru = np.linalg.qr(model.f_u, mode="r")
        rv = np.linalg.qr(model.f_v, mode="r")
        core = ru @ model.d_core @ rv.T
    return float(np.linalg.svd(core, compute_uv=False).sum())


def prox_step_bias(model: LowRankFactors, obs: ObservedOnes, alpha, eta, lam, k,
                   seed=0, counter=None, svd_iters=60, svd_tol=1e-10) -> LowRankFactors:
    """One proximal step X <- shrink(X - eta grad f_b(X), eta lam), rank capped at k.

    The shrinkage amount eta*lam is the proximal map of the eta-scaled nuclear
    penalty, so each step decreases f_b + lam ||X||_* whenever eta <= 1/L.
    """
    op = gradient_operator_bias(model, obs, alpha, eta, counter=counter)
    svd = topk_svd(op, min(k, min(op.rows, op.cols)), max_iters=svd_iters,
                   tol=svd_tol, seed=seed)
    shrink = eta * lam
    if svd.singular_values[-1] > shrink:
        warnings.warn("rank cap reached: smallest retained singular value exceeds the "
                      "shrinkage level, result may be truncated", stacklevel=2)
    return soft_threshold(svd, shrink)
