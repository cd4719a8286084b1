"""Synthetic ground truth, the two observation processes, and rho-grid selection.

The non-deterministic process draws a clean binary Y entrywise from M in [0,1]
and then thins the ones: each 1 of Y is kept independently with probability
1-rho. Conditioned on the number kept, the retained set is uniform over the
ones of Y, so Bernoulli thinning realizes uniform one-sided subsampling while
matching the marginal P(A_ij = 1) = M_ij (1 - rho) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import ObservedOnes, as_dense
from .errors import DataError

QPolicy = Union[str, float]  # "balanced" or a fixed threshold value


@dataclass
class SyntheticSpec:
    n: int
    k: int
    setting: str  # "nondet" | "det"
    rho: float
    q_policy: QPolicy = "balanced"
    seed: int = 0

    def __post_init__(self):
        if self.setting not in ("nondet", "det"):
            raise ValueError(f"setting must be 'nondet' or 'det', got {self.setting!r}")
        if not (0 < self.k <= self.n):
            raise ValueError("need 1 <= k <= n")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError("rho must be in [0, 1)")


@dataclass
class PuInstance:
    ground_truth_m: np.ndarray
    clean_y: np.ndarray
    observed: ObservedOnes
    true_rho: float
    q_used: Optional[float] = None


def generate_ground_truth(spec: SyntheticSpec) -> np.ndarray:
    """Gram matrix of a random k-dim orthonormal basis; rescaled to [0,1] for 'nondet'."""
    rng = np.random.default_rng(spec.seed)
    g = rng.standard_normal((spec.n, spec.k))
    u, _ = np.linalg.qr(g)
    m = u @ u.T
    if spec.setting == "nondet":
        lo, hi = m.min(), m.max()
        m = (m - lo) / (hi - lo)
    return m


def _thin_ones(y, rho, rng):
    keep = y & (rng.random(y.shape) < (1.0 - rho))
    rows, cols = np.nonzero(keep)
    return ObservedOnes(y.shape[0], y.shape[1], rows, cols)


def observe_nondeterministic(m, rho, seed) -> PuInstance:
    """Draw Y ~ Bernoulli(M) entrywise, then keep each 1 with probability 1-rho."""
    m = as_dense(m)
    if m.min() < 0.0 or m.max() > 1.0:
        raise DataError("non-deterministic observation requires entries in [0, 1]")
    if not (0.0 <= rho < 1.0):
        raise ValueError("rho must be in [0, 1)")
    rng = np.random.default_rng(seed)
    y = rng.random(m.shape) < m
    observed = _thin_ones(y, rho, rng)
    return PuInstance(ground_truth_m=m, clean_y=y.astype(np.float64),
                      observed=observed, true_rho=float(rho))


def balanced_threshold(m) -> float:
    """Lower median of the entries, so the strict threshold yields at most half ones."""
    m = as_dense(m)
    flat = np.sort(m, axis=None)
    if flat[0] == flat[-1]:
        raise DataError("balanced threshold undefined for a constant matrix")
    return float(flat[(flat.size - 1) // 2])


def observe_deterministic(m, q_policy: QPolicy, rho, seed) -> PuInstance:
    """Threshold M strictly at q (median under 'balanced'), then thin the ones."""
    m = as_dense(m)
    if not (0.0 <= rho < 1.0):
        raise ValueError("rho must be in [0, 1)")
    if q_policy == "balanced":
        q = balanced_threshold(m)
    else:
        q = float(q_policy)
    y = m > q
    rng = np.random.default_rng(seed)
    observed = _thin_ones(y, rho, rng)
    return PuInstance(ground_truth_m=m, clean_y=y.astype(np.float64),
                      observed=observed, true_rho=float(rho), q_used=q)


def make_instance(spec: SyntheticSpec) -> PuInstance:
    """Generate ground truth and observe it; generation and observation seeds are split."""
    m = generate_ground_truth(spec)
    obs_seed = spec.seed + 1  # distinct stream from generation
    if spec.setting == "nondet":
        return observe_nondeterministic(m, spec.rho, obs_seed)
    return observe_deterministic(m, spec.q_policy, spec.rho, obs_seed)


RHO_GRID_CLAMP = 1.0 - 1e-6


def rho_grid(observed: ObservedOnes):
    """Candidate noise rates {1-2s, 10(1-2s), 100(1-2s), 1000(1-2s)} for s = nnz/(m n),
    clamped to [0, 1 - 1e-6] and deduplicated preserving order."""
    if observed.nnz == 0:
        raise DataError("rho grid requires at least one observation")
    s = observed.nnz / (observed.m * observed.n)
    base = 1.0 - 2.0 * s
    out = []
    for mult in (1.0, 10.0, 100.0, 1000.0):
        val = min(max(mult * base, 0.0), RHO_GRID_CLAMP)
        if val not in out:
            out.append(val)
    return out


def holdout_split(observed: ObservedOnes, fraction, seed):
    """Uniform random partition of the observed ones into (train, validation)."""
    if not (0.0 < fraction < 1.0):
        raise ValueError("fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    nnz = observed.nnz
    n_val = int(round(fraction * nnz))
    perm = rng.permutation(nnz)
    val_idx = perm[:n_val]
    train_idx = perm[n_val:]
    train = ObservedOnes(observed.m, observed.n,
                         observed.rows[train_idx], observed.cols[train_idx])
    val = ObservedOnes(observed.m, observed.n,
                       observed.rows[val_idx], observed.cols[val_idx])
    return train, val
