"""Core data types: observation sets, factor models, inductive models, hyperparameters.

Dense matrices are plain 2-D float64 C-contiguous numpy arrays throughout;
`as_dense` validates that contract at interface boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SizeError

DEFAULT_MATERIALIZATION_CAP = 10**8


def as_dense(x) -> np.ndarray:
    """Validate and coerce `x` to a 2-D float64 row-major matrix."""
    a = np.ascontiguousarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DataError(f"expected a 2-D matrix with positive dims, got shape {a.shape}")
    return a


class ObservedOnes:
    """Sparse set of (row, col) positions where a 1 was observed.

    Entries are stored sorted in row-major order and deduplicated. The
    implicit complement of the set is "unlabeled", never materialized.
    A CSR-style row index gives O(1) access to the observed columns of a
    row; a cached transpose gives the same per column.
    """

    def __init__(self, m, n, rows, cols):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise DataError("row and column index arrays differ in length")
        if m < 1 or n < 1:
            raise DataError("matrix dims must be >= 1")
        if rows.size:
            if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
                raise DataError("observation index out of range")
        keys = rows * n + cols
        keys = np.unique(keys)  # sorts row-major and drops duplicates
        self.m = int(m)
        self.n = int(n)
        self.rows = keys // n
        self.cols = keys % n
        self.row_ptr = np.searchsorted(self.rows, np.arange(m + 1))
        self._transpose = None

    @classmethod
    def from_pairs(cls, m, n, pairs):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        return cls(m, n, pairs[:, 0], pairs[:, 1])

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a)
        rows, cols = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], rows, cols)

    @property
    def nnz(self) -> int:
        return self.rows.size

    def row_cols(self, i):
        """Column indices observed in row i (a contiguous slice)."""
        return self.cols[self.row_ptr[i]:self.row_ptr[i + 1]]

    def row_range(self, i):
        return self.row_ptr[i], self.row_ptr[i + 1]

    def transpose(self) -> "ObservedOnes":
        if self._transpose is None:
            t = ObservedOnes(self.n, self.m, self.cols, self.rows)
            self._transpose = t
        return self._transpose

    def csc_order(self):
        """Permutation taking row-major storage order to column-major order."""
        return np.lexsort((self.rows, self.cols))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.m, self.n))
        a[self.rows, self.cols] = 1.0
        return a

    def key_set(self):
        return set((self.rows * self.n + self.cols).tolist())

    def symmetrized(self) -> "ObservedOnes":
        if self.m != self.n:
            raise DataError("symmetrization requires a square index space")
        return ObservedOnes(self.m, self.n,
                            np.concatenate([self.rows, self.cols]),
                            np.concatenate([self.cols, self.rows]))

    def __eq__(self, other):
        return (isinstance(other, ObservedOnes) and self.m == other.m and self.n == other.n
                and np.array_equal(self.rows, other.rows) and np.array_equal(self.cols, other.cols))

    def __repr__(self):
        return f"ObservedOnes(m={self.m}, n={self.n}, nnz={self.nnz})"


@dataclass
class LowRankFactors:
    """Factor pair (W: m x k, H: n x k) representing X = W Hᵀ without materializing it."""

    w: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        self.w = np.ascontiguousarray(self.w, dtype=np.float64)
        self.h = np.ascontiguousarray(self.h, dtype=np.float64)
        if self.w.ndim != 2 or self.h.ndim != 2 or self.w.shape[1] != self.h.shape[1]:
            raise DataError("factor column counts must agree")
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.h))):
            raise DataError("factors contain non-finite values")

    @property
    def shape(self):
        return (self.w.shape[0], self.h.shape[0])

    @property
    def rank(self) -> int:
        return self.w.shape[1]

    def predict(self, i, j) -> float:
        m, n = self.shape
        if not (0 <= i < m and 0 <= j < n):
            raise IndexError(f"entry ({i}, {j}) outside {m} x {n}")
        return float(self.w[i] @ self.h[j])

    def values_at(self, rows, cols) -> np.ndarray:
        """Predicted values at the given index arrays, O(len * k)."""
        if self.rank == 0:
            return np.zeros(len(rows))
        return np.einsum("ij,ij->i", self.w[rows], self.h[cols])

    def sq_frobenius(self) -> float:
        """‖WHᵀ‖_F² = trace((WᵀW)(HᵀH)), never O(mn)."""
        return float(np.sum((self.w.T @ self.w) * (self.h.T @ self.h)))

    def materialize(self, cap=DEFAULT_MATERIALIZATION_CAP) -> np.ndarray:
        m, n = self.shape
        if m * n > cap:
            raise SizeError(f"materializing {m} x {n} exceeds cap {cap}")
        if self.rank == 0:
            return np.zeros((m, n))
        return self.w @ self.h.T


@dataclass
class InductiveModel:
    """Bilinear feature model X = F_u D F_vᵀ with a small d x d core."""

    f_u: np.ndarray
    f_v: np.ndarray
    d_core: np.ndarray
    feature_row_norm_max_u: float = field(init=False)
    feature_row_norm_max_v: float = field(init=False)

    def __post_init__(self):
        self.f_u = as_dense(self.f_u)
        self.f_v = as_dense(self.f_v)
        self.d_core = as_dense(self.d_core)
        d = self.d_core.shape[0]
        if self.d_core.shape != (d, d) or self.f_u.shape[1] != d or self.f_v.shape[1] != d:
            raise DataError("core must be d x d with d matching both feature widths")
        self.feature_row_norm_max_u = float(np.linalg.norm(self.f_u, axis=1).max())
        self.feature_row_norm_max_v = float(np.linalg.norm(self.f_v, axis=1).max())

    @property
    def shape(self):
        return (self.f_u.shape[0], self.f_v.shape[0])

    @property
    def dim(self) -> int:
        return self.d_core.shape[0]

    def predict(self, i, j) -> float:
        m, n = self.shape
        if not (0 <= i < m and 0 <= j < n):
            raise IndexError(f"entry ({i}, {j}) outside {m} x {n}")
        return float(self.f_u[i] @ self.d_core @ self.f_v[j])

    def values_at(self, rows, cols) -> np.ndarray:
        return np.einsum("ij,ij->i", self.f_u[rows] @ self.d_core, self.f_v[cols])

    def sq_frobenius(self) -> float:
        gu = self.f_u.T @ self.f_u
        gv = self.f_v.T @ self.f_v
        return float(np.trace(self.d_core.T @ gu @ self.d_core @ gv))

    def materialize(self, cap=DEFAULT_MATERIALIZATION_CAP) -> np.ndarray:
        m, n = self.shape
        if m * n > cap:
            raise SizeError(f"materializing {m} x {n} exceeds cap {cap}")
        return self.f_u @ self.d_core @ self.f_v.T


@dataclass
class PuHyperParams:
    """Hyperparameter bundle: noise rate, bias weight, regularization, threshold, rank.

    `t` (trace-norm budget) and `lam` are alternative parameterizations; no
    conversion between them is ever performed.
    """

    rho: float
    alpha: float
    lam: float = 0.0
    t: float = 0.0
    q: float = 0.5
    rank_k: int = 10

    def __post_init__(self):
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not (0.0 < self.q < 1.0):
            raise ValueError(f"q must be in (0, 1), got {self.q}")
        if self.lam < 0 or self.t < 0:
            raise ValueError("lam and t must be nonnegative")
        if self.rank_k < 1:
            raise ValueError("rank_k must be >= 1")


class FlopCounter:
    """Additive multiply-accumulate counter incremented by kernel operations."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, n):
        self.count += int(n)


@dataclass
class SolverReport:
    objective_per_sweep: list
    sweeps_run: int
    converged: bool
    flop_counter: int
    wall_clock: float


def predict_entry(model, i, j) -> float:
    """Entry (i, j) of the model's implied matrix; pure, no mutation."""
    return model.predict(i, j)


def materialize(model, cap=DEFAULT_MATERIALIZATION_CAP) -> np.ndarray:
    """Dense matrix equal to predict_entry at every index, subject to a size cap."""
    return model.materialize(cap)
