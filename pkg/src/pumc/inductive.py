"""Inductive (feature-based) PU completion: proximal gradient on the small core.

Features are column-orthonormalized internally (QR), so the pulled-back
gradient of the dense part of the objective is just the core itself and the
nuclear norm of the implied matrix equals the nuclear norm of the core. The
returned model carries the orthonormalized features.
"""

from __future__ import annotations

import time

import numpy as np

from .core import FlopCounter, InductiveModel, ObservedOnes, SolverReport
from .errors import NumericError, SizeError
from .solvers import SolverConfig, _rel_change

CORE_DIM_CAP = 2000
PENALTY_GROWTH = 2.0
PENALTY_CAP = 4096.0


def orthonormalize_features(f):
    """Orthonormal basis for the feature columns (reduced QR), with the transform."""
    f = np.asarray(f, dtype=np.float64)
    q, r = np.linalg.qr(f)
    return q, r


def _prepare(obs, features):
    f_u, f_v = features
    f_u = np.asarray(f_u, dtype=np.float64)
    f_v = np.asarray(f_v, dtype=np.float64)
    if f_u.shape[0] != obs.m or f_v.shape[0] != obs.n:
        raise ValueError(f"feature rows ({f_u.shape[0]}, {f_v.shape[0]}) do not match "
                         f"observations ({obs.m}, {obs.n})")
    d = f_u.shape[1]
    if f_v.shape[1] != d:
        raise ValueError("row and column features must share the same width")
    if d > CORE_DIM_CAP:
        raise SizeError(f"feature dimension {d} exceeds cap {CORE_DIM_CAP}")
    q_u, r_u = orthonormalize_features(f_u)
    q_v, r_v = orthonormalize_features(f_v)
    u_omega = q_u[obs.rows]
    v_omega = q_v[obs.cols]
    pulled_a = u_omega.T @ v_omega  # sum of u_i v_jᵀ over observed ones
    return q_u, q_v, (r_u, r_v), u_omega, v_omega, pulled_a


def _shrink_core(g, amount):
    u, s, vt = np.linalg.svd(g, full_matrices=False)
    s = np.maximum(s - amount, 0.0)
    return (u * s) @ vt, s


def solve_bias_imc(obs: ObservedOnes, features, cfg: SolverConfig):
    """Proximal gradient on D for the alpha-weighted inductive objective.

    The dense term pulls back to (1-alpha)(D - F_uᵀ A F_v) through the
    orthonormalized features; the sparse correction runs over Omega_1 only.
    Nuclear shrinkage is applied to the full SVD of the d x d core each sweep.
    """
    t0 = time.perf_counter()
    p = cfg.params
    alpha, lam = p.alpha, p.lam
    q_u, q_v, _, u_omega, v_omega, pulled_a = _prepare(obs, features)
    d = q_u.shape[1]
    core = np.zeros((d, d))
    counter = FlopCounter()
    eta = cfg.step_size

    objectives = []
    converged = False
    prev = None
    sweeps = 0
    for it in range(cfg.max_sweeps):
        x_omega = np.einsum("ij,ij->i", u_omega @ core, v_omega)
        grad = 2.0 * (1.0 - alpha) * (core - pulled_a)
        grad += 2.0 * (2.0 * alpha - 1.0) * (u_omega.T @ ((x_omega - 1.0)[:, None] * v_omega))
        core, svals = _shrink_core(core - eta * grad, eta * lam)
        counter.add(obs.nnz * d * d * 2 + d**3)
        x_omega = np.einsum("ij,ij->i", u_omega @ core, v_omega)
        obj = ((1.0 - alpha) * (np.sum(core**2) - 2.0 * x_omega.sum() + obs.nnz)
               + (2.0 * alpha - 1.0) * np.sum((x_omega - 1.0) ** 2)
               + lam * svals.sum())
        if not np.isfinite(obj):
            raise NumericError(f"inductive biased objective diverged at sweep {it}")
        objectives.append(float(obj))
        sweeps = it + 1
        if prev is not None and _rel_change(prev, obj) < cfg.tolerance:
            converged = True
            break
        prev = obj

    model = InductiveModel(q_u, q_v, core)
    report = SolverReport(objectives, sweeps, converged, counter.count,
                          time.perf_counter() - t0)
    return model, report


def solve_shift_imc(obs: ObservedOnes, features, cfg: SolverConfig):
    """Proximal gradient on D with shifted targets and a growing box penalty.

    The box constraint 0 <= F_u D F_vᵀ <= 1 is enforced softly: a quadratic
    penalty max(0, x-1)² + max(0, -x)² whose weight doubles each sweep (capped),
    plus clipping of predictions when the reported loss is evaluated. Exact
    projection onto the constraint set is not attempted.
    """
    t0 = time.perf_counter()
    p = cfg.params
    lam = p.lam
    shift = 1.0 / (1.0 - p.rho)
    q_u, q_v, _, u_omega, v_omega, pulled_a = _prepare(obs, features)
    m, n = obs.m, obs.n
    if m * n > cfg.materialization_cap:
        raise SizeError(f"{m} x {n} box penalty needs a dense pass; exceeds cap "
                        f"{cfg.materialization_cap}")
    d = q_u.shape[1]
    core = np.zeros((d, d))
    counter = FlopCounter()
    mu = 1.0

    objectives = []
    converged = False
    prev = None
    sweeps = 0
    for it in range(cfg.max_sweeps):
        x_dense = q_u @ core @ q_v.T
        over = np.maximum(x_dense - 1.0, 0.0)
        under = np.maximum(-x_dense, 0.0)
        grad = 2.0 * core - 2.0 * shift * pulled_a
        grad += mu * (q_u.T @ (2.0 * over - 2.0 * under) @ q_v)
        eta = min(cfg.step_size, 0.9 / (2.0 + 2.0 * mu))
        core, svals = _shrink_core(core - eta * grad, eta * lam)
        counter.add(2 * m * n * d + d**3)

        x_clip = np.clip(q_u @ core @ q_v.T, 0.0, 1.0)
        x_omega = x_clip[obs.rows, obs.cols]
        obj = (np.sum(x_clip**2) + np.sum((x_omega - shift) ** 2 - x_omega**2)
               + lam * svals.sum())
        if not np.isfinite(obj):
            raise NumericError(f"inductive shifted objective diverged at sweep {it}")
        objectives.append(float(obj))
        sweeps = it + 1
        at_cap = mu >= PENALTY_CAP
        if prev is not None and at_cap and _rel_change(prev, obj) < cfg.tolerance:
            converged = True
            break
        prev = obj
        mu = min(mu * PENALTY_GROWTH, PENALTY_CAP)

    model = InductiveModel(q_u, q_v, core)
    report = SolverReport(objectives, sweeps, converged, counter.count,
                          time.perf_counter() - t0)
    return model, report
