"""Loss functions and full-objective evaluators for PU completion.

The unbiased loss for the one-sided observation process is

    l~(x, 1) = ((x - 1)^2 - rho x^2) / (1 - rho),    l~(x, 0) = x^2,

which may be negative for a = 1; objectives built on it are deliberately
not clamped at zero. The alpha-weighted loss is

    l_a(x, 1) = alpha (x - 1)^2,    l_a(x, 0) = (1 - alpha) x^2.

Full objectives are evaluated through the rewrite

    f_b(X) = (1-alpha) ||X - A||_F^2 + (2 alpha - 1) sum_{Omega_1} (X_ij - 1)^2,

with the dense term computed from factor Grams, so cost is
O((m+n) k^2 + |Omega_1| k), never O(mn).
"""

from __future__ import annotations

import numpy as np

from .core import InductiveModel, LowRankFactors, ObservedOnes


def _check_rho(rho):
    if not (0.0 <= rho < 1.0):
        raise ValueError(f"rho must be in [0, 1), got {rho}")


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")


def tilde_loss(x, a, rho):
    """Unbiased surrogate of the squared loss under one-sided sampling at rate 1-rho."""
    _check_rho(rho)
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a)
    pos = ((x - 1.0) ** 2 - rho * x**2) / (1.0 - rho)
    out = np.where(a == 1, pos, x**2)
    return out if out.ndim else float(out)

def tilde_loss_shifted_form(x, rho):
    """Algebraic rewrite of tilde_loss(x, 1, rho): (x - 1/(1-rho))^2 - rho/(1-rho)^2."""
    _check_rho(rho)
    x = np.asarray(x, dtype=np.float64)
    shift = 1.0 / (1.0 - rho)
    out = (x - shift) ** 2 - rho * shift**2
    return out if out.ndim else float(out)


def alpha_loss(x, a, alpha):
    """alpha-weighted squared loss: observed ones weighted alpha, unlabeled 1-alpha."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a)
    out = np.where(a == 1, alpha * (x - 1.0) ** 2, (1.0 - alpha) * x**2)
    return out if out.ndim else float(out)


def alpha_star(rho):
    """Bias weight (1 + rho) / 2 that makes the weighted risk an affine image of the 0-1 error."""
    _check_rho(rho)
    return (1.0 + rho) / 2.0


def eta_constant(q):
    """max(1/q^2, 1/(1-q)^2), the threshold-dependent constant in the recovery bound."""
    if not (0.0 < q < 1.0):
        raise ValueError(f"q must be in (0, 1), got {q}")
    return max(1.0 / q**2, 1.0 / (1.0 - q) ** 2)


def bias_fit_level(alpha, rho):
    """Stationary fit value on true-one entries under (1-rho)-sampling and alpha weighting.

    Minimizes alpha (1-rho) (x-1)^2 + (1-alpha) rho x^2; the zero entries' fit is 0,
    so classifying at half this level separates the two populations.
    """
    _check_alpha(alpha)
    _check_rho(rho)
    num = alpha * (1.0 - rho)
    return num / (num + (1.0 - alpha) * rho)


def bias_recovery_threshold(alpha, rho):
    """Calibrated recovery threshold: midpoint of the stationary fits for ones and zeros."""
    return 0.5 * bias_fit_level(alpha, rho)


_REG_CHOICES = ("none", "nuclear_surrogate", "nuclear")


def _reg_value(model, lam, reg):
    if reg not in _REG_CHOICES:
        raise ValueError(f"reg must be one of {_REG_CHOICES}, got {reg!r}")
    if reg == "none" or lam == 0.0:
        return 0.0
    if reg == "nuclear_surrogate":
        if not isinstance(model, LowRankFactors):
            raise ValueError("nuclear_surrogate requires explicit factors")
        return 0.5 * lam * (np.sum(model.w**2) + np.sum(model.h**2))
    from .spectral import nuclear_norm

    return lam * nuclear_norm(model)


def _check_dims(model, obs):
    if model.shape != (obs.m, obs.n):
        raise ValueError(f"model shape {model.shape} does not match observations "
                         f"({obs.m}, {obs.n})")


def objective_bias(model, obs: ObservedOnes, alpha, lam=0.0, reg="none"):
    """Biased objective f_b(X) plus the chosen regularizer, in factored form."""
    _check_alpha(alpha)
    _check_dims(model, obs)
    x_omega = model.values_at(obs.rows, obs.cols)
    data = (1.0 - alpha) * (model.sq_frobenius() - 2.0 * x_omega.sum() + obs.nnz)
    data += (2.0 * alpha - 1.0) * np.sum((x_omega - 1.0) ** 2)
    return float(data + _reg_value(model, lam, reg))


def objective_shift(model, obs: ObservedOnes, rho, lam=0.0, reg="none"):
    """Shifted objective: ||X||_F^2 + sum_{Omega_1} [(X_ij - 1/(1-rho))^2 - X_ij^2] + reg."""
    _check_rho(rho)
    _check_dims(model, obs)
    shift = 1.0 / (1.0 - rho)
    x_omega = model.values_at(obs.rows, obs.cols)
    data = model.sq_frobenius() + np.sum((x_omega - shift) ** 2 - x_omega**2)
    return float(data + _reg_value(model, lam, reg))
