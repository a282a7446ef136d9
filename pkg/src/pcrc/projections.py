"""Projections onto the reciprocal, consistent and CM subsets, and weights.

Everything here is linear in log coordinates: each projection is the
exponential of an orthogonal projection of ``log a``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_TOL,
    SplitMatrix,
    as_log_matrix,
    as_matrix,
    class_residuals,
    phi_split,
    phi_unsplit,
    require_flag,
    sign_matrix,
    skew,
    sym,
)
from .errors import ValidationError


def project_reciprocal(a) -> np.ndarray:
    """Nearest reciprocal matrix: ``b_ij = sqrt(a_ij / a_ji)``."""
    a = as_matrix(a)
    return np.sqrt(a / a.T)


def project_symmetric(a) -> np.ndarray:
    """Symmetric factor ``b_ij = sqrt(a_ij a_ji)``; ``a = reciprocal * symmetric``."""
    a = as_matrix(a)
    return np.sqrt(a * a.T)


def consistent_log_projection(l: np.ndarray) -> np.ndarray:
    """Orthogonal projection onto ``{u_i - u_j}``, batched over leading axes."""
    n = l.shape[-1]
    u = (l.sum(axis=-1) - l.sum(axis=-2)) / (2 * n)
    return u[..., :, None] - u[..., None, :]


def project_consistent_log(l) -> np.ndarray:
    """Closest matrix of the form ``L*_ij = u_i - u_j`` in Frobenius norm.

    ``u_i = (rowsum_i - colsum_i) / (2n)``. On skew inputs this is the additive
    geometric-mean rule ``(rowsum_i - rowsum_j) / n``.
    """
    return consistent_log_projection(as_log_matrix(l))


def gmm_project(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Geometric mean method: ``b_ij = (prod_k a_ik / prod_k a_jk)^(1/n)``.

    Raises:
        ValidationError: if ``a`` is not reciprocal within ``tol``.
    """
    a = require_flag(a, "reciprocal", tol, "gmm_project input")
    r = np.log(a).mean(axis=1)
    return np.exp(r[:, None] - r[None, :])


def pi_prime(s: SplitMatrix) -> SplitMatrix:
    s.validate()
    mult = gmm_project(s.mult)
    add = consistent_log_projection(np.asarray(s.add, dtype=float))
    return SplitMatrix(mult=mult, add=add, diag=np.array(s.diag, dtype=float))


def project_cm(a) -> np.ndarray:
    """Project a general positive matrix onto CM_n (pure, both Phi parts consistent)."""
    s = pi_prime(phi_split(a))
    return phi_unsplit(SplitMatrix(mult=s.mult, add=s.add, diag=np.zeros(s.n)))


def cm_log_projection(l: np.ndarray) -> np.ndarray:
    """Log-space form of :func:`project_cm`, batched over leading axes."""
    n = l.shape[-1]
    eps = sign_matrix(n)
    k = consistent_log_projection(skew(l))
    add = consistent_log_projection(eps * sym(l))
    out = k + eps * add
    idx = np.arange(n)
    out[..., idx, idx] = 0.0
    return out


TARGETS = ("M", "PC", "CM", "CPC")


def target_log_projection(l: np.ndarray, target: str) -> np.ndarray:
    """Orthogonal log-space projection onto the named target subspace."""
    t = target.upper()
    if t == "M":
        return np.array(l, dtype=float)
    if t == "PC":
        return skew(l)
    if t == "CPC":
        return consistent_log_projection(l)
    if t == "CM":
        return cm_log_projection(l)
    raise ValidationError(f"unknown target {target!r}; expected one of {', '.join(TARGETS)}")


def target_flag(target: str) -> str | None:
    """Classification flag that characterizes membership in ``target``."""
    return {
        "M": None,
        "PC": "reciprocal",
        "CPC": "consistent_reciprocal",
        "CM": "consistent_general",
    }[target.upper()]


def weights_from_consistent(a, tol: float = 1e-6) -> np.ndarray:
    """Weights ``w`` (summing to 1) with ``a_ij = w_i / w_j``.

    Raises:
        ValidationError: if ``a`` is not consistent and reciprocal within ``tol``;
            the message carries the residual.
    """
    a = require_flag(a, "consistent_reciprocal", tol, "weights input")
    g = np.exp(np.log(a).mean(axis=1))
    return g / g.sum()


def as_weights(w) -> np.ndarray:
    w = np.array(w, dtype=float)
    if w.ndim != 1 or w.shape[0] < 2:
        raise ValidationError("weight vector must be 1-d with at least two entries")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValidationError("weights must be positive and finite")
    return w / w.sum()


def matrix_from_weights(w) -> np.ndarray:
    w = as_weights(w)
    return w[:, None] / w[None, :]


def ranking(w) -> list[int]:
    """Indices sorted from the heaviest to the lightest weight (stable)."""
    w = np.asarray(w, dtype=float)
    return [int(i) for i in np.argsort(-w, kind="stable")]


@dataclass(frozen=True, eq=False)
class LFactorization:
    gauge: np.ndarray
    consistent: np.ndarray
    residual: float


def _l_system(n: int) -> tuple[np.ndarray, list[tuple[int, int]], np.ndarray]:
    """Design matrix for ``l_ij = gamma_i + u_i - u_j`` over i<j, u in sum-zero coordinates."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    # orthonormal basis of {u : sum(u) = 0}
    q, _ = np.linalg.qr(np.eye(n) - 1.0 / n)
    basis = q[:, : n - 1]
    rows = []
    for i, j in pairs:
        gamma = np.zeros(n)
        gamma[i] = 1.0
        rows.append(np.concatenate([gamma, basis[i] - basis[j]]))
    return np.array(rows), pairs, basis


def l_factorize(a, tol: float = DEFAULT_TOL) -> LFactorization:
    """Least-squares fit of ``a`` as ``L(gauge, consistent)``.

    Exact (zero residual) for every reciprocal 3x3 matrix; for n >= 4 the
    residual is generically positive.
    """
    a = require_flag(a, "reciprocal", tol, "l_factorize input")
    n = a.shape[0]
    l = np.log(a)
    design, pairs, basis = _l_system(n)
    rhs = np.array([l[i, j] for i, j in pairs])
    sol, *_ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = float(np.linalg.norm(design @ sol - rhs))
    gamma = sol[:n]
    u = basis @ sol[n:]
    return LFactorization(gauge=np.exp(gamma), consistent=matrix_from_weights(np.exp(u)), residual=residual)


def is_in_target(a, target: str, tol: float = DEFAULT_TOL) -> bool:
    flag = target_flag(target)
    if flag is None:
        return True
    return bool(class_residuals(np.log(as_matrix(a)))[flag] <= tol)
