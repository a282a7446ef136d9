"""Positive matrices under the coefficientwise group law.

Matrices are plain ``numpy`` float arrays of shape ``(n, n)``. Every public
function validates its inputs and returns a fresh array; nothing is mutated
in place, so values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, ValidationError

MAX_DIM = 64
DEFAULT_TOL = 1e-9

# Largest argument for which exp() stays finite in float64.
_EXP_LIMIT = float(np.log(np.finfo(float).max))


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a validated float array of strictly positive entries."""
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    n = arr.shape[0]
    if not 2 <= n <= MAX_DIM:
        raise ValidationError(f"{name} dimension must be in [2, {MAX_DIM}], got {n}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    if np.any(arr <= 0):
        i, j = np.argwhere(arr <= 0)[0]
        raise ValidationError(f"{name} entry ({i}, {j}) = {arr[i, j]!r} is not positive")
    return arr


def as_log_matrix(l, name: str = "log matrix") -> np.ndarray:
    arr = np.array(l, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if not 2 <= arr.shape[0] <= MAX_DIM:
        raise ValidationError(f"{name} dimension must be in [2, {MAX_DIM}], got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def as_gauge(g, n: int | None = None) -> np.ndarray:
    arr = np.array(g, dtype=float)
    if arr.ndim != 1:
        raise ValidationError("gauge vector must be one-dimensional")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"gauge vector has length {arr.shape[0]}, expected {n}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValidationError("gauge vector entries must be positive and finite")
    return arr


def as_permutation(s, n: int | None = None) -> np.ndarray:
    """Validate a 0-based permutation given as the array of images."""
    arr = np.asarray(s)
    if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
        raise ValidationError("permutation must be a 1-d integer array")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"permutation has length {arr.shape[0]}, expected {n}")
    if not np.array_equal(np.sort(arr), np.arange(arr.shape[0])):
        raise ValidationError(f"{arr.tolist()} is not a permutation of 0..{arr.shape[0] - 1}")
    return arr.astype(np.intp)


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")


def ones(n: int) -> np.ndarray:
    return np.ones((n, n))


def hadamard_mul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a * b


def hadamard_inv(a) -> np.ndarray:
    return 1.0 / as_matrix(a)


def log_map(a) -> np.ndarray:
    return np.log(as_matrix(a))


def exp_map(l) -> np.ndarray:
    l = as_log_matrix(l)
    if np.any(l > _EXP_LIMIT):
        i, j = np.argwhere(l > _EXP_LIMIT)[0]
        raise ComputationError(f"exp overflow at entry ({i}, {j}): {l[i, j]!r}")
    return np.exp(l)


def skew(l: np.ndarray) -> np.ndarray:
    """Skew-symmetric part ``(L - L^T) / 2`` of a (stack of) square array(s)."""
    return 0.5 * (l - np.swapaxes(l, -1, -2))


def sym(l: np.ndarray) -> np.ndarray:
    """Symmetric part ``(L + L^T) / 2`` of a (stack of) square array(s)."""
    return 0.5 * (l + np.swapaxes(l, -1, -2))


def sign_matrix(n: int) -> np.ndarray:
    """``eps[i, j] = sign(i - j)``; +1 below the diagonal, -1 above."""
    idx = np.arange(n)
    return np.sign(idx[:, None] - idx[None, :]).astype(float)


def _gauge_factors(mode: str, g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    lower = upper.T
    f = np.ones((n, n))
    rows = np.broadcast_to(g[:, None], (n, n))
    cols = np.broadcast_to(g[None, :], (n, n))
    if mode == "L":
        # the smaller index carries the gauge: g_i above, g_j^{-1} below
        f[upper] = rows[upper]
        f[lower] = 1.0 / cols[lower]
    elif mode == "R":
        # the larger index carries the gauge: g_j above, g_i^{-1} below
        f[upper] = cols[upper]
        f[lower] = 1.0 / rows[lower]
    elif mode == "Ad":
        off = upper | lower
        f[off] = (rows / cols)[off]
    else:
        raise ValidationError(f"unknown gauge mode {mode!r}; expected L, R or Ad")
    return f


def gauge_action(mode: str, g, a) -> np.ndarray:
    """Act on ``a`` by the gauge vector ``g``.

    All three modes leave the diagonal untouched and map reciprocal matrices
    to reciprocal matrices. ``Ad`` multiplies every off-diagonal entry by
    ``g_i / g_j`` and equals ``L(g, R(1/g, a))``.
    """
    a = as_matrix(a)
    g = as_gauge(g, a.shape[0])
    return a * _gauge_factors(mode, g)


def permute_action(s, a) -> np.ndarray:
    """Relabel indices: ``b[i, j] = a[s[i], s[j]]`` (0-based ``s``)."""
    a = as_matrix(a)
    s = as_permutation(s, a.shape[0])
    return a[np.ix_(s, s)]


def log_distance(a, b) -> float:
    """Log-Euclidean distance ``||log a - log b||_F``."""
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return float(np.linalg.norm(np.log(a) - np.log(b)))


@dataclass(frozen=True, eq=False)
class SplitMatrix:
    """Image of a positive matrix under the Phi split.

    ``mult`` is reciprocal with unit diagonal, ``add`` is skew-symmetric with
    zero diagonal and ``diag`` holds the log-diagonal of the original matrix.
    """

    mult: np.ndarray
    add: np.ndarray
    diag: np.ndarray

    @property
    def n(self) -> int:
        return self.mult.shape[0]

    def validate(self, rtol: float = 1e-12) -> None:
        mult = as_matrix(self.mult, "mult")
        add = as_log_matrix(self.add, "add")
        diag = np.asarray(self.diag, dtype=float)
        n = mult.shape[0]
        if add.shape != (n, n) or diag.shape != (n,):
            raise ValidationError("split components have inconsistent dimensions")
        if np.max(np.abs(mult * mult.T - 1.0)) > rtol:
            raise ValidationError("mult component is not reciprocal")
        if np.max(np.abs(np.diag(mult) - 1.0)) > rtol:
            raise ValidationError("mult component has a non-unit diagonal")
        scale = max(1.0, float(np.max(np.abs(add))))
        if np.max(np.abs(add + add.T)) > rtol * scale or np.any(np.diag(add) != 0):
            raise ValidationError("add component is not skew-symmetric with zero diagonal")
        if not np.all(np.isfinite(diag)):
            raise ValidationError("diag component has non-finite entries")


def phi_split(a) -> SplitMatrix:
    a = as_matrix(a)
    n = a.shape[0]
    mult = np.sqrt(a / a.T)
    l = np.log(a)
    add = sign_matrix(n) * sym(l)
    np.fill_diagonal(add, 0.0)
    return SplitMatrix(mult=mult, add=add, diag=np.diag(l).copy())


def phi_unsplit(s: SplitMatrix) -> np.ndarray:
    s.validate()
    n = s.n
    a = s.mult * np.exp(sign_matrix(n) * s.add)
    a[np.diag_indices(n)] = np.exp(s.diag)
    return a


@dataclass(frozen=True)
class MatrixClass:
    reciprocal: bool
    pure: bool
    consistent_reciprocal: bool
    consistent_general: bool
    reciprocal_residual: float
    pure_residual: float
    consistent_reciprocal_residual: float
    consistent_general_residual: float

    def as_dict(self) -> dict:
        return {
            "reciprocal": self.reciprocal,
            "pure": self.pure,
            "consistent_reciprocal": self.consistent_reciprocal,
            "consistent_general": self.consistent_general,
            "reciprocal_residual": self.reciprocal_residual,
            "pure_residual": self.pure_residual,
            "consistent_reciprocal_residual": self.consistent_reciprocal_residual,
            "consistent_general_residual": self.consistent_general_residual,
        }


def triad_residual(l: np.ndarray) -> np.ndarray:
    """Max over all index triples of ``|l_ij + l_jk - l_ik|``, batched over leading axes."""
    t = l[..., :, :, None] + l[..., None, :, :] - l[..., :, None, :]
    return np.max(np.abs(t), axis=(-3, -2, -1))


def reciprocity_residual(l: np.ndarray) -> np.ndarray:
    return np.max(np.abs(l + np.swapaxes(l, -1, -2)), axis=(-2, -1))


def purity_residual(l: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.diagonal(l, axis1=-2, axis2=-1)), axis=-1)


def class_residuals(l: np.ndarray) -> dict[str, np.ndarray]:
    """Residuals of the four classification tests for a (stack of) log matrices."""
    n = l.shape[-1]
    rec = reciprocity_residual(l)
    pure = purity_residual(l)
    cons_rec = np.maximum(rec, triad_residual(l))
    k = skew(l)
    add = sign_matrix(n) * sym(l)
    add = add * (1.0 - np.eye(n))
    cons_gen = np.maximum(pure, np.maximum(triad_residual(k), triad_residual(add)))
    return {
        "reciprocal": rec,
        "pure": pure,
        "consistent_reciprocal": cons_rec,
        "consistent_general": cons_gen,
    }


def classify(a, tol: float = DEFAULT_TOL) -> MatrixClass:
    """Classify ``a``; each flag is true iff its residual is at most ``tol``.

    Residuals are maxima of absolute log deviations: ``ln(a_ij a_ji)`` for
    reciprocity, ``ln a_ii`` for purity, triad defects ``ln(a_ij a_jk / a_ik)``
    for consistency. The general test checks purity plus flatness of both
    Phi components.
    """
    if not tol > 0:
        raise ValidationError("tolerance must be positive")
    r = {k: float(v) for k, v in class_residuals(log_map(a)).items()}
    return MatrixClass(
        reciprocal=r["reciprocal"] <= tol,
        pure=r["pure"] <= tol,
        consistent_reciprocal=r["consistent_reciprocal"] <= tol,
        consistent_general=r["consistent_general"] <= tol,
        reciprocal_residual=r["reciprocal"],
        pure_residual=r["pure"],
        consistent_reciprocal_residual=r["consistent_reciprocal"],
        consistent_general_residual=r["consistent_general"],
    )


FLAGS = ("reciprocal", "pure", "consistent_reciprocal", "consistent_general")


def require_flag(a, flag: str, tol: float = DEFAULT_TOL, what: str = "input") -> np.ndarray:
    """Return the validated matrix, or raise if it fails the named class test."""
    if flag not in FLAGS:
        raise ValidationError(f"unknown class flag {flag!r}")
    a = as_matrix(a)
    res = float(class_residuals(np.log(a))[flag])
    if res > tol:
        raise ValidationError(f"{what} is not {flag.replace('_', ' ')} (residual {res:.6g} > {tol:g})")
    return a
