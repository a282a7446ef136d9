"""Koczkodaj and distance-based inconsistency / reciprocity indices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, as_matrix, reciprocity_residual, sym
from .errors import ValidationError
from .projections import cm_log_projection, consistent_log_projection


@dataclass(frozen=True)
class IndexSpec:
    """Which index to evaluate.

    ``kind`` is ``"kii"`` or ``"dist"``. Distance indices need a ``target``
    (``PC``, ``CPC`` or ``CM``) and an exponent ``gamma > 0``. With
    ``indicator`` set the value goes through :func:`indicator_transform`;
    Koczkodaj's index is already bounded so the flag leaves it unchanged.
    """

    kind: str = "kii"
    target: str | None = None
    gamma: float = 1.0
    indicator: bool = False

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("kii", "dist"):
            raise ValidationError(f"unknown index kind {self.kind!r}; expected kii or dist")
        if not (isinstance(self.gamma, (int, float)) and self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValidationError("gamma must be a positive finite number")
        if kind == "dist":
            if self.target is None:
                raise ValidationError("distance index requires a target (PC, CPC or CM)")
            target = self.target.upper()
            if target not in ("PC", "CPC", "CM"):
                raise ValidationError(f"unknown distance target {self.target!r}")
            object.__setattr__(self, "target", target)
        elif self.target is not None:
            raise ValidationError("kii does not take a target")

    @property
    def needs_reciprocal(self) -> bool:
        return self.kind == "kii"

    @property
    def smooth(self) -> bool:
        """Differentiable away from the zero set; kii is a max of kinks."""
        return self.kind == "dist"

    def label(self) -> str:
        if self.kind == "kii":
            return "kii"
        s = f"dist/{self.target}/gamma={self.gamma:g}"
        return s + ("/indicator" if self.indicator else "")


def kii_triad(x: float, y: float, z: float) -> float:
    """Koczkodaj's index of the triad ``(x, y, z)``; zero iff ``y == x * z``."""
    for v in (x, y, z):
        if not (v > 0 and math.isfinite(v)):
            raise ValidationError("triad entries must be positive and finite")
    r = y / (x * z)
    return 1.0 - min(r, 1.0 / r)


def kii_triad_exp(x: float, y: float, z: float) -> float:
    """Same value as :func:`kii_triad` via ``1 - exp(-|ln(y / xz)|)``."""
    return -math.expm1(-abs(math.log(y) - math.log(x) - math.log(z)))


def chain_defects(l: np.ndarray) -> np.ndarray:
    """``|l_ij - (l_i,i+1 + ... + l_j-1,j)|`` for every i<j, batched; shape (..., n(n-1)/2)."""
    n = l.shape[-1]
    sup = l[..., np.arange(n - 1), np.arange(1, n)]
    c = np.concatenate([np.zeros(sup.shape[:-1] + (1,)), np.cumsum(sup, axis=-1)], axis=-1)
    i, j = np.triu_indices(n, 1)
    return np.abs(l[..., i, j] - (c[..., j] - c[..., i]))


def kii_log(l: np.ndarray) -> np.ndarray:
    return -np.expm1(-np.max(chain_defects(l), axis=-1))


def kii_matrix(a, tol: float = DEFAULT_TOL) -> float:
    """Koczkodaj's index over consecutive chains of a reciprocal matrix.

    Raises:
        ValidationError: for a non-reciprocal input.
    """
    l = np.log(as_matrix(a))
    res = float(reciprocity_residual(l))
    if res > tol:
        raise ValidationError(f"kii needs a reciprocal matrix (reciprocity residual {res:.6g})")
    return float(kii_log(l))


def indicator_transform(v):
    """Map ``[0, inf)`` monotonically onto ``[0, 1)`` by ``1 - exp(-v)``."""
    arr = np.asarray(v, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValidationError("indicator transform needs non-negative input")
    out = -np.expm1(-arr)
    return float(out) if out.ndim == 0 else out


def residual_log(l: np.ndarray, target: str) -> np.ndarray:
    """``L - P_target(L)`` for the distance targets, batched."""
    if target == "PC":
        return sym(l)
    if target == "CPC":
        return l - consistent_log_projection(l)
    if target == "CM":
        return l - cm_log_projection(l)
    raise ValidationError(f"unknown distance target {target!r}")


def distance_log(l: np.ndarray, spec: IndexSpec) -> np.ndarray:
    r = residual_log(l, spec.target)
    d = np.sqrt(np.sum(r * r, axis=(-2, -1)))
    v = d**spec.gamma
    return -np.expm1(-v) if spec.indicator else v


def distance_index(a, spec: IndexSpec) -> float:
    """``d(a, target)^gamma`` in the log-Euclidean metric, optionally bounded."""
    if spec.kind != "dist":
        raise ValidationError("distance_index needs an IndexSpec with kind='dist'")
    return float(distance_log(np.log(as_matrix(a)), spec))


def index_values_log(l: np.ndarray, spec: IndexSpec, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evaluate ``spec`` on a stack of log matrices of shape (m, n, n).

    Raises:
        ValidationError: naming the first sample that is not reciprocal when
            the index requires it.
    """
    if spec.kind == "kii":
        res = reciprocity_residual(l)
        bad = np.flatnonzero(res > tol)
        if bad.size:
            k = int(bad[0])
            raise ValidationError(f"sample {k}: kii needs a reciprocal matrix (residual {res[k]:.6g})")
        return kii_log(l)
    return distance_log(l, spec)


def evaluate_index(a, spec: IndexSpec) -> float:
    if spec.kind == "kii":
        return kii_matrix(a)
    return distance_index(a, spec)


def index_gradient_log(l: np.ndarray, spec: IndexSpec) -> np.ndarray:
    """Gradient of a distance index with respect to the log coordinates.

    For ``D = ||L - P(L)||`` the gradient of ``D^2`` is ``2 (L - P(L))``
    because ``I - P`` is an orthogonal projector.
    """
    if spec.kind != "dist":
        raise ValidationError("only distance indices are differentiable")
    r = residual_log(l, spec.target)
    d2 = float(np.sum(r * r))
    if d2 == 0.0:
        return np.zeros_like(r)
    g = spec.gamma * d2 ** (spec.gamma / 2 - 1) * r
    if spec.indicator:
        g = g * math.exp(-(d2 ** (spec.gamma / 2)))
    return g
