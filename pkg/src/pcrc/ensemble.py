"""Random PC matrices as weighted empirical ensembles.

An :class:`Ensemble` is a finite probability measure on positive matrices.
Every operation used downstream (pushforward, multiplicative expectation,
stochastic indices, transport to a point mass) is exact on such measures.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .core import DEFAULT_TOL, FLAGS, as_matrix, class_residuals
from .errors import ComputationError, PCError, ValidationError
from .indices import IndexSpec, index_values_log

WEIGHT_TOL = 1e-9


def worker_count() -> int:
    """Thread cap from ``PCRC_THREADS`` (default 1, i.e. sequential)."""
    raw = os.environ.get("PCRC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"PCRC_THREADS must be an integer, got {raw!r}") from None


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Weighted sample ``{(p_k, A_k)}`` of positive ``n x n`` matrices."""

    weights: np.ndarray
    matrices: np.ndarray
    seed: int | None = None
    law: dict | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        mats = np.array(self.matrices, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValidationError(f"ensemble matrices must have shape (m, n, n), got {mats.shape}")
        if w.shape[0] != mats.shape[0] or w.shape[0] == 0:
            raise ValidationError("ensemble needs one positive weight per sample and at least one sample")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValidationError("ensemble weights must be positive and finite")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"ensemble weights sum to {w.sum()!r}, not 1")
        bad = ~np.isfinite(mats) | (mats <= 0)
        if np.any(bad):
            k = int(np.argwhere(bad)[0][0])
            raise ValidationError(f"sample {k} has a non-positive or non-finite entry")
        as_matrix(mats[0], "sample 0")  # dimension bounds
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "matrices", _frozen(mats))

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    @property
    def m(self) -> int:
        return self.matrices.shape[0]

    def __len__(self) -> int:
        return self.m

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        for w, a in zip(self.weights, self.matrices):
            yield float(w), a

    def logs(self) -> np.ndarray:
        return np.log(self.matrices)

    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


def uniform(matrices, **kwargs) -> Ensemble:
    mats = np.asarray(matrices, dtype=float)
    return Ensemble(np.full(mats.shape[0], 1.0 / mats.shape[0]), mats, **kwargs)


def make_dirac(a) -> Ensemble:
    a = as_matrix(a)
    return Ensemble(np.ones(1), a[None, :, :], provenance={"support": "dirac"})


def mixture(parts) -> Ensemble:
    """Convex combination ``sum t_i X_i`` of ensembles given as ``(t_i, X_i)`` pairs."""
    parts = list(parts)
    ts = np.array([t for t, _ in parts], dtype=float)
    if np.any(ts <= 0) or abs(ts.sum() - 1.0) > WEIGHT_TOL:
        raise ValidationError("mixture coefficients must be positive and sum to 1")
    ns = {x.n for _, x in parts}
    if len(ns) != 1:
        raise ValidationError("mixture components have different dimensions")
    w = np.concatenate([t * x.weights for t, x in parts])
    mats = np.concatenate([x.matrices for _, x in parts])
    return Ensemble(w / w.sum(), mats, provenance={"mixture": len(parts)})


@dataclass(frozen=True)
class LawSpec:
    """Sampling law around a base matrix.

    ``lognormal`` perturbs off-diagonal log-entries by ``N(0, dispersion^2)``;
    ``uniform_additive`` adds ``U(-dispersion, dispersion)`` to off-diagonal
    entries and redraws non-positive results. With ``coupling="reciprocal"``
    only the upper triangle is drawn and the lower entries are set to exact
    reciprocals.
    """

    law: str
    base: np.ndarray
    dispersion: float
    count: int
    seed: int
    coupling: str = "independent"

    def __post_init__(self):
        if self.law not in ("lognormal", "uniform_additive"):
            raise ValidationError(f"unknown law {self.law!r}; expected lognormal or uniform_additive")
        if self.coupling not in ("independent", "reciprocal"):
            raise ValidationError(f"unknown coupling {self.coupling!r}")
        if not (self.dispersion > 0 and np.isfinite(self.dispersion)):
            raise ValidationError("dispersion (sigma / halfwidth) must be positive")
        if int(self.count) != self.count or self.count < 1:
            raise ValidationError("count must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "base", as_matrix(self.base, "base"))

    def describe(self) -> dict:
        key = "sigma" if self.law == "lognormal" else "halfwidth"
        return {"law": self.law, key: float(self.dispersion), "count": int(self.count), "coupling": self.coupling}


def _draw_uniform(rng: np.random.Generator, centre: np.ndarray, h: float) -> tuple[np.ndarray, int]:
    vals = centre + rng.uniform(-h, h, size=centre.shape)
    redraws = 0
    bad = vals <= 0
    while np.any(bad):
        k = int(bad.sum())
        redraws += k
        vals[bad] = centre[bad] + rng.uniform(-h, h, size=k)
        bad = vals <= 0
    return vals, redraws


def sample_ensemble(spec: LawSpec) -> Ensemble:
    """Draw ``spec.count`` equally weighted samples; bit-reproducible per seed."""
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    base = spec.base
    n = base.shape[0]
    m = int(spec.count)
    if spec.coupling == "reciprocal":
        i, j = np.triu_indices(n, 1)
    else:
        i, j = np.nonzero(~np.eye(n, dtype=bool))
    centre = np.broadcast_to(base[i, j], (m, i.size))
    redraws = 0
    if spec.law == "lognormal":
        with np.errstate(over="ignore", under="ignore"):
            vals = np.exp(np.log(centre) + rng.normal(0.0, spec.dispersion, size=centre.shape))
    else:
        vals, redraws = _draw_uniform(rng, np.array(centre), spec.dispersion)
    mats = np.broadcast_to(base, (m, n, n)).copy()
    mats[:, i, j] = vals
    if spec.coupling == "reciprocal":
        with np.errstate(over="ignore", divide="ignore"):
            mats[:, j, i] = 1.0 / vals
    bad = ~np.isfinite(mats) | (mats <= 0)
    if np.any(bad):
        k = int(np.argwhere(bad)[0][0])
        raise ComputationError(f"sample {k}: draw overflowed or underflowed float64")
    law = spec.describe()
    if spec.law == "uniform_additive":
        law["redraws"] = redraws
    return Ensemble(np.full(m, 1.0 / m), mats, seed=int(spec.seed), law=law)


def _map_samples(fn: Callable, mats: np.ndarray) -> list:
    workers = worker_count()
    if workers > 1 and len(mats) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, mats))
    return [fn(a) for a in mats]


def pushforward(x: Ensemble, fn: Callable) -> Ensemble:
    """Image measure of ``x`` under a matrix-to-matrix map, weights unchanged."""

    def apply(item):
        k, a = item
        try:
            return fn(a)
        except PCError as exc:
            raise type(exc)(f"sample {k}: {exc}") from exc

    images = _map_samples(apply, list(enumerate(x.matrices)))
    prov = dict(x.provenance)
    prov.pop("support", None)
    return Ensemble(x.weights.copy(), np.stack(images), seed=x.seed, law=x.law, provenance=prov)


def lift_inclusion(x: Ensemble, flag: str, tol: float = DEFAULT_TOL) -> Ensemble:
    """Pull ``x`` back along the inclusion of the subset named by ``flag``.

    The data are unchanged; the ensemble is tagged with its support class.

    Raises:
        ValidationError: naming the first sample outside the subset.
    """
    if flag not in FLAGS:
        raise ValidationError(f"unknown support flag {flag!r}")
    res = class_residuals(x.logs())[flag]
    bad = np.flatnonzero(res > tol)
    if bad.size:
        k = int(bad[0])
        raise ValidationError(f"sample {k} is not {flag.replace('_', ' ')} (residual {res[k]:.6g} > {tol:g})")
    return replace(x, provenance={**x.provenance, "support": flag})


def expectation_mult(x: Ensemble) -> np.ndarray:
    """Entrywise weighted geometric mean ``exp(sum_k p_k log A_k)``."""
    if x.m == 1:
        return np.array(x.matrices[0])
    return np.exp(np.tensordot(x.weights, x.logs(), axes=1))


def index_values(x: Ensemble, spec: IndexSpec) -> np.ndarray:
    return index_values_log(x.logs(), spec)


def stochastic_index(x: Ensemble, spec: IndexSpec) -> float:
    """``sum_k p_k i(A_k)``; reduces to ``i(A)`` on a point mass."""
    vals = index_values(x, spec)
    if x.m == 1:
        return float(vals[0])
    return float(np.sum(x.weights * vals))


def best_sample(x: Ensemble, spec: IndexSpec) -> Ensemble:
    """Minimize the stochastic index over mixtures of the samples of ``x``.

    The objective is linear in the mixture weights, so the optimum is the
    point mass at the best sample.
    """
    vals = index_values(x, spec)
    return make_dirac(x.matrices[int(np.argmin(vals))])


def _weighted_cut(values: np.ndarray, weights: np.ndarray, tail: float) -> tuple[float, float]:
    """Bounds [lo, hi] dropping at most ``tail`` mass strictly outside on each side."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    before = np.concatenate([[0.0], np.cumsum(w)[:-1]])
    after = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    lo_idx = int(np.flatnonzero(before <= tail)[-1])
    hi_idx = int(np.flatnonzero(after <= tail)[0])
    return float(v[lo_idx]), float(v[hi_idx])


def truncate_support(x: Ensemble, epsilon: float) -> Ensemble:
    """Restrict ``x`` to a per-entry log-quantile box and renormalize.

    Each of the ``n^2`` coordinates loses at most ``epsilon / n^2`` of mass, so
    the retained mass is at least ``1 - epsilon``. The log box and the
    retained mass are stored in ``provenance``.
    """
    if not 0 < epsilon < 1:
        raise ValidationError("epsilon must lie in (0, 1)")
    n = x.n
    alpha = epsilon / n**2
    logs = x.logs()
    lo = np.empty((n, n))
    hi = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            lo[i, j], hi[i, j] = _weighted_cut(logs[:, i, j], x.weights, alpha / 2)
    keep = np.all((logs >= lo) & (logs <= hi), axis=(1, 2))
    if not np.any(keep):
        raise ValidationError("truncation removed every sample")
    w = x.weights[keep]
    mass = float(w.sum())
    prov = {**x.provenance, "box_lo": lo, "box_hi": hi, "retained_mass": mass, "epsilon": float(epsilon)}
    return Ensemble(w / mass, x.matrices[keep], seed=x.seed, law=x.law, provenance=prov)
