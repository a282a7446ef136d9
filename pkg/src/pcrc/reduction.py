"""Inconsistency reduction: index minimization and transport de-randomization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize

from .core import DEFAULT_TOL, as_matrix, require_flag, sign_matrix
from .ensemble import Ensemble, truncate_support
from .errors import ComputationError, ValidationError
from .indices import IndexSpec, index_gradient_log, index_values_log
from .projections import TARGETS, target_flag, target_log_projection

MAX_ASSIGNMENT = 512
BOX_SLACK = 1e-12  # log-space rounding allowance when testing box exit
BOX_FEASIBLE = 1e-9  # Dykstra residual below which target and box are taken to meet
ZERO_INDEX = 1e-12  # starts at or below this index value are returned unchanged


@dataclass(frozen=True)
class OptimizerConfig:
    method: str | None = None  # None picks by index smoothness
    max_iters: int = 2000
    f_tol: float = 1e-12
    x_tol: float = 1e-10
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.method not in (None, "nelder_mead", "projected_gradient"):
            raise ValidationError(f"unknown optimizer method {self.method!r}")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValidationError("max_iters and restarts must be at least 1")
        if not (self.f_tol > 0 and self.x_tol > 0):
            raise ValidationError("tolerances must be positive")


def chart_basis(n: int, constraint: str) -> np.ndarray:
    """Orthonormal basis (columns, flattened n*n) of the log-space chart of ``constraint``.

    M uses all n^2 coordinates, PC the skew matrices, CPC the consistent
    matrices ``u_i - u_j`` and CM pairs of consistent potentials
    ``(u_i - u_j) + sign(i - j) (v_i - v_j)``.
    """
    c = constraint.upper()
    cols = []
    if c == "M":
        return np.eye(n * n)
    if c == "PC":
        for i in range(n):
            for j in range(i + 1, n):
                e = np.zeros((n, n))
                e[i, j], e[j, i] = 1.0, -1.0
                cols.append(e.ravel())
    elif c in ("CPC", "CM"):
        eps = sign_matrix(n)
        for k in range(n - 1):
            u = np.zeros(n)
            u[k] = 1.0
            diff = u[:, None] - u[None, :]
            cols.append(diff.ravel())
            if c == "CM":
                cols.append((eps * diff).ravel())
    else:
        raise ValidationError(f"unknown constraint {constraint!r}; expected one of {', '.join(TARGETS)}")
    q, _ = np.linalg.qr(np.array(cols).T)
    return q


def _objective(spec: IndexSpec, basis: np.ndarray, n: int):
    def f(theta):
        l = (basis @ theta).reshape(n, n)
        return float(index_values_log(l[None], spec)[0])

    def grad(theta):
        l = (basis @ theta).reshape(n, n)
        return basis.T @ index_gradient_log(l, spec).ravel()

    return f, grad


def _projected_gradient(f, grad, theta0, cfg: OptimizerConfig):
    theta = np.array(theta0, dtype=float)
    val = f(theta)
    for _ in range(cfg.max_iters):
        g = grad(theta)
        gn2 = float(g @ g)
        if gn2 == 0.0 or not np.isfinite(gn2):
            break
        step = 1.0
        # Armijo backtracking
        while step > 1e-16:
            cand = theta - step * g
            cval = f(cand)
            if cval <= val - 1e-4 * step * gn2:
                break
            step *= 0.5
        else:
            break
        moved = step * np.sqrt(gn2)
        drop = val - cval
        theta, val = cand, cval
        if moved < cfg.x_tol or drop < cfg.f_tol * max(1.0, abs(val)) or val == 0.0:
            break
    return theta, val


def _nelder_mead(f, theta0, cfg: OptimizerConfig):
    res = minimize(
        f,
        theta0,
        method="Nelder-Mead",
        options={"maxiter": cfg.max_iters, "xatol": cfg.x_tol, "fatol": cfg.f_tol, "adaptive": True},
    )
    return np.asarray(res.x, dtype=float), float(res.fun)


def minimize_index(spec: IndexSpec, constraint: str, start, cfg: OptimizerConfig | None = None) -> np.ndarray:
    """Minimize a deterministic index over the constraint set's log chart.

    Returns the best point found across restarts; never worse than ``start``.

    Raises:
        ValidationError: if ``start`` violates the constraint or the index is
            not defined on the constraint set.
        ComputationError: if the objective becomes non-finite.
    """
    cfg = cfg or OptimizerConfig()
    a = as_matrix(start, "start")
    n = a.shape[0]
    constraint = constraint.upper()
    basis = chart_basis(n, constraint)
    flag = target_flag(constraint)
    if flag is not None:
        require_flag(a, flag, DEFAULT_TOL, "start")
    if spec.needs_reciprocal and constraint not in ("PC", "CPC"):
        raise ValidationError("kii is only defined on reciprocal matrices; use constraint PC or CPC")
    l0 = np.log(a)
    theta0 = basis.T @ l0.ravel()
    f, grad = _objective(spec, basis, n)
    # keep the exact start (the chart reconstruction may differ by rounding)
    start_val = float(index_values_log(l0[None], spec)[0])
    if start_val <= ZERO_INDEX:
        return a
    method = cfg.method or ("projected_gradient" if spec.smooth else "nelder_mead")
    rng = np.random.default_rng(cfg.seed)
    best_theta, best_val = None, start_val
    for r in range(cfg.restarts):
        init = theta0 if r == 0 else theta0 + rng.normal(0.0, 0.1, size=theta0.shape)
        if method == "projected_gradient":
            theta, val = _projected_gradient(f, grad, init, cfg)
        else:
            theta, val = _nelder_mead(f, init, cfg)
        if not np.isfinite(val):
            raise ComputationError(f"objective became non-finite on restart {r}")
        if val < best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        return a
    return np.exp((basis @ best_theta).reshape(n, n))


def mean_log(x: Ensemble) -> np.ndarray:
    return np.tensordot(x.weights, x.logs(), axes=1)


def frechet_mean_log(x: Ensemble, target: str) -> np.ndarray:
    """Closed-form minimizer of ``sum_k p_k d(A_k, C)^2`` over ``C`` in ``target``."""
    return np.exp(target_log_projection(mean_log(x), target))


def w2_to_dirac(x: Ensemble, c) -> float:
    """Wasserstein-2 distance from ``x`` to the point mass at ``c``."""
    c = as_matrix(c)
    if c.shape[0] != x.n:
        raise ValidationError(f"dimension mismatch: ensemble n={x.n}, matrix n={c.shape[0]}")
    diff = x.logs() - np.log(c)
    d2 = np.sum(diff * diff, axis=(1, 2))
    return float(np.sqrt(np.sum(x.weights * d2)))


def pairwise_sq_log_distances(x: Ensemble, y: Ensemble) -> np.ndarray:
    lx = x.logs().reshape(x.m, -1)
    ly = y.logs().reshape(y.m, -1)
    d2 = np.empty((x.m, y.m))
    for i in range(x.m):
        diff = ly - lx[i]
        d2[i] = np.einsum("ij,ij->i", diff, diff)
    return d2


def w2_assignment(x: Ensemble, y: Ensemble) -> float:
    """Exact W2 between two uniform ensembles of equal size by optimal assignment."""
    if x.n != y.n:
        raise ValidationError("ensembles have different dimensions")
    if x.m != y.m:
        raise ValidationError(f"ensembles have different sizes ({x.m} vs {y.m})")
    if x.m > MAX_ASSIGNMENT:
        raise ValidationError(f"assignment limited to {MAX_ASSIGNMENT} samples")
    if not (x.is_uniform() and y.is_uniform()):
        raise ValidationError("w2_assignment needs uniformly weighted ensembles")
    cost = pairwise_sq_log_distances(x, y)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum() / x.m))


@dataclass(frozen=True, eq=False)
class TransportResult:
    minimizer: np.ndarray
    w2: float
    retained_mass: float
    box_lo: np.ndarray
    box_hi: np.ndarray
    clipped: bool
    frechet_mean: np.ndarray
    target: str
    box_violation: float = 0.0

    def as_dict(self) -> dict:
        return {
            "minimizer": self.minimizer,
            "w2": self.w2,
            "retained_mass": self.retained_mass,
            "box": {"lo": self.box_lo, "hi": self.box_hi},
            "clipped": self.clipped,
            "box_violation": self.box_violation,
            "frechet_mean": self.frechet_mean,
            "target": self.target,
        }


def _fit_into_box(l: np.ndarray, lo: np.ndarray, hi: np.ndarray, target: str, iters: int = 20000) -> tuple[np.ndarray, float]:
    """Nearest point to ``l`` in target-subspace ∩ box, by Dykstra's alternating projections.

    Returns the point (always in the target subspace) and its largest box violation,
    which stays positive when the two sets do not meet.
    """
    x = l
    p = np.zeros_like(l)
    for _ in range(iters):
        y = np.clip(x + p, lo, hi)
        p = x + p - y
        nxt = target_log_projection(y, target)
        step = float(np.max(np.abs(nxt - x)))
        x = nxt
        if step < 1e-14:
            break
    gap = float(max(np.max(lo - x), np.max(x - hi), 0.0))
    return x, gap


def derandomize_transport(x: Ensemble, target: str, epsilon: float) -> TransportResult:
    """Truncate ``x`` to a box and find the closest point mass in ``target``.

    The closest point is the Fréchet mean of the truncated ensemble. When it
    leaves the box it is replaced by the nearest target point inside the box
    (``clipped`` is set). If no target point lies in the box the Fréchet mean
    is kept and ``box_violation`` reports how far it sits outside.
    """
    target = target.upper()
    if target not in TARGETS:
        raise ValidationError(f"unknown target {target!r}")
    t = truncate_support(x, epsilon)
    lo, hi = t.provenance["box_lo"], t.provenance["box_hi"]
    mean = target_log_projection(mean_log(t), target)
    outside = bool(np.any(mean < lo - BOX_SLACK) or np.any(mean > hi + BOX_SLACK))
    best, gap = mean, 0.0
    if outside:
        fitted, fit_gap = _fit_into_box(mean, lo, hi, target)
        if fit_gap <= BOX_FEASIBLE:
            best = fitted
        else:
            # the box holds no point of the target: keep the unconstrained optimum
            outside = False
            gap = float(max(np.max(lo - mean), np.max(mean - hi)))
    minimizer = np.exp(best)
    return TransportResult(
        minimizer=minimizer,
        w2=w2_to_dirac(t, minimizer),
        retained_mass=t.provenance["retained_mass"],
        box_lo=lo,
        box_hi=hi,
        clipped=outside,
        frechet_mean=np.exp(mean),
        target=target,
        box_violation=gap,
    )

