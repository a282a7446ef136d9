"""Invariant and diagram checks run by ``pcrc check`` on user data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import classify, gauge_action, log_distance, phi_split, phi_unsplit, skew, sym
from .ensemble import Ensemble, expectation_mult, make_dirac, pushforward, stochastic_index
from .indices import IndexSpec, distance_index, evaluate_index, kii_matrix
from .projections import (
    gmm_project,
    matrix_from_weights,
    project_cm,
    project_consistent_log,
    project_reciprocal,
    project_symmetric,
    weights_from_consistent,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} {self.value:.3e} <= {self.tol:.0e}"


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.abs(b)))


def matrix_checks(a: np.ndarray, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    l = np.log(a)
    pc = project_reciprocal(a)
    nr = project_symmetric(a)
    cpc = gmm_project(pc)
    cm = project_cm(a)
    out = [
        CheckResult("decomposition pc*nr = a", _rel(pc * nr, a), 1e-12),
        CheckResult("log pc = skew part", float(np.max(np.abs(np.log(pc) - skew(l)))), 1e-13),
        CheckResult("log nr = symmetric part", float(np.max(np.abs(np.log(nr) - sym(l)))), 1e-13),
        CheckResult("idempotent pc", _rel(project_reciprocal(pc), pc), 1e-12),
        CheckResult("idempotent nr", _rel(project_symmetric(nr), nr), 1e-12),
        CheckResult("idempotent gmm", _rel(gmm_project(cpc), cpc), 1e-12),
        CheckResult(
            "idempotent consistent log",
            float(np.max(np.abs(project_consistent_log(project_consistent_log(l)) - project_consistent_log(l)))),
            1e-12,
        ),
        CheckResult("idempotent cm", _rel(project_cm(cm), cm), 1e-12),
        CheckResult("cm output is consistent", classify(cm).consistent_general_residual, 1e-9),
        CheckResult("diagram gmm.pc = pc.cm", log_distance(cpc, project_reciprocal(cm)), 1e-9),
        CheckResult("phi round trip", _rel(phi_unsplit(phi_split(a)), a), 1e-12),
        CheckResult("weights round trip", _rel(matrix_from_weights(weights_from_consistent(cpc)), cpc), 1e-9),
    ]
    g = np.exp(rng.normal(size=n))
    out.append(
        CheckResult(
            "gauge actions keep reciprocity",
            max(classify(gauge_action(mode, g, pc)).reciprocal_residual for mode in ("L", "R", "Ad")),
            1e-12,
        )
    )
    spec = IndexSpec("dist", "CPC")
    moved = gauge_action("Ad", g, pc)
    out.append(CheckResult("kii Ad-invariant", abs(kii_matrix(moved) - kii_matrix(pc)), 1e-10))
    out.append(CheckResult("dist(CPC) Ad-invariant", abs(distance_index(moved, spec) - distance_index(pc, spec)), 1e-10))
    dirac = make_dirac(a)
    out.append(
        CheckResult(
            "dirac restriction",
            abs(stochastic_index(dirac, spec) - evaluate_index(a, spec)),
            0.0,
        )
    )
    return out


def ensemble_checks(x: Ensemble) -> list[CheckResult]:
    pcx = pushforward(x, project_reciprocal)
    e = expectation_mult(pcx)
    out = [
        CheckResult("expectation fibration", log_distance(expectation_mult(pushforward(pcx, gmm_project)), gmm_project(e)), 1e-10),
        CheckResult(
            "pushforward functoriality",
            float(np.max(np.abs(pushforward(x, lambda a: gmm_project(project_reciprocal(a))).matrices - pushforward(pcx, gmm_project).matrices))),
            0.0,
        ),
        CheckResult("weights sum to one", abs(float(np.sum(x.weights)) - 1.0), 1e-9),
    ]
    return out
