"""Plug-in standardization and inverse-odds weighting on observed counts.

All nuisance probabilities are saturated cell frequencies, so each weighting
estimator equals its marginalization twin up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PositivityError
from .table import ContingencyTable

TRIAL_PARTICIPATION = "trial participation"
TREATMENT = "treatment"


@dataclass(frozen=True)
class Violation:
    x: int | None
    condition: str
    message: str


@dataclass(frozen=True)
class PositivityReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "positivity holds"
        return "\n".join(v.message for v in self.violations)


def _check_level(table: ContingencyTable, a: int, name: str = "a") -> None:
    if not 0 <= a < table.n_a:
        raise ValueError(f"treatment level {name}={a} out of range (table has {table.n_a} levels)")


def stratum_risks(table: ContingencyTable) -> dict[tuple[int, int, int], float]:
    """Outcome risk per nonempty ``(x, s, a)`` stratum."""
    out = {}
    c = table.counts
    for s in range(2):
        for x in range(table.n_x):
            for a in range(table.n_a):
                n = c[s, x, a].sum()
                if n:
                    out[x, s, a] = c[s, x, a, 1] / n
    return out


def check_positivity(table: ContingencyTable, a: int, a_prime: int | None = None,
                     estimand: str = "beta") -> PositivityReport:
    """List the covariate levels where the requested estimator cannot run.

    For ``beta`` the target is all of S=0; for ``phi`` it is the S=0 users
    of ``a_prime``.
    """
    if estimand not in ("beta", "phi"):
        raise ValueError(f"estimand must be 'beta' or 'phi', got {estimand!r}")
    if estimand == "phi" and a_prime is None:
        raise ValueError("phi needs a_prime")
    _check_level(table, a)
    c = table.counts
    if estimand == "beta":
        target = c[0].sum(axis=(1, 2))
        label = "S=0"
    else:
        _check_level(table, a_prime, "a_prime")
        target = c[0, :, a_prime].sum(axis=-1)
        label = f"S=0, A={a_prime}"
    trial = c[1].sum(axis=(1, 2))
    arm = c[1, :, a].sum(axis=-1)

    found = []
    if target.sum() == 0:
        found.append(Violation(None, TRIAL_PARTICIPATION, f"target subset ({label}) is empty"))
    for x in np.flatnonzero(target > 0):
        x = int(x)
        if trial[x] == 0:
            found.append(Violation(x, TRIAL_PARTICIPATION,
                                   f"x={x}: present in target ({label}) but no trial records"))
        elif arm[x] == 0:
            found.append(Violation(x, TREATMENT,
                                   f"x={x}: present in target ({label}) but trial arm a={a} is empty"))
    return PositivityReport(tuple(found))


def _require(table, a, a_prime, estimand):
    report = check_positivity(table, a, a_prime, estimand)
    if not report.ok:
        raise PositivityError(f"{estimand}: {report}", report.violations)


def _standardize(table: ContingencyTable, a: int, target: np.ndarray) -> float:
    arm = table.counts[1, :, a]
    n = arm.sum(axis=-1)
    risk = np.divide(arm[:, 1], n, out=np.zeros(len(n)), where=n > 0)
    return float(np.sum(risk * target) / target.sum())


def standardize_phi(table: ContingencyTable, a: int, a_prime: int) -> float:
    """Trial arm ``a`` risks averaged over the covariates of S=0 users of ``a_prime``."""
    _require(table, a, a_prime, "phi")
    return _standardize(table, a, table.counts[0, :, a_prime].sum(axis=-1))


def standardize_beta(table: ContingencyTable, a: int) -> float:
    """Trial arm ``a`` risks averaged over the covariates of the whole S=0 sample."""
    _require(table, a, None, "beta")
    return _standardize(table, a, table.counts[0].sum(axis=(1, 2)))


def _weighted_mean(table: ContingencyTable, a: int, target_x: np.ndarray) -> float:
    """Sum of y times inverse-odds weight over trial arm ``a`` records.

    ``target_x`` holds the per-x counts of the target subset; the weight is
    Pr(target | x) / (Pr(S=1 | x) Pr(A=a | x, S=1)) and the sum is divided
    by the size of the target subset.
    """
    c = table.counts
    n_x = c.sum(axis=(0, 2, 3)).astype(float)
    n_trial_x = c[1].sum(axis=(1, 2)).astype(float)
    n_arm_x = c[1, :, a].sum(axis=-1).astype(float)
    total = 0.0
    for x in range(table.n_x):
        if n_arm_x[x] == 0:
            continue
        p_target = target_x[x] / n_x[x]
        p_trial = n_trial_x[x] / n_x[x]
        p_arm = n_arm_x[x] / n_trial_x[x]
        if p_trial == 0 or p_arm == 0:
            raise PositivityError(f"zero empirical probability in weight denominator at x={x}")
        weight = p_target / (p_trial * p_arm)
        total += c[1, x, a, 1] * weight
    return total / target_x.sum()


def weight_phi(table: ContingencyTable, a: int, a_prime: int) -> float:
    """Inverse-odds weighting form of :func:`standardize_phi`."""
    _require(table, a, a_prime, "phi")
    return _weighted_mean(table, a, table.counts[0, :, a_prime].sum(axis=-1).astype(float))


def weight_beta(table: ContingencyTable, a: int) -> float:
    """Inverse-odds weighting form of :func:`standardize_beta`."""
    _require(table, a, None, "beta")
    return _weighted_mean(table, a, table.counts[0].sum(axis=(1, 2)).astype(float))


ESTIMATORS = {
    ("phi", "standardize"): standardize_phi,
    ("phi", "weight"): weight_phi,
    ("beta", "standardize"): standardize_beta,
    ("beta", "weight"): weight_beta,
}


def standardized_standard_error(table: ContingencyTable, a: int, target_x: np.ndarray,
                                risk_x: np.ndarray | None = None) -> float:
    """Binomial standard error of a standardized mean with the weights held fixed.

    ``risk_x`` defaults to the empirical arm-``a`` risks; pass the true
    risks to get the sampling SE around a known value.
    """
    arm = table.counts[1, :, a]
    n = arm.sum(axis=-1).astype(float)
    if risk_x is None:
        risk_x = np.divide(arm[:, 1], n, out=np.zeros(len(n)), where=n > 0)
    w = np.asarray(target_x, dtype=float) / np.sum(target_x)
    terms = np.divide(w ** 2 * risk_x * (1 - risk_x), n, out=np.zeros(len(n)), where=n > 0)
    return float(np.sqrt(terms.sum()))
