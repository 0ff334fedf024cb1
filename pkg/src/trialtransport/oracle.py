"""Exact counterfactual and observed-law quantities from a fully known model.

The counterfactual means use the outcome CPT with treatment overwritten,
averaged over the factual law of everything else (U included). That is
valid because the outcome's own noise is independent of its parents and of
every other variable's noise; it requires that no parent of the outcome is
itself affected by treatment.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PositivityError
from .scm import JointDistribution, Scm, _expand, enumerate_joint

IDENTITY_TOL = 1e-12


def _joint(scm: Scm, joint: JointDistribution | None) -> JointDistribution:
    if joint is None:
        scm.check()
        joint = enumerate_joint(scm)
    return joint


def _outcome_mean_under(scm: Scm, joint: JointDistribution, a: int) -> np.ndarray:
    """E[Y^a | all variables], broadcast over the joint's axes."""
    y_name, a_name = scm.role("y"), scm.role("a")
    y = scm.variable(y_name)
    n_a = scm.variable(a_name).levels
    if not 0 <= a < n_a:
        raise ValueError(f"treatment level {a} out of range (A has {n_a} levels)")
    mediators = set(y.parents) & scm.descendants(a_name)
    if mediators:
        raise ValueError(f"outcome parents {sorted(mediators)} are affected by treatment; "
                         "counterfactual means through mediators are not supported")
    table = scm.cpt_array(y_name)[..., 1]
    parents = list(y.parents)
    if a_name in parents:
        table = np.take(table, a, axis=parents.index(a_name))
        parents.remove(a_name)
    axes = [joint.axis(p) for p in parents]
    if not axes:
        return np.full([1] * len(joint.names), float(table))
    return _expand(table, axes, len(joint.names))


def _conditional_mean(joint: JointDistribution, values: np.ndarray, event: dict[str, int],
                      what: str) -> float:
    index = tuple(event.get(n, slice(None)) for n in joint.names)
    mask = np.zeros(joint.probs.shape, dtype=bool)
    mask[index] = True
    mass = joint.probs * mask
    total = mass.sum()
    if total <= 0:
        raise PositivityError(f"{what}: conditioning event {event} has probability zero")
    return float((mass * values).sum() / total)


def beta(scm: Scm, a: int, joint: JointDistribution | None = None) -> float:
    """Counterfactual outcome mean under treatment ``a`` in the target population."""
    joint = _joint(scm, joint)
    m = _outcome_mean_under(scm, joint, a)
    return _conditional_mean(joint, m, {scm.role("s"): 0}, "beta")


def gamma(scm: Scm, a: int, a_prime: int, joint: JointDistribution | None = None) -> float:
    """Counterfactual outcome mean under ``a`` among target-population users of ``a_prime``."""
    joint = _joint(scm, joint)
    m = _outcome_mean_under(scm, joint, a)
    return _conditional_mean(joint, m, {scm.role("s"): 0, scm.role("a"): a_prime}, "gamma")


def observed_mean(scm: Scm, event: dict[str, int], joint: JointDistribution | None = None) -> float:
    """E[Y | event] from the observational law."""
    joint = _joint(scm, joint)
    y_axis = joint.axis(scm.role("y"))
    y_vals = np.arange(2).reshape([-1 if i == y_axis else 1 for i in range(len(joint.names))])
    return _conditional_mean(joint, y_vals.astype(float), event, "observed mean")


def _observed_sxay(scm: Scm, joint: JointDistribution) -> np.ndarray:
    return joint.marginal([scm.role(r) for r in ("s", "x", "a", "y")])


def _standardize(m: np.ndarray, a: int, weights: np.ndarray, what: str) -> float:
    """Trial arm-``a`` risks averaged over the covariate weights."""
    trial = m[1, :, a, :]
    support = trial.sum(axis=1)
    bad = np.flatnonzero((weights > 0) & (support <= 0))
    if bad.size:
        raise PositivityError(f"{what}: no trial support in arm a={a} for x={bad.tolist()}",
                              [int(x) for x in bad])
    if weights.sum() <= 0:
        raise PositivityError(f"{what}: target subset is empty")
    risk = np.divide(trial[:, 1], support, out=np.zeros_like(support), where=support > 0)
    return float(risk @ (weights / weights.sum()))


def phi_param(scm: Scm, a: int, a_prime: int, joint: JointDistribution | None = None) -> float:
    """Trial arm ``a`` standardized to the covariates of target users of ``a_prime``."""
    joint = _joint(scm, joint)
    m = _observed_sxay(scm, joint)
    return _standardize(m, a, m[0, :, a_prime, :].sum(axis=-1), "phi")


def standardized_beta(scm: Scm, a: int, joint: JointDistribution | None = None) -> float:
    """Observed-law functional that identifies ``beta(a)``: standardize to all of S=0."""
    joint = _joint(scm, joint)
    m = _observed_sxay(scm, joint)
    return _standardize(m, a, m[0].sum(axis=(1, 2)), "standardized beta")


@dataclass(frozen=True)
class IdentificationCheck:
    passed: bool
    residual: float
    counterfactual: float
    observed: float


def verify_identification(scm: Scm, a: int, tol: float = IDENTITY_TOL) -> IdentificationCheck:
    """Compare ``beta(a)`` with its observed-data standardization formula."""
    joint = _joint(scm, None)
    cf = beta(scm, a, joint)
    obs = standardized_beta(scm, a, joint)
    residual = abs(cf - obs)
    return IdentificationCheck(residual <= tol, residual, cf, obs)


@dataclass(frozen=True)
class Contrast:
    first: float
    second: float
    difference: float
    ratio: float | None

    @classmethod
    def of(cls, first: float, second: float) -> Contrast:
        return cls(first, second, first - second, first / second if second > 0 else None)


@dataclass
class EstimandReport:
    """Table-2 style summary: one contrast row per quantity.

    ``a`` and ``a_ref`` are the compared treatments; ``a_prime`` is the
    treatment defining the selected target subset.
    """

    a: int
    a_ref: int
    a_prime: int
    beta: dict[int, float] = field(default_factory=dict)
    gamma: dict[tuple[int, int], float] = field(default_factory=dict)
    phi: dict[tuple[int, int], float] = field(default_factory=dict)
    rows: dict[str, Contrast] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)


def contrasts(a: int = 1, a_ref: int = 0, a_prime: int = 0, *, beta=None, gamma=None, phi=None,
              notes=None) -> EstimandReport:
    """Assemble the differences and ratios for whichever quantities are given.

    ``beta`` maps a level to a value; ``gamma`` and ``phi`` map
    ``(a, a_prime)`` pairs. Rows are ordered phi, beta, gamma.
    """
    report = EstimandReport(a, a_ref, a_prime, dict(beta or {}), dict(gamma or {}),
                            dict(phi or {}), notes=dict(notes or {}))
    if report.phi:
        report.rows["phi"] = Contrast.of(report.phi[a, a_prime], report.phi[a_ref, a_prime])
    if report.beta:
        report.rows["beta"] = Contrast.of(report.beta[a], report.beta[a_ref])
    if report.gamma:
        report.rows["gamma"] = Contrast.of(report.gamma[a, a_prime], report.gamma[a_ref, a_prime])
    return report


def oracle_report(scm: Scm, a: int = 1, a_ref: int = 0, a_prime: int = 0) -> EstimandReport:
    joint = _joint(scm, None)
    return contrasts(
        a, a_ref, a_prime,
        phi={(k, a_prime): phi_param(scm, k, a_prime, joint) for k in (a, a_ref)},
        beta={k: beta(scm, k, joint) for k in (a, a_ref)},
        gamma={(k, a_prime): gamma(scm, k, a_prime, joint) for k in (a, a_ref)},
    )
