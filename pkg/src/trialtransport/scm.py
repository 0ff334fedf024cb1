"""Discrete structural causal models: validation, exact enumeration,
do-interventions and seeded ancestral sampling.

CPT rows are listed row-major over the parents in declared order: the last
parent varies fastest, as in ``itertools.product``.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterator, Mapping, Sequence

import numpy as np

from .graph import ROLE_NAMES, Dag
from .table import ContingencyTable

NORMALIZATION_TOL = 1e-9
REQUIRED_ROLES = ("x", "s", "a", "y")
SAMPLE_CHUNK = 1 << 16

Assignment = Mapping[str, int]


class ScmError(ValueError):
    """Raised when an operation receives an invalid model."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("invalid SCM: " + "; ".join(self.violations))


@dataclass(frozen=True)
class VariableSpec:
    name: str
    levels: int
    parents: tuple[str, ...] = ()
    cpt: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "cpt", tuple(tuple(float(p) for p in row) for row in self.cpt))


@dataclass(frozen=True)
class Scm:
    variables: tuple[VariableSpec, ...]
    roles: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "roles", dict(self.roles))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(v.levels for v in self.variables)

    def variable(self, name: str) -> VariableSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(f"unknown variable {name!r}")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def role(self, role: str) -> str:
        try:
            return self.roles[role]
        except KeyError:
            raise KeyError(f"model has no variable bound to role {role!r}") from None

    def cpt_array(self, name: str) -> np.ndarray:
        """CPT as an array of shape ``(*parent_levels, levels)``."""
        v = self.variable(name)
        shape = tuple(self.variable(p).levels for p in v.parents) + (v.levels,)
        return np.asarray(v.cpt, dtype=float).reshape(shape)

    def to_dag(self) -> Dag:
        observed = {self.roles.get(r) for r in ("x", "s", "a", "y")}
        return Dag.from_edges(
            {(p, v.name) for v in self.variables for p in v.parents},
            latent={n for n in self.names if n not in observed},
            roles=self.roles,
            nodes=self.names,
        )

    def descendants(self, name: str) -> set[str]:
        out: set[str] = set()
        for v in self.variables:
            if any(p == name or p in out for p in v.parents):
                out.add(v.name)
        return out

    def replace(self, spec: VariableSpec) -> Scm:
        return Scm(tuple(spec if v.name == spec.name else v for v in self.variables), self.roles)

    def check(self, roles: bool = True) -> None:
        report = validate_scm(self, roles=roles)
        if not report.ok:
            raise ScmError(report.violations)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _format_assignment(names, values) -> str:
    return "(" + ", ".join(f"{n}={v}" for n, v in zip(names, values)) + ")" if names else "()"


def validate_scm(scm: Scm, roles: bool = True) -> ValidationReport:
    """Collect every structural, CPT and (unless ``roles=False``) role violation."""
    out: list[str] = []
    seen: dict[str, VariableSpec] = {}
    for v in scm.variables:
        if v.name in seen:
            out.append(f"duplicate variable {v.name!r}")
        seen[v.name] = v

    graph = {}
    for v in scm.variables:
        if v.levels < 2:
            out.append(f"variable {v.name!r}: levels must be >= 2, got {v.levels}")
        unknown = [p for p in v.parents if p not in seen]
        for p in unknown:
            out.append(f"variable {v.name!r}: unknown parent {p!r}")
        if len(set(v.parents)) != len(v.parents):
            out.append(f"variable {v.name!r}: repeated parent")
        graph[v.name] = [p for p in v.parents if p in seen]

    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        out.append("cycle: " + " -> ".join(reversed(exc.args[1])))
    else:
        position = {n: i for i, n in enumerate(scm.names)}
        for v in scm.variables:
            for p in graph[v.name]:
                if position[p] > position[v.name]:
                    out.append(f"variable {v.name!r} declared before its parent {p!r}")

    for v in scm.variables:
        if any(p not in seen for p in v.parents) or v.levels < 1:
            continue
        parent_levels = [seen[p].levels for p in v.parents]
        expected = int(np.prod(parent_levels)) if parent_levels else 1
        rows = list(itertools.product(*[range(k) for k in parent_levels]))
        for i, values in enumerate(rows):
            where = _format_assignment(v.parents, values)
            if i >= len(v.cpt):
                out.append(f"variable {v.name!r}: missing CPT row for parent assignment {where}")
                continue
            row = v.cpt[i]
            if len(row) != v.levels:
                out.append(f"variable {v.name!r} row {where}: expected {v.levels} "
                           f"probabilities, got {len(row)}")
                continue
            if any(not (0.0 <= p <= 1.0) for p in row):
                out.append(f"variable {v.name!r} row {where}: entries must lie in [0, 1]")
            total = sum(row)
            if abs(total - 1.0) > NORMALIZATION_TOL:
                out.append(f"variable {v.name!r} row {where}: row sums to {total:.12g}")
        if len(v.cpt) > expected:
            out.append(f"variable {v.name!r}: {len(v.cpt)} CPT rows given, expected {expected}")

    if roles:
        out.extend(_role_violations(scm, seen))
    return ValidationReport(tuple(out))


def _role_violations(scm: Scm, seen: dict[str, VariableSpec]) -> list[str]:
    out = []
    for role in scm.roles:
        if role not in ROLE_NAMES:
            out.append(f"unknown role {role!r}")
    for role in REQUIRED_ROLES:
        if role not in scm.roles:
            out.append(f"role {role!r} is not bound")
    bound = {}
    for role, name in scm.roles.items():
        if name not in seen:
            out.append(f"role {role!r} bound to unknown variable {name!r}")
        else:
            bound[role] = seen[name]
    if len(set(scm.roles.values())) != len(scm.roles):
        out.append("two roles bound to the same variable")
    for role in ("s", "y"):
        if role in bound and bound[role].levels != 2:
            out.append(f"role {role!r} variable {bound[role].name!r} must be binary")
    if "y" in bound:
        y = bound["y"].name
        for role, spec in bound.items():
            if y in spec.parents:
                out.append(f"outcome {y!r} must not be a parent of role variable {spec.name!r}")
    return out


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability mass over full assignments, one array axis per variable."""

    names: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def levels(self) -> tuple[int, ...]:
        return self.probs.shape

    def axis(self, name: str) -> int:
        return self.names.index(name)

    def prob(self, assignment: Assignment) -> float:
        """Mass of a (possibly partial) assignment."""
        index = tuple(assignment.get(n, slice(None)) for n in self.names)
        return float(self.probs[index].sum())

    def marginal(self, names: Sequence[str]) -> np.ndarray:
        """Marginal mass with axes in the order of ``names``."""
        keep = [self.axis(n) for n in names]
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        m = self.probs.sum(axis=drop)
        order = sorted(keep)
        return np.moveaxis(m, [order.index(k) for k in keep], range(len(keep)))

    def items(self) -> Iterator[tuple[dict[str, int], float]]:
        for index in np.ndindex(self.probs.shape):
            yield dict(zip(self.names, map(int, index))), float(self.probs[index])


def _expand(cpt: np.ndarray, axes: Sequence[int], ndim: int) -> np.ndarray:
    """Broadcast a CPT whose axes sit at joint positions ``axes``."""
    order = np.argsort(axes)
    arr = np.transpose(cpt, order)
    shape = [1] * ndim
    for ax, size in zip(np.asarray(axes)[order], arr.shape):
        shape[ax] = size
    return arr.reshape(shape)


def enumerate_joint(scm: Scm) -> JointDistribution:
    """Exact observational law: product of the CPTs over all assignments."""
    scm.check(roles=False)
    index = {n: i for i, n in enumerate(scm.names)}
    joint = np.ones(scm.levels)
    for v in scm.variables:
        axes = [index[p] for p in v.parents] + [index[v.name]]
        joint = joint * _expand(scm.cpt_array(v.name), axes, len(scm.names))
    return JointDistribution(scm.names, joint)


def intervene(scm: Scm, var: str, value: int) -> Scm:
    """Graph surgery for do(var = value)."""
    spec = scm.variable(var)
    if not 0 <= value < spec.levels:
        raise ValueError(f"level {value} out of range for {var!r} with {spec.levels} levels")
    row = tuple(1.0 if i == value else 0.0 for i in range(spec.levels))
    return scm.replace(VariableSpec(var, spec.levels, (), (row,)))


def _row_strides(scm: Scm, v: VariableSpec) -> np.ndarray:
    levels = [scm.variable(p).levels for p in v.parents]
    strides = np.ones(len(levels), dtype=np.int64)
    for i in range(len(levels) - 2, -1, -1):
        strides[i] = strides[i + 1] * levels[i + 1]
    return strides


def _chunk_counts(scm: Scm, plan, seed: int, chunk: int, size: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, chunk], dtype=np.uint64)))
    draws = gen.random((len(plan), size))
    values = np.empty((len(plan), size), dtype=np.int64)
    for j, (parent_idx, strides, cum) in enumerate(plan):
        row = values[parent_idx].T @ strides if len(parent_idx) else np.zeros(size, dtype=np.int64)
        values[j] = (cum[row] <= draws[j][:, None]).sum(axis=1)
    flat = np.ravel_multi_index(tuple(values), scm.levels)
    return np.bincount(flat, minlength=int(np.prod(scm.levels)))


def sample_joint_counts(scm: Scm, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """Counts over every variable from ``n`` ancestral draws.

    Draws are split into fixed chunks of ``SAMPLE_CHUNK``; chunk ``i`` uses a
    Philox stream keyed by ``(seed, i)``, so the result does not depend on
    ``workers``.
    """
    if n <= 0:
        raise ValueError("n must be a positive integer")
    scm.check()
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    index = {name: i for i, name in enumerate(scm.names)}
    plan = []
    for v in scm.variables:
        cpt2d = np.asarray(v.cpt, dtype=float)
        cum = np.cumsum(cpt2d, axis=1)[:, :-1]
        plan.append((np.array([index[p] for p in v.parents], dtype=np.int64),
                     _row_strides(scm, v), cum))
    chunks = [(i, min(SAMPLE_CHUNK, n - i * SAMPLE_CHUNK))
              for i in range(-(-n // SAMPLE_CHUNK))]

    def run(item):
        return _chunk_counts(scm, plan, seed, *item)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return np.sum(parts, axis=0).reshape(scm.levels)


def observed_counts(scm: Scm, joint_counts: np.ndarray, extra: Sequence[str] = ()) -> np.ndarray:
    """Sum out every variable except S, X, (extra...), A, Y, in that axis order."""
    names = [scm.role("s"), scm.role("x"), *extra, scm.role("a"), scm.role("y")]
    keep = [scm.index(n) for n in names]
    drop = tuple(i for i in range(len(scm.names)) if i not in keep)
    m = joint_counts.sum(axis=drop)
    order = sorted(keep)
    return np.moveaxis(m, [order.index(k) for k in keep], range(len(keep)))


def sample(scm: Scm, n: int, seed: int, workers: int = 1) -> ContingencyTable:
    """Simulate ``n`` individuals and return the analyst's (S, X, A, Y) table."""
    return ContingencyTable(observed_counts(scm, sample_joint_counts(scm, n, seed, workers)))


def _random_row(rng: np.random.Generator, k: int, low: float, high: float) -> tuple[float, ...]:
    if k == 2:
        p = rng.uniform(low, high)
        return (1.0 - p, p)
    w = rng.uniform(low, high, size=k)
    return tuple(w / w.sum())


def random_scm(dag: Dag, rng: np.random.Generator, levels: Mapping[str, int] | None = None,
               low: float = 0.05, high: float = 0.95, randomized_trial: bool = False) -> Scm:
    """Random CPTs on ``dag`` with entries drawn from ``[low, high]``.

    With ``randomized_trial`` the treatment CPT rows with ``S = 1`` share one
    probability vector, i.e. treatment is randomized within the trial.
    """
    levels = dict(levels or {})
    order = dag.topological_order()
    parents = {n: sorted(dag.parents(n), key=order.index) for n in order}
    a, s = dag.roles.get("a"), dag.roles.get("s")
    specs = []
    for name in order:
        k = levels.get(name, 2)
        parent_levels = [levels.get(p, 2) for p in parents[name]]
        trial_row = _random_row(rng, k, low, high)
        rows = []
        for values in itertools.product(*[range(m) for m in parent_levels]):
            if randomized_trial and name == a and s in parents[name] \
                    and values[parents[name].index(s)] == 1:
                rows.append(trial_row)
            else:
                rows.append(_random_row(rng, k, low, high))
        specs.append(VariableSpec(name, k, tuple(parents[name]), tuple(rows)))
    return Scm(tuple(specs), dict(dag.roles))


def sharp_null(scm: Scm, reference_level: int = 0) -> Scm:
    """Copy of ``scm`` whose outcome CPT ignores treatment.

    Every row takes the outcome law of the matching row with treatment set to
    ``reference_level``.
    """
    y, a = scm.variable(scm.role("y")), scm.role("a")
    if a not in y.parents:
        return scm
    table = scm.cpt_array(y.name)
    axis = y.parents.index(a)
    ref = np.take(table, [reference_level], axis=axis)
    flat = np.broadcast_to(ref, table.shape).reshape(-1, y.levels)
    return scm.replace(VariableSpec(y.name, y.levels, y.parents, tuple(map(tuple, flat))))
