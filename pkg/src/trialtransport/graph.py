"""Directed acyclic graphs, d-separation, and the structural criteria for
when standardization after selecting on treatment recovers a causal mean.

The criteria work on the plain DAG. Trial randomization (treatment
independent of covariates only when ``S = 1``) is context-specific and cannot
be drawn as a missing edge, so both checks are sound but conservative.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Iterator, Mapping

ROLE_NAMES = ("x", "u", "s", "a", "y")

Edge = tuple[str, str]


class GraphError(ValueError):
    """Malformed graph or query."""


@dataclass(frozen=True)
class Dag:
    nodes: frozenset[str]
    edges: frozenset[Edge]
    latent: frozenset[str] = frozenset()
    roles: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        object.__setattr__(self, "latent", frozenset(self.latent))
        object.__setattr__(self, "roles", dict(self.roles))
        for u, v in self.edges:
            if u not in self.nodes or v not in self.nodes:
                raise GraphError(f"edge {u} -> {v} uses an undeclared node")
            if u == v:
                raise GraphError(f"self-loop on {u}")
        unknown = self.latent - self.nodes
        if unknown:
            raise GraphError(f"latent nodes not in graph: {sorted(unknown)}")
        for role, name in self.roles.items():
            if role not in ROLE_NAMES:
                raise GraphError(f"unknown role {role!r}")
            if name not in self.nodes:
                raise GraphError(f"role {role} bound to unknown node {name!r}")
        try:
            tuple(TopologicalSorter(self.parent_map()).static_order())
        except CycleError as exc:
            raise GraphError(f"cycle: {' -> '.join(reversed(exc.args[1]))}") from None

    @classmethod
    def from_edges(cls, edges: Iterable[Edge], latent=(), roles=None, nodes=()) -> Dag:
        edges = frozenset(edges)
        all_nodes = set(nodes) | {n for e in edges for n in e} | set(latent)
        return cls(frozenset(all_nodes), edges, frozenset(latent), roles or {})

    def parent_map(self) -> dict[str, set[str]]:
        parents: dict[str, set[str]] = {n: set() for n in self.nodes}
        for u, v in self.edges:
            parents[v].add(u)
        return parents

    def parents(self, node: str) -> set[str]:
        return {u for u, v in self.edges if v == node}

    def children(self, node: str) -> set[str]:
        return {v for u, v in self.edges if u == node}

    def ancestors_of(self, nodes: Iterable[str]) -> set[str]:
        """Ancestors of ``nodes``, the nodes themselves included."""
        parents = self.parent_map()
        seen = set(nodes)
        stack = list(seen)
        while stack:
            for p in parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def descendants_of(self, node: str) -> set[str]:
        """Strict descendants of ``node``."""
        seen: set[str] = set()
        stack = [node]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def topological_order(self) -> list[str]:
        # sorted insertion keeps the order deterministic across runs
        ts = TopologicalSorter({n: sorted(p) for n, p in sorted(self.parent_map().items())})
        return list(ts.static_order())

    def role(self, name: str) -> str:
        try:
            return self.roles[name]
        except KeyError:
            raise GraphError(f"graph has no node bound to role {name!r}") from None

    def add_edges(self, *edges: Edge) -> Dag:
        return Dag(self.nodes | {n for e in edges for n in e}, self.edges | set(edges),
                   self.latent, self.roles)

    def remove_edges(self, *edges: Edge) -> Dag:
        missing = set(edges) - self.edges
        if missing:
            raise GraphError(f"edges not in graph: {sorted(missing)}")
        return Dag(self.nodes, self.edges - set(edges), self.latent, self.roles)


def _check_query(dag: Dag, set_a, set_b, given) -> tuple[set, set, set]:
    a, b, z = set(set_a), set(set_b), set(given)
    unknown = (a | b | z) - dag.nodes
    if unknown:
        raise GraphError(f"unknown nodes: {sorted(unknown)}")
    if not a or not b:
        raise GraphError("query sets must be non-empty")
    if a & b or a & z or b & z:
        raise GraphError("query sets must be disjoint")
    return a, b, z


def reachable(dag: Dag, sources: Iterable[str], given: Iterable[str]) -> set[str]:
    """Nodes connected to ``sources`` by an active trail given ``given``.

    Bayes-ball style traversal over (node, direction) states; ``"up"`` means
    the trail arrived from a child, ``"down"`` from a parent.
    """
    z = set(given)
    z_anc = dag.ancestors_of(z)
    parents = dag.parent_map()
    children: dict[str, set[str]] = {n: set() for n in dag.nodes}
    for u, v in dag.edges:
        children[u].add(v)

    queue = deque((s, "up") for s in sources)
    visited: set[tuple[str, str]] = set()
    found: set[str] = set()
    while queue:
        node, direction = queue.popleft()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in z:
            found.add(node)
        if direction == "up" and node not in z:
            queue.extend((p, "up") for p in parents[node])
            queue.extend((c, "down") for c in children[node])
        elif direction == "down":
            if node not in z:
                queue.extend((c, "down") for c in children[node])
            if node in z_anc:
                # collider at node (or an ancestor of the conditioning set)
                queue.extend((p, "up") for p in parents[node])
    return found


def d_separated(dag: Dag, set_a, set_b, given=()) -> bool:
    """True iff every trail between ``set_a`` and ``set_b`` is blocked by ``given``."""
    a, b, z = _check_query(dag, set_a, set_b, given)
    return not (reachable(dag, a, z) & b)


def _trail_is_active(dag: Dag, path: list[str], z: set[str]) -> bool:
    for i in range(1, len(path) - 1):
        prev, node, nxt = path[i - 1], path[i], path[i + 1]
        collider = (prev, node) in dag.edges and (nxt, node) in dag.edges
        if collider:
            if node not in z and not (dag.descendants_of(node) & z):
                return False
        elif node in z:
            return False
    return True


def iter_trails(dag: Dag, source: str, target: str) -> Iterator[list[str]]:
    """Simple trails in the skeleton, in lexicographic order of node names."""
    nbrs: dict[str, list[str]] = {n: [] for n in dag.nodes}
    for u, v in dag.edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    for n in nbrs:
        nbrs[n].sort()

    def walk(path):
        last = path[-1]
        if last == target:
            yield list(path)
            return
        for n in nbrs[last]:
            if n not in path:
                path.append(n)
                yield from walk(path)
                path.pop()

    yield from walk([source])


def open_trail(dag: Dag, set_a, set_b, given=()) -> list[str] | None:
    """Lexicographically smallest active trail between the sets, or None."""
    a, b, z = _check_query(dag, set_a, set_b, given)
    best = None
    for s in sorted(a):
        for t in sorted(b):
            for path in iter_trails(dag, s, t):
                if _trail_is_active(dag, path, z):
                    if best is None or path < best:
                        best = path
                    break
    return best


def format_trail(dag: Dag, path: list[str]) -> str:
    out = path[0]
    for u, v in zip(path, path[1:]):
        out += f" -> {v}" if (u, v) in dag.edges else f" <- {v}"
    return out


@dataclass(frozen=True)
class CriterionResult:
    holds: bool
    reason: str
    witness: tuple[str, ...] | None = None

    @property
    def status(self) -> str:
        return "holds" if self.holds else "fails"


def check_phi_equals_beta(dag: Dag) -> CriterionResult:
    """Covariates independent of treatment given trial participation.

    Uses the node ``S`` as a stand-in for the context ``S = 0``.
    """
    x, a, s = dag.role("x"), dag.role("a"), dag.role("s")
    path = open_trail(dag, {x}, {a}, {s})
    if path is None:
        return CriterionResult(True, f"{x} and {a} are d-separated given {s}")
    return CriterionResult(False, f"open trail given {{{s}}}: {format_trail(dag, path)}",
                           tuple(path))


def check_phi_equals_gamma(dag: Dag) -> CriterionResult:
    """Trial participation separated from the outcome given (X, A) once the
    edges out of treatment are cut."""
    x, a, s, y = dag.role("x"), dag.role("a"), dag.role("s"), dag.role("y")
    cut = dag.remove_edges(*[e for e in dag.edges if e[0] == a])
    path = open_trail(cut, {s}, {y}, {x, a})
    if path is None:
        return CriterionResult(True, f"{s} and {y} are d-separated given {{{x}, {a}}}"
                               f" with edges out of {a} removed")
    return CriterionResult(False, f"open trail given {{{x}, {a}}}: {format_trail(cut, path)}",
                           tuple(path))


_ROLES = {"x": "X", "u": "U", "s": "S", "a": "A", "y": "Y"}
_FIG1 = frozenset({("X", "S"), ("X", "Y"), ("X", "A"), ("S", "A"),
                   ("U", "A"), ("U", "Y"), ("A", "Y")})


def _fig(edges, latent=("U",), roles=None) -> Dag:
    return Dag.from_edges(edges, latent=latent, roles=roles or _ROLES,
                          nodes={"X", "U", "S", "A", "Y"} if "U" in latent else ())


def _fig1() -> Dag:
    """Trial participation, covariates, treatment, unmeasured U, outcome.

    Edges X->S, X->Y, X->A, S->A, U->A, U->Y, A->Y: the A <- U -> Y fork is
    confounding of treatment outside the trial.
    """
    return _fig(_FIG1)


def _fig1_ux() -> Dag:
    """``fig1`` plus U -> X; the starting point for ``fig3-ii``."""
    return _fig(_FIG1 | {("U", "X")})


def _fig2a() -> Dag:
    """Covariates X have a direct effect on treatment A; no unmeasured confounding."""
    return Dag.from_edges({("X", "S"), ("X", "Y"), ("X", "A"), ("S", "A"), ("A", "Y")},
                          roles={k: v for k, v in _ROLES.items() if k != "u"})


def _fig2b() -> Dag:
    """Covariates X and treatment A share an unmeasured common cause W."""
    return Dag.from_edges({("W", "X"), ("W", "A"), ("X", "S"), ("X", "Y"), ("S", "A"),
                           ("A", "Y")}, latent={"W"},
                          roles={k: v for k, v in _ROLES.items() if k != "u"})


def _fig2c() -> Dag:
    """Unmeasured common cause W of trial participation S and treatment A."""
    return Dag.from_edges({("W", "S"), ("W", "A"), ("X", "S"), ("X", "Y"), ("S", "A"),
                           ("A", "Y")}, latent={"W"},
                          roles={k: v for k, v in _ROLES.items() if k != "u"})


def _fig3_i() -> Dag:
    """``fig1`` with the X -> A and U -> A edges removed."""
    return _fig(_FIG1 - {("X", "A"), ("U", "A")})


def _fig3_ii() -> Dag:
    """``fig1-UX`` with X -> A and U -> X removed, which leaves ``fig1`` minus X -> A."""
    return _fig((_FIG1 | {("U", "X")}) - {("X", "A"), ("U", "X")})


def _fig4_no_uy() -> Dag:
    """``fig1`` with the U -> Y edge removed."""
    return _fig(_FIG1 - {("U", "Y")})


def _fig4_no_ua() -> Dag:
    """``fig1`` with the U -> A edge removed."""
    return _fig(_FIG1 - {("U", "A")})


BUILTINS = {
    "fig1": _fig1,
    "fig1-UX": _fig1_ux,
    "fig2A": _fig2a,
    "fig2B": _fig2b,
    "fig2C": _fig2c,
    "fig3-i": _fig3_i,
    "fig3-ii": _fig3_ii,
    "fig4-noUY": _fig4_no_uy,
    "fig4-noUA": _fig4_no_ua,
}


def builtin(name: str) -> Dag:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise GraphError(f"unknown builtin DAG {name!r}; choose from {sorted(BUILTINS)}") from None
