"""Readers and writers for contingency tables (CSV), models (JSON) and DAGs (text)."""
from __future__ import annotations

import csv
import json
import warnings
from importlib import resources
from pathlib import Path

from .graph import ROLE_NAMES, Dag, GraphError
from .scm import Scm, ScmError, VariableSpec, validate_scm
from .table import ContingencyTable, TableError

TABLE_HEADER = ("s", "x", "a", "y", "count")


class ParseError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Path of a bundled asset (``table1.csv``, ``fig1.scm.json``, ``dags/fig1.dag``...)."""
    return Path(str(resources.files("trialtransport") / "data" / name))


def load_table(path) -> ContingencyTable:
    """Read a ``s,x,a,y,count`` CSV; duplicate cells are summed with a warning."""
    path = Path(path)
    cells: dict[tuple[int, int, int, int], int] = {}
    errors = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip().lower() for h in header) != TABLE_HEADER:
            raise ParseError(f"{path}:1: header must be {','.join(TABLE_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 5:
                errors.append(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
                continue
            try:
                s, x, a, y, n = (int(v) for v in row)
            except ValueError:
                errors.append(f"{path}:{lineno}: non-integer field in {row}")
                continue
            if n < 0:
                errors.append(f"{path}:{lineno}: negative count {n}")
            if s not in (0, 1) or y not in (0, 1):
                errors.append(f"{path}:{lineno}: s and y must be 0 or 1")
            if x < 0 or a < 0:
                errors.append(f"{path}:{lineno}: negative level")
            if errors:
                continue
            key = (s, x, a, y)
            if key in cells:
                warnings.warn(f"{path}:{lineno}: duplicate cell {key}; counts summed", stacklevel=2)
                cells[key] += n
            else:
                cells[key] = n
    if errors:
        raise ParseError("\n".join(errors))
    try:
        return ContingencyTable.from_cells(cells)
    except TableError as exc:
        raise ParseError(f"{path}: {exc}") from None


def save_table(table: ContingencyTable, path) -> None:
    """Write every cell, zeros included, so the level cardinalities round-trip."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for key, n in table.cells(nonempty=False):
            w.writerow([*key, n])


def scm_from_dict(doc: dict) -> Scm:
    try:
        variables = tuple(
            VariableSpec(v["name"], int(v["levels"]), tuple(v.get("parents", ())),
                         tuple(tuple(row) for row in v["cpt"]))
            for v in doc["variables"])
        roles = dict(doc["roles"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed SCM document: {exc!r}") from None
    return Scm(variables, roles)


def scm_to_dict(scm: Scm) -> dict:
    return {
        "variables": [{"name": v.name, "levels": v.levels, "parents": list(v.parents),
                       "cpt": [list(row) for row in v.cpt]} for v in scm.variables],
        "roles": dict(scm.roles),
    }


def load_scm(path, validate: bool = True) -> Scm:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    scm = scm_from_dict(doc)
    if validate:
        report = validate_scm(scm)
        if not report.ok:
            raise ScmError(report.violations)
    return scm


def save_scm(scm: Scm, path) -> None:
    Path(path).write_text(json.dumps(scm_to_dict(scm), indent=2) + "\n")


def parse_dag(text: str, source: str = "<dag>") -> Dag:
    """Parse ``parent -> child`` lines.

    Also accepted: ``role x = X``, ``latent U`` and ``node N`` (isolated
    node); ``#`` starts a comment.
    """
    edges, nodes, latent, roles = set(), set(), set(), {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            parts = [p.strip() for p in line.split("->")]
            if len(parts) != 2 or not all(parts):
                errors.append(f"{source}:{lineno}: bad edge {raw.strip()!r}")
                continue
            edges.add((parts[0], parts[1]))
            continue
        words = line.split()
        if words[0] == "role" and len(words) == 4 and words[2] == "=":
            if words[1] not in ROLE_NAMES:
                errors.append(f"{source}:{lineno}: unknown role {words[1]!r}")
            roles[words[1]] = words[3]
        elif words[0] == "latent" and len(words) == 2:
            latent.add(words[1])
        elif words[0] == "node" and len(words) == 2:
            nodes.add(words[1])
        else:
            errors.append(f"{source}:{lineno}: cannot parse {raw.strip()!r}")
    if errors:
        raise ParseError("\n".join(errors))
    nodes |= set(roles.values())
    try:
        return Dag.from_edges(edges, latent=latent, roles=roles, nodes=nodes)
    except GraphError as exc:
        raise ParseError(f"{source}: {exc}") from None


def format_dag(dag: Dag) -> str:
    lines = [f"role {r} = {dag.roles[r]}" for r in sorted(dag.roles)]
    lines += [f"latent {n}" for n in sorted(dag.latent)]
    connected = {n for e in dag.edges for n in e}
    lines += [f"node {n}" for n in sorted(dag.nodes - connected)]
    lines += [f"{u} -> {v}" for u, v in sorted(dag.edges)]
    return "\n".join(lines) + "\n"


def load_dag(path) -> Dag:
    path = Path(path)
    return parse_dag(path.read_text(), str(path))


def save_dag(dag: Dag, path) -> None:
    Path(path).write_text(format_dag(dag))
