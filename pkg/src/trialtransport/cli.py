"""Command-line entry point.

Exit codes: 0 success, 2 usage, 3 validation, 4 positivity violation, 5 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle
from .errors import PositivityError
from .estimators import ESTIMATORS, check_positivity
from .graph import BUILTINS, GraphError, builtin, check_phi_equals_beta, \
    check_phi_equals_gamma, d_separated, format_trail, open_trail
from .io import ParseError, data_path, load_dag, load_scm, load_table, save_table, scm_from_dict
from .report import SCHEMA_VERSION, pct, render_table, report_to_dict, reproduce_table2
from .scm import ScmError, observed_counts, sample_joint_counts, validate_scm
from .table import ContingencyTable, TableError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_POSITIVITY, EXIT_IO = 0, 2, 3, 4, 5
COMMANDS = ("validate", "simulate", "oracle", "estimate", "dsep", "check", "reproduce")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    scm: str | None = None
    data: str | None = None
    dag: str | None = None
    builtin: str | None = None
    estimand: str | None = None
    method: str = "standardize"
    a: int | None = None
    a_ref: int = 0
    a_prime: int | None = None
    seed: int = 0
    n: int | None = None
    workers: int = 1
    keep_u: bool = False
    set_a: list[str] = field(default_factory=list)
    set_b: list[str] = field(default_factory=list)
    given: list[str] = field(default_factory=list)
    criterion: str = "both"
    out: str | None = None
    format: str = "table"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command == "estimate":
            if self.estimand not in ("beta", "phi", "gamma"):
                raise UsageError("--estimand must be one of beta, phi, gamma")
            if self.a is None:
                raise UsageError("--a is required")
            if self.estimand in ("phi", "gamma") and self.a_prime is None:
                raise UsageError(f"--aprime is required for {self.estimand}")
            if (self.data is None) == (self.scm is None):
                raise UsageError("give exactly one of --data or --scm")
            if self.estimand == "gamma" and self.scm is None:
                raise UsageError("gamma requires an SCM (unmeasured U); "
                                 "not identified from data alone")
        if self.command == "simulate" and (self.n is None or self.n <= 0):
            raise UsageError("--n must be a positive integer")
        if self.command == "dsep" and not (self.set_a and self.set_b):
            raise UsageError("dsep needs --set-a and --set-b")
        if self.command in ("dsep", "check") and (self.dag is None) == (self.builtin is None):
            raise UsageError("give exactly one of --dag or --builtin")
        if self.command == "validate" and not (self.scm or self.data or self.dag):
            raise UsageError("validate needs --scm, --data or --dag")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")


def _dag(config: RunConfig):
    return builtin(config.builtin) if config.builtin else load_dag(config.dag)


def _cmd_validate(config: RunConfig) -> tuple[int, dict]:
    out: dict = {"schema_version": SCHEMA_VERSION, "kind": "validation", "inputs": {}}
    status = EXIT_OK
    if config.scm:
        doc = json.loads(Path(config.scm).read_text())
        violations = list(validate_scm(scm_from_dict(doc)).violations)
        out["inputs"]["scm"] = {"path": config.scm, "ok": not violations, "violations": violations}
    if config.data:
        try:
            table = load_table(config.data)
            out["inputs"]["data"] = {"path": config.data, "ok": True, "cells": sum(1 for _ in table.cells()),
                                     "total": table.total}
        except (ParseError, TableError) as exc:
            out["inputs"]["data"] = {"path": config.data, "ok": False, "violations": str(exc).splitlines()}
    if config.dag:
        try:
            dag = load_dag(config.dag)
            out["inputs"]["dag"] = {"path": config.dag, "ok": True, "nodes": len(dag.nodes),
                                    "edges": len(dag.edges)}
        except (ParseError, GraphError) as exc:
            out["inputs"]["dag"] = {"path": config.dag, "ok": False, "violations": str(exc).splitlines()}
    if not all(v["ok"] for v in out["inputs"].values()):
        status = EXIT_VALIDATION
    out["ok"] = status == EXIT_OK
    return status, out


def _cmd_simulate(config: RunConfig) -> tuple[int, dict]:
    scm = load_scm(config.scm or data_path("fig1.scm.json"))
    counts = sample_joint_counts(scm, config.n, config.seed, config.workers)
    table = ContingencyTable(observed_counts(scm, counts))
    out = {"schema_version": SCHEMA_VERSION, "kind": "simulation", "n": config.n,
           "seed": config.seed, "cells": [{"s": k[0], "x": k[1], "a": k[2], "y": k[3], "count": n}
                                          for k, n in table.cells(nonempty=False)]}
    if config.out:
        save_table(table, config.out)
        out["table"] = config.out
    if config.keep_u:
        u = scm.role("u")
        with_u = observed_counts(scm, counts, extra=[u])
        # oracle-side data: U is not available to an analyst
        out["oracle_side_cells_with_u"] = [
            {"s": s, "x": x, "u": uu, "a": a, "y": y, "count": int(with_u[s, x, uu, a, y])}
            for s, x, uu, a, y in _ndindex(with_u.shape)]
        if config.out:
            path = Path(config.out).with_suffix(".with_u.csv")
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["s", "x", "u", "a", "y", "count"])
                for key in _ndindex(with_u.shape):
                    w.writerow([*key, int(with_u[key])])
            out["oracle_side_table"] = str(path)
    return EXIT_OK, out


def _ndindex(shape):
    return [tuple(int(i) for i in k) for k in np.ndindex(shape)]


def _cmd_oracle(config: RunConfig) -> tuple[int, dict]:
    scm = load_scm(config.scm or data_path("fig1.scm.json"))
    a = 1 if config.a is None else config.a
    a_prime = 0 if config.a_prime is None else config.a_prime
    report = oracle.oracle_report(scm, a, config.a_ref, a_prime)
    doc = report_to_dict(report, kind="oracle")
    doc["identification"] = {}
    for level in (a, config.a_ref):
        chk = oracle.verify_identification(scm, level)
        doc["identification"][str(level)] = {"passed": chk.passed, "residual": chk.residual}
    return EXIT_OK, doc


def _cmd_estimate(config: RunConfig) -> tuple[int, dict]:
    doc = {"schema_version": SCHEMA_VERSION, "kind": "estimate", "estimand": config.estimand,
           "a": config.a, "a_prime": config.a_prime}
    if config.scm:
        scm = load_scm(config.scm)
        fn = {"beta": lambda: oracle.beta(scm, config.a),
              "phi": lambda: oracle.phi_param(scm, config.a, config.a_prime),
              "gamma": lambda: oracle.gamma(scm, config.a, config.a_prime)}[config.estimand]
        doc.update(method="oracle", source=config.scm, value=fn())
    else:
        table = load_table(config.data)
        report = check_positivity(table, config.a, config.a_prime, config.estimand)
        if not report.ok:
            raise PositivityError(str(report), report.violations)
        fn = ESTIMATORS[config.estimand, config.method]
        args = (config.a,) if config.estimand == "beta" else (config.a, config.a_prime)
        doc.update(method=config.method, source=config.data, value=fn(table, *args))
    doc["display"] = pct(doc["value"])
    return EXIT_OK, doc


def _cmd_dsep(config: RunConfig) -> tuple[int, dict]:
    dag = _dag(config)
    sep = d_separated(dag, config.set_a, config.set_b, config.given)
    path = None if sep else open_trail(dag, config.set_a, config.set_b, config.given)
    return EXIT_OK, {"schema_version": SCHEMA_VERSION, "kind": "dsep",
                     "set_a": config.set_a, "set_b": config.set_b, "given": config.given,
                     "separated": sep, "witness": path and format_trail(dag, path)}


def _cmd_check(config: RunConfig) -> tuple[int, dict]:
    dag = _dag(config)
    doc = {"schema_version": SCHEMA_VERSION, "kind": "check", "criteria": {}}
    checks = {"beta": check_phi_equals_beta, "gamma": check_phi_equals_gamma}
    for name in (("beta", "gamma") if config.criterion == "both" else (config.criterion,)):
        res = checks[name](dag)
        doc["criteria"][f"phi_equals_{name}"] = {"status": res.status, "reason": res.reason}
    return EXIT_OK, doc


def _cmd_reproduce(config: RunConfig) -> tuple[int, dict]:
    report = reproduce_table2(config.data, config.scm)
    return EXIT_OK, report_to_dict(report, kind="table2")


HANDLERS = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "estimate": _cmd_estimate,
    "dsep": _cmd_dsep,
    "check": _cmd_check,
    "reproduce": _cmd_reproduce,
}


def _error(category: str, code: int, exc: Exception) -> tuple[int, dict]:
    return code, {"schema_version": SCHEMA_VERSION, "kind": "error",
                  "error": {"category": category, "message": str(exc)}}


def run(config: RunConfig) -> tuple[int, dict]:
    """Dispatch a command; returns (exit status, report document)."""
    try:
        config.validate()
        return HANDLERS[config.command](config)
    except UsageError as exc:
        return _error("usage", EXIT_USAGE, exc)
    except PositivityError as exc:
        return _error("positivity", EXIT_POSITIVITY, exc)
    except OSError as exc:
        return _error("io", EXIT_IO, exc)
    except (ScmError, ParseError, TableError, GraphError, json.JSONDecodeError,
            KeyError, ValueError) as exc:
        return _error("validation", EXIT_VALIDATION, exc)


def _text(doc: dict) -> str:
    kind = doc["kind"]
    if kind in ("table2", "oracle", "estimands"):
        text = render_table(doc)
        if "identification" in doc:
            text += "\n" + "\n".join(
                f"identification a={k}: {'pass' if v['passed'] else 'FAIL'} "
                f"(residual {v['residual']:.3g})" for k, v in doc["identification"].items())
        return text
    if kind == "estimate":
        ap = "" if doc["a_prime"] is None else f", a'={doc['a_prime']}"
        return f"{doc['estimand']}(a={doc['a']}{ap}) [{doc['method']}] = {doc['value']:.6f} ({doc['display']})"
    if kind == "dsep":
        head = (f"{','.join(doc['set_a'])} _||_ {','.join(doc['set_b'])} | "
                f"{{{','.join(doc['given'])}}}: {doc['separated']}")
        return head + (f"\nopen trail: {doc['witness']}" if doc["witness"] else "")
    if kind == "check":
        return "\n".join(f"{k}: {v['status']} ({v['reason']})" for k, v in doc["criteria"].items())
    if kind == "simulation":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "x", "a", "y", "count"])
        for c in doc["cells"]:
            w.writerow([c["s"], c["x"], c["a"], c["y"], c["count"]])
        return buf.getvalue().rstrip("\n")
    if kind == "validation":
        lines = []
        for name, v in doc["inputs"].items():
            lines.append(f"{name} {v['path']}: {'ok' if v['ok'] else 'INVALID'}")
            lines += [f"  - {msg}" for msg in v.get("violations", [])]
        return "\n".join(lines)
    return json.dumps(doc, indent=2)


def _csv_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trialtransport",
                                     description="Transport trial results under selection on treatment.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the JSON report (simulate: the CSV table) here")
        p.add_argument("--format", choices=("json", "table"), default="table")
        return p

    p = common(sub.add_parser("validate", help="validate model, table or DAG files"))
    p.add_argument("--scm")
    p.add_argument("--data")
    p.add_argument("--dag")

    p = common(sub.add_parser("simulate", help="sample an observed (S, X, A, Y) table"))
    p.add_argument("--scm", help="model JSON (default: bundled reference model)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-u", action="store_true",
                   help="also emit counts including U (oracle-side, debugging only)")

    p = common(sub.add_parser("oracle", help="exact phi, beta, gamma and contrasts from a model"))
    p.add_argument("--scm")
    p.add_argument("--a", type=int)
    p.add_argument("--aref", dest="a_ref", type=int, default=0)
    p.add_argument("--aprime", dest="a_prime", type=int)

    p = common(sub.add_parser("estimate", help="plug-in estimate from a table (or oracle value from a model)"))
    p.add_argument("--data")
    p.add_argument("--scm")
    p.add_argument("--estimand", choices=("beta", "phi", "gamma"), required=True)
    p.add_argument("--method", choices=("standardize", "weight"), default="standardize")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--aprime", dest="a_prime", type=int)

    for name, help_ in (("dsep", "d-separation query"), ("check", "structural criteria")):
        p = common(sub.add_parser(name, help=help_))
        p.add_argument("--dag")
        p.add_argument("--builtin", choices=sorted(BUILTINS))
    dsep = sub.choices["dsep"]
    dsep.add_argument("--set-a", type=_csv_list, required=True)
    dsep.add_argument("--set-b", type=_csv_list, required=True)
    dsep.add_argument("--given", type=_csv_list, default=[])
    sub.choices["check"].add_argument("--criterion", choices=("beta", "gamma", "both"), default="both")

    p = common(sub.add_parser("reproduce", help="Table 2 from the bundled Table 1 and reference model"))
    p.add_argument("--data", help="table CSV (default: bundled table1.csv)")
    p.add_argument("--scm", help="model JSON for the gamma row (default: bundled reference model)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    config = RunConfig(**vars(ns))
    status, doc = run(config)
    if status != EXIT_OK:
        err = doc["error"]
        print(f"error [{err['category']}]: {err['message']}", file=sys.stderr)
        if config.format == "json":
            print(json.dumps(doc, indent=2))
        return status
    if config.out and doc["kind"] != "simulation":
        try:
            Path(config.out).write_text(json.dumps(doc, indent=2) + "\n")
        except OSError as exc:
            print(f"error [io]: {exc}", file=sys.stderr)
            return EXIT_IO
    print(json.dumps(doc, indent=2) if config.format == "json" else _text(doc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
