"""Command line driver: file-driven evaluation, projection, allocation, diagnostics.

Exit codes: 0 on success, 1 on validation problems (malformed files, broken
invariants, bad flags), 2 when a requested quantity is infeasible or
undefined. Reports are deterministic: same inputs and seed give identical
bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from math import fsum
from pathlib import Path

import numpy as np

from . import fileio
from .allocation import allocate, fairness_check
from .bimeasure import (
    BiMeasure,
    RawBiMeasure,
    as_raw,
    pairing,
    raw_pairing,
    variation,
)
from .diagnostics import (
    DEFAULT_K_GRID,
    avar_crash_schedule,
    decomposition_battery,
    lebesgue_probe,
    ui_modulus,
    worst_case_crash_schedule,
)
from .errors import UndefinedQuantityError, ValidationError
from .instances import avar, entropic, es_tce, var_alpha
from .process import (
    AdaptedProcess,
    RawProcess,
    StaticRV,
    optional_projection_raw,
    optional_projection_static,
    predictable_projection_raw,
)
from .riskcore import (
    RiskMeasureSpec,
    conjugate_combination,
    rho_eval,
    static_rho,
    static_rho_coherent_direct,
)


@dataclass
class RunConfig:
    command: str
    tree: str | None = None
    processes: tuple[str, ...] = ()
    measure: str | None = None
    spec: str | None = None
    alpha: float | None = None
    beta: float = 1.0
    depths: tuple[int, ...] = ()
    tol: float = 1e-9
    seed: int | None = None
    samples: int | None = None
    kgrid: tuple[float, ...] = DEFAULT_K_GRID
    family: str = "worst-case"
    out: str | None = None
    format: str = "table"


@dataclass
class ReportDoc:
    command: str
    columns: list[str]
    rows: list[list[object]] = field(default_factory=list)
    summary: dict[str, object] = field(default_factory=dict)


def fmt_real(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        x = 0.0
    return f"{x:.12f}" if abs(x) < 1e4 else f"{x:.12e}"


def _cell(x: object) -> str:
    if isinstance(x, float):
        return fmt_real(x)
    return str(x)


def _sanitize(x: object) -> object:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def render(doc: ReportDoc, fmt: str) -> str:
    if fmt == "structured":
        payload = {
            "command": doc.command,
            "columns": doc.columns,
            "rows": [[_sanitize(c) for c in row] for row in doc.rows],
            "summary": {k: _sanitize(v) for k, v in doc.summary.items()},
        }
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(doc.columns)
        for row in doc.rows:
            writer.writerow([_cell(c) for c in row])
        for k, v in doc.summary.items():
            buf.write(f"# {k} = {_cell(v)}\n")
        return buf.getvalue()
    if fmt == "table":
        header = list(doc.columns)
        body = [[_cell(c) for c in row] for row in doc.rows]
        widths = [len(h) for h in header]
        for row in body:
            for j, c in enumerate(row):
                widths[j] = max(widths[j], len(c))
        lines = [f"{doc.command}"]
        if body or header:
            lines.append("  ".join(h.ljust(widths[j]) for j, h in enumerate(header)).rstrip())
            lines.append("  ".join("-" * widths[j] for j in range(len(header))))
            for row in body:
                lines.append("  ".join(c.ljust(widths[j]) for j, c in enumerate(row)).rstrip())
        for k, v in doc.summary.items():
            lines.append(f"{k} = {_cell(v)}")
        return "\n".join(lines) + "\n"
    raise ValidationError(f"unknown output format '{fmt}'")


def _emit(doc: ReportDoc, config: RunConfig) -> None:
    text = render(doc, config.format)
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)


def _need(config: RunConfig, **flags: object) -> None:
    for name, value in flags.items():
        missing = value is None or (isinstance(value, tuple) and not value)
        if missing:
            raise ValidationError(f"command '{config.command}' requires --{name}")


def _load_tree(config: RunConfig):
    _need(config, tree=config.tree)
    return fileio.load_tree(config.tree)


def _single_process_path(config: RunConfig) -> str:
    _need(config, process=config.processes)
    if len(config.processes) > 1:
        raise ValidationError(f"command '{config.command}' takes exactly one --process")
    return config.processes[0]


def _peek_format(path: str) -> str:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise fileio.FileFormatError(f"{path}: cannot parse document ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("format"), str):
        raise fileio.FileFormatError(f"{path}: missing 'format' tag")
    return doc["format"]


def _cmd_eval(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, spec=config.spec)
    spec = fileio.load_spec(config.spec, tree)
    X = fileio.load_process(_single_process_path(config), tree)
    res = rho_eval(spec, X)
    doc = ReportDoc(command="eval", columns=["element", "penalized_loss", "maximizer"])
    for i, label in enumerate(spec.labels):
        doc.rows.append([label, res.values[i], "*" if i in res.argmax else ""])
    doc.summary["value"] = res.value
    doc.summary["maximizers"] = ",".join(spec.labels[i] for i in res.argmax)
    _emit(doc, config)
    return 0


def _cmd_static_eval(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, spec=config.spec)
    spec = fileio.load_spec(config.spec, tree)
    Y = fileio.load_static(_single_process_path(config), tree)
    doc = ReportDoc(command="static-eval", columns=["metric", "value"])
    value = static_rho(spec, Y)
    doc.rows.append(["value", value])
    if spec.is_coherent:
        doc.rows.append(["coherent_direct", static_rho_coherent_direct(spec, Y)])
    _emit(doc, config)
    return 0


def _cmd_project(config: RunConfig) -> int:
    tree = _load_tree(config)
    path = _single_process_path(config)
    kind = _peek_format(path)
    if kind == "static":
        Y = fileio.load_static(path, tree)
        M = optional_projection_static(Y)
        doc = ReportDoc(command="project", columns=["node", "optional"])
        for nid in tree.order:
            doc.rows.append([nid, M.values[nid]])
        doc.summary["input"] = "static"
    elif kind == "raw_process":
        Z = fileio.load_raw_process(path, tree)
        opt = optional_projection_raw(Z)
        pred = predictable_projection_raw(Z)
        doc = ReportDoc(command="project", columns=["node", "optional", "predictable"])
        for nid in tree.order:
            doc.rows.append([nid, opt.values[nid], pred.values[nid]])
        doc.summary["input"] = "raw_process"
    else:
        raise ValidationError(
            f"project expects a 'static' or 'raw_process' document, got '{kind}'"
        )
    _emit(doc, config)
    return 0


def _cmd_conjugate(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, spec=config.spec, measure=config.measure)
    spec = fileio.load_spec(config.spec, tree)
    a = fileio.load_bimeasure(config.measure, tree)
    sol = conjugate_combination(spec, a, tol=config.tol)
    doc = ReportDoc(command="conjugate", columns=["element", "gamma", "weight"])
    if sol is None:
        for label, g in zip(spec.labels, spec.gammas):
            doc.rows.append([label, g, ""])
        doc.summary["value"] = "inf"
        doc.summary["status"] = "infeasible"
        _emit(doc, config)
        return 2
    for label, g, w in zip(spec.labels, spec.gammas, sol.weights):
        doc.rows.append([label, g, w])
    doc.summary["value"] = sol.cost
    doc.summary["status"] = "feasible"
    _emit(doc, config)
    return 0


def _cmd_allocate(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, spec=config.spec, process=config.processes, seed=config.seed)
    spec = fileio.load_spec(config.spec, tree)
    positions = [fileio.load_process(p, tree) for p in config.processes]
    result = allocate(spec, positions)
    samples = 1000 if config.samples is None else config.samples
    cert = fairness_check(
        result, spec, positions, samples=samples, seed=config.seed
    )
    doc = ReportDoc(command="allocate", columns=["position", "charge"])
    for path, k in zip(config.processes, result.k):
        doc.rows.append([path, k])
    doc.summary["rho_total"] = result.rho_total
    doc.summary["sum_k"] = result.sum_k
    doc.summary["maximizer"] = result.maximizer_label
    doc.summary["fairness_checked"] = cert.checked
    doc.summary["fairness_worst_slack"] = cert.worst_slack
    doc.summary["fairness_witness_dev"] = cert.max_witness_deviation
    doc.summary["fairness_passed"] = cert.passed
    doc.summary["seed"] = cert.seed
    _emit(doc, config)
    return 0


def _cmd_instances(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, alpha=config.alpha)
    Y = fileio.load_static(_single_process_path(config), tree)
    doc = ReportDoc(command="instances", columns=["measure", "value"])
    exit_code = 0
    doc.rows.append([f"var[{config.alpha:g}]", var_alpha(Y, config.alpha)])
    try:
        doc.rows.append([f"tce[{config.alpha:g}]", es_tce(Y, config.alpha)])
    except UndefinedQuantityError:
        doc.rows.append([f"tce[{config.alpha:g}]", "undefined"])
        exit_code = 2
    doc.rows.append([f"avar[{config.alpha:g}]", avar(Y, config.alpha)])
    doc.rows.append([f"entropic[{config.beta:g}]", entropic(Y, config.beta)])
    doc.rows.append(["worst_case", max(-Y.values[leaf] for leaf in tree.leaves)])
    doc.summary["status"] = "ok" if exit_code == 0 else "undefined-quantity"
    _emit(doc, config)
    return exit_code


def _cmd_diagnose_ui(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, process=config.processes)
    family = [fileio.load_static(p, tree) for p in config.processes]
    report = ui_modulus(family, config.kgrid)
    doc = ReportDoc(command="diagnose-ui", columns=["threshold", "eta"])
    for k, eta in zip(report.thresholds, report.modulus):
        doc.rows.append([k, eta])
    doc.summary["verdict"] = report.verdict
    doc.summary["family_size"] = len(family)
    _emit(doc, config)
    return 0


def _cmd_diagnose_lebesgue(config: RunConfig) -> int:
    _need(config, depths=config.depths)
    if config.family == "worst-case":
        schedule = worst_case_crash_schedule(config.depths)
    elif config.family == "avar":
        alpha = 0.1 if config.alpha is None else config.alpha
        schedule = avar_crash_schedule(config.depths, alpha)
    else:
        raise ValidationError(f"unknown family '{config.family}'")
    report = lebesgue_probe(schedule, k_grid=config.kgrid)
    eps_values = [eps for eps, _ in report.rows[0].exceedance]
    columns = ["depth", "rho_moving", "rho_limit", "gap"]
    columns += [f"exceed@{eps:g}" for eps in eps_values]
    columns += ["eta_max_threshold", "modulus"]
    doc = ReportDoc(command="diagnose-lebesgue", columns=columns)
    for row in report.rows:
        cells: list[object] = [row.depth, row.rho_moving, row.rho_limit, row.gap]
        cells += [value for _, value in row.exceedance]
        cells += [row.modulus.modulus[-1], row.modulus.verdict]
        doc.rows.append(cells)
    doc.summary["family"] = report.family_label
    doc.summary["exceedance_vanishing"] = report.exceedance_vanishing
    doc.summary["verdict"] = report.verdict
    _emit(doc, config)
    return 0


def _random_signed_bimeasure(tree, rng) -> BiMeasure:
    pr = {}
    op = {}
    for nid in tree.order:
        depth = tree.nodes[nid].depth
        if depth < tree.K and rng.uniform() < 0.7:
            pr[nid] = float(rng.uniform(-1.0, 1.0))
        if rng.uniform() < 0.7:
            op[nid] = float(rng.uniform(-1.0, 1.0))
    return BiMeasure(tree, pr, op)


def _random_raw_pair(tree, rng) -> tuple[RawProcess, RawBiMeasure]:
    K = tree.K
    zvals = {}
    left = {}
    right = {}
    for leaf in tree.leaves:
        for k in range(K + 1):
            zvals[(leaf, k)] = float(rng.uniform(-1.0, 1.0))
            right[(leaf, k)] = float(rng.uniform(-1.0, 1.0))
            if k >= 1:
                left[(leaf, k)] = float(rng.uniform(-1.0, 1.0))
    return RawProcess(tree, zvals), RawBiMeasure(tree, left, right)


def _cmd_diagnose_identities(config: RunConfig) -> int:
    tree = _load_tree(config)
    _need(config, seed=config.seed)
    samples = 100 if config.samples is None else config.samples
    if samples < 1:
        raise ValidationError(f"--samples must be positive, got {samples}")
    rng = np.random.default_rng(config.seed)

    from .bimeasure import dual_projection, normalize_scenario
    from .process import optional_projection_raw as opt_raw

    duality_dev = 0.0
    adjoint_dev = 0.0
    signed = []
    for _ in range(samples):
        a = _random_signed_bimeasure(tree, rng)
        signed.append(a)
        plus = BiMeasure(
            tree,
            {n: abs(v) for n, v in a.pr_inc.items()},
            {n: abs(v) for n, v in a.op_inc.items()},
        )
        Y = StaticRV(tree, {leaf: float(rng.uniform(-1.0, 1.0)) for leaf in tree.leaves})
        if plus.pr_inc or plus.op_inc:
            pos = normalize_scenario(plus)
            lhs = fsum(
                tree.prob[leaf] * variation(pos).values[leaf] * Y.values[leaf]
                for leaf in tree.leaves
            )
            rhs = pairing(optional_projection_static(Y), pos)
            duality_dev = max(duality_dev, abs(lhs - rhs))
        Z, ra = _random_raw_pair(tree, rng)
        M = opt_raw(Z)
        proj = dual_projection(ra)
        lhs2 = raw_pairing(RawProcess.from_adapted(M), ra)
        mid2 = pairing(M, proj)
        rhs2 = raw_pairing(Z, as_raw(proj))
        adjoint_dev = max(adjoint_dev, abs(lhs2 - mid2), abs(mid2 - rhs2))

    battery = decomposition_battery(signed)
    doc = ReportDoc(command="diagnose-identities", columns=["check", "max_deviation"])
    doc.rows.append(["martingale_duality", duality_dev])
    doc.rows.append(["projection_adjointness", adjoint_dev])
    doc.rows.append(
        ["terminal_bound_slack", max(r.terminal_bound_slack for r in battery.rows)]
    )
    doc.rows.append(
        ["variation_additivity", max(r.additivity_deviation for r in battery.rows)]
    )
    doc.rows.append(
        ["jordan_difference", max(r.jordan_deviation for r in battery.rows)]
    )
    doc.summary["samples"] = samples
    doc.summary["seed"] = config.seed
    _emit(doc, config)
    return 0


_COMMANDS = {
    "eval": _cmd_eval,
    "static-eval": _cmd_static_eval,
    "project": _cmd_project,
    "conjugate": _cmd_conjugate,
    "allocate": _cmd_allocate,
    "instances": _cmd_instances,
    "diagnose-ui": _cmd_diagnose_ui,
    "diagnose-lebesgue": _cmd_diagnose_lebesgue,
    "diagnose-identities": _cmd_diagnose_identities,
}


def run(config: RunConfig) -> int:
    """Execute one configured command, returning the process exit code."""
    if config.command not in _COMMANDS:
        raise ValidationError(f"unknown command '{config.command}'")
    if config.format not in ("table", "csv", "structured"):
        raise ValidationError(f"unknown output format '{config.format}'")
    return _COMMANDS[config.command](config)


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValidationError(f"expected a comma separated integer list, got {text!r}") from None


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ValidationError(f"expected a comma separated number list, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treerisk",
        description="Multi-period risk measures on finite scenario trees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--tree", help="tree file")
        p.add_argument(
            "--process",
            action="append",
            default=[],
            help="process, static or raw process file; repeatable",
        )
        p.add_argument("--measure", help="bi-measure file")
        p.add_argument("--spec", help="risk measure spec file")
        p.add_argument("--alpha", type=float, help="quantile level in (0,1)")
        p.add_argument("--beta", type=float, default=1.0, help="entropic parameter")
        p.add_argument("--depths", help="comma separated refinement depths")
        p.add_argument("--tol", type=float, default=1e-9, help="feasibility tolerance")
        p.add_argument("--seed", type=int, help="seed for randomized procedures")
        p.add_argument("--samples", type=int, help="randomized sample count")
        p.add_argument("--kgrid", help="comma separated tail thresholds")
        p.add_argument(
            "--family",
            choices=("worst-case", "avar"),
            default="worst-case",
            help="canonical refinement family",
        )
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument(
            "--format",
            choices=("table", "csv", "structured"),
            default="table",
            help="report rendering",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        config = RunConfig(
            command=ns.command,
            tree=ns.tree,
            processes=tuple(ns.process),
            measure=ns.measure,
            spec=ns.spec,
            alpha=ns.alpha,
            beta=ns.beta,
            depths=_parse_int_list(ns.depths) if ns.depths else (),
            tol=ns.tol,
            seed=ns.seed,
            samples=ns.samples,
            kgrid=_parse_float_list(ns.kgrid) if ns.kgrid else DEFAULT_K_GRID,
            family=ns.family,
            out=ns.out,
            format=ns.format,
        )
        return run(config)
    except UndefinedQuantityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
