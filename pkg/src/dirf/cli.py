"""Command-line interface: run tests, calibration simulations, validations.

Subcommands:
  test      one hypothesis test on a CSV dataset; prints a report
  simulate  Monte Carlo calibration under the null; prints the report
  validate  randomized quadrature-vs-closed-form cross-check

Data formats (RFC-4180-style CSV, mandatory header row):
  exp-rates, norm-var   columns `group,value`; groups labeled 1 and 2
  linreg                first column `y`, remaining columns predictors;
                        pass --intercept to prepend a constant column
  mvn-mean              one column per coordinate

Hypotheses: scalar models take `--psi VALUE`; mvn-mean takes a comma list
`--psi v1,v2,...`; linreg takes `--hypothesis FILE` pointing at a JSON
document {"A": [[...]], "psi": [...]}.

JSON output is deterministic: keys are sorted and floats use the shortest
round-trip decimal form, so identical runs are byte-identical.  Exit codes:
0 success, 2 degenerate hypothesis (p = 1, report still printed), 1 error.
The DIRF_THREADS environment variable caps simulation workers.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import MODELS, directional_test, get_model
from .exceptions import DirfError, ParseError
from .linreg import LinearConstraint, RegressionData
from .mvn_mean import MvnData
from .exp_rates import ExpRatesData
from .norm_var import NormVarData
from .simulate import METHODS, SimConfig, cross_validate, default_params, run_calibration

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DEGENERATE = 2

_METHOD_ALIASES = {"quadrature": "quadrature", "closed-form": "closed_form", "both": "both"}


@dataclass(frozen=True)
class RunSpec:
    """A fully parsed CLI invocation."""

    subcommand: str  # test | simulate | validate
    model: str | None = None
    data_path: str | None = None
    hypothesis_path: str | None = None
    psi: str | None = None
    method: str = "both"
    output_format: str = "json"
    seed: int = 0
    replicates: int = 1000
    cases: int = 200
    tolerance: float = 1e-7
    intercept: bool = False
    methods: tuple[str, ...] | None = None
    params_json: str | None = None


def _jsonable(value: Any) -> Any:
    """Make a report JSON-clean: numpy scalars to Python, non-finite to null."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def _emit_json(report: dict) -> None:
    sys.stdout.write(json.dumps(_jsonable(report), sort_keys=True, indent=2))
    sys.stdout.write("\n")


def parse_dataset(path: str, model: str, intercept: bool = False):
    """Read a dataset CSV for the given model (see module docstring)."""
    try:
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise ParseError(f"{path}: no data rows after the header")

    def fail(line: int, message: str):
        raise ParseError(f"{path}: line {line}: {message}")

    if model in ("exp-rates", "norm-var"):
        if [h.strip().lower() for h in header] != ["group", "value"]:
            raise ParseError(f"{path}: expected header 'group,value', got {header!r}")
        groups: dict[str, list[float]] = {}
        for i, row in enumerate(body, start=2):
            if len(row) != 2:
                fail(i, f"expected 2 fields, got {len(row)}")
            label = row[0].strip()
            try:
                value = float(row[1])
            except ValueError:
                fail(i, f"value {row[1]!r} is not a number")
            if label not in ("1", "2"):
                fail(i, f"group label must be 1 or 2, got {label!r}")
            groups.setdefault(label, []).append(value)
        if set(groups) != {"1", "2"}:
            raise ParseError(f"{path}: both groups 1 and 2 must be present")
        if model == "exp-rates":
            return ExpRatesData.from_samples(groups["1"], groups["2"])
        return NormVarData.from_samples(groups["1"], groups["2"])

    if model == "linreg":
        if not header or header[0].strip().lower() != "y":
            raise ParseError(f"{path}: first column must be 'y', got {header!r}")
        if len(header) < 2 and not intercept:
            raise ParseError(f"{path}: no predictor columns")
        y, xs = [], []
        width = len(header)
        for i, row in enumerate(body, start=2):
            if len(row) != width:
                fail(i, f"expected {width} fields, got {len(row)}")
            try:
                vals = [float(cell) for cell in row]
            except ValueError:
                fail(i, f"non-numeric field in {row!r}")
            y.append(vals[0])
            xs.append(vals[1:])
        x = np.asarray(xs, dtype=float)
        if intercept:
            x = np.column_stack([np.ones(len(y)), x]) if x.size else np.ones((len(y), 1))
        return RegressionData(np.asarray(y), x)

    if model == "mvn-mean":
        width = len(header)
        data = []
        for i, row in enumerate(body, start=2):
            if len(row) != width:
                fail(i, f"expected {width} fields, got {len(row)}")
            try:
                data.append([float(cell) for cell in row])
            except ValueError:
                fail(i, f"non-numeric field in {row!r}")
        return MvnData(np.asarray(data, dtype=float))

    raise ParseError(f"unknown model {model!r}")


def _parse_hypothesis(spec: RunSpec, model: str):
    if model == "linreg":
        if not spec.hypothesis_path:
            raise ParseError("linreg requires --hypothesis FILE with JSON {\"A\": ..., \"psi\": ...}")
        try:
            with open(spec.hypothesis_path) as handle:
                doc = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot parse hypothesis file: {exc}") from exc
        if not isinstance(doc, dict) or "A" not in doc or "psi" not in doc:
            raise ParseError("hypothesis JSON must contain keys 'A' and 'psi'")
        return LinearConstraint(np.asarray(doc["A"], dtype=float),
                                np.atleast_1d(np.asarray(doc["psi"], dtype=float)))
    if spec.psi is None:
        raise ParseError(f"model {model} requires --psi")
    if model == "mvn-mean":
        try:
            return np.array([float(v) for v in spec.psi.split(",")])
        except ValueError:
            raise ParseError(f"--psi must be a comma list of numbers, got {spec.psi!r}") from None
    try:
        return float(spec.psi)
    except ValueError:
        raise ParseError(f"--psi must be a number, got {spec.psi!r}") from None


def _workers_from_env() -> int:
    raw = os.environ.get("DIRF_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ParseError(f"DIRF_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ParseError(f"DIRF_THREADS must be a positive integer, got {raw!r}")
    return value


def _run_test(spec: RunSpec) -> int:
    model = get_model(spec.model)
    data = parse_dataset(spec.data_path, spec.model, intercept=spec.intercept)
    hypothesis = _parse_hypothesis(spec, spec.model)
    method = _METHOD_ALIASES.get(spec.method)
    if method is None:
        raise ParseError(f"--method must be one of {sorted(_METHOD_ALIASES)}")
    outcome = directional_test(model, data, hypothesis, method)
    result = outcome.result
    diag = outcome.diagnostics
    f_stat, f_df = model.f_statistic(outcome.fit)
    report = {
        "schema_version": 1,
        "model": spec.model,
        "method": result.method,
        "p": result.p,
        "directional": {
            "p": result.p,
            "numerator": result.numerator,
            "denominator": result.denominator,
            "t_max": result.t_max,
            "est_abs_error": result.est_abs_error,
        },
        "comparison": {
            "wald": model.wald_statistic(outcome.fit),
            "lrt": model.lrt_statistic(outcome.fit),
            "df": model.dim_interest(outcome.fit),
        },
        "f_test": {"statistic": f_stat, "df": list(f_df)},
        "fit": model.fit_summary(outcome.fit),
        "degenerate": diag.degenerate,
        "warnings": list(diag.warnings),
    }
    if diag.closed_form_p is not None:
        report["closed_form_p"] = diag.closed_form_p
    if diag.discrepancy is not None:
        report["discrepancy"] = diag.discrepancy
    if spec.output_format == "json":
        _emit_json(report)
    else:
        _emit_test_text(report)
    return EXIT_DEGENERATE if diag.degenerate else EXIT_OK


def _emit_test_text(report: dict) -> None:
    out = sys.stdout
    out.write(f"model: {report['model']}\n")
    out.write(f"directional p-value: {report['p']!r} (method {report['method']})\n")
    if "closed_form_p" in report:
        out.write(f"closed-form p-value: {report['closed_form_p']!r}\n")
    if "discrepancy" in report:
        out.write(f"quadrature/closed-form discrepancy: {report['discrepancy']!r}\n")
    f = report["f_test"]
    out.write(f"F statistic: {f['statistic']!r}  df: ({f['df'][0]!r}, {f['df'][1]!r})\n")
    c = report["comparison"]
    out.write(f"wald: {c['wald']!r}  lrt: {c['lrt']!r}  df: {c['df']}\n")
    out.write(f"t_max: {report['directional']['t_max']!r}\n")
    for w in report["warnings"]:
        out.write(f"warning: {w}\n")


def _run_simulate(spec: RunSpec) -> int:
    params, hypothesis = default_params(spec.model)
    if spec.psi is not None:
        # move the default generating parameters onto the requested null;
        # explicit --params overrides below still win (and are re-checked)
        if spec.model == "exp-rates":
            hypothesis = float(spec.psi)
            params = {**params, "theta": [hypothesis * params["theta"][1], params["theta"][1]]}
        elif spec.model == "norm-var":
            hypothesis = float(spec.psi)
            params = {**params, "sigma2": [hypothesis * params["sigma2"][1], params["sigma2"][1]]}
        elif spec.model == "mvn-mean":
            hypothesis = [float(v) for v in spec.psi.split(",")]
            params = {**params, "mean": list(hypothesis)}
            if len(hypothesis) != len(params["cov"]):
                params = {**params, "cov": np.eye(len(hypothesis)).tolist()}
        else:
            raise ParseError("linreg simulation hypothesis goes in --params JSON")
    if spec.params_json:
        try:
            doc = json.loads(spec.params_json)
        except json.JSONDecodeError as exc:
            raise ParseError(f"--params is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("--params must be a JSON object")
        hypothesis = doc.pop("hypothesis", hypothesis)
        params = {**params, **doc}
    methods = spec.methods
    if methods is None:
        methods = (
            ("directional_closed", "one_tailed_f")
            if spec.model in ("exp-rates", "norm-var")
            else ("directional_closed",)
        )
    config = SimConfig(
        model=spec.model,
        params=params,
        hypothesis=hypothesis,
        r=spec.replicates,
        seed=spec.seed,
        methods=methods,
    )
    report = run_calibration(config, workers=_workers_from_env()).to_json_dict()
    if spec.output_format == "json":
        _emit_json(report)
    else:
        out = sys.stdout
        out.write(f"model: {report['model']}  replicates: {report['replicates']}  seed: {report['seed']}\n")
        out.write(f"degenerate replicates: {report['degenerate_count']}\n")
        for name, cal in report["methods"].items():
            rates = "  ".join(f"{k}: {v:.4f}" for k, v in sorted(cal["rejection_rates"].items()))
            out.write(f"{name}: ks={cal['ks']!r}  rejection {rates}\n")
    return EXIT_OK


def _run_validate(spec: RunSpec) -> int:
    names = sorted(MODELS) if spec.model in (None, "all") else [spec.model]
    for name in names:
        get_model(name)  # validates the name
    report = cross_validate(names, spec.cases, spec.tolerance, spec.seed)
    if spec.output_format == "json":
        _emit_json(report)
    else:
        out = sys.stdout
        for name, entry in report["models"].items():
            status = "ok" if entry["pass"] else "FAIL"
            out.write(
                f"{name}: max rel discrepancy {entry['max_rel_discrepancy']:.3e} "
                f"({entry['degenerate']} degenerate) {status}\n"
            )
        out.write("overall: " + ("ok" if report["pass"] else "FAIL") + "\n")
    return EXIT_OK if report["pass"] else EXIT_ERROR


def run(spec: RunSpec) -> int:
    """Execute a parsed invocation; returns the process exit code."""
    if spec.subcommand == "test":
        return _run_test(spec)
    if spec.subcommand == "simulate":
        return _run_simulate(spec)
    if spec.subcommand == "validate":
        return _run_validate(spec)
    raise ParseError(f"unknown subcommand {spec.subcommand!r}")


def _add_format_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--json", dest="format", action="store_const", const="json",
                        help="emit JSON (default)")
    parser.add_argument("--text", dest="format", action="store_const", const="text",
                        help="emit a human-readable summary")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dirf",
        description="Directional tests for vector hypotheses in exponential-family "
        "models, with exact F-test cross-checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_test = sub.add_parser("test", help="run one hypothesis test on a CSV dataset")
    p_test.add_argument("--model", required=True, choices=sorted(MODELS))
    p_test.add_argument("--data", required=True, help="CSV dataset path")
    p_test.add_argument("--psi", help="hypothesis value (scalar, or comma list for mvn-mean)")
    p_test.add_argument("--hypothesis", help="JSON file with A and psi (linreg)")
    p_test.add_argument("--method", choices=sorted(_METHOD_ALIASES), default="both")
    p_test.add_argument("--intercept", action="store_true",
                        help="prepend a constant column to the design (linreg)")
    _add_format_flags(p_test)

    p_sim = sub.add_parser("simulate", help="Monte Carlo calibration under the null")
    p_sim.add_argument("--model", required=True, choices=sorted(MODELS))
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--psi", help="null hypothesis value (defaults per model)")
    p_sim.add_argument("--params", help="JSON object overriding the generating parameters")
    p_sim.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    _add_format_flags(p_sim)

    p_val = sub.add_parser("validate", help="randomized quadrature vs closed-form check")
    p_val.add_argument("--model", default="all", choices=sorted(MODELS) + ["all"])
    p_val.add_argument("--cases", type=int, default=200)
    p_val.add_argument("--tol", type=float, default=1e-7)
    p_val.add_argument("--seed", type=int, default=0)
    _add_format_flags(p_val)
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    methods = None
    if getattr(args, "methods", None):
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    return RunSpec(
        subcommand=args.subcommand,
        model=getattr(args, "model", None),
        data_path=getattr(args, "data", None),
        hypothesis_path=getattr(args, "hypothesis", None),
        psi=getattr(args, "psi", None),
        method=getattr(args, "method", "both"),
        output_format=getattr(args, "format", "json"),
        seed=getattr(args, "seed", 0),
        replicates=getattr(args, "reps", 1000),
        cases=getattr(args, "cases", 200),
        tolerance=getattr(args, "tol", 1e-7),
        intercept=getattr(args, "intercept", False),
        methods=methods,
        params_json=getattr(args, "params", None),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(spec_from_args(args))
    except DirfError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
