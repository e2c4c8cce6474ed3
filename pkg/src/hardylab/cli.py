"""Command-line front end.

Exit status: 0 success, 1 scientific verdict failure, 2 usage or input
error (with a JSON error object on stderr).  Outputs are written atomically
and are byte-identical for identical inputs.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources

import jsonschema

from . import constants, identities, rayleigh, spectrum, supersolution
from .errors import HardyLabError, SchemaError
from .geometry import DomainSpec, PotentialSpec
from .quadrature import GridSpec

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VERDICT, EXIT_INPUT = 0, 1, 2
COMMANDS = ("constants", "certify", "rayleigh-sweep", "eig-estimate", "check-identities")


# --------------------------------------------------------------------------
# Schemas and job configs
# --------------------------------------------------------------------------


def load_schema(name):
    text = resources.files("hardylab").joinpath("schemas", name).read_text()
    return json.loads(text)


def job_schema():
    """The job schema with the descriptor schemas spliced into its $defs."""
    schema = load_schema("job.schema.json")
    for key in ("domain", "potential", "ansatz", "grid"):
        sub = copy.deepcopy(load_schema(f"{key}.schema.json"))
        sub.pop("$schema", None)
        schema["$defs"].update(sub.pop("$defs", {}))
        schema["$defs"][key] = sub
    return schema


@dataclass(frozen=True)
class JobConfig:
    command: str
    parameters: dict
    output: str | None = None
    seed: int = 0


def _path(parts):
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


def _semantic_violations(obj):
    """Preconditions JSON Schema cannot express."""
    out = []
    params = obj.get("parameters") if isinstance(obj.get("parameters"), dict) else {}
    cmd = obj.get("command")
    if cmd == "rayleigh-sweep":
        eps = params.get("eps")
        if isinstance(eps, list) and all(isinstance(e, (int, float)) for e in eps):
            if any(b >= a for a, b in zip(eps, eps[1:])):
                out.append({"path": "$.parameters.eps",
                            "message": "sweep precondition: eps list must be strictly decreasing"})
        if params.get("family") == "HardyInterior" and isinstance(params.get("d"), int) \
                and params["d"] < 3:
            out.append({"path": "$.parameters.d", "message": "HardyInterior needs d >= 3"})
    if cmd == "constants":
        lo, hi = params.get("d_min"), params.get("d_max")
        if isinstance(lo, int) and isinstance(hi, int) and hi < lo:
            out.append({"path": "$.parameters.d_max", "message": "d_max must be >= d_min"})
    if cmd == "eig-estimate":
        delta, R = params.get("delta", 1e-6), params.get("R", 1.0)
        if isinstance(delta, (int, float)) and isinstance(R, (int, float)) and delta >= R:
            out.append({"path": "$.parameters.delta", "message": "delta must be < R"})
    return out


def schema_validate(raw):
    """Parse and fully validate a job; every violation is reported with its path."""
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError([{"path": "$", "message": f"invalid JSON: {exc}"}]) from None
    validator = jsonschema.Draft202012Validator(job_schema())
    violations = []
    for err in sorted(validator.iter_errors(obj), key=lambda e: list(map(str, e.absolute_path))):
        violations.append({"path": _path(err.absolute_path), "message": err.message})
    if isinstance(obj, dict):
        violations += _semantic_violations(obj)
    if violations:
        raise SchemaError(violations)
    return JobConfig(obj["command"], obj["parameters"], obj.get("output"), obj.get("seed", 0))


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------


def fmt(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "%.17g" % x
    if x is None:
        return ""
    return str(x)


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text, output):
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)


def error_json(exc):
    body = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SchemaError):
        body["violations"] = exc.violations
    return json.dumps({"schema_version": SCHEMA_VERSION, "error": body}, sort_keys=True)


# --------------------------------------------------------------------------
# Commands: each returns (text, exit status)
# --------------------------------------------------------------------------


def cmd_constants(params, seed=0):
    rows = constants.constants_table(params["d_min"], params["d_max"], params.get("n_max", 6))
    body = [[r.setting, r.d, r.n, r.value, r.attained_claim.value] for r in rows]
    return to_csv(["setting", "d", "n", "value", "attained_claim"], body), EXIT_OK


def cmd_certify(params, seed=0):
    check = params.get("check", "hardy")
    expected = params.get("expected_verdict", "CertifiedNonnegative")
    grid = GridSpec.from_json(params["grid"]) if "grid" in params else None
    if check == "fall_local":
        cert = supersolution.certify_fall_local(params["d"], params.get("r", 0.05), grid)
    else:
        W = PotentialSpec.from_json(params["potential"])
        phi = supersolution.SupersolutionAnsatz.from_json(params["ansatz"])
        if check == "rellich":
            cert = supersolution.certify_rellich(W, phi, grid)
        else:
            domain = DomainSpec.from_json(params["domain"]) if "domain" in params else None
            cert = supersolution.certify_hardy(W, phi, domain, grid)
    out = {"schema_version": SCHEMA_VERSION, "certificate": cert.to_json(),
           "expected_verdict": expected}
    status = EXIT_OK if cert.verdict.value == expected else EXIT_VERDICT
    return to_json(out), status


def cmd_rayleigh_sweep(params, seed=0):
    cutoff = rayleigh.CutoffSpec(params.get("cutoff_kind", "SmoothBump"),
                                 params.get("cutoff_R", 1.0))
    family = rayleigh.MinimizingFamily(params["family"], params["d"], cutoff)
    res = rayleigh.sweep(family, params["eps"])
    mu = family.limit_constant()
    rows = [[r.eps, r.numerator.value, r.denominator.value, r.quotient, r.error]
            for r in res.reports]
    ok = res.monotone and all(r.quotient >= mu - r.error for r in res.reports)
    return to_csv(["eps", "numerator", "denominator", "quotient", "err"], rows), \
        EXIT_OK if ok else EXIT_VERDICT


def cmd_eig_estimate(params, seed=0):
    d = params["d"]
    nodes, delta, R = params.get("nodes", 2048), params.get("delta", 1e-6), params.get("R", 1.0)
    est = spectrum.hardy_constant_estimate(d, nodes=nodes, delta=delta, R=R)
    mu = constants.hardy_interior_constant(d).value
    text = to_csv(["d", "nodes", "delta", "estimate", "residual"],
                  [[d, nodes, float(delta), est.value, est.residual_norm]])
    return text, EXIT_OK if est.value >= mu - 1e-6 else EXIT_VERDICT


def cmd_check_identities(params, seed=0):
    results = identities.run_suite(params["which"], params["d"], params.get("count", 50),
                                   params.get("seed", seed), params.get("params"))
    rows = [res.row(i) for i, res in results]
    header = ["identity", "seed_index", "lhs", "rhs", "gap_or_margin", "tolerance", "pass"]
    return to_csv(header, rows), EXIT_OK if all(r.passed for _, r in results) else EXIT_VERDICT


HANDLERS = {"constants": cmd_constants, "certify": cmd_certify,
            "rayleigh-sweep": cmd_rayleigh_sweep, "eig-estimate": cmd_eig_estimate,
            "check-identities": cmd_check_identities}


def run(config):
    """Execute a validated job; returns the exit status."""
    text, status = HANDLERS[config.command](config.parameters, config.seed)
    emit(text, config.output)
    return status


# --------------------------------------------------------------------------
# argparse
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(error_json(SchemaError([{"path": "argv", "message": message}])) + "\n")
        raise SystemExit(EXIT_INPUT)


def _float_list(text):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser():
    p = _Parser(prog="hardylab", description="Hardy/Rellich constant laboratory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="CSV table of closed-form constants")
    c.add_argument("--d-min", type=int, required=True)
    c.add_argument("--d-max", type=int, required=True)
    c.add_argument("--n-max", type=int, default=6)

    c = sub.add_parser("certify", help="super-solution certificate from a JSON job file")
    c.add_argument("--job", required=True)

    c = sub.add_parser("rayleigh-sweep", help="quotients of a minimizing family")
    c.add_argument("--family", required=True, choices=rayleigh.FAMILIES)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--eps", type=_float_list, required=True, help="e.g. 0.2,0.1,0.05")
    c.add_argument("--cutoff-R", type=float, default=1.0)

    c = sub.add_parser("eig-estimate", help="discrete radial Hardy eigenvalue")
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--nodes", type=int, default=2048)
    c.add_argument("--delta", type=float, default=1e-6)
    c.add_argument("--R", type=float, default=1.0)

    c = sub.add_parser("check-identities", help="identities and inequalities on random u")
    c.add_argument("--which", required=True,
                   choices=identities.IDENTITIES + identities.INEQUALITIES)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--count", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("run", help="run a full JobConfig file")
    c.add_argument("--job", required=True)

    for name, sp in sub.choices.items():
        sp.add_argument("--output", default=None, help="write here (atomically) instead of stdout")
    return p


def _config_from_args(args):
    if args.command == "run":
        with open(args.job) as fh:
            config = schema_validate(fh.read())
        if args.output:
            config = JobConfig(config.command, config.parameters, args.output, config.seed)
        return config
    if args.command == "certify":
        with open(args.job) as fh:
            raw = fh.read()
        try:
            params = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError([{"path": "$", "message": f"invalid JSON: {exc}"}]) from None
        job = {"command": "certify", "parameters": params}
    elif args.command == "constants":
        job = {"command": "constants",
               "parameters": {"d_min": args.d_min, "d_max": args.d_max, "n_max": args.n_max}}
    elif args.command == "rayleigh-sweep":
        job = {"command": "rayleigh-sweep",
               "parameters": {"family": args.family, "d": args.d, "eps": args.eps,
                              "cutoff_R": args.cutoff_R}}
    elif args.command == "eig-estimate":
        job = {"command": "eig-estimate",
               "parameters": {"d": args.d, "nodes": args.nodes, "delta": args.delta,
                              "R": args.R}}
    else:
        job = {"command": "check-identities",
               "parameters": {"which": args.which, "d": args.d, "count": args.count,
                              "seed": args.seed}}
    if args.output:
        job["output"] = args.output
    return schema_validate(json.dumps(job))


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        return run(config)
    except (HardyLabError, ValueError, OSError) as exc:
        sys.stderr.write(error_json(exc) + "\n")
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
