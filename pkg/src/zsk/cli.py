"""Batch front door: identity suites, integration runs, node dumps, sweeps.

Exit codes: 0 success, 1 configuration/parse error, 2 tolerance failure in
a verify suite, 3 expression evaluated outside its domain.  Reports are
deterministic for fixed thread/chunk settings; pass --no-timing to zero
the seconds fields when comparing report files byte for byte.  Writing a
report to disk also renders a companion PNG figure unless --no-plot.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import plotting
from .expr import EvalDomainError, ExpressionParseError, parse_expression
from .gzeta import gzeta_invariance_check, neighbor_ratio_summand
from .lattice import (CLOSED_FORM_IDS, PhiParams, closed_form_suite,
                      lattice_sum_pair, lattice_sum_single)
from .parallel import ReductionPlan
from .quadrature import (ModulusOfContinuity, NodeScheme, PeriodicFunction,
                         integral_cf_nodes, integral_derivative_form,
                         integral_lattice_nodes, integral_logM,
                         integral_rational_base, integral_transformed,
                         node_stream)

SCHEMA_VERSION = 1

_LATTICE_SETS = ((1.0, 0.0, 2, 0), (2.0, 0.0, 2, 0), (1.0, 1.0, 3, 1), (2.0, 0.0, 2, 2))


class _CliError(Exception):
    """Configuration problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits with 2
        raise _CliError(message)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run-wide settings shared by every subcommand."""

    threads: int
    chunk: int
    out: str | None
    fmt: str
    timing: bool
    plot: bool

    @property
    def plan(self) -> ReductionPlan:
        return ReductionPlan(threads=self.threads, chunk=self.chunk)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("ZSK_THREADS", "1")))
    p.add_argument("--chunk", type=int, default=65536)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="json")
    p.add_argument("--config", type=str, default=None,
                   help="key=value file; entries act as flag defaults")
    p.add_argument("--no-timing", action="store_true",
                   help="zero the seconds fields (byte-reproducible reports)")
    p.add_argument("--no-plot", action="store_true",
                   help="skip the companion PNG when writing reports")


def _build_parser() -> _Parser:
    parser = _Parser(prog="zsk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run an identity suite")
    p_verify.add_argument("suite", choices=("closed-form", "lattice", "abstract-J",
                                            "gzeta", "all"))
    p_verify.add_argument("--z", type=str, default=None,
                          help="comma list of shifts (suite-specific default)")
    p_verify.add_argument("--n-min", type=int, default=-120)
    p_verify.add_argument("--n-max", type=int, default=60)
    p_verify.add_argument("--tol", type=float, default=None)
    p_verify.add_argument("--M", type=int, default=3)
    p_verify.add_argument("--N", type=int, default=2)
    p_verify.add_argument("--J", type=str, default="0,1,2")
    p_verify.add_argument("--box", type=int, default=400)
    _common_flags(p_verify)

    p_int = sub.add_parser("integrate", help="estimate integral_0^1 of an expression")
    p_int.add_argument("expression")
    p_int.add_argument("--scheme", choices=("plain", "transformed", "lattice",
                                            "cf", "rational", "derivative"),
                       default="plain")
    p_int.add_argument("--M", type=int, default=2)
    p_int.add_argument("--N", type=int, default=1)
    p_int.add_argument("--L", type=int, default=1)
    p_int.add_argument("--groups", type=int, default=100_000)
    p_int.add_argument("--phi", type=str, default=None)
    p_int.add_argument("--phiprime", type=str, default=None)
    p_int.add_argument("--chi", type=str, default=None)
    p_int.add_argument("--g", type=str, default="1")
    p_int.add_argument("--inner-tol", type=float, default=1e-8)
    p_int.add_argument("--lipschitz", type=str, default=None, metavar="a,C",
                       help="declare a Lipschitz modulus (rigorous tail bound)")
    p_int.add_argument("--table", action="store_true",
                       help="also report value at each decade of groups")
    p_int.add_argument("--ref", type=float, default=None,
                       help="reference value for error columns")
    _common_flags(p_int)

    p_nodes = sub.add_parser("nodes", help="dump node/weight rows as CSV")
    p_nodes.add_argument("--scheme", choices=("plain", "transformed", "lattice",
                                              "cf", "rational", "derivative"),
                         default="plain")
    p_nodes.add_argument("--M", type=int, default=2)
    p_nodes.add_argument("--N", type=int, default=1)
    p_nodes.add_argument("--L", type=int, default=1)
    p_nodes.add_argument("--phi", type=str, default=None)
    p_nodes.add_argument("--phiprime", type=str, default=None)
    p_nodes.add_argument("--chi", type=str, default=None)
    p_nodes.add_argument("--g", type=str, default="1")
    p_nodes.add_argument("--count", type=int, default=16)
    _common_flags(p_nodes)

    p_sweep = sub.add_parser("sweep", help="run one op over a parameter grid")
    p_sweep.add_argument("--target", choices=("integrate", "identity"),
                         default="integrate")
    p_sweep.add_argument("--param", type=str, required=True)
    p_sweep.add_argument("--values", type=str, required=True,
                         help="comma list, or start:stop:step, or start:stop:xK")
    p_sweep.add_argument("--expression", type=str, default="1")
    p_sweep.add_argument("--scheme", choices=("plain", "transformed", "lattice",
                                              "cf", "rational", "derivative"),
                         default="plain")
    p_sweep.add_argument("--M", type=int, default=2)
    p_sweep.add_argument("--N", type=int, default=1)
    p_sweep.add_argument("--L", type=int, default=1)
    p_sweep.add_argument("--groups", type=int, default=100_000)
    p_sweep.add_argument("--g", type=str, default="1")
    p_sweep.add_argument("--inner-tol", type=float, default=1e-8)
    p_sweep.add_argument("--ref", type=float, default=None)
    p_sweep.add_argument("--id", dest="identity_id", type=str, default="base2-j0",
                         choices=CLOSED_FORM_IDS)
    p_sweep.add_argument("--z", type=float, default=0.0)
    _common_flags(p_sweep)

    return parser


# ---------------------------------------------------------------------------
# Config file (key = value lines mirroring the flags)
# ---------------------------------------------------------------------------

def _read_config_flags(path: str) -> list[str]:
    flags: list[str] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _CliError(f"config line without '=': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        value = value.strip("\"'")
        key = key.replace("_", "-")
        if value.lower() in ("true", "yes", "on"):
            flags.append(f"--{key}")
        elif value.lower() in ("false", "no", "off"):
            pass  # omitting a store_true flag keeps it off
        else:
            flags.extend([f"--{key}", value])
    return flags


def _apply_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise _CliError("--config needs a path")
    flags = _read_config_flags(argv[idx + 1])
    # config entries become defaults: they go right after the subcommand so
    # explicit command-line flags (parsed later) win
    return argv[:1] + flags + argv[1:]


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _parse_float_list(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part:
            out.append(float(part))
    return out


def _parse_values(text: str) -> list[float]:
    text = text.strip()
    if ":" in text:
        bits = text.split(":")
        if len(bits) != 3:
            raise _CliError(f"bad values spec {text!r}")
        start, stop = float(bits[0]), float(bits[1])
        if bits[2].startswith("x"):
            factor = float(bits[2][1:])
            if factor <= 1 or start <= 0:
                raise _CliError("multiplicative spec needs x>1 and start>0")
            vals = []
            v = start
            while v <= stop * (1 + 1e-12):
                vals.append(v)
                v *= factor
            return vals
        step = float(bits[2])
        if step <= 0:
            raise _CliError("step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(count)]
    vals = _parse_float_list(text)
    if not vals:
        raise _CliError("empty values grid")
    return vals


def _expr_callable(text: str):
    expr = parse_expression(text)
    return lambda x: np.asarray(expr(x=np.asarray(x, dtype=float)), dtype=float) \
        * np.ones_like(np.asarray(x, dtype=float))


def _periodic_from_args(args) -> PeriodicFunction:
    modulus = None
    if getattr(args, "lipschitz", None):
        parts = _parse_float_list(args.lipschitz)
        if len(parts) != 2:
            raise _CliError("--lipschitz needs 'a,C'")
        modulus = ModulusOfContinuity(kind="lipschitz", exponent=parts[0],
                                      constant=parts[1])
    try:
        fn = _expr_callable(args.expression)
        fn(np.array([0.25]))  # parse-time domain probe
    except ExpressionParseError as exc:
        raise _CliError(f"expression parse error: {exc}") from exc
    return PeriodicFunction(fn=fn, modulus=modulus,
                            label=args.expression,
                            smoothness="smooth" if modulus is None else "rough")


def _scheme_from_args(args) -> NodeScheme:
    try:
        if args.scheme == "plain":
            return NodeScheme.plain(args.M)
        if args.scheme == "transformed":
            if not args.phi or not args.phiprime:
                raise _CliError("transformed scheme needs --phi and --phiprime")
            return NodeScheme.transformed(args.M, _expr_callable(args.phi),
                                          _expr_callable(args.phiprime))
        if args.scheme == "lattice":
            if not (args.chi and args.phi and args.phiprime):
                raise _CliError("lattice scheme needs --chi, --phi, --phiprime")
            return NodeScheme.lattice(args.M, args.L, _expr_callable(args.chi),
                                      _expr_callable(args.phi),
                                      _expr_callable(args.phiprime),
                                      _expr_callable(args.g))
        if args.scheme == "cf":
            return NodeScheme.continued_fraction(args.M, args.L,
                                                 _expr_callable(args.g))
        if args.scheme == "rational":
            return NodeScheme.rational_base(args.M, args.N)
        return NodeScheme.derivative_form(args.M, args.N, args.L)
    except (ValueError, ExpressionParseError) as exc:
        raise _CliError(str(exc)) from exc


def _run_scheme(scheme: NodeScheme, f: PeriodicFunction, groups: int,
                inner_tol: float, plan: ReductionPlan):
    if scheme.variant == "plain":
        return integral_logM(f, scheme.M, groups, plan)
    if scheme.variant == "transformed":
        return integral_transformed(f, scheme.phi, scheme.phi_prime, scheme.M,
                                    groups, plan)
    if scheme.variant == "lattice":
        return integral_lattice_nodes(f, scheme.g, scheme.chi, scheme.phi,
                                      scheme.phi_prime, scheme.L, scheme.M,
                                      groups, inner_tol, plan)
    if scheme.variant == "continued-fraction":
        return integral_cf_nodes(f, scheme.g, scheme.L, scheme.M, groups,
                                 inner_tol, plan)
    if scheme.variant == "rational-base":
        return integral_rational_base(f, scheme.M, scheme.N, groups, plan)
    return integral_derivative_form(f, scheme.M, scheme.N, scheme.L, groups, plan)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _timed(cfg: RunConfig, fn):
    t0 = time.perf_counter()
    out = fn()
    dt = time.perf_counter() - t0
    return out, (dt if cfg.timing else 0.0)


def _verify_rows(args, cfg: RunConfig) -> tuple[list[dict], float]:
    rows: list[dict] = []
    suites = [args.suite] if args.suite != "all" else [
        "closed-form", "lattice", "abstract-J", "gzeta"]
    default_tol = {"closed-form": 1e-10, "lattice": 1e-8,
                   "abstract-J": 1e-8, "gzeta": 1e-2}
    for suite in suites:
        tol = args.tol if args.tol is not None else default_tol[suite]
        if suite == "closed-form":
            zs = _parse_float_list(args.z) if args.z else [0.0, 0.25, 0.5, 0.75]
            for z in zs:
                table, seconds = _timed(cfg, lambda z=z: closed_form_suite(
                    z, args.n_min, args.n_max))
                per = seconds / max(len(table), 1)
                for name, value, target, abs_err in table:
                    rows.append({
                        "id": name, "params": {"suite": "closed-form"}, "z": z,
                        "value": value, "target": target, "abs_err": abs_err,
                        "n_range": [args.n_min, args.n_max], "seconds": per,
                        "passed": abs_err <= tol})
        elif suite == "lattice":
            zs = _parse_float_list(args.z) if args.z else [0.0, 0.37]
            for (a, b, M, J) in _LATTICE_SETS:
                p = PhiParams(a, b, M, J)
                vals = {}
                for z in zs:
                    res, seconds = _timed(cfg, lambda z=z: lattice_sum_single(
                        p, z, args.n_min, args.n_max))
                    vals[z] = res.value
                    rel = res.abs_err / abs(res.target)
                    rows.append({
                        "id": f"gamma-a{a:g}-b{b:g}-M{M}-J{J}",
                        "params": {"a": a, "b": b, "M": M, "J": J}, "z": z,
                        "value": res.value, "target": res.target,
                        "abs_err": res.abs_err, "n_range": list(res.n_range),
                        "seconds": seconds, "passed": rel <= tol})
                if len(zs) >= 2:
                    drift = abs(vals[zs[0]] - vals[zs[1]])
                    rows.append({
                        "id": f"gamma-a{a:g}-b{b:g}-M{M}-J{J}-shift-invariance",
                        "params": {"a": a, "b": b, "M": M, "J": J},
                        "z": zs[1], "value": drift, "target": 0.0,
                        "abs_err": drift, "n_range": [args.n_min, args.n_max],
                        "seconds": 0.0, "passed": drift <= 1e-10})
        elif suite == "abstract-J":
            js = [int(v) for v in _parse_float_list(args.J)]
            ws = _parse_float_list(args.z) if args.z else [0.0, 0.3]
            for J in js:
                for w in ws:
                    res, seconds = _timed(cfg, lambda J=J, w=w: lattice_sum_pair(
                        1.0, 0.0, args.M, args.N, J, w, args.n_min, args.n_max))
                    rel = res.abs_err / abs(res.target)
                    rows.append({
                        "id": f"factorial-M{args.M}-N{args.N}-J{J}",
                        "params": {"M": args.M, "N": args.N, "J": J}, "z": w,
                        "value": res.value, "target": res.target,
                        "abs_err": res.abs_err, "n_range": list(res.n_range),
                        "seconds": seconds, "passed": rel <= tol})
        else:  # gzeta
            Z = neighbor_ratio_summand([[1.0, 2.0], [2.0, 1.0]], [0.5, 0.5])
            table, seconds = _timed(cfg, lambda: gzeta_invariance_check(
                Z, [2, 3], args.box, cfg.plan))
            spread = table[0]["spread"]
            for r in table:
                rows.append({
                    "id": f"invariance-ratio-M{r['M']}",
                    "params": {"M": r["M"], "box": args.box}, "z": 0.0,
                    "value": r["ratio"], "target": table[0]["ratio"],
                    "abs_err": spread, "n_range": [1, args.box],
                    "seconds": seconds / len(table),
                    "passed": bool(spread <= tol and r["positive"])})
    worst = max((r["abs_err"] for r in rows), default=0.0)
    return rows, worst


def _cmd_verify(args, cfg: RunConfig) -> int:
    rows, _ = _verify_rows(args, cfg)
    passed = all(r["passed"] for r in rows)
    report = {"schema": SCHEMA_VERSION, "suite": args.suite,
              "passed": passed, "rows": rows}
    text = json.dumps(report, indent=2) + "\n"
    _write_text(cfg.out, text)
    if cfg.out and cfg.plot:
        tol = args.tol if args.tol is not None else 1e-8
        plotting.save_verify_figure(rows, tol, plotting.figure_path(cfg.out))
    if cfg.out:
        print(f"{'PASS' if passed else 'FAIL'}: {len(rows)} rows -> {cfg.out}")
    return 0 if passed else 2


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------

def _cmd_integrate(args, cfg: RunConfig) -> int:
    f = _periodic_from_args(args)
    scheme = _scheme_from_args(args)
    groups_list = [args.groups]
    if args.table:
        g = 1000
        groups_list = []
        while g < args.groups:
            groups_list.append(g)
            g *= 10
        groups_list.append(args.groups)

    rows = []
    for g in groups_list:
        t0 = time.perf_counter()
        res = _run_scheme(scheme, f, g, args.inner_tol, cfg.plan)
        seconds = (time.perf_counter() - t0) if cfg.timing else 0.0
        row = {"groups": g, "value": res.value,
               "tail_estimate": res.tail_estimate,
               "tail_is_heuristic": res.tail_is_heuristic,
               "seconds": seconds}
        if args.ref is not None:
            row["error"] = abs(res.value - args.ref)
        rows.append(row)
        label = "heuristic" if res.tail_is_heuristic else "bound"
        print(f"groups={g} value={res.value!r} tail({label})={res.tail_estimate:.3e}"
              f" seconds={seconds:.3f}")

    if cfg.out:
        if cfg.fmt == "json":
            _write_text(cfg.out, json.dumps(
                {"schema": SCHEMA_VERSION, "expression": args.expression,
                 "scheme": args.scheme, "rows": rows}, indent=2) + "\n")
        else:
            _write_text(cfg.out, _csv_text(rows))
        if cfg.plot and len(rows) > 1:
            plotting.save_convergence_figure(
                [r["groups"] for r in rows], [r["value"] for r in rows],
                args.ref, plotting.figure_path(cfg.out))
    return 0


def _csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _csv_num(v) for k, v in r.items()})
    return buf.getvalue()


def _csv_num(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return v


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------

def _cmd_nodes(args, cfg: RunConfig) -> int:
    scheme = _scheme_from_args(args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    has_aux = scheme.variant == "continued-fraction"
    writer.writerow(["group", "k", "node", "weight"] + (["g_value"] if has_aux else []))
    for row in node_stream(scheme, args.count):
        out = [row.group, row.k, f"{row.node:.17g}", f"{row.weight:.17g}"]
        if has_aux:
            out.append(f"{row.aux:.17g}")
        writer.writerow(out)
    _write_text(cfg.out, buf.getvalue())
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _cmd_sweep(args, cfg: RunConfig) -> int:
    values = _parse_values(args.values)
    if not values:
        raise _CliError("empty sweep grid")
    rows = []
    if args.target == "identity":
        if args.param != "z":
            raise _CliError("identity sweeps support --param z")
        from .lattice import _CLOSED_FORMS
        fn = dict(_CLOSED_FORMS)[args.identity_id]
        for z in values:
            table = closed_form_suite(z)
            value = dict((name, v) for name, v, _, _ in table)[args.identity_id]
            rows.append({"z": z, "value": value, "error": abs(value - 1.0),
                         "seconds": 0.0})
        xkey = "z"
    else:
        f = _periodic_from_args(args)
        scheme = _scheme_from_args(args)
        if args.param != "groups":
            raise _CliError("integrate sweeps support --param groups")
        for v in values:
            g = int(v)
            t0 = time.perf_counter()
            res = _run_scheme(scheme, f, g, args.inner_tol, cfg.plan)
            seconds = (time.perf_counter() - t0) if cfg.timing else 0.0
            err = abs(res.value - args.ref) if args.ref is not None \
                else res.tail_estimate
            rows.append({"groups": g, "value": res.value, "error": err,
                         "seconds": seconds})
        xkey = "groups"

    errs = [r["error"] for r in rows]
    trend = "decreasing" if all(b <= a * 1.05 + 1e-18 for a, b in zip(errs, errs[1:])) \
        else "not monotone"
    text = _csv_text(rows)
    _write_text(cfg.out, text)
    print(f"trend: {trend} over {len(rows)} points")
    if cfg.out and cfg.plot:
        plotting.save_sweep_figure([r[xkey] for r in rows], errs, xkey,
                                   plotting.figure_path(cfg.out))
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        argv = _apply_config(argv)
        args = parser.parse_args(argv)
        cfg = RunConfig(threads=args.threads, chunk=args.chunk, out=args.out,
                        fmt=args.fmt, timing=not args.no_timing,
                        plot=not args.no_plot)
        if args.command == "verify":
            return _cmd_verify(args, cfg)
        if args.command == "integrate":
            return _cmd_integrate(args, cfg)
        if args.command == "nodes":
            return _cmd_nodes(args, cfg)
        return _cmd_sweep(args, cfg)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExpressionParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except EvalDomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
