"""Command-line driver.

Exit codes: 0 success, 2 input error, 3 numeric non-convergence,
4 observed verdict differs from a catalog entry's golden verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analyzers, catalog, experiments, report
from .analyzers import SphereSampling
from .catalog import CatalogError, SpecParseError
from .linalg import DEFAULT_TOL, NumericError
from .symbols import SymbolError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4
KINDS = ("l2", "sobolev", "duality", "hardy", "compensation", "greens", "counterexample")


class InputError(Exception):
    pass


def _add_operator_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--catalog", metavar="ID", help="catalog operator id")
    src.add_argument("--spec", metavar="PATH", help="operator spec file")
    p.add_argument("--n", type=int, help="dimension")
    p.add_argument("--m", type=int, help="form degree (hodge)")
    p.add_argument("--k", type=int, help="order (kpowers)")


def _add_common(p, formats):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cancelling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="decide ellipticity, cancellation, cocancellation, weak cancellation")
    _add_operator_args(p)
    _add_common(p, ("text", "json"))
    p.add_argument("--samples", type=int, help="sphere sample count (default max(1024, 64 n^2))")
    p.add_argument("--quadrature-order", type=int, default=64)

    p = sub.add_parser("synthesize-compat", help="print the exact compatibility operator")
    _add_operator_args(p)
    _add_common(p, ("text", "json"))

    p = sub.add_parser("experiment", help="run a spectral inequality experiment")
    p.add_argument("kind", choices=KINDS)
    _add_operator_args(p)
    _add_common(p, ("text", "csv", "json"))
    p.add_argument("--grid", type=int, metavar="N", help="points per axis")
    p.add_argument("--eps-ladder", default="2:7", metavar="A:B", help="scales 2^-A ... 2^-B")
    p.add_argument("--trials", type=int, help="random trials")

    p = sub.add_parser("catalog", help="catalog operations")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("list", help="list catalog entries")
    q.add_argument("--format", choices=("text", "json"), default="text")
    q = csub.add_parser("show", help="print a catalog operator as a spec file")
    q.add_argument("id")
    q.add_argument("--n", type=int)
    q.add_argument("--m", type=int)
    q.add_argument("--k", type=int)

    p = sub.add_parser("spec", help="operator spec files")
    ssub = p.add_subparsers(dest="action", required=True)
    q = ssub.add_parser("validate", help="parse a spec file and report its operator")
    q.add_argument("path")
    return parser


def _load_operator(args):
    """``(operator, catalog id or None, params)``."""
    if args.spec:
        try:
            with open(args.spec, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.spec}: {exc.strerror}") from None
        return catalog.parse_operator(text), None, {}
    params = catalog.resolve_params(args.catalog, n=args.n, m=args.m, k=args.k)
    return catalog.catalog_get(args.catalog, **params), args.catalog, params


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args):
    op, cid, params = _load_operator(args)
    sampling = SphereSampling(count=args.samples, seed=args.seed)
    expected = catalog.expected_verdicts(cid, **params) if cid else None
    rep = report.run_analyze(op, sampling, args.tol, args.quadrature_order, expected)
    _emit(rep.to_json() if args.format == "json" else report.render_text(rep), args.out)
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def cmd_synthesize(args):
    op, _, _ = _load_operator(args)
    L = analyzers.synthesize_compatibility(op)
    if args.format == "json":
        text = json.dumps(report.compatibility_dict(L), indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"compatibility operator of {op.name or '(unnamed)'}: {L.rows}x{L.cols}, order {L.degree}"]
        for i, row in enumerate(L.entries):
            for j, p in enumerate(row):
                if not p.is_zero():
                    lines.append(f"L[{i},{j}] = {p!r}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _ladder_arg(text):
    try:
        a, b = (int(x) for x in text.split(":"))
        return experiments.ladder(a, b)
    except ValueError:
        raise InputError(f"--eps-ladder expects A:B with integers A < B, got {text!r}") from None


def _annihilator(op, cid):
    """``(L, potential)`` for the duality and compensation experiments."""
    ell = analyzers.check_ellipticity(op)
    if ell.verdict.value != analyzers.NO:
        return analyzers.synthesize_compatibility(op), op
    potential = experiments.divergence_potential(op.n) if cid == "divergence" and op.n >= 2 else None
    return op, potential


def run_experiment(kind, op, cid, cfg: experiments.ExperimentConfig, trials=None):
    if kind == "l2":
        return experiments.l2_estimate_experiment(op, cfg, trials or 50)
    if kind == "sobolev":
        return experiments.sobolev_ratio_scan(op, cfg)
    if kind == "hardy":
        return experiments.hardy_ratio_scan(op, cfg)
    if kind == "duality":
        L, _ = _annihilator(op, cid)
        return experiments.duality_ratio_scan(L, cfg, trials or 100)
    if kind == "compensation":
        L, potential = _annihilator(op, cid)
        return experiments.compensation_ratio_scan(L, cfg, trials or 100, potential=potential)
    if kind == "counterexample":
        return experiments.duality_counterexample_scan(cfg)
    if kind == "greens":
        canc = None
        if analyzers.check_ellipticity(op).verdict.value == analyzers.NO:
            raise analyzers.NotEllipticError("Green's kernel needs an injectively elliptic operator")
        canc = analyzers.check_cancelling(op, tol=cfg.tol)
        e = canc.subspace.orthonormal()[:, 0] if canc.subspace.dim else np.eye(op.rows)[0]
        oracle = None
        if cid == "laplacian" and op.n >= 3:
            n = op.n
            oracle = lambda r: experiments.newton_kernel(n, r)  # noqa: E731
        rep = experiments.greens_homogeneity_check(op, e, cfg, oracle=oracle)
        scan = experiments.Scan("greens", op.name)
        scan.summary = rep
        scan.diagnosis = "HOMOGENEOUS" if rep.get("homogeneous") else "NOT-HOMOGENEOUS"
        return scan
    raise InputError(f"unknown experiment {kind!r}")


def _csv(rows):
    if not rows:
        return ""
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k, "")) for k in keys})
    return buf.getvalue()


def _cell(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _scan_text(scan):
    lines = [f"experiment {scan.kind} on {scan.operator or '(unnamed)'}: {scan.diagnosis}"]
    for eps, r in scan.ladder:
        lines.append(f"  eps = {eps:<10.6g} ratio = {r:.6g}")
    for k in sorted(scan.summary):
        v = scan.summary[k]
        lines.append(f"  {k} = {v:.6g}" if isinstance(v, float) else f"  {k} = {v}")
    return "\n".join(lines) + "\n"


def cmd_experiment(args):
    op, cid, _ = _load_operator(args)
    extra = {"trials": args.trials} if args.trials else {}
    cfg = experiments.ExperimentConfig(N=args.grid, eps_ladder=_ladder_arg(args.eps_ladder),
                                       seed=args.seed, tol=args.tol, **extra)
    scan = run_experiment(args.kind, op, cid, cfg, args.trials)
    if args.format == "json":
        doc = {"format_version": report.FORMAT_VERSION, "kind": scan.kind, "operator": scan.operator,
               "diagnosis": scan.diagnosis, "ladder": scan.ladder, "summary": scan.summary, "rows": scan.rows}
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
        _emit(text, args.out)
    elif args.format == "csv":
        _emit(_csv(scan.rows), args.out)
    else:
        if args.out:
            _emit(_csv(scan.rows), args.out)
        sys.stdout.write(_scan_text(scan))
    return EXIT_OK


def cmd_catalog(args):
    if args.action == "show":
        params = catalog.resolve_params(args.id, n=args.n, m=args.m, k=args.k)
        sys.stdout.write(catalog.serialize_operator(catalog.catalog_get(args.id, **params)))
        return EXIT_OK
    entries = []
    for cid in sorted(catalog.CATALOG):
        e = catalog.CATALOG[cid]
        entries.append({"id": cid, "params": list(e.params), "valid": e.valid, "provenance": e.provenance})
    if args.format == "json":
        sys.stdout.write(json.dumps({"format_version": report.FORMAT_VERSION, "entries": entries},
                                    indent=2, sort_keys=True) + "\n")
    else:
        for e in entries:
            params = ", ".join(e["params"]) or "-"
            sys.stdout.write(f"{e['id']:<11} params: {params:<6} valid: {e['valid']:<24} {e['provenance']}\n")
    return EXIT_OK


def cmd_spec(args):
    try:
        with open(args.path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {args.path}: {exc.strerror}") from None
    op = catalog.parse_operator(text)
    canonical = catalog.serialize_operator(op) == text
    sys.stdout.write(f"ok: {op.name or '(unnamed)'} n={op.n} k={op.k} dimV={op.dim_v} dimE={op.dim_e} "
                     f"entries={sum(1 for _ in op.entries())} canonical={'yes' if canonical else 'no'}\n")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "synthesize-compat": cmd_synthesize, "experiment": cmd_experiment,
            "catalog": cmd_catalog, "spec": cmd_spec}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, CatalogError, SpecParseError, SymbolError, analyzers.PreconditionError,
            ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
