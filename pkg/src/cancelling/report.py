"""Full analysis of one operator, as a deterministic machine report plus text."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import analyzers
from .analyzers import NO, SphereSampling, Verdict
from .linalg import DEFAULT_TOL
from .symbols import PolyMatrix, SymbolOperator

FORMAT_VERSION = 1


def _floats(a):
    """Nested lists of floats with negative zeros cleared."""
    return (np.asarray(a, dtype=float) + 0.0).tolist()


def _frac(c):
    return str(c)


@dataclass
class AnalysisReport:
    operator: dict
    config: dict
    verdicts: dict
    min_singular_value: float
    argmin: list
    ellipticity_constant: float
    max_singular_value: float
    witness: list | None = None
    intersection: dict | None = None
    cocancelling_subject: str = ""
    cocancelling_intersection: dict | None = None
    weak_cancellation: dict | None = None
    compatibility: dict | None = None
    stabilization: dict = field(default_factory=dict)
    expected: dict | None = None
    mismatches: list = field(default_factory=list)

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "operator": self.operator,
            "config": self.config,
            "verdicts": self.verdicts,
            "min_singular_value": self.min_singular_value,
            "argmin": self.argmin,
            "ellipticity_constant": self.ellipticity_constant,
            "max_singular_value": self.max_singular_value,
            "witness": self.witness,
            "intersection_subspace": self.intersection,
            "cocancelling_subject": self.cocancelling_subject,
            "cocancelling_intersection": self.cocancelling_intersection,
            "weak_cancellation_matrix": self.weak_cancellation,
            "compatibility": self.compatibility,
            "stabilization": self.stabilization,
            "expected": self.expected,
            "mismatches": self.mismatches,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _subspace_dict(sub):
    basis = sub.orthonormal()
    return {"dim": int(sub.dim), "ambient": int(sub.ambient), "basis": _floats(basis.T)}


def _verdict(v: Verdict | None, note=""):
    if v is None:
        return {"value": "not-applicable", "certified": False, "note": note}
    return v.to_dict()


def run_analyze(op: SymbolOperator, sampling: SphereSampling | None = None, tol=DEFAULT_TOL,
                quadrature_order=64, expected: dict | None = None) -> AnalysisReport:
    """Ellipticity, cancellation, compatibility synthesis, cocancellation and weak cancellation.

    For an operator that is not elliptic the cocancelling verdict is about
    the operator itself, read as an annihilator.
    """
    sampling = sampling or SphereSampling()
    ell = analyzers.check_ellipticity(op, sampling, tol)
    verdicts = {"elliptic": ell.verdict.to_dict()}
    report = AnalysisReport(
        operator={"name": op.name, "n": op.n, "k": op.k, "dimV": op.dim_v, "dimE": op.dim_e},
        config={"samples": sampling.resolve(op.n), "scheme": sampling.scheme, "seed": sampling.seed,
                "refine_starts": sampling.refine_starts, "tol": tol, "quadrature_order": quadrature_order},
        verdicts=verdicts,
        min_singular_value=ell.min_singular_value,
        argmin=_floats(ell.argmin),
        ellipticity_constant=ell.constant,
        max_singular_value=ell.max_singular_value,
        witness=[_frac(c) for c in ell.witness] if ell.witness is not None else None,
    )
    if ell.verdict.value == NO:
        verdicts["cancelling"] = _verdict(None, "operator is not injectively elliptic")
        coc = analyzers.check_cocancelling(op, sampling, tol)
        verdicts["cocancelling"] = coc.verdict.to_dict()
        report.cocancelling_subject = "operator"
        report.cocancelling_intersection = _subspace_dict(coc.subspace)
        verdicts["weakly_cancelling"] = _verdict(None, "operator is not injectively elliptic")
        report.stabilization = {"cocancelling": _trace(coc)}
    else:
        L = analyzers.synthesize_compatibility(op)
        report.compatibility = {"shape": list(L.shape), "order": L.degree}
        canc = analyzers.check_cancelling(op, sampling, tol, ellipticity=ell, compatibility=L)
        verdicts["cancelling"] = canc.verdict.to_dict()
        report.intersection = _subspace_dict(canc.subspace)
        coc = analyzers.check_cocancelling(L, sampling, tol)
        verdicts["cocancelling"] = coc.verdict.to_dict()
        report.cocancelling_subject = "compatibility operator"
        report.cocancelling_intersection = _subspace_dict(coc.subspace)
        report.stabilization = {"cancelling": _trace(canc), "cocancelling": _trace(coc)}
        if op.k >= op.n and op.n <= 4:
            weak = analyzers.check_weak_cancellation(op, canc.subspace, quadrature_order, tol)
            verdicts["weakly_cancelling"] = weak.verdict.to_dict()
            report.weak_cancellation = {"integrals": _floats(weak.integrals), "scale": weak.scale,
                                        "order": weak.order}
        else:
            reason = "needs k >= n" if op.k < op.n else "quadrature implemented for n <= 4"
            verdicts["weakly_cancelling"] = _verdict(None, reason)
    if expected is not None:
        report.expected = dict(expected)
        for key, want in expected.items():
            got = verdicts.get(key, {}).get("value")
            if got != want:
                report.mismatches.append({"verdict": key, "expected": want, "observed": got})
    return report


def _trace(result):
    return {"samples_used": result.samples_used, "rounds_stable": result.rounds_stable,
            "dimension_trace": list(result.trace), "ambiguous": result.ambiguous}


def _fmt_vector(v):
    # round first so round-off below the printed digits never shows as -0.000000
    return "(" + ", ".join(f"{round(float(x), 6) + 0.0:.6f}" for x in v) + ")"


def render_text(report: AnalysisReport) -> str:
    op = report.operator
    lines = [f"operator {op['name'] or '(unnamed)'}: n={op['n']} k={op['k']} dimV={op['dimV']} dimE={op['dimE']}"]
    for key in ("elliptic", "cancelling", "cocancelling", "weakly_cancelling"):
        v = report.verdicts.get(key)
        if v is None:
            continue
        tag = " [certified]" if v["certified"] else ""
        lines.append(f"  {key:<18} {v['value']}{tag}  {v['note']}")
    lines.append(f"  min singular value  {report.min_singular_value:.12g} at xi = "
                 + _fmt_vector(report.argmin))
    lines.append(f"  ellipticity const   {report.ellipticity_constant:.12g}")
    if report.witness:
        lines.append(f"  rank-drop witness   ({', '.join(report.witness)})")
    if report.intersection is not None:
        dim = report.intersection["dim"]
        lines.append(f"  image intersection  dim {dim}")
        for b in report.intersection["basis"]:
            lines.append("    " + _fmt_vector(b))
    if report.cocancelling_intersection is not None:
        lines.append(f"  kernel intersection dim {report.cocancelling_intersection['dim']}"
                     f" ({report.cocancelling_subject})")
    if report.compatibility is not None:
        shape = report.compatibility["shape"]
        lines.append(f"  compatibility op    {shape[0]}x{shape[1]}, order {report.compatibility['order']}")
    if report.weak_cancellation is not None:
        for row in report.weak_cancellation["integrals"]:
            lines.append("  sphere integral     (" + ", ".join(f"{x:.10g}" for x in row) + ")")
    for m in report.mismatches:
        lines.append(f"  MISMATCH {m['verdict']}: expected {m['expected']}, observed {m['observed']}")
    return "\n".join(lines) + "\n"


def compatibility_dict(L: PolyMatrix) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "n": L.n, "rows": L.rows, "cols": L.cols, "order": L.degree,
        "entries": [[repr(p) for p in row] for row in L.entries],
    }
