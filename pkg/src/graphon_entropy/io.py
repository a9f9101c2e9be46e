"""Canonical JSON documents for graphons, optimizer results, reports and spectra.

Output is deterministic: keys are sorted, floats are printed with 17
significant digits (enough to round-trip every double), lists of numbers stay
on one line, and non-finite floats are refused.  Every document carries a
``type`` tag and a ``format_version``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import DensityReport, MultipodalGraphon, ValidationError
from .spectral import Spectrum

FORMAT_VERSION = 1
GRAPHON_FIELDS = {"format_version", "type", "c", "p", "metadata"}


class SerializationError(ValueError):
    """A value cannot be written as canonical JSON."""


# ---------------------------------------------------------------------------
# canonical writer


def _float(x: float) -> str:
    if not math.isfinite(x):
        raise SerializationError(f"refusing to write non-finite value {x!r}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _scalar(v) -> str | None:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _float(float(v))
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    return None


def _encode(v, indent: int) -> str:
    s = _scalar(v)
    if s is not None:
        return s
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(v, np.ndarray):
        v = v.tolist()
    if isinstance(v, dict):
        if not v:
            return "{}"
        for k in v:
            if not isinstance(k, str):
                raise SerializationError(f"non-string key {k!r}")
        items = [f"{inner}{json.dumps(k)}: {_encode(v[k], indent + 1)}" for k in sorted(v)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        parts = [_encode(x, indent + 1) for x in v]
        if all(_scalar(x) is not None for x in v) or all(p.startswith("[") and "\n" not in p for p in parts):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    raise SerializationError(f"cannot serialize {type(v).__name__}")


def dumps(obj: Any) -> str:
    return _encode(obj, 0) + "\n"


def to_bytes(obj: Any) -> bytes:
    return dumps(obj).encode("utf-8")


def _reject_constant(name):
    raise ValidationError(f"non-finite number {name} is not allowed")


def loads(data: bytes | str) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValidationError(f"input is not UTF-8: {exc}") from None
    try:
        return json.loads(data, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"JSON parse error: {exc}") from None


# ---------------------------------------------------------------------------
# graphons


@dataclass
class GraphonDocument:
    graphon: MultipodalGraphon
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = dict(self.extra)
        out.update(graphon_dict(self.graphon))
        out["format_version"] = self.format_version
        if self.metadata:
            out["metadata"] = self.metadata
        return out


def graphon_dict(g: MultipodalGraphon) -> dict:
    return {"type": "graphon", "format_version": FORMAT_VERSION, "c": g.c.tolist(), "p": g.p.tolist()}


def _numbers(name, v, depth):
    """Check a nested list of numbers, naming the first offending index."""

    def walk(x, path, d):
        if d == 0:
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValidationError(f"{name}{path} = {x!r} is not a number")
            return float(x)
        if not isinstance(x, list):
            raise ValidationError(f"{name}{path} must be a list")
        return [walk(y, f"{path}[{i}]", d - 1) for i, y in enumerate(x)]

    return walk(v, "", depth)


def graphon_from_dict(doc: dict, strict: bool = True) -> GraphonDocument:
    if not isinstance(doc, dict):
        raise ValidationError("graphon document must be a JSON object")
    unknown = sorted(set(doc) - GRAPHON_FIELDS)
    if unknown and strict:
        raise ValidationError(f"unknown field(s) {unknown} in graphon document")
    version = doc.get("format_version", FORMAT_VERSION)
    if isinstance(version, bool) or not isinstance(version, int):
        raise ValidationError(f"format_version must be an integer, got {version!r}")
    if version != FORMAT_VERSION:
        raise ValidationError(f"unsupported format_version {version}")
    kind = doc.get("type", "graphon")
    if kind != "graphon":
        raise ValidationError(f"expected a graphon document, got type {kind!r}")
    for key in ("c", "p"):
        if key not in doc:
            raise ValidationError(f"graphon document is missing {key!r}")
    c = _numbers("c", doc["c"], 1)
    p = _numbers("p", doc["p"], 2)
    for i, row in enumerate(p):
        if len(row) != len(c):
            raise ValidationError(f"p[{i}] has {len(row)} entries, expected {len(c)}")
    if len(p) != len(c):
        raise ValidationError(f"p has {len(p)} rows, expected {len(c)}")
    meta = doc.get("metadata", {})
    if not isinstance(meta, dict):
        raise ValidationError("metadata must be a JSON object")
    extra = {k: doc[k] for k in unknown}
    return GraphonDocument(MultipodalGraphon(c, p), meta, version, extra)


def read_graphon_document(data: bytes | str, strict: bool = True) -> GraphonDocument:
    doc = loads(data)
    if isinstance(doc, dict) and doc.get("type") == "optimizer_result" and "graphon" in doc:
        doc = doc["graphon"]
    return graphon_from_dict(doc, strict)


def read_graphon(data: bytes | str, strict: bool = True) -> MultipodalGraphon:
    """Parse and validate a graphon document (an optimizer result is accepted too)."""
    return read_graphon_document(data, strict).graphon


def write_graphon(g: MultipodalGraphon | GraphonDocument, metadata: dict | None = None) -> bytes:
    if isinstance(g, GraphonDocument):
        return to_bytes(g.to_dict())
    d = graphon_dict(g)
    if metadata:
        d["metadata"] = metadata
    return to_bytes(d)


# ---------------------------------------------------------------------------
# optimizer results


def _opt_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def result_dict(r) -> dict:
    restarts = [
        {
            "index": s.index,
            "start": s.start,
            "converged": s.converged,
            "entropy": _opt_float(s.entropy),
            "classification": s.classification,
            "pods_used": s.pods_used,
        }
        for s in r.restarts
    ]
    return {
        "type": "optimizer_result",
        "format_version": FORMAT_VERSION,
        "graphon": graphon_dict(r.graphon),
        "achieved_e": r.achieved_e,
        "achieved_t": r.achieved_t,
        "entropy": r.entropy,
        "multipliers": {"lambda_e": r.multipliers[0], "lambda_t": r.multipliers[1]},
        "el_residual": r.el_residual,
        "classification": r.classification,
        "pods_used": r.pods_used,
        "restarts_agreeing": r.restarts_agreeing,
        "restarts_converged": r.restarts_converged,
        "converged": r.converged,
        "target_e": r.target_e,
        "target_t": r.target_t,
        "pods_requested": r.pods_requested,
        "restarts": restarts,
    }


def write_result(r) -> bytes:
    return to_bytes(result_dict(r))


def read_result(data: bytes | str):
    from .optimizer import OptimizerResult, RestartSummary

    d = loads(data)
    if not isinstance(d, dict) or d.get("type") != "optimizer_result":
        raise ValidationError("expected an optimizer_result document")
    try:
        g = graphon_from_dict(d["graphon"]).graphon
        restarts = tuple(
            RestartSummary(
                s["index"], s["start"], s["converged"],
                -math.inf if s["entropy"] is None else s["entropy"],
                s["classification"], s["pods_used"],
            )
            for s in d["restarts"]
        )
        return OptimizerResult(
            graphon=g,
            achieved_e=d["achieved_e"],
            achieved_t=d["achieved_t"],
            entropy=d["entropy"],
            multipliers=(d["multipliers"]["lambda_e"], d["multipliers"]["lambda_t"]),
            el_residual=d["el_residual"],
            classification=d["classification"],
            restarts_agreeing=d["restarts_agreeing"],
            restarts_converged=d["restarts_converged"],
            converged=d["converged"],
            target_e=d["target_e"],
            target_t=d["target_t"],
            pods_requested=d["pods_requested"],
            restarts=restarts,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed optimizer_result document: {exc!r}") from None


# ---------------------------------------------------------------------------
# verification reports


def report_dict(v) -> dict:
    d = v.to_dict()
    d["type"] = "verify_report"
    d["format_version"] = FORMAT_VERSION
    return d


def write_report(v) -> bytes:
    if isinstance(v, (list, tuple)):
        return to_bytes({"type": "verify_reports", "format_version": FORMAT_VERSION,
                         "reports": [report_dict(x) for x in v],
                         "passed": all(x.passed for x in v)})
    return to_bytes(report_dict(v))


def _report_from_dict(d):
    from .verify import VerifyCase, VerifyReport

    rep = VerifyReport(d["suite"], params=d.get("params", {}))
    for c in d["cases"]:
        rep.cases.append(VerifyCase(c["name"], c["inputs"], c["measured"], c["expected"],
                                    c["tolerance"], c["status"], c.get("note", "")))
    return rep


def read_report(data: bytes | str):
    d = loads(data)
    try:
        if d.get("type") == "verify_reports":
            return [_report_from_dict(x) for x in d["reports"]]
        if d.get("type") != "verify_report":
            raise ValidationError("expected a verify_report document")
        return _report_from_dict(d)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValidationError(f"malformed verify_report document: {exc!r}") from None


# ---------------------------------------------------------------------------
# evaluation output


def evaluation_dict(report: DensityReport, spectrum: Spectrum | None = None,
                    moments: dict | None = None) -> dict:
    d = {"type": "density_report", "format_version": FORMAT_VERSION, **report.to_dict()}
    if spectrum is not None:
        d["spectrum"] = spectrum.to_dict()
    if moments is not None:
        d["moments"] = moments
    return d


def write_evaluation(report: DensityReport, spectrum: Spectrum | None = None,
                     moments: dict | None = None) -> bytes:
    return to_bytes(evaluation_dict(report, spectrum, moments))


def read_evaluation(data: bytes | str) -> tuple[DensityReport, Spectrum | None, dict | None]:
    d = loads(data)
    if not isinstance(d, dict) or d.get("type") != "density_report":
        raise ValidationError("expected a density_report document")
    try:
        rep = DensityReport(d["edge"], d["triangle"], d["entropy"], tuple(d["degrees"]),
                            d["two_star"], d["order_q"])
        spec = None
        if "spectrum" in d:
            s = d["spectrum"]
            spec = Spectrum(np.array(s["eigenvalues"], dtype=float),
                            np.array(s["eigvec_pod_values"], dtype=float), s["center"])
        return rep, spec, d.get("moments")
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed density_report document: {exc!r}") from None
