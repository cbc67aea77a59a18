"""Verification reports: named metrics with tolerances and pass flags.

Pass flags are pure functions of (value, tolerance, kind) so that a report
is reproducible from its numbers alone.  Serialisation is canonical (sorted
keys, repr floats) so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = ["Metric", "RefinementEntry", "VerificationReport", "make_metric"]

_CHECKS = {
    "le": lambda v, t: v <= t,
    "lt": lambda v, t: v < t,
    "ge": lambda v, t: v >= t,
    "gt": lambda v, t: v > t,
    "finite": lambda v, t: math.isfinite(v),
    "none": lambda v, t: True,
}


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    tolerance: float | None
    kind: str
    passed: bool
    claim: str = ""


def make_metric(name: str, value, tolerance, kind: str, claim: str = "") -> Metric:
    value = float(value)
    if kind not in _CHECKS:
        raise ValueError("unknown check kind %r" % (kind,))
    if kind not in ("finite", "none") and tolerance is None:
        raise ValueError("check kind %r needs a tolerance" % (kind,))
    tol = None if tolerance is None else float(tolerance)
    passed = bool(_CHECKS[kind](value, tol))
    if kind == "finite" and not math.isfinite(value):
        passed = False
    return Metric(name=name, value=value, tolerance=tol, kind=kind,
                  passed=passed, claim=claim)


@dataclass(frozen=True)
class RefinementEntry:
    """A fitted quantity re-fitted at one grid refinement."""

    name: str
    coarse: float
    fine: float
    rel_change: float
    tolerance: float
    passed: bool


def make_refinement(name: str, coarse, fine, tolerance: float = 0.25) -> RefinementEntry:
    coarse = float(coarse)
    fine = float(fine)
    base = max(abs(coarse), abs(fine), 1e-300)
    rel = abs(fine - coarse) / base
    return RefinementEntry(name=name, coarse=coarse, fine=fine,
                           rel_change=rel, tolerance=float(tolerance),
                           passed=bool(rel < tolerance))


@dataclass
class VerificationReport:
    experiment: str
    metrics: list = field(default_factory=list)
    refinement: list = field(default_factory=list)
    fingerprint: dict = field(default_factory=dict)
    plot_data: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics) and \
            all(r.passed for r in self.refinement)

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def value(self, name: str) -> float:
        return self.metric(name).value

    def add(self, *args, **kwargs):
        self.metrics.append(make_metric(*args, **kwargs))
        return self.metrics[-1]

    def add_refinement(self, name, coarse, fine, tolerance: float = 0.25):
        self.refinement.append(make_refinement(name, coarse, fine, tolerance))
        return self.refinement[-1]

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "metrics": [asdict(m) for m in self.metrics],
            "refinement": [asdict(r) for r in self.refinement],
            "fingerprint": _plain(self.fingerprint),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def csv_rows(self) -> list:
        rows = [("metric", "value", "tolerance", "kind", "passed", "claim")]
        for m in self.metrics:
            rows.append((m.name, repr(m.value),
                         "" if m.tolerance is None else repr(m.tolerance),
                         m.kind, str(m.passed), m.claim))
        for r in self.refinement:
            rows.append(("refinement:" + r.name, repr(r.fine),
                         repr(r.tolerance), "rel_change=%r" % r.rel_change,
                         str(r.passed), "coarse=%r" % r.coarse))
        return rows

    def summary_lines(self) -> list:
        lines = []
        for m in self.metrics:
            tol = "" if m.tolerance is None else " (tol %g, %s)" % (m.tolerance, m.kind)
            lines.append("%-4s %s = %.6g%s" % (
                "PASS" if m.passed else "FAIL", m.name, m.value, tol))
        for r in self.refinement:
            lines.append("%-4s refinement %s moved %.1f%% (coarse %.6g, fine %.6g)"
                         % ("PASS" if r.passed else "FAIL", r.name,
                            100 * r.rel_change, r.coarse, r.fine))
        return lines


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON round-tripping."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.complexfloating)):
        obj = obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj
