"""Experiment reports and their stable serialization."""

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = "1.0"

RELATIONS = {
    "eq": lambda v, t, tol: abs(v - t) <= tol,
    "le": lambda v, t, tol: v <= t + tol,
    "ge": lambda v, t, tol: v >= t - tol,
    "lt": lambda v, t, tol: v < t,
    "gt": lambda v, t, tol: v > t,
    "info": lambda v, t, tol: True,
}


@dataclass
class Scalar:
    name: str
    value: float
    target: float = None
    tol: float = 0.0
    relation: str = "info"
    provenance: str = "measured"

    @property
    def passed(self):
        if self.relation == "info":
            return None
        if not np.isfinite(self.value):
            return False
        return bool(RELATIONS[self.relation](self.value, self.target, self.tol))

    def to_dict(self):
        out = {"name": self.name, "value": self.value, "provenance": self.provenance,
               "relation": self.relation}
        if self.relation != "info":
            out.update(target=self.target, tol=self.tol, **{"pass": self.passed})
        return out


@dataclass
class ExperimentReport:
    name: str
    params: dict = field(default_factory=dict)
    scalars: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, name, value, target=None, tol=0.0, relation=None, provenance="measured"):
        if relation is None:
            relation = "info" if target is None else "eq"
        s = Scalar(name, float(value), None if target is None else float(target), float(tol),
                   relation, provenance)
        self.scalars.append(s)
        return s

    def check(self, name, value, target, relation="eq", tol=0.0, provenance="oracle"):
        return self.add(name, value, target, tol, relation, provenance)

    def scalar(self, name):
        for s in self.scalars:
            if s.name == name:
                return s
        raise KeyError(name)

    def value(self, name):
        return self.scalar(name).value

    @property
    def pass_flags(self):
        return {s.name: s.passed for s in self.scalars if s.relation != "info"}

    @property
    def passed(self):
        return all(self.pass_flags.values())

    def add_series(self, name, columns, rows):
        self.series[name] = {"columns": list(columns), "rows": np.asarray(rows, float)}

    def to_dict(self, config_hash=None, version=None):
        from .. import __version__

        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "tool_version": version or __version__,
            "config_hash": config_hash,
            "params": self.params,
            "scalars": [s.to_dict() for s in self.scalars],
            "pass_flags": self.pass_flags,
            "passed": self.passed,
            "series_refs": sorted(self.series),
            "meta": self.meta,
        }

    def to_json(self, config_hash=None, version=None):
        return dumps(self.to_dict(config_hash, version)) + "\n"

    def series_csv(self, name=None):
        """One CSV table: the named series, or every series stacked with a name column."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = [name] if name else sorted(self.series)
        if name is None and len(names) != 1:
            w.writerow(["series", "index", "column", "value"])
            for n in names:
                s = self.series[n]
                for i, row in enumerate(s["rows"]):
                    for c, v in zip(s["columns"], row):
                        w.writerow([n, i, c, fmt_float(v)])
            return buf.getvalue()
        s = self.series[names[0]]
        w.writerow(s["columns"])
        fmts = [_fmt_int if c in INDEX_COLUMNS else fmt_float for c in s["columns"]]
        for row in s["rows"]:
            w.writerow([f(v) for f, v in zip(fmts, row)])
        return buf.getvalue()

    def scalars_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "target", "tol", "relation", "pass", "provenance"])
        for s in self.scalars:
            w.writerow([s.name, fmt_float(s.value), "" if s.target is None else fmt_float(s.target),
                        fmt_float(s.tol), s.relation, "" if s.passed is None else s.passed,
                        s.provenance])
        return buf.getvalue()

    def summary(self):
        lines = [f"{self.name}:"]
        for s in self.scalars:
            flag = "" if s.passed is None else ("  PASS" if s.passed else "  FAIL")
            tgt = "" if s.target is None else f"  ({s.relation} {s.target:.6g} tol {s.tol:g})"
            lines.append(f"  {s.name} = {s.value:.10g}{tgt}{flag}")
        return "\n".join(lines)


# -- serialization ---------------------------------------------------------------

INDEX_COLUMNS = frozenset({"seed_id", "index", "i", "j", "k", "manifold"})


def _fmt_int(v):
    return str(int(v))


def fmt_float(v):
    v = float(v)
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    if v == int(v) and abs(v) < 1e16:
        return f"{v:.1f}"
    return format(v, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj, indent=2, _level=0):
    """JSON with sorted keys and floats at 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def config_hash(config):
    text = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_plain)
    return hashlib.sha256(text.encode()).hexdigest()
