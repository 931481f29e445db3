"""Command-line front end.

    contactdyn VERB [NAME] [--config PATH] [--out PATH] [--format json|csv] [overrides]

Verbs: flow, norm, distance, compose, invert, conjugate, reparam, lift,
experiment NAME, cauchy FAMILY. Exit codes: 0 success, 2 invalid input,
3 numerical failure.
"""

import argparse
import copy
import json
import sys

import jsonschema
import numpy as np

from . import __version__
from . import algebra as al
from . import symplectization as sy
from .errors import ConfigError, NumericalError, ValidationError
from .experiments import CAUCHY_FAMILIES, EXPERIMENTS
from .experiments.report import ExperimentReport, config_hash
from .flow import integrate_system
from .hamfield import field_from_config
from .manifold import HOPF, manifold_from_config, quadrature_grid
from .metrics import (DEFAULT_RESOLUTION, contact_distance, contact_norm, default_grid,
                      sup_norm)

VERBS = ("flow", "norm", "distance", "compose", "invert", "conjugate", "reparam", "lift",
         "experiment", "cauchy")

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 1}
_RES = {"oneOf": [_INT, {"type": "array", "items": _INT, "minItems": 1}]}
_BOX = {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                  {"type": "array", "items": {"type": "array", "items": _NUM,
                                              "minItems": 2, "maxItems": 2}}]}
_HAM = {"oneOf": [
    {"type": "string"},
    {"type": "object", "additionalProperties": False, "required": ["expr"],
     "properties": {"expr": {"type": "string"}}},
    {"type": "object", "additionalProperties": False, "required": ["builtin"],
     "properties": {"builtin": {"type": "string"}, "params": {"type": "object"}}},
]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "manifold": {"type": "object", "additionalProperties": False, "properties": {
            "kind": {"enum": ["darboux", "hopf"]},
            "n": {"type": "integer", "minimum": 2},
            "box": _BOX,
            "pole_margin": {"type": "number", "exclusiveMinimum": 0}}},
        "hamiltonians": {"type": "object", "additionalProperties": _HAM},
        "flow": {"type": "object", "additionalProperties": False, "properties": {
            "dt": {"type": "number", "exclusiveMinimum": 0},
            "t_samples": _INT,
            "richardson": {"type": "boolean"}}},
        "seeds": {"oneOf": [
            {"type": "array", "items": {"type": "array", "items": _NUM}, "minItems": 1},
            {"type": "object", "additionalProperties": False, "required": ["random"],
             "properties": {"random": _INT, "seed": {"type": "integer"}}}]},
        "grid": {"type": "object", "additionalProperties": False, "properties": {
            "resolution": _RES,
            "box": _BOX,
            "eta_band": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            "min_resolution": _INT}},
        "norm": {"type": "object", "additionalProperties": False, "properties": {
            "t_samples": _INT,
            "refine": {"type": "boolean"},
            "strict": {"type": "boolean"}}},
        "command": {"type": "object", "additionalProperties": False, "properties": {
            "hamiltonian": {"type": "string"},
            "other": {"type": "string"},
            "diffeo": {"type": "string"},
            "route": {"enum": ["flow", "hamiltonian", "resample"]},
            "zeta": {"type": "string"},
            "theta0": _NUM,
            "a": _NUM, "b": _NUM, "c": {"type": "number", "minimum": 0},
            "k": {"type": "integer"},
            "ks": {"type": "array", "items": {"type": "integer"}, "minItems": 3},
            "name": {"type": "string"},
            "family": {"enum": list(CAUCHY_FAMILIES)}}},
        "output": {"type": "object", "additionalProperties": False, "properties": {
            "format": {"enum": ["json", "csv"]},
            "path": {"type": "string"},
            "series": {"type": "string"}}},
    },
}


# -- configuration ------------------------------------------------------------------

def load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return cfg


def validate(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    return cfg


def _parse_ints(text, name):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--{name} takes integers separated by commas") from None
    if not vals:
        raise ConfigError(f"--{name} is empty")
    return vals


def apply_overrides(cfg, args):
    """Fold command-line overrides into a copy of the config."""
    cfg = copy.deepcopy(cfg)
    if args.manifold:
        cfg.setdefault("manifold", {})["kind"] = args.manifold
    if args.hamiltonian is not None:
        cfg.setdefault("hamiltonians", {})["H"] = args.hamiltonian
        cfg.setdefault("command", {}).setdefault("hamiltonian", "H")
    if args.dt is not None:
        cfg.setdefault("flow", {})["dt"] = args.dt
    if args.grid is not None:
        res = _parse_ints(args.grid, "grid")
        cfg.setdefault("grid", {})["resolution"] = res[0] if len(res) == 1 else res
    if args.k is not None:
        cfg.setdefault("command", {})["k"] = args.k
    if args.ks is not None:
        cfg.setdefault("command", {})["ks"] = _parse_ints(args.ks, "ks")
    if args.name is not None:
        key = "family" if args.verb == "cauchy" else "name"
        cfg.setdefault("command", {})[key] = args.name
    if args.format is not None:
        cfg.setdefault("output", {})["format"] = args.format
    if args.series is not None:
        cfg.setdefault("output", {})["series"] = args.series
    return validate(cfg)


class Context:
    """Objects built from a validated config."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.M = manifold_from_config(cfg.get("manifold", {}))
        self._fields = {}
        self.command = cfg.get("command", {})
        self.flow_opts = cfg.get("flow", {})
        self.norm_opts = cfg.get("norm", {})

    def field(self, name):
        table = self.cfg.get("hamiltonians", {})
        if name not in table:
            raise ConfigError(f"no hamiltonian named {name!r} in the config")
        if name not in self._fields:
            self._fields[name] = field_from_config(table[name], self.M)
        return self._fields[name]

    def named(self, key, default):
        return self.command.get(key, default)

    def seeds(self):
        given = self.cfg.get("seeds")
        M = self.M
        if given is None:
            given = {"random": 8, "seed": 0}
        if isinstance(given, list):
            return np.array(given, float)
        rng = np.random.default_rng(given.get("seed", 0))
        n = given["random"]
        if M.kind == HOPF:
            return np.column_stack([rng.uniform(0, 2 * np.pi, n), rng.uniform(0, 2 * np.pi, n),
                                    rng.uniform(0.4, 1.2, n)])
        lo = np.array([b[0] for b in M.box])
        hi = np.array([b[1] for b in M.box])
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        return mid + 0.25 * half * rng.uniform(-1, 1, (n, M.dim))

    def grid(self):
        g = self.cfg.get("grid")
        if not g:
            return default_grid(self.M)
        res = g.get("resolution", DEFAULT_RESOLUTION[self.M.kind])
        kwargs = {k: g[k] for k in ("box", "eta_band", "min_resolution") if k in g}
        if "box" in kwargs and not isinstance(kwargs["box"], list):
            kwargs["box"] = ((-float(kwargs["box"]), float(kwargs["box"])),) * self.M.dim
        return quadrature_grid(self.M, res, **kwargs)

    def system(self, name):
        opts = self.flow_opts
        return integrate_system(self.M, self.field(name), self.seeds(), dt=opts.get("dt", 1e-3),
                                t_samples=opts.get("t_samples", 100),
                                richardson=opts.get("richardson", True))

    def norm(self, field):
        o = self.norm_opts
        return contact_norm(self.M, field, self.grid(), o.get("t_samples", 64),
                            refine=o.get("refine", True), strict=o.get("strict", True))


# -- verbs -------------------------------------------------------------------------

def _system_report(name, S, params):
    rep = ExperimentReport(name, params)
    rep.add("sup_abs_h", sup_norm(S))
    rep.add("seeds", len(S.seeds))
    for key in ("richardson_error", "composition_to_identity"):
        if key in S.meta:
            rep.add(key, S.meta[key])
    K, N, d = S.trajectories.shape
    rows = [[i, t, *S.trajectories[k, i], S.conformal[k, i]]
            for i in range(N) for k, t in enumerate(S.times)]
    rep.add_series("trajectories", ["seed_id", "t", *S.manifold.coord_names, "h"], rows)
    rep.meta["system"] = {k: v for k, v in S.meta.items() if k not in ("richardson_probes",)}
    rep.meta["hamiltonian"] = S.hamiltonian.label
    return rep


def verb_flow(ctx):
    name = ctx.named("hamiltonian", "H")
    return _system_report("flow", ctx.system(name), {"hamiltonian": name})


def verb_norm(ctx):
    name = ctx.named("hamiltonian", "H")
    n = ctx.norm(ctx.field(name))
    rep = ExperimentReport("norm", {"hamiltonian": name})
    for key in ("total", "osc_integral", "mean_abs_integral", "sup_variant"):
        rep.add(key, getattr(n, key))
    rep.add("mean_integral", n.mean_integral)
    rep.meta["grid"] = n.grid_meta
    rep.add_series("integrand", ["t", "max", "min", "osc", "mean"],
                   np.column_stack([n.times, n.maximum, n.minimum, n.osc, n.mean]))
    return rep


def verb_distance(ctx):
    a, b = ctx.named("hamiltonian", "H"), ctx.named("other", "F")
    o = ctx.norm_opts
    r = contact_distance(ctx.system(a), ctx.system(b), None, ctx.grid(), o.get("t_samples", 64),
                         strict=o.get("strict", True), refine=o.get("refine", True))
    rep = ExperimentReport("distance", {"hamiltonian": a, "other": b})
    for key in ("d_alpha", "d_M", "d_bar_M", "conf_sup", "ham_norm"):
        rep.add(key, getattr(r, key))
    rep.meta["distance"] = r.meta
    return rep


def verb_compose(ctx):
    a, b = ctx.named("hamiltonian", "H"), ctx.named("other", "F")
    route = ctx.named("route", "flow")
    S = al.compose(ctx.system(a), ctx.system(b), route=route)
    return _system_report("compose", S, {"hamiltonian": a, "other": b, "route": route})


def verb_invert(ctx):
    a = ctx.named("hamiltonian", "H")
    route = ctx.named("route", "hamiltonian")
    S = al.inverse(ctx.system(a), route=route)
    return _system_report("invert", S, {"hamiltonian": a, "route": route})


def verb_conjugate(ctx):
    a, g = ctx.named("hamiltonian", "H"), ctx.named("diffeo", "G")
    route = ctx.named("route", "flow")
    from .flow import IntegratedFlow
    phi = al.ContactDiffeo.from_flow(IntegratedFlow(ctx.field(g), ctx.flow_opts.get("dt", 1e-3)),
                                     1.0, label=f"time-1 map of {g}")
    S = al.conjugate(ctx.system(a), phi, route=route)
    return _system_report("conjugate", S, {"hamiltonian": a, "diffeo": g, "route": route})


def reparameterization(text):
    """'cantor:K', 'linear:S' or an expression in t."""
    head, _, arg = text.partition(":")
    try:
        if head == "cantor" and arg:
            return al.Reparameterization.cantor(int(arg))
        if head == "linear" and arg:
            return al.Reparameterization.linear(float(arg))
    except ValueError:
        raise ConfigError(f"bad reparameterization {text!r}") from None
    return al.Reparameterization.from_expression(text)


def verb_reparam(ctx):
    a = ctx.named("hamiltonian", "H")
    zeta = ctx.named("zeta", "t")
    route = ctx.named("route", "resample")
    S = al.reparameterize(ctx.system(a), reparameterization(zeta), route=route)
    return _system_report("reparam", S, {"hamiltonian": a, "zeta": zeta, "route": route})


def verb_lift(ctx):
    a = ctx.named("hamiltonian", "H")
    theta0 = ctx.named("theta0", 0.0)
    A = ctx.system(a)
    L = sy.lift_system(A, theta0=theta0)
    rep = ExperimentReport("lift", {"hamiltonian": a, "theta0": theta0})
    rep.add("direct_deviation", L.meta["direct_deviation"])
    if "a" in ctx.command and "b" in ctx.command:
        lo, hi = ctx.command["a"], ctx.command["b"]
        value, base = sy.admissible_norm(L, lo, hi, ctx.grid(), ctx.norm_opts.get("t_samples", 64),
                                         with_base=True)
        bounds = sy.sandwich_bounds(lo, hi, base)
        rep.check("admissible_norm", value, bounds[0], "ge", 0.0, "bound")
        rep.check("admissible_norm_upper", value, bounds[1], "le", 0.0, "bound")
        if "c" in ctx.command:
            rep.check("cutoff_agreement", sy.cutoff_agreement(L, lo, lo, ctx.command["c"]), 0.0,
                      "eq", 1e-5, "two_routes")
    K, N, d = L.trajectories.shape
    rows = [[i, t, *L.trajectories[k, i]] for i in range(N) for k, t in enumerate(L.times)]
    rep.add_series("trajectories", ["seed_id", "t", *A.manifold.coord_names, "theta"], rows)
    return rep


def verb_experiment(ctx):
    name = ctx.named("name", None)
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    exp = EXPERIMENTS[name]
    k = ctx.command.get("k")
    if k is not None and not exp.takes_k:
        raise ConfigError(f"experiment {name!r} takes no k")
    kwargs = {}
    if "dt" in ctx.flow_opts and name in ("divergent_factors", "divergent_isotopies", "cantor",
                                          "triangle_failure", "sphere"):
        kwargs["dt"] = ctx.flow_opts["dt"]
    return exp.run(k, **kwargs)


def verb_cauchy(ctx):
    from .experiments.checks import example_cauchy

    family = ctx.named("family", None)
    if family not in CAUCHY_FAMILIES:
        raise ConfigError(f"unknown family {family!r}; choose from {', '.join(CAUCHY_FAMILIES)}")
    return example_cauchy(family, ctx.command.get("ks"), ctx.flow_opts.get("dt", 1e-3))


DISPATCH = {"flow": verb_flow, "norm": verb_norm, "distance": verb_distance,
            "compose": verb_compose, "invert": verb_invert, "conjugate": verb_conjugate,
            "reparam": verb_reparam, "lift": verb_lift, "experiment": verb_experiment,
            "cauchy": verb_cauchy}


# -- entry points ----------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="contactdyn", description=__doc__.split("\n\n")[0])
    p.add_argument("verb", choices=VERBS)
    p.add_argument("name", nargs="?", help="experiment name or Cauchy family")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--series", help="series to emit with --format csv")
    p.add_argument("--k", type=int)
    p.add_argument("--ks", help="comma-separated sequence indices for cauchy")
    p.add_argument("--dt", type=float)
    p.add_argument("--grid", help="resolution: one integer or one per axis, comma-separated")
    p.add_argument("--hamiltonian", help="expression for the Hamiltonian named H")
    p.add_argument("--manifold", choices=["darboux", "hopf"])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def render(report, cfg):
    out = cfg.get("output", {})
    if out.get("format", "json") == "json":
        return report.to_json(config_hash(cfg), __version__)
    series = out.get("series")
    if series:
        if series not in report.series:
            raise ConfigError(f"report has no series {series!r}")
        return report.series_csv(series)
    if "trajectories" in report.series:
        return report.series_csv("trajectories")
    return report.scalars_csv()


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = apply_overrides(validate(load_config(args.config)), args)
        if args.verb in ("experiment", "cauchy") and args.name is None \
                and not cfg.get("command", {}).get("name" if args.verb == "experiment" else "family"):
            raise ConfigError(f"{args.verb} needs a name")
        report = DISPATCH[args.verb](Context(cfg))
        text = render(report, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=stderr)
        return 3
    path = args.out or cfg.get("output", {}).get("path")
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main():
    sys.exit(run())
