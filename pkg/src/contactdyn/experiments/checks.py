"""Triangle-inequality failure, Reeb conjugation and Cauchy diagnostics."""

from math import log

import numpy as np

from .. import algebra as al
from ..errors import DomainError, ManifoldMismatch
from ..flow import IntegratedFlow, integrate_system
from ..hamfield import builtin, parse_hamiltonian
from ..manifold import darboux, quadrature_grid
from ..metrics import contact_distance, contact_norm
from .cutoffs import CutoffFamily
from .examples import divergent_factors_grid
from .report import ExperimentReport


def example_triangle_failure(k=8, dt=1e-3, parent_dt=1e-2, resolution=9):
    k = int(k)
    if k < 2:
        raise DomainError("k must be at least 2")
    M = darboux()
    Hk = builtin("divergent_factors", M, k=k)
    F = parse_hamiltonian("1", M)
    origin = np.zeros((1, 3))
    A = integrate_system(M, Hk, origin, dt=parent_dt, t_samples=4, richardson=False)
    B = integrate_system(M, F, origin, dt=parent_dt, t_samples=4, richardson=False)
    HF = al.ComposeHamiltonian(A, B)
    rep = ExperimentReport("triangle_failure", {"k": k, "parent_dt": parent_dt, "grid": resolution})
    rep.check("composite_at_origin_t1", HF.values(1.0, origin)[0], float(k), "eq", 1e-2, "closed_form")
    grid = divergent_factors_grid(M, k, resolution)
    n_hf = contact_norm(M, HF, grid, strict=False)
    n_h = contact_norm(M, Hk, divergent_factors_grid(M, k, 17)).total
    n_f = contact_norm(M, F, grid).total
    rep.add("norm_H_compose_F", n_hf.total)
    rep.add("norm_H", n_h)
    rep.add("norm_F", n_f)
    rep.check("norm_H_plus_norm_F", n_h + n_f, 3.0 / k ** 2 + 1.0, "le", 0.0, "stated_bound")
    rep.check("triangle_gap", n_hf.total - (n_h + n_f), 0.0, "gt", 0.0, "stated_bound")
    rep.check("norm_H_compose_F_vs_origin_bound", n_hf.total, (k - 1) / log(k) - 1.0, "ge", 0.0,
              "bound")
    P = integrate_system(M, Hk, origin, dt=parent_dt, t_samples=4, richardson=False)
    rep.add("norm_H_inverse", contact_norm(M, al.InverseHamiltonian(P), grid, strict=False).total)
    rep.add("refine_delta_rel", n_hf.grid_meta["refine_delta_rel"])
    rep.add_series("composite_origin", ["t", "value", "k_pow_t"],
                   np.column_stack([n_hf.times, HF.values(n_hf.times, np.zeros((len(n_hf.times), 3))),
                                    float(k) ** n_hf.times]))
    return rep


# -- Reeb conjugation ----------------------------------------------------------------

class ConformalExpField(al.DerivedHamiltonian):
    """x -> e^{-g(x)}, g the conformal factor of a contact diffeomorphism."""

    def __init__(self, phi):
        super().__init__(phi.manifold)
        self.phi = phi
        self.label = f"exp(-g[{phi.label}])"

    def values(self, t, X):
        return np.exp(-self.phi.factor(np.atleast_2d(X)))


def reeb_conjugation_check(phi, probes, times=None, dt=1e-2):
    """Flow of e^{-g} against phi^-1 o phi_R^t o phi on probes: (deviation, factor deviation)."""
    M = phi.manifold
    P, _ = M.coords(probes)
    times = np.linspace(0.0, 1.0, 11) if times is None else np.asarray(times, float)
    S = integrate_system(M, ConformalExpField(phi), P, dt=dt, t_samples=len(times) - 1,
                         richardson=False)
    conj = al.ConjugatedFlow(IntegratedFlow(parse_hamiltonian("1", M), dt), phi)
    Y, g = conj.sample(S.times, P)
    return float(np.max(M.distance(S.trajectories, Y))), float(np.max(np.abs(S.conformal - g)))


def random_sphere_hamiltonian(rng, amplitude=0.06):
    """a0 + a1 Re(z1 e^{i p1}) + a2 Im(z2 e^{i p2}) + a3 cos(2 eta), smooth on all of S^3."""
    a = [float(v) for v in rng.uniform(-amplitude, amplitude, 4)]
    p = [float(v) for v in rng.uniform(0.0, 2 * np.pi, 2)]
    return (f"{a[0]!r} + {a[1]!r}*sin(eta)*cos(xi1 + {p[0]!r}) + "
            f"{a[2]!r}*cos(eta)*sin(xi2 + {p[1]!r}) + {a[3]!r}*cos(2*eta)")


def reeb_probes(count=8):
    i = np.arange(count)
    return np.column_stack([2 * np.pi * (i + 0.5) / count, np.mod(2.4 * i, 2 * np.pi),
                            0.6 + 0.4 * i / max(count - 1, 1)])


def example_reeb_conjugation(count=5, seed=0, amplitude=0.06, dt=1e-2, sphere_dt=2e-3):
    from ..manifold import hopf
    from .sphere import H_TEXT, sphere_seeds

    M = hopf()
    rng = np.random.default_rng(seed)
    P = reeb_probes()
    rep = ExperimentReport("reeb_conjugation", {"count": count, "seed": seed,
                                                "amplitude": amplitude, "dt": dt, "probes": len(P)})
    rows, texts = [], []
    for i in range(count):
        text = random_sphere_hamiltonian(rng, amplitude)
        phi = al.ContactDiffeo.from_flow(IntegratedFlow(parse_hamiltonian(text, M), dt), 1.0,
                                         label=f"time-1 map of {text}")
        dev, gdev = reeb_conjugation_check(phi, P, dt=dt)
        rows.append([i, dev, gdev])
        texts.append(text)
    rows = np.array(rows)
    rep.check("max_deviation", float(np.max(rows[:, 1])), 0.0, "eq", 1e-4, "two_routes")
    rep.add("max_conformal_deviation", float(np.max(rows[:, 2])))
    # the sphere time-1 map has e^{-g} up to ~22, so its outer flow needs a finer step
    phi = al.ContactDiffeo.from_flow(IntegratedFlow(parse_hamiltonian(H_TEXT, M), dt), 1.0,
                                     label=f"time-1 map of {H_TEXT}")
    dev, gdev = reeb_conjugation_check(phi, sphere_seeds(8, eta=1.48), dt=sphere_dt)
    rep.check("sphere_map_deviation", dev, 0.0, "eq", 1e-4, "two_routes")
    rep.add("sphere_map_conformal_deviation", gdev)
    rep.add_series("per_diffeo", ["index", "deviation", "conformal_deviation"], rows)
    rep.meta["hamiltonians"] = texts
    return rep


# -- Cauchy tables -----------------------------------------------------------------

COMPONENTS = ("d_bar_M", "conf_sup", "ham_norm", "d_alpha")


def trend(values, zero=1e-10):
    v = np.asarray(values, float)
    if np.max(np.abs(v)) < zero:
        return "zero"
    steps = np.diff(v)
    if v[-1] <= 0.5 * v[0] and np.all(steps <= 1e-9 * max(np.max(np.abs(v)), 1.0)):
        return "vanishing"
    if v[-1] <= 0.5 * v[0]:
        return "decreasing"
    return "bounded_below"


def cauchy_table(systems, labels=None, grid=None, probes=None, t_samples=64,
                 time_nodes=None, time_weights=None, refine=True, name="cauchy"):
    if len(systems) < 3:
        raise DomainError("need at least three systems")
    M = systems[0].manifold
    for S in systems[1:]:
        if S.manifold != M:
            raise ManifoldMismatch("systems live on different manifolds")
    labels = labels or [str(i) for i in range(len(systems))]
    n = len(systems)
    mats = {c: np.zeros((n, n)) for c in COMPONENTS}
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            r = contact_distance(systems[i], systems[j], probes, grid, t_samples,
                                 time_nodes=time_nodes, time_weights=time_weights, strict=False,
                                 refine=refine)
            for c in COMPONENTS:
                mats[c][i, j] = mats[c][j, i] = getattr(r, c)
            rows.append([i, j] + [getattr(r, c) for c in COMPONENTS])
    rep = ExperimentReport(name, {"labels": list(labels), "t_samples": t_samples})
    trends = {}
    for c in COMPONENTS:
        consecutive = [mats[c][i, i + 1] for i in range(n - 1)]
        trends[c] = trend(consecutive)
        for i, v in enumerate(consecutive):
            rep.add(f"{c}[{labels[i]},{labels[i + 1]}]", v)
    rep.meta["trend"] = trends
    rep.meta["non_cauchy"] = [c for c in COMPONENTS[:3] if trends[c] == "bounded_below"]
    rep.add_series("pairwise", ["i", "j", *COMPONENTS], np.array(rows))
    rep.matrices = mats
    return rep


def family(name, ks=None, dt=1e-3):
    """(systems, labels, options) for the three divergent families."""
    from ..manifold import hopf
    from . import examples as ex

    if name == "divergent_factors":
        ks = ks or [2, 4, 8, 16]
        M = darboux()
        origin = np.zeros((1, 3))
        systems = []
        probes = np.concatenate([ex._lattice(0.8 * CutoffFamily(k).eps) for k in ks])
        for k in ks:
            H = builtin("divergent_factors", M, k=k)
            systems.append(integrate_system(M, H, np.vstack([origin, probes]), dt=dt, t_samples=20))
        base = divergent_factors_grid(M, ks[0], 9)
        extra = np.concatenate([divergent_factors_grid(M, k, 9).nodes for k in ks[1:]])
        return systems, [f"k={k}" for k in ks], {"grid": base.with_extra(extra)}
    if name == "divergent_isotopies":
        ks = ks or [1, 2, 4, 8]
        M = darboux()
        seeds = ex.isotopy_seeds(ks)
        systems = [ex.divergent_isotopies_system(k, dt, t_samples=20, seeds=seeds) for k in ks]
        return systems, [f"k={k}" for k in ks], {
            "grid": quadrature_grid(M, (9, 17, 9), box=ex.ISOTOPY_BOX)}
    if name == "cantor":
        ks = ks or [2, 3, 4, 5]
        M = hopf()
        systems = [ex.cantor_system(k, M, t_samples=200) for k in ks]
        edges = np.concatenate([ex.CantorDensity(k).edges() + s * ex.CantorDensity(k).delta
                                for k in ks for s in (-1, 0, 1)])
        tn, tw = ex.breakpoint_quadrature(edges)
        return systems, [f"k={k}" for k in ks], {
            "grid": quadrature_grid(M, 2, min_resolution=1), "time_nodes": tn, "time_weights": tw, "refine": False}
    raise DomainError(f"unknown family {name!r}")


def example_cauchy(name="divergent_factors", ks=None, dt=1e-3):
    systems, labels, opts = family(name, ks, dt)
    return cauchy_table(systems, labels, name=f"cauchy_{name}", **opts)
