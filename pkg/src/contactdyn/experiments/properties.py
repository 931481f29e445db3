"""Randomized property suites: group laws, norm sandwiches, lifts and the l_BD reduction."""

import numpy as np

from .. import algebra as al
from .. import symplectization as sy
from ..flow import integrate_system
from ..hamfield import parse_hamiltonian, rescale
from ..manifold import darboux, hopf, quadrature_grid
from ..metrics import bd_length_and_energy, extrema
from .report import ExperimentReport

DARBOUX_BOX = ((-1.0, 1.0),) * 3
# one seed per pair keeps 2 x 20 pairs inside the time budget; each derived
# evaluation already integrates a 7-point stencil of parent flows
GROUP_SEEDS = {"hopf": np.array([[1.0, 2.0, 0.8]]), "darboux": np.array([[0.1, 0.2, 0.3]])}


def _coef(rng, amplitude, n):
    return [float(v) for v in rng.uniform(-amplitude, amplitude, n)]


def random_field_text(rng, kind, amplitude=0.3, time=True):
    """A random smooth expression; on the sphere every term is smooth across the poles.
    Time enters through a phase so the program stays short."""
    a = _coef(rng, amplitude, 5)
    p = [float(v) for v in rng.uniform(0.0, 2 * np.pi, 3)]
    w = f" + {float(rng.uniform(0.5, 3.0))!r}*t" if time else ""
    if kind == "hopf":
        return (f"{a[0]!r} + {a[1]!r}*sin(eta)*cos(xi1 + {p[0]!r}{w}) + "
                f"{a[2]!r}*cos(eta)*sin(xi2 + {p[1]!r}) + {a[3]!r}*cos(2*eta)")
    return (f"{a[0]!r} + {a[1]!r}*sin(x1 + {p[0]!r}{w}) + {a[2]!r}*y1*cos(x1 + {p[1]!r}) + "
            f"{a[3]!r}*z*y1 + {a[4]!r}*y1^2")


def _manifold(kind):
    return hopf() if kind == "hopf" else darboux()


def _grid(M, resolution):
    if M.kind == "hopf":
        return quadrature_grid(M, resolution)
    return quadrature_grid(M, resolution, box=DARBOUX_BOX)


# -- group laws ------------------------------------------------------------------

def group_law_pair(M, A, B, C, dt=1e-2, times=(0.3, 0.7, 1.0)):
    """Deviations between the flow and Hamiltonian routes of compose, inverse and
    conjugate, plus associativity of # on flows and on Hamiltonian values."""
    out = {}
    c1, c2 = al.compose(A, B), al.compose(A, B, "hamiltonian", dt=dt)
    out["compose"] = float(np.max(M.distance(c1.trajectories, c2.trajectories)))
    i1, i2 = al.inverse(A, "flow"), al.inverse(A, dt=dt)
    out["inverse"] = float(np.max(M.distance(i1.trajectories, i2.trajectories)))
    phi = al.ContactDiffeo.from_system(B, 0.5)
    k1, k2 = al.conjugate(A, phi), al.conjugate(A, phi, "hamiltonian", dt=dt)
    out["conjugate"] = float(np.max(M.distance(k1.trajectories, k2.trajectories)))
    left, right = al.compose(al.compose(A, B), C), al.compose(A, al.compose(B, C))
    out["associativity_flow"] = float(np.max(M.distance(left.trajectories, right.trajectories)))
    P = A.seeds
    out["associativity_hamiltonian"] = float(max(
        np.max(np.abs(left.hamiltonian.values(t, P) - right.hamiltonian.values(t, P)))
        for t in times))
    return out


def group_law_suite(count=20, seed=0, manifolds=("hopf", "darboux"), parent_dt=1e-2, tol=1e-5):
    rng = np.random.default_rng(seed)
    rep = ExperimentReport("group_laws", {"count": count, "seed": seed,
                                          "manifolds": list(manifolds), "parent_dt": parent_dt})
    rows = []
    for kind in manifolds:
        M = _manifold(kind)
        S = GROUP_SEEDS[kind]
        amp = 0.06 if kind == "hopf" else 0.3
        worst = {}
        for i in range(count):
            A, B, C = [integrate_system(M, parse_hamiltonian(random_field_text(rng, kind, amp), M), S,
                                        dt=parent_dt, t_samples=4, richardson=False)
                       for _ in range(3)]
            dev = group_law_pair(M, A, B, C)
            rows.append([0 if kind == "hopf" else 1, i, *dev.values()])
            for k, v in dev.items():
                worst[k] = max(worst.get(k, 0.0), v)
        for k, v in worst.items():
            rep.check(f"{kind}_{k}", v, 0.0, "eq", tol, "two_routes")
    rep.add_series("pairs", ["manifold", "index", "compose", "inverse", "conjugate",
                             "associativity_flow", "associativity_hamiltonian"], rows)
    return rep


# -- pointwise norm sandwiches ---------------------------------------------------------

def _extremes(field, grid, t=0.5):
    hi, lo, mean, _, _ = extrema(field, grid, np.array([t]))
    return float(hi[0]), float(lo[0]), float(mean[0])


def sandwich_suite(count=1000, seed=0, resolution=8):
    """|H| <= osc H + |c(H)| < 3|H| and e^{-|f|}||H||/3 <= ||e^f H|| <= 3 e^{|f|}||H||
    on random autonomous fields, alternating manifolds."""
    rng = np.random.default_rng(seed)
    grids = {k: _grid(_manifold(k), resolution) for k in ("hopf", "darboux")}
    v24 = v26 = 0
    worst24 = worst26 = np.inf
    for i in range(count):
        kind = ("hopf", "darboux")[i % 2]
        M = grids[kind].manifold
        H = parse_hamiltonian(random_field_text(rng, kind, rng.uniform(0.1, 2.0), time=False), M)
        f = parse_hamiltonian(random_field_text(rng, kind, rng.uniform(0.1, 1.0), time=False), M)
        hi, lo, c = _extremes(H, grids[kind])
        sup = max(abs(hi), abs(lo))
        norm = hi - lo + abs(c)
        v24 += not (sup <= norm < 3 * sup)
        worst24 = min(worst24, norm - sup, 3 * sup - norm)
        fhi, flo, _ = _extremes(f, grids[kind])
        fsup = max(abs(fhi), abs(flo))
        ehi, elo, ec = _extremes(rescale(H, f), grids[kind])
        enorm = ehi - elo + abs(ec)
        lower, upper = np.exp(-fsup) * norm / 3, 3 * np.exp(fsup) * norm
        v26 += not (lower <= enorm <= upper)
        worst26 = min(worst26, enorm - lower, upper - enorm)
    rep = ExperimentReport("sandwiches", {"count": count, "seed": seed, "grid": resolution})
    rep.check("sup_norm_sandwich_violations", v24, 0, "eq", 0, "bound")
    rep.check("rescaling_violations", v26, 0, "eq", 0, "bound")
    rep.add("sup_norm_sandwich_min_slack", worst24)
    rep.add("rescaling_min_slack", worst26)
    return rep


# -- symplectization -----------------------------------------------------------------

def symplectization_suite(count=1000, seed=0, resolution=(8, 8, 4), t_samples=64, cutoff_c=3.2):
    from .sphere import H_TEXT, sphere_seeds

    rng = np.random.default_rng(seed)
    M = hopf()
    rep = ExperimentReport("symplectization", {"count": count, "seed": seed,
                                               "grid": list(resolution), "cutoff_c": cutoff_c})
    X0 = sphere_seeds(32)
    X0[0] = [0.0, 0.0, 1.40]
    A = integrate_system(M, parse_hamiltonian(H_TEXT, M), X0, dt=1e-3, t_samples=20)
    L = sy.lift_system(A)
    rep.check("lift_vs_direct", L.meta["direct_deviation"], 0.0, "eq", 1e-4, "two_routes")
    rep.check("theta_at_t1_xi1_0", L.trajectories[-1, 0, -1], np.log(np.cosh(np.pi)), "eq", 1e-3,
              "closed_form")
    rep.check("cutoff_agreement", sy.cutoff_agreement(L, 0.0, 0.0, cutoff_c), 0.0, "eq", 1e-5,
              "two_routes")
    rep.check("symplectic_defect", sy.symplectic_defect(M, L.map(1.0),
                                                        np.column_stack([X0[:5], np.zeros(5)])),
              0.0, "eq", 1e-4, "finite_difference")
    grid = quadrature_grid(M, resolution)
    bad, slack = 0, np.inf
    for _ in range(count):
        H = parse_hamiltonian(random_field_text(rng, "hopf", rng.uniform(0.1, 2.0)), M)
        a = float(rng.uniform(-2.0, 1.5))
        b = float(a + rng.uniform(0.05, 2.0))
        value, base = sy.admissible_norm(H, a, b, grid, t_samples, with_base=True)
        lo, hi = sy.sandwich_bounds(a, b, base)
        bad += not (lo <= value <= hi)
        slack = min(slack, value - lo, hi - value)
    rep.check("admissible_sandwich_violations", bad, 0, "eq", 0, "bound")
    rep.add("admissible_sandwich_min_slack", slack)
    return rep


# -- l_BD reduction ---------------------------------------------------------------

def basic_field_text(rng):
    """z-independent, hence basic on Darboux space, with a time-varying mean."""
    a = [float(v) for v in rng.uniform(-0.5, 0.5, 4)]
    p = [float(v) for v in rng.uniform(0.0, 2 * np.pi, 3)]
    return (f"{a[0]!r} + {a[1]!r}*sin(2*pi*t + {p[0]!r}) + "
            f"{a[2]!r}*sin(x1 + {p[1]!r})*cos(y1)*cos(3*t) + {a[3]!r}*x1*y1*sin(t + {p[2]!r})")


def bd_reduction_suite(count=10, seed=0, resolution=7, t_samples=64):
    rng = np.random.default_rng(seed)
    M = darboux()
    grid = _grid(M, resolution)
    rep = ExperimentReport("bd_reduction", {"count": count, "seed": seed, "grid": resolution,
                                            "t_samples": t_samples})
    rows, texts = [], []
    for i in range(count):
        text = basic_field_text(rng)
        # midpoint nodes sit half a spacing inside the box, so boundary extrema
        # move a lot under refinement; both lengths share the same extrema search
        r = bd_length_and_energy(M, parse_hamiltonian(text, M), grid, t_samples, strict=False)
        rows.append([i, r["ell_bd"], r["norm"], r["reduced_norm"], r["reduction_check"],
                     r["refine_delta_rel"]])
        texts.append(text)
    rows = np.array(rows)
    rep.check("max_reduction_gap", float(np.max(rows[:, 4])), 0.0, "eq", 1e-5, "two_routes")
    rep.check("max_ell_minus_norm", float(np.max(rows[:, 1] - rows[:, 2])), 0.0, "le", 1e-12,
              "bound")
    s = bd_length_and_energy(M, parse_hamiltonian("sin(2*pi*t)", M), grid, t_samples)
    rep.check("sine_ell_bd", s["ell_bd"], 0.0, "eq", 1e-10, "closed_form")
    rep.check("sine_norm", s["norm"], 2.0 / np.pi, "eq", 1e-5, "closed_form")
    rep.check("sine_reduction_gap", s["reduction_check"], 0.0, "eq", 1e-10, "closed_form")
    rep.add("max_refine_delta_rel", float(np.max(rows[:, 5])))
    rep.add_series("fields", ["index", "ell_bd", "norm", "reduced_norm", "gap", "refine_delta_rel"],
                   rows)
    rep.meta["hamiltonians"] = texts
    return rep
