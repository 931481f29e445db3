"""Divergent sequences on Darboux space and the middle-thirds reparameterization."""

from math import log

import numpy as np

from .. import algebra as al
from ..flow import IdentityFlow, IntegratedFlow, integrate_system
from ..hamfield import builtin, parse_hamiltonian
from ..manifold import darboux, hopf, quadrature_grid
from ..metrics import c0_distance, contact_norm, sup_norm
from .cutoffs import (CantorDensity, CutoffFamily, cantor_field, cantor_function,
                      step_l1_distance)
from .report import ExperimentReport

ISOTOPY_BOX = ((-0.5, 1.5), (-1.0, 1.0), (-5.0, 5.0))


def _lattice(scale, per_axis=3, dim=3):
    ax = np.linspace(-scale, scale, per_axis)
    mesh = np.meshgrid(*([ax] * dim), indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=1)
    return P[np.argsort(np.sum(P * P, axis=1), kind="stable")]


def breakpoint_quadrature(breaks, order=8, lo=0.0, hi=1.0):
    """Gauss-Legendre nodes on every gap between sorted breakpoints in [lo, hi]."""
    b = np.unique(np.clip(np.concatenate([[lo, hi], np.asarray(breaks, float)]), lo, hi))
    g, w = np.polynomial.legendre.leggauss(order)
    a, c = b[:-1], b[1:]
    half = 0.5 * (c - a)
    nodes = (0.5 * (a + c))[:, None] + half[:, None] * g[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


# -- divergent conformal factors ---------------------------------------------------

def divergent_factors_system(k, dt=1e-3, t_samples=100, M=None):
    M = M or darboux()
    fam = CutoffFamily(k)
    H = builtin("divergent_factors", M, k=k)
    seeds = _lattice(0.8 * fam.eps)
    return integrate_system(M, H, seeds, dt=dt, t_samples=t_samples)


def divergent_factors_grid(M, k, resolution=17):
    e = 1.05 * CutoffFamily(k).eps
    return quadrature_grid(M, resolution, box=((-e, e),) * M.dim)


def example_divergent_factors(k=4, dt=1e-3, resolution=17, inverse_norm=True,
                              inverse_resolution=9):
    k = int(k)
    fam = CutoffFamily(k)
    A = divergent_factors_system(k, dt)
    M = A.manifold
    rep = ExperimentReport("divergent_factors", {"k": k, "eps_k": fam.eps, "dt": dt,
                                                 "grid": resolution, "seeds": len(A.seeds)})
    res = fam.verify()
    rep.check("rho_prime_at_0", 1.0 + res["rho_prime_at_0_minus_1"], 1.0, "eq", 1e-9, "construction")
    rep.check("max_rho_prime", res["max_rho_prime"], 1.0, "le", 1e-9, "construction")
    rep.check("rho_plateau_error", res["plateau_error"], 0.0, "eq", 1e-12, "construction")
    i0 = int(np.argmin(np.sum(A.seeds ** 2, axis=1)))
    rep.check("h_1_origin", A.conformal[-1, i0], log(k), "eq", 1e-3, "closed_form")
    rep.check("sup_abs_h", sup_norm(A), log(k), "eq", 1e-3, "closed_form")
    grid = divergent_factors_grid(M, k, resolution)
    nrm = contact_norm(M, A.hamiltonian, grid)
    rep.check("norm_H", nrm.total, 3.0 / k ** 2, "le", 0.0, "bound")
    rep.add("osc_integral_H", nrm.osc_integral)
    rep.add("mean_abs_integral_H", nrm.mean_abs_integral)
    if inverse_norm:
        P = integrate_system(M, A.hamiltonian, A.seeds[:1], dt=1e-2, t_samples=4, richardson=False)
        g2 = divergent_factors_grid(M, k, inverse_resolution)
        inv = contact_norm(M, al.InverseHamiltonian(P), g2, strict=False)
        rep.check("norm_H_inverse", inv.total, 3.0 / k, "le", 0.0, "bound")
    d, dbar = c0_distance(M, A.flow, IdentityFlow(M), A.seeds, A.times[::10])
    rep.add("d_M_to_id", d)
    rep.add("d_bar_M_to_id", dbar)
    rep.add("richardson_error", A.meta["richardson_error"])
    rep.add_series("conformal_origin", ["t", "h"], np.column_stack([A.times, A.conformal[:, i0]]))
    return rep


# -- divergent isotopies ------------------------------------------------------------

def isotopy_seeds(k_values=(1, 2, 4, 8)):
    pts = [[0, 0, 0], [0.5, 0, 0], [1.0, 0, 0], [0.3, 0.2, 0.4], [-0.2, -0.3, 1.0],
           [1.0, 0.1, -0.5], [0.5, 0.0, 2.0]]
    for k in k_values:
        e = 1.0 / k
        pts += [[0.0, 0.5 * e, 0.0], [0.0, -e, 0.0], [0.4, 2.0 * e, 0.1]]
    return np.array(pts, float)


def divergent_isotopies_system(k, dt=1e-3, t_samples=100, seeds=None, M=None):
    M = M or darboux()
    H = builtin("divergent_isotopies", M, k=k)
    seeds = isotopy_seeds() if seeds is None else seeds
    return integrate_system(M, H, seeds, dt=dt, t_samples=t_samples)


def example_divergent_isotopies(k=1, dt=1e-3, resolution=17):
    k = int(k)
    A = divergent_isotopies_system(k, dt)
    M = A.manifold
    eps = 1.0 / k
    rep = ExperimentReport("divergent_isotopies", {"k": k, "eps_k": eps, "dt": dt,
                                                   "grid": resolution, "seeds": len(A.seeds)})
    end = A.final[0]
    rep.check("endpoint_error", float(np.max(np.abs(end - [1.0, 0.0, 0.0]))), 0.0, "eq", 1e-4,
              "closed_form")
    for name, v in zip(("x1", "y1", "z"), end):
        rep.add(f"endpoint_{name}", v)
    d, dbar = c0_distance(M, A.flow, IdentityFlow(M), A.seeds, A.times[::10])
    rep.add("d_M_to_id", d)
    rep.check("d_bar_M_to_id", dbar, 1.0, "ge", 1e-3, "bound")
    grid = quadrature_grid(M, resolution, box=ISOTOPY_BOX)
    nrm = contact_norm(M, A.hamiltonian, grid)
    h = sup_norm(A)
    rep.add("norm_H", nrm.total)
    rep.add("sup_abs_h", h)
    rep.check("norm_H_plus_sup_h", nrm.total + h, 3.0 * eps, "lt", 0.0, "bound")
    rep.add_series("origin_path", ["t", "x1", "y1", "z"], np.column_stack([A.times, A.trajectories[:, 0]]))
    return rep


# -- middle-thirds ---------------------------------------------------------------

def mollified_l1(k, j, order=8):
    """int_0^1 |G_k - G_j| with nodes on every edge and transition boundary."""
    dk, dj = CantorDensity(k), CantorDensity(j)
    breaks = np.concatenate([dk.edges() - dk.delta, dk.edges(), dk.edges() + dk.delta,
                             dj.edges() - dj.delta, dj.edges(), dj.edges() + dj.delta])
    t, w = breakpoint_quadrature(breaks, order)
    return float(w @ np.abs(dk(t) - dj(t)))


def cantor_seeds(count=6):
    i = np.arange(count)
    return np.column_stack([2 * np.pi * (i + 0.5) / count, np.mod(2.399963 * i, 2 * np.pi),
                            np.full(count, 0.6 + 0.05 * i)])


def cantor_reeb_flow(M, dt=1e-3):
    return IntegratedFlow(parse_hamiltonian("1", M), dt)


def cantor_system(k, M=None, seeds=None, t_samples=100):
    """Reeb flow resampled at F_k(t): flow phi_R^{F_k(t)}, Hamiltonian G_k."""
    M = M or hopf()
    seeds = cantor_seeds() if seeds is None else seeds
    reeb = integrate_system(M, parse_hamiltonian("1", M), seeds, dt=1e-3, t_samples=t_samples,
                            richardson=False)
    S = al.reparameterize(reeb, al.Reparameterization.cantor(k))
    return S


def cantor_limit_flow(M, dt=1e-3):
    zeta = al.Reparameterization(cantor_function, lambda t: np.full(np.shape(t), np.nan), "cantor")
    return al.ReparamFlow(cantor_reeb_flow(M, dt), zeta)


def example_cantor(k=4, dt=1e-3, t_fine=2001, t_probe=201):
    k = int(k)
    M = hopf()
    dens = CantorDensity(k)
    rep = ExperimentReport("cantor", {"k": k, "delta": dens.delta, "dt": dt})
    if k >= 1:
        steps = [float(step_l1_distance(k, j)) for j in range(k)]
        moll = [mollified_l1(k, j) for j in range(k)]
        rep.check("min_step_l1", min(steps), 5.0 / 9.0, "ge", 0.0, "bound")
        exact = [2.0 * (1.0 - (2.0 / 3.0) ** (k - j)) for j in range(k)]
        rep.check("step_l1_closed_form_error", max(abs(a - b) for a, b in zip(steps, exact)), 0.0,
                  "eq", 1e-15, "closed_form")
        rep.add("stage_bound_one_minus_two_thirds_pow_k", 1.0 - (2.0 / 3.0) ** k)
        rep.check("min_mollified_l1", min(moll), 0.5, "ge", 0.0, "bound")
        rep.add_series("l1", ["j", "step", "mollified"], np.column_stack([np.arange(k), steps, moll]))
    t = np.linspace(0.0, 1.0, t_fine)
    rep.add("sup_Fk_minus_cantor", float(np.max(np.abs(dens.integral(t) - cantor_function(t)))))
    rep.add("F_k_at_1", float(dens.integral(1.0)))
    # direct integration of the space-constant field, steps placed on the transitions
    seeds = cantor_seeds()
    field = cantor_field(M, k)
    mesh = al.cantor_mesh(dens)
    S = integrate_system(M, field, seeds, dt=dt, t_samples=100, time_mesh=mesh)
    rep.check("sup_abs_h", sup_norm(S), 0.0, "le", 1e-10, "closed_form")
    exact = M.wrap(seeds[None] + 2 * np.pi * dens.integral(S.times)[:, None, None] * [1, 1, 0])
    rep.check("trajectory_error", float(np.max(M.distance(S.trajectories, exact))), 0.0, "eq", 1e-6,
              "closed_form")
    # distance from the resampled Reeb flow to the Cantor-reparameterized one
    R = cantor_system(k, M, seeds)
    d, _ = c0_distance(M, R.flow, cantor_limit_flow(M), seeds, np.linspace(0.0, 1.0, t_probe))
    rep.add("d_M_to_limit", d)
    tn, tw = breakpoint_quadrature(np.concatenate([dens.edges() - dens.delta, dens.edges(),
                                                   dens.edges() + dens.delta]))
    # space-constant: osc vanishes identically, so no spatial refinement
    nrm = contact_norm(M, field, quadrature_grid(M, 2, min_resolution=1), time_nodes=tn, time_weights=tw, refine=False)
    rep.add("norm_G", nrm.total)
    return rep
