"""H = cos(xi1)/2 and F = 1 on the Hopf sphere.

Closed forms. With theta0 = xi1(0)/2 + pi/4 the first angle obeys
tan(xi1(t)/2 + pi/4) = tan(theta0) e^{pi t}, xi2 moves by the same amount,
h_t = pi t - ln(cos^2 theta0 + sin^2 theta0 e^{2 pi t}) and
cos eta(t) = cos eta(0) e^{h_t / 2}.
"""

from math import cosh, exp, log, pi, sinh

import numpy as np

from .. import algebra as al
from ..flow import integrate_system, pullback_conformal_factor
from ..hamfield import parse_hamiltonian
from ..manifold import TWO_PI, hopf, quadrature_grid
from ..metrics import contact_norm
from .report import ExperimentReport

H_TEXT = "0.5*cos(xi1)"
F_TEXT = "1"
# a thin band near eta = pi/2 keeps every composite flow off the pole circle
ETA_BAND = (1.44, 1.5)
SEED_ETA = 1.40


def sphere_seeds(count=32, eta=SEED_ETA):
    i = np.arange(count)
    return np.column_stack([TWO_PI * (i + 0.5) / count, np.mod(2.399963229728653 * i, TWO_PI),
                            np.full(count, eta)])


def closed_form(X0, t):
    """(xi1, xi2, eta) at time t and h_t for seeds X0; t scalar or one per seed."""
    X0 = np.atleast_2d(np.asarray(X0, float))
    t = np.broadcast_to(np.asarray(t, float), (len(X0),))
    th0 = X0[:, 0] / 2 + pi / 4
    th = np.arctan2(np.sin(th0) * np.exp(pi * t), np.cos(th0))
    dth = np.mod(th - th0 + pi / 2, pi) - pi / 2
    shift = 2 * dth
    h = pi * t - np.log(np.cos(th0) ** 2 + np.sin(th0) ** 2 * np.exp(2 * pi * t))
    eta = np.arccos(np.cos(X0[:, 2]) * np.exp(h / 2))
    Y = np.column_stack([np.mod(X0[:, 0] + shift, TWO_PI), np.mod(X0[:, 1] + shift, TWO_PI), eta])
    return Y, h


def mean_integral_oracle():
    """int_0^1 of (3/8)e^{2 pi t} + 1/4 + (3/8)e^{-2 pi t}, i.e. the mean of e^{3h}."""
    return 3.0 / (16.0 * pi) * (exp(2 * pi) - exp(-2 * pi)) + 0.25


def marginal_mean_oracle():
    """int_0^1 cosh(pi t) dt: the volume mean of e^{h_t o phi_t^-1}, a function of xi1 only."""
    return sinh(pi) / pi


def band_grid(M, resolution=256):
    return quadrature_grid(M, (resolution, 1, 1), eta_band=ETA_BAND, min_resolution=1)


def example_sphere(dt=1e-3, parent_dt=1e-2, t_samples=64, resolution=256, seeds=32):
    M = hopf()
    X0 = sphere_seeds(seeds)
    H = parse_hamiltonian(H_TEXT, M)
    F = parse_hamiltonian(F_TEXT, M)
    rep = ExperimentReport("sphere", {"dt": dt, "parent_dt": parent_dt, "t_samples": t_samples,
                                      "band_resolution": resolution, "eta_band": list(ETA_BAND),
                                      "seeds": seeds})

    # (i), (ii): trajectories and conformal factors against the closed forms
    A = integrate_system(M, H, X0, dt=dt, t_samples=100)
    K = len(A.times)
    T = np.repeat(A.times, len(X0))
    Y, h = closed_form(np.tile(X0, (K, 1)), T)
    err = M.distance(A.trajectories.reshape(-1, 3), Y)
    rep.check("trajectory_error", float(np.max(err)), 0.0, "eq", 1e-6, "closed_form")
    rep.check("conformal_error", float(np.max(np.abs(A.conformal.ravel() - h))), 0.0, "eq", 1e-6,
              "closed_form")
    fd = [pullback_conformal_factor(M, A.flow_map(1.0), 1.0, x) for x in X0[::8]]
    rep.check("pullback_error", float(np.max(np.abs(np.array(fd) - A.conformal[-1, ::8]))), 0.0,
              "eq", 1e-3, "finite_difference")
    rep.check("h_1_at_xi1_0", closed_form([[0.0, 0.0, SEED_ETA]], 1.0)[1][0], -log(cosh(pi)),
              "eq", 1e-12, "closed_form")

    # (iii): norms of the generators and their inverses
    full = quadrature_grid(M, (32, 32, 16))
    band = band_grid(M, resolution)
    pa = integrate_system(M, H, X0[:1], dt=parent_dt, t_samples=4, richardson=False)
    pb = integrate_system(M, F, X0[:1], dt=parent_dt, t_samples=4, richardson=False)
    for name, field, grid in [("norm_H", H, full), ("norm_F", F, full),
                              ("norm_H_inverse", al.InverseHamiltonian(pa), band),
                              ("norm_F_inverse", al.InverseHamiltonian(pb), band),
                              ("norm_one_minus_H", parse_hamiltonian("1 - 0.5*cos(xi1)", M), full)]:
        target = 2.0 if name == "norm_one_minus_H" else 1.0
        rep.check(name, contact_norm(M, field, grid, t_samples).total, target, "eq", 1e-5, "closed_form")
    C = al.compose(pa, pb)
    nbar = contact_norm(M, al.InverseHamiltonian(C), band, t_samples).total
    rep.check("norm_inverse_of_H_compose_F", nbar, 2.0, "eq", 1e-5, "closed_form")

    # (iv), (v): the composite H#F
    comp = contact_norm(M, al.ComposeHamiltonian(pa, pb), band, t_samples)
    ts = comp.times
    rep.add("norm_H_compose_F", comp.total)
    rep.add("osc_integral_H_compose_F", comp.osc_integral)
    rep.add("mean_integral_H_compose_F", comp.mean_integral)
    rep.check("norm_H_compose_F_gt_16", comp.total, 16.0, "gt", 0.0, "stated_bound")
    target = mean_integral_oracle()
    rep.check("mean_integral_vs_e3h_oracle", comp.mean_integral, target, "eq", 0.005 * target,
              "closed_form")
    rep.check("mean_integral_vs_marginal_oracle", comp.mean_integral, marginal_mean_oracle(), "eq",
              1e-5, "closed_form")
    rep.check("min_mean_minus_exp_bound", float(np.min(comp.mean - np.exp(-3 * pi * ts))), 0.0,
              "ge", 1e-12, "stated_bound")
    rep.check("min_osc_minus_sinh_bound",
              float(np.min(comp.osc - (np.exp(pi * ts) - np.exp(-pi * ts)))), 0.0, "ge", 1e-9,
              "stated_bound")
    rep.add("lower_bound_with_one_over_3pi", (exp(pi) + exp(-pi) - 2) / pi
            + (1 - exp(-3 * pi)) / (3 * pi))
    rep.add("lower_bound_with_3pi", (exp(pi) + exp(-pi) - 2) / pi + 3 * pi * (1 - exp(-3 * pi)))
    rep.add_series("composite", ["t", "osc", "mean", "cosh_pi_t"],
                   np.column_stack([ts, comp.osc, comp.mean, np.cosh(pi * ts)]))
    rep.meta["band_note"] = ("composite fields here depend on xi1 only, so one node in xi2 and "
                             "eta gives the volume mean exactly")
    return rep
