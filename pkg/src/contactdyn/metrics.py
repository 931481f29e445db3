"""Norms and distances on contact dynamical systems.

The contact length of H is the time integral of osc(H_t) + |c(H_t)|, where
osc = max - min over the manifold and c is the mean against the normalized
volume. Spatial extrema come from a quadrature grid plus one local
golden-section pass around the grid extremizers; time integrals use
composite Simpson unless explicit time nodes are supplied.
"""

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (DomainError, FlowQueryFailure, ManifoldMismatch, NotBasicWarning,
                     PoleCrossing, ResolutionTooCoarse, StepExplosion)
from .flow import ContactDynamicalSystem, Flow, FlowMap
from .hamfield import TimeFunctionField, difference, reeb_derivative
from .manifold import HOPF, quadrature_grid

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
REFINE_ITERS = 32
REFINE_SWEEPS = 2
MAX_REFINE_DELTA = 0.05
DEFAULT_RESOLUTION = {"hopf": (32, 32, 16), "darboux": 17}


@dataclass(frozen=True)
class NormReport:
    osc_integral: float
    mean_abs_integral: float
    total: float
    sup_variant: float
    grid_meta: dict = field(default_factory=dict)
    times: np.ndarray = field(default=None, repr=False)
    osc: np.ndarray = field(default=None, repr=False)
    mean: np.ndarray = field(default=None, repr=False)
    maximum: np.ndarray = field(default=None, repr=False)
    minimum: np.ndarray = field(default=None, repr=False)

    @property
    def mean_integral(self):
        """Signed time integral of c(H_t)."""
        return float(self.grid_meta["mean_integral"])

    def to_dict(self):
        return {"osc_integral": self.osc_integral, "mean_abs_integral": self.mean_abs_integral,
                "total": self.total, "sup_variant": self.sup_variant, "grid_meta": self.grid_meta}


@dataclass(frozen=True)
class DistanceReport:
    d_M: float
    d_bar_M: float
    conf_sup: float
    ham_norm: float
    d_alpha: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def default_grid(M, resolution=None):
    return quadrature_grid(M, resolution or DEFAULT_RESOLUTION[M.kind])


def simpson_weights(n):
    """Composite Simpson weights for n (even) intervals of [0, 1]."""
    if n < 2 or n % 2:
        raise DomainError("Simpson needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * n)


def time_quadrature(t_samples=64, nodes=None, weights=None):
    if nodes is not None:
        nodes = np.asarray(nodes, float)
        weights = np.asarray(weights, float)
        if nodes.shape != weights.shape:
            raise DomainError("time nodes and weights differ in shape")
        return nodes, weights
    if t_samples < 64:
        raise ResolutionTooCoarse("contact length needs at least 64 time samples")
    n = int(t_samples) + int(t_samples) % 2
    return np.linspace(0.0, 1.0, n + 1), simpson_weights(n)


def _refine(field, grid, T, P, sign):
    """Coordinate-wise golden-section ascent of sign * field around points P
    (one point per entry of T), within one grid spacing per axis."""
    P = P.copy()
    best = sign * field.values(T, P)
    lo_b, hi_b = grid.bounds[:, 0], grid.bounds[:, 1]
    for _ in range(REFINE_SWEEPS):
        for j in range(P.shape[1]):
            s = grid.spacing[j]
            a = np.maximum(P[:, j] - s, lo_b[j])
            b = np.minimum(P[:, j] + s, hi_b[j])
            c = b - GOLDEN * (b - a)
            d = a + GOLDEN * (b - a)

            def f(v):
                Q = P.copy()
                Q[:, j] = v
                return sign * field.values(T, Q)

            fc, fd = f(c), f(d)
            for _ in range(REFINE_ITERS):
                left = fc >= fd
                a = np.where(left, a, c)
                b = np.where(left, d, b)
                c, d = np.where(left, b - GOLDEN * (b - a), d), np.where(left, c, a + GOLDEN * (b - a))
                fnew = f(np.where(left, c, d))
                fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
            x = np.where(fc >= fd, c, d)
            fx = np.maximum(fc, fd)
            better = fx > best
            P[better, j] = x[better]
            best = np.where(better, fx, best)
    return sign * best


def extrema(field, grid, times, refine=True):
    """max, min and mean of field over the grid at each time."""
    M = grid.manifold
    if field.manifold != M:
        raise ManifoldMismatch(f"field on {field.manifold}, grid on {M}")
    times = np.asarray(times, float)
    K, N = len(times), len(grid)
    V = field.values(np.repeat(times, N), np.tile(grid.nodes, (K, 1))).reshape(K, N)
    if not np.all(np.isfinite(V)):
        raise FlowQueryFailure("field produced non-finite values on the grid")
    mean = V @ grid.weights
    imax, imin = V.argmax(1), V.argmin(1)
    gmax, gmin = V[np.arange(K), imax], V[np.arange(K), imin]
    if not refine:
        return gmax, gmin, mean, gmax, gmin
    T2 = np.concatenate([times, times])
    P = np.concatenate([grid.nodes[imax], grid.nodes[imin]])
    sign = np.concatenate([np.ones(K), -np.ones(K)])
    R = _refine(field, grid, T2, P, sign)
    return np.maximum(R[:K], gmax), np.minimum(R[K:], gmin), mean, gmax, gmin


def contact_norm(M, field, grid=None, t_samples=64, *, time_nodes=None, time_weights=None,
                 refine=True, strict=True):
    """Contact length with its sup-in-time variant."""
    if field.manifold != M:
        raise ManifoldMismatch(f"field on {field.manifold}, asked on {M}")
    grid = default_grid(M) if grid is None else grid
    if len(grid) == 0:
        raise ResolutionTooCoarse("empty quadrature grid")
    ts, tw = time_quadrature(t_samples, time_nodes, time_weights)
    hi, lo, mean, ghi, glo = extrema(field, grid, ts, refine)
    osc = hi - lo
    integrand = osc + np.abs(mean)
    osc_int = float(tw @ osc)
    mean_abs = float(tw @ np.abs(mean))
    total = osc_int + mean_abs
    delta = float(tw @ ((hi - lo) - (ghi - glo)))
    rel = delta / total if total > 0 else 0.0
    meta = dict(grid.meta, nodes=len(grid), t_nodes=len(ts), refine_delta=delta,
                refine_delta_rel=rel, mean_integral=float(tw @ mean))
    if strict and rel > MAX_REFINE_DELTA:
        raise ResolutionTooCoarse(f"refinement changed the length by {100 * rel:.2f}% (> 5%)")
    return NormReport(osc_int, mean_abs, total, float(np.max(integrand)), meta, ts, osc, mean, hi, lo)


def sup_norm(h):
    """max |h| over a sampled conformal factor (array or system)."""
    if isinstance(h, ContactDynamicalSystem):
        h = h.conformal
    h = np.asarray(h, float)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h)))


# -- C0 distances --------------------------------------------------------------

def _maps(obj, times):
    """(forward, inverse) point maps at each time, as functions of (T, X)."""
    if isinstance(obj, ContactDynamicalSystem):
        obj = obj.flow
    if isinstance(obj, FlowMap):
        t, flow = obj.t, obj.system.flow
        return ([t], lambda T, X: flow.forward(t, X)[0], lambda T, X: flow.backward(t, X)[0])
    if isinstance(obj, Flow):
        return (list(times), lambda T, X: obj.forward(T, X)[0], lambda T, X: obj.backward(T, X)[0])
    if hasattr(obj, "inverse") and callable(obj):
        return [1.0], lambda T, X: obj(X), lambda T, X: obj.inverse(X)
    raise DomainError(f"cannot read {type(obj).__name__} as a map")


def c0_distance(M, A, B, probes, times=None):
    """(d_M, d_bar_M): max chart distance between the maps (and their inverses)
    over probes and, for isotopies, over the time samples."""
    P, _ = M.coords(probes)
    P = M.check(M.wrap(P))
    times = np.linspace(0.0, 1.0, 11) if times is None else np.asarray(times, float)
    ta, fa, ia = _maps(A, times)
    tb, fb, ib = _maps(B, times)
    ts = np.asarray(ta if len(ta) >= len(tb) else tb, float)
    T = np.repeat(ts, len(P))
    X = np.tile(P, (len(ts), 1))
    try:
        d = float(np.max(M.distance(fa(T, X), fb(T, X))))
        dinv = float(np.max(M.distance(ia(T, X), ib(T, X))))
    except (PoleCrossing, StepExplosion) as exc:
        raise FlowQueryFailure(str(exc)) from exc
    return d, d + dinv


def contact_distance(A, B, probes=None, grid=None, t_samples=64, *, time_nodes=None,
                     time_weights=None, strict=True, refine=True):
    """d_alpha = d_bar_M + |h - f| + ||H - F|| between two systems."""
    if A.manifold != B.manifold:
        raise ManifoldMismatch(f"{A.manifold} vs {B.manifold}")
    M = A.manifold
    probes = A.seeds if probes is None else probes
    times = A.times if len(A.times) <= len(B.times) else B.times
    d, dbar = c0_distance(M, A.flow, B.flow, probes, times)
    same = (A.seeds.shape == B.seeds.shape and np.array_equal(A.seeds, B.seeds)
            and len(A.times) == len(B.times) and np.allclose(A.times, B.times))
    if same and probes is A.seeds:
        conf = sup_norm(A.conformal - B.conformal)
    else:
        P, _ = M.coords(probes)
        T = np.repeat(times, len(P))
        X = np.tile(P, (len(times), 1))
        conf = sup_norm(A.flow.forward(T, X)[1] - B.flow.forward(T, X)[1])
    ham = contact_norm(M, difference(A.hamiltonian, B.hamiltonian), grid, t_samples,
                       time_nodes=time_nodes, time_weights=time_weights, strict=strict,
                       refine=refine).total
    return DistanceReport(d, dbar, conf, ham, dbar + conf + ham,
                          {"probes": int(np.atleast_2d(probes).shape[0]), "t_samples": len(times)})


# -- Banyaga-Donato length -------------------------------------------------------

def is_basic(field, grid, times, tol=1e-8):
    times = np.asarray(times, float)
    K, N = len(times), len(grid)
    J = field.jets(np.repeat(times, N), np.tile(grid.nodes, (K, 1)))
    return float(np.max(np.abs(reeb_derivative(grid.manifold, J)))) < tol


def mean_field(field, grid):
    """Space-constant field t -> c(H_t) - average over t, sign flipped: c_bar - c_t."""
    nodes, w = grid.nodes, grid.weights

    def c(t):
        t = np.atleast_1d(np.asarray(t, float))
        u, inv = np.unique(t.ravel(), return_inverse=True)
        out = np.array([field.values(np.full(len(nodes), s), nodes) @ w for s in u])
        return out[inv].reshape(t.shape)

    return c


def bd_length_and_energy(M, field, grid=None, t_samples=64, generators=(), reduction=True,
                         dt=1e-2, probes=None, strict=True):
    """Banyaga-Donato length int osc + |int c|, the E = E_ reduction check and
    an upper bound for the contact energy."""
    from .algebra import ComposeHamiltonian
    from .flow import integrate_system

    grid = default_grid(M) if grid is None else grid
    rep = contact_norm(M, field, grid, t_samples, strict=strict)
    ell = rep.osc_integral + abs(rep.mean_integral)
    basic = is_basic(field, grid, rep.times)
    if not basic:
        warnings.warn(f"{field.label} is not basic; l_BD does not bound the energy", NotBasicWarning)
    out = {"ell_bd": ell, "norm": rep.total, "basic": basic,
           "refine_delta_rel": rep.grid_meta["refine_delta_rel"]}
    if reduction:
        c = mean_field(field, grid)
        cbar = rep.mean_integral
        eps = 1e-5
        F = TimeFunctionField(M, lambda t: cbar - c(t),
                              lambda t: -(c(t + eps) - c(t - eps)) / (2 * eps),
                              label=f"c - c_t[{field.label}]")
        seeds = grid.nodes[:1] if probes is None else probes
        A = integrate_system(M, field, seeds, dt=dt, t_samples=8, richardson=False)
        B = integrate_system(M, F, seeds, dt=dt, t_samples=8, richardson=False)
        HF = contact_norm(M, ComposeHamiltonian(A, B), grid, t_samples, strict=strict)
        out["reduced_norm"] = HF.total
        out["reduction_check"] = abs(HF.total - ell)
    ells = [ell] + [bd_length_and_energy(M, g, grid, t_samples, reduction=False,
                                         strict=strict)["ell_bd"]
                    for g in generators]
    out["energy_upper"] = float(min(ells))
    return out


# -- displacement ----------------------------------------------------------------

def displacement_energy_functional(A, K, margin=None, t=1.0, grid=None, t_samples=64):
    """Whether phi^t moves the sample K off itself, and e^{-|h|} ||H||."""
    M = A.manifold
    P, _ = M.coords(K)
    P = M.check(M.wrap(P))
    if margin is None:
        margin = max(10.0 * A.meta.get("richardson_error", 0.0), 1e-9)
    try:
        Y, _ = A.flow.forward(float(t), P)
    except (PoleCrossing, StepExplosion) as exc:
        raise FlowQueryFailure(str(exc)) from exc
    gap = min(float(np.min(M.distance(np.repeat(Y, len(P), axis=0), np.tile(P, (len(Y), 1))))),
              np.inf)
    norm = contact_norm(M, A.hamiltonian, grid, t_samples).total
    functional = float(np.exp(-sup_norm(A.conformal)) * norm)
    return {"displaced": bool(gap > margin), "gap": gap, "margin": float(margin),
            "functional": functional, "norm": norm}


def angular_eta_band(M, width=0.2):
    """A thin eta band for fields independent of eta and xi2 (see quadrature_grid)."""
    if M.kind != HOPF:
        raise DomainError("eta bands exist only on the Hopf chart")
    mid = np.pi / 4
    return (mid - width / 2, mid + width / 2)
