"""Symplectization W = M x R with omega = -d(e^theta alpha).

Points of W are rows (x..., theta). A contact system (Phi, H, h) lifts to the
admissible isotopy (x, theta) -> (phi_t(x), theta - h_t(x)) generated by
Hhat = e^theta H. The module also integrates Hamiltonian fields on W
directly from i(X)omega = dHhat, which is how the lift is checked.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CutoffTooTight, DomainError, FlowQueryFailure, ManifoldMismatch, SingularSystem
from .flow import MAX_DT, _steps
from .manifold import HOPF, TWO_PI
from .metrics import extrema, default_grid, sup_norm, time_quadrature
from .primitives import smoothstep

COND_LIMIT = 1e12


@dataclass(frozen=True)
class SymplectizationPoint:
    base: np.ndarray
    theta: float

    @property
    def coords(self):
        return np.append(self.base, self.theta)


def _split(XW):
    XW = np.atleast_2d(np.asarray(XW, float))
    return XW[:, :-1], XW[:, -1]


def omega_matrix(M, XW):
    """Omega[i, j] = omega(e_i, e_j) = -e^theta (dtheta ^ alpha + d alpha)(e_i, e_j)."""
    X, th = _split(XW)
    N, d = X.shape
    a = np.zeros((N, d + 1))
    a[:, :d] = M.alpha(X)
    Wm = np.zeros((N, d + 1, d + 1))
    Wm[:, :d, :d] = M.d_alpha(X)
    e = np.zeros(d + 1)
    e[d] = 1.0
    dta = e[None, :, None] * a[:, None, :] - a[:, :, None] * e[None, None, :]
    return -np.exp(th)[:, None, None] * (dta + Wm)


def _wrap_w(M, XW):
    if M.kind == HOPF:
        XW = XW.copy()
        XW[:, :2] = np.mod(XW[:, :2], TWO_PI)
    return XW


# -- fields on W -------------------------------------------------------------------

class LiftedHamiltonian:
    """Hhat(t, x, theta) = rho(theta) e^theta H(t, x), rho = 1 unless a cutoff is set."""

    def __init__(self, base, cutoff=None):
        self.base = base
        self.manifold = base.manifold
        self.cutoff = cutoff

    def _rho(self, th):
        if self.cutoff is None:
            return np.ones_like(th), np.zeros_like(th)
        return self.cutoff(th)

    def values(self, t, XW):
        X, th = _split(XW)
        r, _ = self._rho(th)
        return r * np.exp(th) * self.base.values(t, X)

    def gradient(self, t, XW):
        X, th = _split(XW)
        J = self.base.jets(t, np.ascontiguousarray(X))
        r, dr = self._rho(th)
        s = np.exp(th)
        G = np.empty((len(X), X.shape[1] + 1))
        G[:, :-1] = (r * s)[:, None] * J[:, 2:]
        G[:, -1] = (r + dr) * s * J[:, 0]
        return G


def hamiltonian_vector_field_w(M, hw, t, XW):
    """Solve i(X)omega = dHhat, i.e. Omega^T X = dHhat, per point."""
    XW = np.atleast_2d(XW)
    Om = omega_matrix(M, XW)
    A = np.transpose(Om, (0, 2, 1))
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularSystem(f"omega nearly degenerate (condition {np.nanmax(cond):.3g})")
    return np.linalg.solve(A, hw.gradient(t, XW)[:, :, None])[:, :, 0]


def integrate_w(M, hw, XW0, times, dt=1e-3):
    """RK4 for a Hamiltonian field on W; returns (K, N, dim + 1) samples."""
    if not 0.0 < dt <= MAX_DT:
        raise DomainError(f"dt must lie in (0, {MAX_DT:g}]")
    Y = _wrap_w(M, np.atleast_2d(np.asarray(XW0, float)).copy())
    times = np.asarray(times, float)
    out = np.empty((len(times),) + Y.shape)
    out[0] = Y
    lo, hi = M.eta_bounds if M.kind == HOPF else (-np.inf, np.inf)
    for i in range(len(times) - 1):
        n = max(int(_steps(times[i + 1] - times[i], dt)), 1)
        h = (times[i + 1] - times[i]) / n
        for s in range(n):
            t = times[i] + s * h
            k1 = hamiltonian_vector_field_w(M, hw, t, Y)
            k2 = hamiltonian_vector_field_w(M, hw, t + h / 2, Y + h / 2 * k1)
            k3 = hamiltonian_vector_field_w(M, hw, t + h / 2, Y + h / 2 * k2)
            k4 = hamiltonian_vector_field_w(M, hw, t + h, Y + h * k3)
            Y = _wrap_w(M, Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
            if M.kind == HOPF and np.any((Y[:, 2] < lo) | (Y[:, 2] > hi)):
                raise FlowQueryFailure("W trajectory entered the pole margin")
        out[i + 1] = Y
    return out


# -- admissible lifts ----------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleSystem:
    """Lift of a contact system: phihat_t(x, theta) = (phi_t(x), theta - h_t(x))."""
    parent: object
    hamiltonian: LiftedHamiltonian
    theta0: np.ndarray
    trajectories: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def manifold(self):
        return self.parent.manifold

    @property
    def times(self):
        return self.parent.times

    @property
    def seeds(self):
        return self.trajectories[0]

    def forward(self, t, XW):
        X, th = _split(XW)
        Y, h = self.parent.flow.forward(t, X)
        return np.column_stack([Y, th - h])

    def backward(self, t, XW):
        X, th = _split(XW)
        Y, hinv = self.parent.flow.backward(t, X)
        return np.column_stack([Y, th + hinv])

    def map(self, t):
        return lambda XW: self.forward(t, XW)


def lift_system(A, theta0=0.0, verify=True, dt=None, probes=8):
    """Admissible lift of A; with ``verify`` the lift of a few seeds is compared
    against direct integration of Hhat on W (meta['direct_deviation'])."""
    N = len(A.seeds)
    th0 = np.broadcast_to(np.asarray(theta0, float), (N,)).copy()
    traj = np.concatenate([A.trajectories, (th0[None, :] - A.conformal)[..., None]], axis=2)
    hw = LiftedHamiltonian(A.hamiltonian)
    meta = {"theta0": th0.tolist()}
    L = AdmissibleSystem(A, hw, th0, traj, meta)
    if verify:
        idx = np.unique(np.linspace(0, N - 1, min(probes, N)).astype(int))
        dt = dt or A.meta.get("dt") or 1e-3
        direct = integrate_w(A.manifold, hw, traj[0, idx], A.times, dt)
        meta["direct_deviation"] = w_deviation(A.manifold, direct, traj[:, idx])
        meta["direct_probes"] = idx.tolist()
    return L


def w_deviation(M, P, Q):
    D = np.asarray(P) - np.asarray(Q)
    if M.kind == HOPF:
        D[..., :2] = np.mod(D[..., :2] + np.pi, TWO_PI) - np.pi
    return float(np.max(np.abs(D)))


def compose_lifts(LA, LB):
    """The W map phihat_A o phihat_B at each time, as a function of (t, XW)."""
    return lambda t, XW: LA.forward(t, LB.forward(t, XW))


def identity_lift(XW):
    return np.atleast_2d(np.asarray(XW, float)).copy()


# -- norms ----------------------------------------------------------------------

def admissible_norm(L, a, b, grid=None, t_samples=64, with_base=False):
    """||Hhat||_{a,b}: time integral of the oscillation of e^theta H over
    M x [a, b]. Extremes sit at theta in {a, b}, picked by the sign of the
    extremes of H_t on M."""
    if not a < b:
        raise DomainError("need a < b")
    H = L.hamiltonian.base if isinstance(L, AdmissibleSystem) else L
    M = H.manifold
    grid = default_grid(M) if grid is None else grid
    ts, tw = time_quadrature(t_samples)
    hi, lo, mean, _, _ = extrema(H, grid, ts)
    ea, eb = np.exp(a), np.exp(b)
    top = np.where(hi >= 0, eb * hi, ea * hi)
    bot = np.where(lo <= 0, eb * lo, ea * lo)
    value = float(tw @ (top - bot))
    if with_base:
        return value, float(tw @ (hi - lo + np.abs(mean)))
    return value


def sandwich_bounds(a, b, base_norm):
    return min(np.exp(b) - np.exp(a), np.exp(a)) * base_norm, np.exp(b) * base_norm


# -- cutoffs --------------------------------------------------------------------

def cutoff_function(a, b, c):
    """rho = 1 on [a - c, b + c], 0 outside (a - c - 1, b + c + 1); (value, derivative)."""
    lo, hi = a - c - 1.0, b + c + 1.0

    def rho(th):
        th = np.asarray(th, float)
        u, du = smoothstep(th - lo)
        v, dv = smoothstep(hi - th)
        return u * v, du * v - u * dv

    rho.support = (lo, hi)
    rho.plateau = (a - c, b + c)
    return rho


def cutoff_hamiltonian(L, a, b, c):
    """rho(theta) Hhat for the admissible lift L; c must dominate sup |h|."""
    bound = sup_norm(L.parent.conformal)
    if c < bound:
        raise CutoffTooTight(f"c = {c:g} below sup|h| = {bound:.6g}")
    hw = LiftedHamiltonian(L.parent.hamiltonian, cutoff_function(a, b, c))
    hw.meta = {"a": a, "b": b, "c": c, "transition_width": 1.0, "glue": "exp(-1/s)"}
    return hw


def cutoff_agreement(L, a, b, c, thetas=None, dt=None, probes=8):
    """Max deviation between the cut flow from seeds in M x [a, b] and the lift."""
    M = L.manifold
    hw = cutoff_hamiltonian(L, a, b, c)
    idx = np.unique(np.linspace(0, len(L.seeds) - 1, min(probes, len(L.seeds))).astype(int))
    thetas = np.linspace(a, b, 3) if thetas is None else np.asarray(thetas, float)
    X = L.parent.seeds[idx]
    XW = np.concatenate([np.column_stack([X, np.full(len(X), th)]) for th in thetas])
    dt = dt or L.parent.meta.get("dt") or 1e-3
    cut = integrate_w(M, hw, XW, L.times, dt)
    T = np.repeat(L.times, len(XW))
    lifted = L.forward(T, np.tile(XW, (len(L.times), 1))).reshape(cut.shape)
    return w_deviation(M, cut, lifted)


# -- checks ----------------------------------------------------------------------

def _jacobian_w(M, mapping, p, step):
    d = len(p)
    P = np.repeat(p[None], 2 * d, axis=0)
    for j in range(d):
        P[2 * j, j] += step
        P[2 * j + 1, j] -= step
    Y = np.atleast_2d(mapping(P))
    D = Y[0::2] - Y[1::2]
    if M.kind == HOPF:
        D[:, :2] = np.mod(D[:, :2] + np.pi, TWO_PI) - np.pi
    return D.T / (2 * step)


def symplectic_defect(M, mapping, probes, step=1e-5):
    """max over probes of |J^T Omega(phi p) J - Omega(p)|_inf."""
    P = np.atleast_2d(np.asarray(probes, float))
    worst = 0.0
    for p in P:
        J = _jacobian_w(M, mapping, p, step)
        y = np.atleast_2d(mapping(p[None]))
        pulled = J.T @ omega_matrix(M, y)[0] @ J
        worst = max(worst, float(np.max(np.abs(pulled - omega_matrix(M, p[None])[0]))))
    return worst


def d_W(LA, LB, probes=None, times=None):
    """sup of the base chart distance plus sup of the theta gap over probes and
    times; equals d_M + |h - g| on the sampled data."""
    if LA.manifold != LB.manifold:
        raise ManifoldMismatch("lifts live on different manifolds")
    M = LA.manifold
    P = LA.parent.seeds if probes is None else np.atleast_2d(probes)
    times = LA.times if times is None else np.asarray(times, float)
    XW = np.column_stack([P, np.zeros(len(P))])
    T = np.repeat(times, len(XW))
    Z = np.tile(XW, (len(times), 1))
    A, B = LA.forward(T, Z), LB.forward(T, Z)
    return float(np.max(M.distance(A[:, :-1], B[:, :-1])) + np.max(np.abs(A[:, -1] - B[:, -1])))
