"""Contact isotopies and their conformal factors.

Flows are integrated with fixed-step classical RK4 on the augmented state
(x, h) with dh/dt = (R.H_t)(x). Every point carries its own end time and
takes ceil(|t| / dt) equal steps, so results do not depend on how queries
are batched.
"""

import csv
import math
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import expr as E
from . import vm
from .errors import (DomainError, FlowQueryFailure, ManifoldMismatch, NotContact,
                     PoleCrossing, SingularSystem, StepExplosion)
from .hamfield import ExpressionField, LinearCombination, rescale, vector_field_from_jets
from .manifold import HOPF, TWO_PI

MAX_DT = 1e-2


def _steps(span, dt):
    return np.ceil(np.abs(span) / dt - 1e-9).astype(np.int64)


@contextmanager
def _singular_guard():
    try:
        yield
    except ZeroDivisionError:
        raise SingularSystem("the vector field divides by zero along a trajectory") from None


def _raise_status(status, what="trajectory"):
    if np.any(status == vm.STATUS_POLE):
        raise PoleCrossing(f"{int(np.sum(status == vm.STATUS_POLE))} {what}(s) entered the pole margin")
    if np.any(status == vm.STATUS_EXPLODE):
        raise StepExplosion(f"{int(np.sum(status == vm.STATUS_EXPLODE))} {what}(s) exceeded |state| = 1e8")


def _post_step_numpy(M, Y, h):
    if M.kind == HOPF:
        Y[:, :2] = np.mod(Y[:, :2], TWO_PI)
    status = np.zeros(len(Y), dtype=np.int64)
    bad = ~np.all(np.abs(np.column_stack([Y, h])) <= vm.EXPLOSION, axis=1)
    status[bad] = vm.STATUS_EXPLODE
    if M.kind == HOPF:
        lo, hi = M.eta_bounds
        pole = (Y[:, 2] < lo) | (Y[:, 2] > hi)
        status[pole & ~bad] = vm.STATUS_POLE
    return status


def _rk4_numpy(M, field, t, Y, dt):
    def rhs(tt, Z):
        return vector_field_from_jets(M, Z, field.jets(tt, Z))

    k1, r1 = rhs(t, Y)
    k2, r2 = rhs(t + 0.5 * dt, Y + 0.5 * dt[:, None] * k1)
    k3, r3 = rhs(t + 0.5 * dt, Y + 0.5 * dt[:, None] * k2)
    k4, r4 = rhs(t + dt, Y + dt[:, None] * k3)
    Yn = Y + dt[:, None] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    dh = dt / 6.0 * (r1 + 2 * r2 + 2 * r3 + r4)
    return Yn, dh


def _flow_points_numpy(M, field, X0, t0, t1, nsteps):
    X = X0.copy()
    h = np.zeros(len(X))
    status = np.zeros(len(X), dtype=np.int64)
    dt = np.where(nsteps > 0, (t1 - t0) / np.maximum(nsteps, 1), 0.0)
    for s in range(int(nsteps.max(initial=0))):
        idx = np.nonzero((s < nsteps) & (status == 0))[0]
        if idx.size == 0:
            break
        Yn, dh = _rk4_numpy(M, field, t0[idx] + s * dt[idx], X[idx], dt[idx])
        hn = h[idx] + dh
        status[idx] = _post_step_numpy(M, Yn, hn)
        X[idx] = Yn
        h[idx] = hn
    return X, h, status


def _flow_sweep_numpy(M, field, X0, nodes, substeps):
    N, d = X0.shape
    traj = np.empty((len(nodes), N, d))
    conf = np.zeros((len(nodes), N))
    traj[0] = X0
    Y, h = X0.copy(), np.zeros(N)
    status = np.zeros(N, dtype=np.int64)
    for i in range(len(nodes) - 1):
        n = int(substeps[i])
        dt = (nodes[i + 1] - nodes[i]) / n
        dts = np.full(N, dt)
        for s in range(n):
            Y, dh = _rk4_numpy(M, field, np.full(N, nodes[i] + s * dt), Y, dts)
            h = h + dh
            st = _post_step_numpy(M, Y, h)
            if np.any(st):
                status = st
                _raise_status(status)
        traj[i + 1] = Y
        conf[i + 1] = h
    return traj, conf, status


class Flow:
    """A time-dependent family of contact maps phi_t, t in [0, 1].

    ``forward(t, X)`` returns (phi_t(X), h_t(X)); ``backward(t, X)`` returns
    (phi_t^-1(X), -h_t(phi_t^-1(X))), the inverse map and its own factor.
    ``t`` is a scalar or one time per point.
    """

    def __init__(self, manifold):
        self.manifold = manifold

    def forward(self, t, X):
        raise NotImplementedError

    def backward(self, t, X):
        raise NotImplementedError

    def sample(self, times, X):
        X = np.asarray(X, float)
        K, N = len(times), len(X)
        T = np.repeat(np.asarray(times, float), N)
        Y, h = self.forward(T, np.tile(X, (K, 1)))
        return Y.reshape(K, N, -1), h.reshape(K, N)

    def _prep(self, t, X):
        X = np.ascontiguousarray(np.atleast_2d(np.asarray(X, float)))
        if X.shape[1] != self.manifold.dim:
            raise DomainError(f"expected {self.manifold.dim} coordinates")
        T = np.broadcast_to(np.asarray(t, float), (len(X),)).astype(float)
        return T, X


class IdentityFlow(Flow):
    def forward(self, t, X):
        T, X = self._prep(t, X)
        return X.copy(), np.zeros(len(X))

    backward = forward


class IntegratedFlow(Flow):
    """Flow of a field, re-integrated on demand from the query point."""

    def __init__(self, field, dt=1e-3):
        super().__init__(field.manifold)
        if not 0.0 < dt <= MAX_DT:
            raise DomainError(f"dt must lie in (0, {MAX_DT:g}]")
        self.field = field
        self.dt = float(dt)

    def _run(self, t0, t1, X):
        M = self.manifold
        n = _steps(t1 - t0, self.dt)
        lo, hi = M.eta_bounds if M.kind == HOPF else (0.0, 0.0)
        X = M.wrap(X)
        if self.field.is_leaf:
            with _singular_guard():
                Y, h, status = vm.flow_points(*self.field.program.code, M.kind_code, M.n - 1,
                                              X, t0, t1, n, lo, hi)
        else:
            Y, h, status = _flow_points_numpy(M, self.field, X, t0, t1, n)
        _raise_status(status)
        return Y, h

    def forward(self, t, X):
        T, X = self._prep(t, X)
        return self._run(np.zeros_like(T), T, X)

    def backward(self, t, X):
        T, X = self._prep(t, X)
        return self._run(T, np.zeros_like(T), X)

    def sweep(self, nodes, X, dt=None):
        M = self.manifold
        dt = self.dt if dt is None else dt
        nodes = np.asarray(nodes, float)
        sub = np.maximum(_steps(np.diff(nodes), dt), 1)
        X = M.wrap(np.ascontiguousarray(np.atleast_2d(np.asarray(X, float))))
        lo, hi = M.eta_bounds if M.kind == HOPF else (0.0, 0.0)
        if self.field.is_leaf:
            with _singular_guard():
                traj, conf, status = vm.flow_sweep(*self.field.program.code, M.kind_code,
                                                   M.n - 1, X, nodes, sub, lo, hi)
        else:
            traj, conf, status = _flow_sweep_numpy(M, self.field, X, nodes, sub)
        _raise_status(status)
        return traj, conf

    def sample(self, times, X):
        times = np.asarray(times, float)
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            return super().sample(times, X)
        return self.sweep(times, X)


class RescaledFlow(Flow):
    """Same maps; factors measured against e^f alpha."""

    def __init__(self, base, f):
        super().__init__(base.manifold)
        self.base, self.f = base, f

    def _fix(self, X, Y, h):
        return Y, h + self.f.values(0.0, Y) - self.f.values(0.0, X)

    def forward(self, t, X):
        T, X = self._prep(t, X)
        return self._fix(X, *self.base.forward(T, X))

    def backward(self, t, X):
        T, X = self._prep(t, X)
        return self._fix(X, *self.base.backward(T, X))


def negate(f):
    if isinstance(f, ExpressionField):
        return -f
    return LinearCombination([(-1.0, f)], label=f"-({f.label})")


@dataclass(frozen=True)
class ContactDynamicalSystem:
    manifold: object
    hamiltonian: object
    flow: Flow
    times: np.ndarray
    seeds: np.ndarray
    trajectories: np.ndarray
    conformal: np.ndarray
    meta: dict = field(default_factory=dict)
    form: object = None

    def time_index(self, t):
        i = int(np.searchsorted(self.times, t))
        if i < len(self.times) and abs(self.times[i] - t) < 1e-12:
            return i
        if i > 0 and abs(self.times[i - 1] - t) < 1e-12:
            return i - 1
        return None

    def flow_map(self, t):
        return FlowMap(self, float(t))

    @property
    def final(self):
        return self.trajectories[-1]


@dataclass(frozen=True)
class FlowMap:
    """The time-t slice of a system. Seeds are served from storage, other
    points are re-integrated through the system's flow."""
    system: ContactDynamicalSystem
    t: float

    @property
    def manifold(self):
        return self.system.manifold

    def _stored(self, X):
        i = self.system.time_index(self.t)
        S = self.system.seeds
        if i is not None and X.shape == S.shape and np.array_equal(X, S):
            return i
        return None

    def __call__(self, X):
        A, single = self.manifold.coords(X)
        i = self._stored(A)
        Y = self.system.trajectories[i].copy() if i is not None else self.system.flow.forward(self.t, A)[0]
        return Y[0] if single else Y

    def factor(self, X):
        A, single = self.manifold.coords(X)
        i = self._stored(A)
        h = self.system.conformal[i].copy() if i is not None else self.system.flow.forward(self.t, A)[1]
        return h[0] if single else h

    def inverse(self, X):
        A, single = self.manifold.coords(X)
        Y = self.system.flow.backward(self.t, A)[0]
        return Y[0] if single else Y


def _richardson(flow, nodes, probes, dt, traj, conf):
    """Rerun probes at dt/2; for RK4 the error of the dt run is ~ 16/15 |diff|."""
    t2, c2 = flow.sweep(nodes, probes, dt=dt / 2)
    diff = np.maximum(np.max(np.abs(_wrapped_diff(flow.manifold, t2, traj))),
                      np.max(np.abs(c2 - conf)))
    return float(diff * 16.0 / 15.0)


def _wrapped_diff(M, A, B):
    D = A - B
    if M.kind == HOPF:
        D[..., :2] = np.mod(D[..., :2] + np.pi, TWO_PI) - np.pi
    return D


def integrate_system(M, field, seeds, dt=1e-3, t_samples=100, method="RK4", *,
                     time_mesh=None, richardson=True, probe_count=4, form=None):
    """Integrate ``field`` from ``seeds`` and sample on a uniform time grid.

    ``time_mesh`` adds extra step boundaries (e.g. around fast transitions);
    samples are still reported on the uniform grid. With ``form`` = f the
    field is read as a Hamiltonian for e^f alpha: the flow of e^{-f} field is
    integrated and factors are reported against e^f alpha.
    """
    if field.manifold != M:
        raise ManifoldMismatch(f"field on {field.manifold}, system on {M}")
    if method.upper() != "RK4":
        raise DomainError("only classical RK4 is provided")
    if not 0.0 < dt <= MAX_DT:
        raise DomainError(f"dt must lie in (0, {MAX_DT:g}]")
    if t_samples < 1:
        raise DomainError("t_samples must be positive")
    A, _ = M.coords(seeds)
    A = M.check(M.wrap(A))
    times = np.linspace(0.0, 1.0, int(t_samples) + 1)
    nodes = times if time_mesh is None else np.unique(np.concatenate(
        [times, np.asarray(time_mesh, float)]))
    flow = IntegratedFlow(field if form is None else rescale(field, negate(form)), dt)
    traj, conf = flow.sweep(nodes, A)
    keep = np.searchsorted(nodes, times)
    meta = {"method": "RK4", "dt": dt, "t_samples": int(t_samples),
            "mesh_nodes": int(len(nodes)), "leaf": field.is_leaf}
    if richardson:
        pidx = np.unique(np.linspace(0, len(A) - 1, min(probe_count, len(A))).astype(int))
        meta["richardson_error"] = _richardson(flow, nodes, A[pidx], dt, traj[:, pidx], conf[:, pidx])
        meta["richardson_probes"] = pidx.tolist()
    traj, conf = traj[keep], conf[keep]
    if M.kind != HOPF:
        lo = np.array([b[0] for b in M.box])
        hi = np.array([b[1] for b in M.box])
        out = np.any((traj < lo) | (traj > hi), axis=(0, 2))
        meta["left_box"] = np.nonzero(out)[0].tolist()
    traj[0] = A
    conf[0] = 0.0
    if form is not None:
        K, N, d = traj.shape
        conf = conf + form.values(0.0, traj.reshape(K * N, d)).reshape(K, N) - form.values(0.0, A)
        flow = RescaledFlow(flow, form)
        meta["form"] = form.label
    return ContactDynamicalSystem(M, field, flow, times, A, traj, conf, meta, form)


def identity_system(M, seeds, t_samples=100):
    A, _ = M.coords(seeds)
    A = M.check(M.wrap(A))
    times = np.linspace(0.0, 1.0, int(t_samples) + 1)
    K = len(times)
    zero = ExpressionField(M, E.Num(0.0), label="0")
    return ContactDynamicalSystem(M, zero, IdentityFlow(M), times, A,
                                  np.repeat(A[None], K, axis=0), np.zeros((K, len(A))),
                                  {"method": "identity", "dt": 0.0, "t_samples": int(t_samples)})


def system_from_flow(M, hamiltonian, flow, seeds, times, meta=None):
    """Sample an arbitrary Flow at ``times`` into a system."""
    A, _ = M.coords(seeds)
    A = M.check(M.wrap(A))
    times = np.asarray(times, float)
    try:
        traj, conf = flow.sample(times, A)
    except (PoleCrossing, StepExplosion) as exc:
        raise FlowQueryFailure(str(exc)) from exc
    traj = M.wrap(traj)
    traj[0] = A
    conf[0] = 0.0
    return ContactDynamicalSystem(M, hamiltonian, flow, times, A, traj, conf, dict(meta or {}))


# -- direct checks -------------------------------------------------------------

def jacobian_fd(M, mapping, x, step=1e-5):
    """Central-difference Jacobian of a point map at x (angles unwrapped)."""
    x = np.asarray(x, float)
    d = len(x)
    P = np.repeat(x[None], 2 * d, axis=0)
    for j in range(d):
        P[2 * j, j] += step
        P[2 * j + 1, j] -= step
    Y = mapping(P)
    D = _wrapped_diff(M, Y[0::2], Y[1::2])
    return D.T / (2.0 * step)


def _as_map(flow_map, t):
    if isinstance(flow_map, ContactDynamicalSystem):
        return flow_map.flow_map(t)
    if isinstance(flow_map, Flow):
        return lambda X: flow_map.forward(t, X)[0]
    return flow_map


def pullback_conformal_factor(M, flow_map, t, x, step=1e-5, spread_tol=1e-3):
    """log of lambda where (phi_t^* alpha)_x = lambda alpha_x, by finite differences."""
    phi = _as_map(flow_map, t)
    x = M.check(np.asarray(x, float))[0]
    J = jacobian_fd(M, phi, x, step)
    y = np.atleast_2d(phi(x[None]))[0]
    p = M.alpha(y) @ J
    a = M.alpha(x)
    lam = float(p @ a / (a @ a))
    spread = float(np.max(np.abs(p - lam * a)) / np.max(np.abs(p)))
    if not (lam > 0 and spread < spread_tol):
        raise NotContact(f"pulled-back form not proportional to alpha (spread {spread:.3g}, factor {lam:.3g})")
    return math.log(lam)


def volume_ratio(M, flow_map, t, x, step=1e-5):
    """det(D phi_t) * density(phi x) / density(x): equals e^{n h_t(x)}."""
    phi = _as_map(flow_map, t)
    x = np.asarray(x, float)
    J = jacobian_fd(M, phi, x, step)
    y = np.atleast_2d(phi(x[None]))[0]
    return float(np.linalg.det(J) * M.density(y) / M.density(x))


def trajectories_to_csv(system, fh):
    """Write rows (seed_id, t, coords..., h)."""
    close = False
    if isinstance(fh, str):
        fh = open(fh, "w", newline="")
        close = True
    try:
        w = csv.writer(fh)
        w.writerow(["seed_id", "t", *system.manifold.coord_names, "h"])
        for i in range(system.seeds.shape[0]):
            for k, t in enumerate(system.times):
                w.writerow([i, repr(float(t)), *(repr(float(v)) for v in system.trajectories[k, i]),
                            repr(float(system.conformal[k, i]))])
    finally:
        if close:
            fh.close()
