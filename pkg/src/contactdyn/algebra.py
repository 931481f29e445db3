"""Group operations on contact dynamical systems.

For systems (Phi_H, H, h) and (Phi_F, F, f):

    compose:    (H#F)_t = H_t + (e^{h_t} F_t) o (phi^t_H)^-1,   factor h o Phi_F + f
    inverse:    Hbar_t  = -e^{-h_t} (H_t o phi^t_H),            factor -h o Phi^-1
    conjugate:  K_t     = e^{-g} (H_t o phi),                    flow phi^-1 o Phi_H o phi
    change of form (alpha' = e^f alpha): Hamiltonian e^f H, factor h + f o Phi - f
    reparameterize: H^zeta(t, x) = zeta'(t) H(zeta(t), x),        phi^t = phi^{zeta(t)}

Derived Hamiltonians are evaluated lazily through their parents' flows.
Each operation can build its flow by composing parent flows ("flow" route)
or by integrating the derived Hamiltonian ("hamiltonian" route).
"""

import numpy as np

from . import expr as E
from . import vm
from .errors import (DomainError, FlowQueryFailure, ManifoldMismatch, NotInvertible,
                     NotMonotone, PoleCrossing, StepExplosion)
from .flow import (ContactDynamicalSystem, Flow, MAX_DT, RescaledFlow,
                   integrate_system, system_from_flow)
from .hamfield import (ExpressionField, LinearCombination, TimeScalarField, _times, rescale)

FD_STEP = 1e-5
DERIVED_DT = 1e-2


def _query(fn, *args):
    try:
        return fn(*args)
    except (PoleCrossing, StepExplosion) as exc:
        raise FlowQueryFailure(str(exc)) from exc


class DerivedHamiltonian(TimeScalarField):
    """A field defined through parent flows. Gradients are central differences
    (step 1e-5) of the value, evaluated in one batched query; the time
    derivative is not formed (NaN) unless ``time_derivative`` is called."""

    def jets(self, t, X):
        X = np.atleast_2d(np.asarray(X, float))
        N, d = X.shape
        T = _times(t, N)
        P = np.empty((2 * d + 1, N, d))
        P[:] = X
        for j in range(d):
            P[1 + 2 * j, :, j] += FD_STEP
            P[2 + 2 * j, :, j] -= FD_STEP
        V = self.values(np.tile(T, 2 * d + 1), P.reshape(-1, d)).reshape(2 * d + 1, N)
        out = np.empty((N, d + 2))
        out[:, 0] = V[0]
        out[:, 1] = np.nan
        out[:, 2:] = ((V[1::2] - V[2::2]) / (2 * FD_STEP)).T
        return out

    def time_derivative(self, t, X, step=FD_STEP):
        X = np.atleast_2d(np.asarray(X, float))
        T = _times(t, len(X))
        return (self.values(T + step, X) - self.values(T - step, X)) / (2 * step)


class ComposeHamiltonian(DerivedHamiltonian):
    def __init__(self, A, B):
        super().__init__(A.manifold)
        self.A, self.B = A, B
        self.label = f"({A.hamiltonian.label})#({B.hamiltonian.label})"

    def values(self, t, X):
        X = np.atleast_2d(np.asarray(X, float))
        T = _times(t, len(X))
        Y, hinv = _query(self.A.flow.backward, T, X)
        return self.A.hamiltonian.values(T, X) + np.exp(-hinv) * self.B.hamiltonian.values(T, Y)


class InverseHamiltonian(DerivedHamiltonian):
    def __init__(self, A):
        super().__init__(A.manifold)
        self.A = A
        self.label = f"inv({A.hamiltonian.label})"

    def values(self, t, X):
        X = np.atleast_2d(np.asarray(X, float))
        T = _times(t, len(X))
        Y, h = _query(self.A.flow.forward, T, X)
        return -np.exp(-h) * self.A.hamiltonian.values(T, Y)


class ConjugateHamiltonian(DerivedHamiltonian):
    def __init__(self, A, phi):
        super().__init__(A.manifold)
        self.A, self.phi = A, phi
        self.label = f"conj({A.hamiltonian.label})"

    def values(self, t, X):
        X = np.atleast_2d(np.asarray(X, float))
        T = _times(t, len(X))
        Y, g = self.phi.forward_with_factor(X)
        return np.exp(-g) * self.A.hamiltonian.values(T, Y)


class ReparamHamiltonian(TimeScalarField):
    """zeta'(t) H(zeta(t), x) with exact spatial jets."""

    def __init__(self, field, zeta):
        super().__init__(field.manifold)
        self.field, self.zeta = field, zeta
        self.label = f"reparam({field.label}, {zeta.label})"

    def values(self, t, X):
        T = _times(t, len(X))
        return self.zeta.derivative(T) * self.field.values(self.zeta(T), X)

    def jets(self, t, X):
        T = _times(t, len(X))
        J = self.field.jets(self.zeta(T), X)
        out = self.zeta.derivative(T)[:, None] * J
        out[:, 1] = np.nan
        return out


# -- flows -------------------------------------------------------------------

class ComposedFlow(Flow):
    """phi^t_A o phi^t_B with factor h_A o phi_B + h_B."""

    def __init__(self, fa, fb):
        super().__init__(fa.manifold)
        self.fa, self.fb = fa, fb

    def forward(self, t, X):
        T, X = self._prep(t, X)
        Y, f = self.fb.forward(T, X)
        Z, h = self.fa.forward(T, Y)
        return Z, h + f

    def backward(self, t, X):
        T, X = self._prep(t, X)
        U, a = self.fa.backward(T, X)
        V, b = self.fb.backward(T, U)
        return V, a + b


class InverseFlow(Flow):
    def __init__(self, base):
        super().__init__(base.manifold)
        self.base = base

    def forward(self, t, X):
        return self.base.backward(t, X)

    def backward(self, t, X):
        return self.base.forward(t, X)


class ConjugatedFlow(Flow):
    """phi^-1 o Phi^t o phi with factor h o phi + g - g o (phi^-1 Phi^t phi)."""

    def __init__(self, base, phi):
        super().__init__(base.manifold)
        self.base, self.phi = base, phi

    def _through(self, step, T, X):
        Y, g = self.phi.forward_with_factor(X)
        Z, h = step(T, Y)
        W, ginv = self.phi.inverse_with_factor(Z)
        return W, g + h + ginv

    def forward(self, t, X):
        T, X = self._prep(t, X)
        return self._through(self.base.forward, T, X)

    def backward(self, t, X):
        T, X = self._prep(t, X)
        return self._through(self.base.backward, T, X)


class ReparamFlow(Flow):
    def __init__(self, base, zeta):
        super().__init__(base.manifold)
        self.base, self.zeta = base, zeta

    def forward(self, t, X):
        T, X = self._prep(t, X)
        return self.base.forward(self.zeta(T), X)

    def backward(self, t, X):
        T, X = self._prep(t, X)
        return self.base.backward(self.zeta(T), X)


# -- contact diffeomorphisms ---------------------------------------------------

class ContactDiffeo:
    """A contact map with its inverse and conformal factor g (phi^* alpha = e^g alpha)."""

    def __init__(self, manifold, forward, inverse, label="phi"):
        self.manifold = manifold
        self._forward = forward
        self._inverse = inverse
        self.label = label

    def forward_with_factor(self, X):
        return _query(self._forward, np.atleast_2d(np.asarray(X, float)))

    def inverse_with_factor(self, X):
        """phi^-1(X) and the factor of phi^-1 at X, i.e. -g(phi^-1 X)."""
        return _query(self._inverse, np.atleast_2d(np.asarray(X, float)))

    def __call__(self, X):
        return self.forward_with_factor(X)[0]

    def inverse(self, X):
        return self.inverse_with_factor(X)[0]

    def factor(self, X):
        return self.forward_with_factor(X)[1]

    @classmethod
    def identity(cls, M):
        return cls(M, lambda X: (X.copy(), np.zeros(len(X))),
                   lambda X: (X.copy(), np.zeros(len(X))), "id")

    @classmethod
    def from_flow(cls, flow, t=1.0, label="phi"):
        return cls(flow.manifold, lambda X: flow.forward(t, X), lambda X: flow.backward(t, X), label)

    @classmethod
    def from_system(cls, A, t=1.0):
        return cls.from_flow(A.flow, t, label=f"time-{t:g} map of {A.hamiltonian.label}")

    def check_invertible(self, probes, tol=1e-6):
        P = np.atleast_2d(np.asarray(probes, float))
        back = self.inverse(self(P))
        err = float(np.max(self.manifold.distance(back, P)))
        if not err <= tol:
            raise NotInvertible(f"phi^-1 o phi deviates from identity by {err:.3g} on probes")
        return err


# -- reparameterizations -----------------------------------------------------

class Reparameterization:
    """zeta: [0, 1] -> R with derivative; ``mesh`` lists suggested step nodes."""

    def __init__(self, value, derivative, label="zeta", mesh=None):
        self._value, self._derivative = value, derivative
        self.label = label
        self.mesh = mesh

    def __call__(self, t):
        return np.asarray(self._value(np.asarray(t, float)), float)

    def derivative(self, t):
        return np.asarray(self._derivative(np.asarray(t, float)), float)

    @classmethod
    def identity(cls):
        return cls(lambda t: t, lambda t: np.ones_like(t), "t")

    @classmethod
    def linear(cls, s):
        s = float(s)
        return cls(lambda t: s * t, lambda t: np.full_like(t, s), f"{s:g}*t")

    @classmethod
    def from_expression(cls, text):
        node = E.parse(text, ())
        prog = vm.Program(node, ())

        def run(t):
            T = np.atleast_1d(np.asarray(t, float)).ravel()
            out = vm.eval_program(*prog.code, T, np.zeros((len(T), 0)), 1)
            return out.reshape(np.shape(t) + (2,)) if np.ndim(t) else out[0]

        return cls(lambda t: run(t)[..., 0], lambda t: run(t)[..., 1], text)

    @classmethod
    def cantor(cls, k):
        """zeta = F_k, the integral of the mollified middle-thirds density."""
        from .experiments.cutoffs import CantorDensity

        dens = CantorDensity(k)
        r = cls(dens.integral, dens, f"cantor(k={k})", mesh=cantor_mesh(dens))
        r.density = dens
        return r


def cantor_mesh(dens, per_transition=16):
    """Step nodes resolving each mollified transition."""
    d = dens.delta
    pts = [np.linspace(e - d, e + d, per_transition + 1) for e in dens.edges()]
    mesh = np.concatenate(pts)
    return np.unique(np.clip(mesh, 0.0, 1.0))


# -- operations ----------------------------------------------------------------

def _same_manifold(A, B):
    if A.manifold != B.manifold:
        raise ManifoldMismatch(f"{A.manifold} vs {B.manifold}")


def _system_dt(A):
    dt = A.meta.get("dt") or 1e-3
    return min(max(float(dt), 1e-6), MAX_DT)


def _derive(M, field, flow, A, route, meta, dt):
    if route == "flow":
        return system_from_flow(M, field, flow, A.seeds, A.times, meta)
    if route == "hamiltonian":
        dt = DERIVED_DT if dt is None else dt
        try:
            S = integrate_system(M, field, A.seeds, dt=dt, t_samples=len(A.times) - 1,
                                 richardson=False, form=A.form)
        except (PoleCrossing, StepExplosion) as exc:
            raise FlowQueryFailure(str(exc)) from exc
        S.meta.update(meta)
        return S
    raise DomainError(f"unknown route {route!r}")


def _check_grids(A, B):
    if len(A.times) != len(B.times) or not np.allclose(A.times, B.times):
        raise DomainError("systems have incompatible time grids")


def compose(A, B, route="flow", dt=None):
    """System generated by H#F: phi^t = phi^t_A o phi^t_B."""
    _same_manifold(A, B)
    _check_grids(A, B)
    M = A.manifold
    H = ComposeHamiltonian(A, B)
    meta = {"operation": "compose", "route": route}
    return _derive(M, H, ComposedFlow(A.flow, B.flow), A, route, meta, dt)


def inverse(A, route="hamiltonian", dt=None, check_probes=4):
    """System generated by Hbar. By default the flow is integrated from Hbar and
    validated by composing with A on a few seeds."""
    M = A.manifold
    Hbar = InverseHamiltonian(A)
    meta = {"operation": "inverse", "route": route}
    S = _derive(M, Hbar, InverseFlow(A.flow), A, route, meta, dt)
    if route == "hamiltonian" and check_probes:
        idx = np.unique(np.linspace(0, len(A.seeds) - 1, min(check_probes, len(A.seeds))).astype(int))
        K = len(S.times)
        back = A.flow.forward(np.repeat(S.times, len(idx)),
                              S.trajectories[:, idx].reshape(K * len(idx), -1))[0]
        dev = M.distance(back, np.tile(A.seeds[idx], (K, 1)))
        S.meta["composition_to_identity"] = float(np.max(dev))
    return S


def conjugate(A, phi, route="flow", dt=None):
    """System generated by e^{-g}(H o phi); flow phi^-1 o Phi_H o phi."""
    if phi.manifold != A.manifold:
        raise ManifoldMismatch("diffeo and system live on different manifolds")
    phi.check_invertible(A.seeds[: min(8, len(A.seeds))])
    M = A.manifold
    K = ConjugateHamiltonian(A, phi)
    meta = {"operation": "conjugate", "route": route, "diffeo": phi.label}
    return _derive(M, K, ConjugatedFlow(A.flow, phi), A, route, meta, dt)


def change_of_form(A, f):
    """Describe A with respect to e^f alpha: Hamiltonian e^f H, factor h + f o Phi - f.
    Trajectory arrays are shared with A."""
    if f.manifold != A.manifold:
        raise ManifoldMismatch("form factor lives on another manifold")
    M = A.manifold
    K, N, d = A.trajectories.shape
    fY = f.values(0.0, A.trajectories.reshape(K * N, d)).reshape(K, N)
    fX = f.values(0.0, A.seeds)
    conformal = A.conformal + fY - fX[None, :]
    form = f if A.form is None else _sum_fields(A.form, f)
    return ContactDynamicalSystem(M, rescale(A.hamiltonian, f), RescaledFlow(A.flow, f), A.times,
                                  A.seeds, A.trajectories, conformal,
                                  dict(A.meta, operation="change_of_form", form=form.label), form)


def _sum_fields(a, b):
    if isinstance(a, ExpressionField) and isinstance(b, ExpressionField):
        return a + b
    return LinearCombination([(1.0, a), (1.0, b)])


def reparameterize(A, zeta, route="resample", dt=None, check_samples=4001):
    """phi^t = phi_A^{zeta(t)}, generated by zeta'(t) H(zeta(t), x)."""
    M = A.manifold
    field = ReparamHamiltonian(A.hamiltonian, zeta)
    meta = {"operation": "reparameterize", "route": route, "zeta": zeta.label}
    if route == "resample":
        return system_from_flow(M, field, ReparamFlow(A.flow, zeta), A.seeds, A.times, meta)
    if route != "hamiltonian":
        raise DomainError(f"unknown route {route!r}")
    ts = np.linspace(0.0, 1.0, check_samples)
    dz = zeta.derivative(ts)
    if np.any(dz > 0) and np.any(dz < 0):
        raise NotMonotone("zeta' changes sign; use the resampling route")
    dt = _system_dt(A) if dt is None else dt
    try:
        S = integrate_system(M, field, A.seeds, dt=dt, t_samples=len(A.times) - 1,
                             time_mesh=zeta.mesh, richardson=False, form=A.form)
    except (PoleCrossing, StepExplosion) as exc:
        raise FlowQueryFailure(str(exc)) from exc
    S.meta.update(meta)
    return S
