"""Time-dependent contact Hamiltonians and their contact vector fields.

A field returns values at (t, X) and jets: arrays of shape (N, 2 + dim) with
columns (value, d/dt, d/dx_1, ..., d/dx_dim). Expression and builtin fields
are "leaf" fields with a compiled program; the flow module integrates those
with the compiled kernels and everything else with a numpy loop.
"""

from dataclasses import dataclass

import numpy as np

from . import expr as E
from . import vm
from .dual import eval_dual
from .errors import ConfigError, DomainError, ManifoldMismatch, SingularSystem, UnknownIdentifier
from .manifold import DARBOUX, HOPF

COND_LIMIT = 1e12


def _times(t, N):
    return np.broadcast_to(np.asarray(t, dtype=float), (N,)).astype(float)


class TimeScalarField:
    """Base class. Subclasses implement ``values`` and ``jets``."""

    program = None
    label = "field"

    def __init__(self, manifold):
        self.manifold = manifold

    @property
    def is_leaf(self):
        return self.program is not None

    def values(self, t, X):
        return self.jets(t, X)[:, 0]

    def jets(self, t, X):
        raise NotImplementedError

    def __call__(self, t, X):
        A, single = self.manifold.coords(X)
        v = self.values(t, A)
        return float(v[0]) if single else v

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r} on {self.manifold})"


class ExpressionField(TimeScalarField):
    def __init__(self, manifold, node, label=None, source=None):
        super().__init__(manifold)
        E.check_names(node, manifold.coord_names, label)
        self.ast = node
        self.source = source if source is not None else ("expr", E.to_string(node))
        self.label = label or E.to_string(node)
        self.program = vm.Program(node, manifold.coord_names)

    def _eval(self, t, X, nd):
        X = np.ascontiguousarray(X, dtype=float)
        try:
            return vm.eval_program(*self.program.code, _times(t, len(X)), X, nd)
        except ZeroDivisionError:
            raise DomainError(f"{self.label} divides by zero at a sample point") from None

    def values(self, t, X):
        return self._eval(t, X, 0)[:, 0]

    def jets(self, t, X):
        return self._eval(t, X, np.shape(X)[1] + 1)

    def reference_jets(self, t, X):
        """Same jets through the numpy dual-number evaluator."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return eval_dual(self.ast, self.manifold.coord_names, _times(t, len(X)), X)

    def text(self):
        return E.to_string(self.ast)

    # leaf algebra: results stay compiled
    def _other(self, o):
        if isinstance(o, ExpressionField):
            if o.manifold != self.manifold:
                raise ManifoldMismatch("fields live on different manifolds")
            return o.ast
        return E.num(float(o))

    def __add__(self, o):
        return ExpressionField(self.manifold, E.add(self.ast, self._other(o)))

    def __sub__(self, o):
        return ExpressionField(self.manifold, E.sub(self.ast, self._other(o)))

    def __rsub__(self, o):
        return ExpressionField(self.manifold, E.sub(self._other(o), self.ast))

    def __mul__(self, o):
        return ExpressionField(self.manifold, E.mul(self._other(o), self.ast))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return ExpressionField(self.manifold, E.Neg(self.ast))

    def times_exp(self, f):
        """e^f * self for a leaf field f."""
        return ExpressionField(self.manifold, E.mul(E.call("exp", self._other(f)), self.ast))


class TimeFunctionField(TimeScalarField):
    """Space-constant field H_t(x) = f(t) given by numpy callables."""

    def __init__(self, manifold, f, df, label="f(t)"):
        super().__init__(manifold)
        self.f, self.df, self.label = f, df, label

    def values(self, t, X):
        return _times(self.f(np.asarray(t, dtype=float)), len(X)).copy()

    def jets(self, t, X):
        N, d = np.shape(X)
        out = np.zeros((N, d + 2))
        T = np.asarray(t, dtype=float)
        out[:, 0] = _times(self.f(T), N)
        out[:, 1] = _times(self.df(T), N)
        return out


class LinearCombination(TimeScalarField):
    """sum_i c_i F_i for arbitrary fields on one manifold."""

    def __init__(self, terms, label=None):
        terms = [(float(c), f) for c, f in terms]
        super().__init__(terms[0][1].manifold)
        for _, f in terms:
            if f.manifold != self.manifold:
                raise ManifoldMismatch("fields live on different manifolds")
        self.terms = terms
        self.label = label or " + ".join(f"{c:g}*({f.label})" for c, f in terms)

    def values(self, t, X):
        return sum(c * f.values(t, X) for c, f in self.terms)

    def jets(self, t, X):
        return sum(c * f.jets(t, X) for c, f in self.terms)


class ScaledField(TimeScalarField):
    """e^{f} H for a field H and a time-independent field f."""

    def __init__(self, base, logscale, label=None):
        super().__init__(base.manifold)
        if logscale.manifold != base.manifold:
            raise ManifoldMismatch("fields live on different manifolds")
        self.base, self.logscale = base, logscale
        self.label = label or f"exp({logscale.label})*({base.label})"

    def values(self, t, X):
        return np.exp(self.logscale.values(t, X)) * self.base.values(t, X)

    def jets(self, t, X):
        J = self.base.jets(t, X)
        F = self.logscale.jets(t, X)
        s = np.exp(F[:, :1])
        out = np.empty_like(J)
        out[:, 0] = s[:, 0] * J[:, 0]
        out[:, 1:] = s * (J[:, 1:] + J[:, :1] * F[:, 1:])
        return out


def difference(a, b):
    if isinstance(a, ExpressionField) and isinstance(b, ExpressionField):
        return a - b
    return LinearCombination([(1.0, a), (-1.0, b)], label=f"({a.label}) - ({b.label})")


def rescale(field, f):
    """e^f H, compiled when both pieces are expression fields."""
    if isinstance(field, ExpressionField) and isinstance(f, ExpressionField):
        return field.times_exp(f)
    return ScaledField(field, f)


# -- jets and vector fields -------------------------------------------------

@dataclass(frozen=True)
class JetValue:
    value: np.ndarray
    grad: np.ndarray
    dt: np.ndarray
    reeb_deriv: np.ndarray


def reeb_derivative(M, jets):
    if M.kind == DARBOUX:
        return jets[:, -1].copy()
    return 2.0 * np.pi * (jets[:, 2] + jets[:, 3])


def eval_jet(field, M, t, x):
    """JetValue at a point (scalars) or a batch (arrays)."""
    if field.manifold != M:
        raise ManifoldMismatch(f"field on {field.manifold}, asked on {M}")
    A, single = M.coords(x)
    A = M.check(A)
    J = field.jets(t, A)
    rd = reeb_derivative(M, J)
    if single:
        return JetValue(float(J[0, 0]), J[0, 2:].copy(), float(J[0, 1]), float(rd[0]))
    return JetValue(J[:, 0], J[:, 2:], J[:, 1], rd)


def vector_field_from_jets(M, X, jets):
    """Closed-form X_H (N, dim) and R.H (N,) from jets."""
    X = np.atleast_2d(X)
    H, G = jets[:, 0], jets[:, 2:]
    V = np.empty_like(X)
    if M.kind == DARBOUX:
        m = M.n - 1
        Hz = G[:, -1]
        V[:, :m] = -G[:, m:2 * m]
        V[:, m:2 * m] = G[:, :m] + X[:, m:2 * m] * Hz[:, None]
        V[:, -1] = H - np.sum(X[:, m:2 * m] * G[:, m:2 * m], axis=1)
        return V, Hz.copy()
    s, c = np.sin(X[:, 2]), np.cos(X[:, 2])
    H1, H2, He = G[:, 0], G[:, 1], G[:, 2]
    V[:, 0] = 2 * np.pi * H + np.pi * c / s * He
    V[:, 1] = 2 * np.pi * H - np.pi * s / c * He
    V[:, 2] = np.pi / (s * c) * (H2 * s * s - H1 * c * c)
    return V, 2 * np.pi * (H1 + H2)


def solve_vector_field(M, X, jets):
    """Generic solve of i(X)alpha = H, i(X)d(alpha) = (R.H) alpha - dH.

    The d(alpha) rows have rank dim - 1, so the alpha row is folded in:
    (alpha alpha^T - W) X = (R.H + H) alpha - dH, where W[i, j] = d(alpha)(e_i, e_j)
    and i(X)d(alpha) = -W X. The matrix is invertible exactly when alpha is
    contact, and is factored by LU with partial pivoting.
    """
    X = np.atleast_2d(X)
    a = M.alpha(X)
    W = M.d_alpha(X)
    R = M.reeb(X)
    H, G = jets[:, 0], jets[:, 2:]
    RH = np.einsum("ni,ni->n", R, G)
    A = a[:, :, None] * a[:, None, :] - W
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularSystem(f"contact system condition number {np.nanmax(cond):.3g} > {COND_LIMIT:g}")
    rhs = (RH + H)[:, None] * a - G
    return np.linalg.solve(A, rhs[:, :, None])[:, :, 0], RH


def contact_vector_field(M, field, t, x, backend="closed"):
    if field.manifold != M:
        raise ManifoldMismatch(f"field on {field.manifold}, asked on {M}")
    A, single = M.coords(x)
    A = M.check(A)
    J = field.jets(t, A)
    if backend == "closed":
        V, _ = vector_field_from_jets(M, A, J)
    elif backend == "solve":
        V, _ = solve_vector_field(M, A, J)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return V[0] if single else V


# -- construction -----------------------------------------------------------

def parse_hamiltonian(text, M, label=None):
    node = E.parse(text, M.coord_names)
    return ExpressionField(M, node, label=label or text, source=("expr", text))


def _builtins():
    from .experiments import cutoffs

    return {
        "constant": (None, lambda M, value=1.0: E.to_string(E.num(value))),
        "reeb": (None, lambda M: "1"),
        "appendix_h": (HOPF, lambda M: "0.5*cos(xi1)"),
        "translation": (DARBOUX, lambda M: "y1"),
        "divergent_factors": (DARBOUX, cutoffs.divergent_factors_text),
        "divergent_isotopies": (DARBOUX, cutoffs.divergent_isotopies_text),
        "ball_bump": (DARBOUX, cutoffs.ball_bump_text),
    }


BUILTIN_NAMES = ("constant", "reeb", "appendix_h", "translation", "divergent_factors",
                 "divergent_isotopies", "ball_bump", "cantor")


def builtin(name, M, **params):
    """Registered Hamiltonians, built from smooth primitives."""
    if name == "cantor":
        from .experiments.cutoffs import cantor_field
        return cantor_field(M, **params)
    table = _builtins()
    if name not in table:
        raise UnknownIdentifier(f"unknown builtin {name!r}")
    kind, make = table[name]
    if kind is not None and M.kind != kind:
        raise ManifoldMismatch(f"builtin {name!r} needs a {kind} manifold")
    try:
        text = make(M, **params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for builtin {name!r}: {exc}") from None
    field = ExpressionField(M, E.parse(text, M.coord_names), label=f"{name}{params or ''}",
                            source=("builtin", name, dict(params)))
    return field


def field_from_config(cfg, M):
    if isinstance(cfg, str):
        return parse_hamiltonian(cfg, M)
    if "expr" in cfg:
        return parse_hamiltonian(cfg["expr"], M)
    if "builtin" in cfg:
        return builtin(cfg["builtin"], M, **cfg.get("params", {}))
    raise ConfigError("hamiltonian needs 'expr' or 'builtin'")
