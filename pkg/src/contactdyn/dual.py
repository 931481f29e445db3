"""Reference forward-mode evaluation of expression ASTs with numpy dual numbers.

This is the slow, readable path. The compiled path in ``vm`` executes the
same rules point by point; tests check that the two agree.
"""

import numpy as np

from . import expr as E
from .primitives import bump, bumpstep, sigmoid, smoothstep


class Dual:
    """Value array plus a stack of first derivatives along ``k`` directions."""

    __array_ufunc__ = None
    __slots__ = ("val", "der")

    def __init__(self, val, der):
        self.val = val
        self.der = der

    @classmethod
    def const(cls, v, shape, k):
        return cls(np.full(shape, float(v)), np.zeros((k,) + tuple(shape)))

    def _lift(self, other):
        if isinstance(other, Dual):
            return other
        return Dual(np.broadcast_to(np.asarray(other, float), self.val.shape),
                    np.zeros_like(self.der))

    def __add__(self, o):
        o = self._lift(o)
        return Dual(self.val + o.val, self.der + o.der)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        return Dual(self.val - o.val, self.der - o.der)

    def __rsub__(self, o):
        return self._lift(o) - self

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __mul__(self, o):
        o = self._lift(o)
        return Dual(self.val * o.val, self.der * o.val + self.val * o.der)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        q = self.val / o.val
        return Dual(q, (self.der - q * o.der) / o.val)

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, o):
        o = self._lift(o)
        if not np.any(o.der):
            p = o.val
            v = self.val ** p
            with np.errstate(divide="ignore", invalid="ignore"):
                dv = np.where(p == 0, 0.0, p * self.val ** (p - 1))
            return Dual(v, self.der * dv)
        v = self.val ** o.val
        return Dual(v, v * (o.val * self.der / self.val + np.log(self.val) * o.der))

    def chain(self, f, fp):
        return Dual(f, self.der * fp)


def _unary(name, a):
    v = a.val
    if name == "sin":
        return a.chain(np.sin(v), np.cos(v))
    if name == "cos":
        return a.chain(np.cos(v), -np.sin(v))
    if name == "tan":
        t = np.tan(v)
        return a.chain(t, 1.0 + t * t)
    if name == "exp":
        ev = np.exp(v)
        return a.chain(ev, ev)
    if name == "log":
        return a.chain(np.log(v), 1.0 / v)
    if name == "tanh":
        th = np.tanh(v)
        return a.chain(th, 1.0 - th * th)
    if name == "sqrt":
        s = np.sqrt(v)
        return a.chain(s, 0.5 / s)
    if name == "bump":
        return a.chain(*bump(v))
    if name == "sigmoid":
        return a.chain(*sigmoid(v))
    if name == "smoothstep":
        return a.chain(*smoothstep(v))
    if name == "bumpstep":
        return a.chain(*bumpstep(v))
    raise ValueError(name)


def evaluate(node, env, shape, k):
    """Evaluate ``node``; ``env`` maps names to Dual values."""
    if isinstance(node, E.Num):
        return Dual.const(node.value, shape, k)
    if isinstance(node, E.Var):
        if node.name in env:
            return env[node.name]
        return Dual.const(E.CONSTANTS[node.name], shape, k)
    if isinstance(node, E.Neg):
        return -evaluate(node.operand, env, shape, k)
    if isinstance(node, E.BinOp):
        a = evaluate(node.left, env, shape, k)
        b = evaluate(node.right, env, shape, k)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return a ** b
    args = [evaluate(x, env, shape, k) for x in node.args]
    if node.func == "pow":
        return args[0] ** args[1]
    return _unary(node.func, args[0])


def eval_dual(node, names, T, X):
    """Value and derivatives w.r.t. (t, coords) at points X (N, d), times T (N,).

    Returns an array (N, 2 + d): value, d/dt, d/dx_1..d/dx_d.
    """
    X = np.atleast_2d(np.asarray(X, float))
    N, d = X.shape
    T = np.broadcast_to(np.asarray(T, float), (N,))
    k = d + 1
    env = {}
    seeds = [T] + [X[:, j] for j in range(d)]
    for j, name in enumerate(("t",) + tuple(names)):
        der = np.zeros((k, N))
        der[j] = 1.0
        env[name] = Dual(np.array(seeds[j], float), der)
    with np.errstate(all="ignore"):
        r = evaluate(node, env, (N,), k)
    return np.column_stack([r.val, r.der.T])
