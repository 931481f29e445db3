"""Compiled evaluation of expression programs and fixed-step RK4 flow kernels.

An expression AST is flattened to a postfix program (opcode, argument) with
a constant pool. The numba kernels run it point by point with a small
dual-number stack: slot 0 holds the value, slot 1 the time derivative and
slots 2.. the spatial partials.
"""

import math

import numpy as np
from numba import njit

from . import expr as E
from .primitives import BUMP_CUM, BUMP_EDGES, BUMP_INTEGRAL, BUMP_SLOPE

(OP_CONST, OP_VAR, OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_NEG, OP_POW, OP_POWI,
 OP_SIN, OP_COS, OP_TAN, OP_EXP, OP_LOG, OP_TANH, OP_SQRT, OP_BUMP, OP_SIGMOID,
 OP_SMOOTHSTEP, OP_BUMPSTEP) = range(20)

_UNARY = {"sin": OP_SIN, "cos": OP_COS, "tan": OP_TAN, "exp": OP_EXP, "log": OP_LOG,
          "tanh": OP_TANH, "sqrt": OP_SQRT, "bump": OP_BUMP, "sigmoid": OP_SIGMOID,
          "smoothstep": OP_SMOOTHSTEP, "bumpstep": OP_BUMPSTEP}
_BIN = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}

STATUS_OK, STATUS_POLE, STATUS_EXPLODE = 0, 1, 2
EXPLOSION = 1e8


class Program:
    """Postfix form of an AST over variables (t, coords...)."""

    def __init__(self, node, names):
        self.names = tuple(names)
        index = {"t": 0}
        index.update({n: i + 1 for i, n in enumerate(self.names)})
        ops, args, consts = [], [], []
        depth = [0, 0]

        def push(op, arg=0, delta=0):
            ops.append(op)
            args.append(arg)
            depth[0] += delta
            depth[1] = max(depth[1], depth[0])

        def const(v):
            consts.append(float(v))
            push(OP_CONST, len(consts) - 1, 1)

        def emit(node):
            if isinstance(node, E.Num):
                const(node.value)
            elif isinstance(node, E.Var):
                if node.name in index:
                    push(OP_VAR, index[node.name], 1)
                else:
                    const(E.CONSTANTS[node.name])
            elif isinstance(node, E.Neg):
                emit(node.operand)
                push(OP_NEG)
            elif isinstance(node, E.BinOp):
                if node.op == "^" and isinstance(node.right, E.Num) \
                        and node.right.value == int(node.right.value) \
                        and abs(node.right.value) < 64:
                    emit(node.left)
                    push(OP_POWI, int(node.right.value))
                    return
                emit(node.left)
                emit(node.right)
                push(OP_POW if node.op == "^" else _BIN[node.op], 0, -1)
            else:
                if node.func == "pow":
                    emit(E.BinOp("^", node.args[0], node.args[1]))
                else:
                    emit(node.args[0])
                    push(_UNARY[node.func])

        emit(node)
        self.ops = np.array(ops, dtype=np.int64)
        self.args = np.array(args, dtype=np.int64)
        self.consts = np.array(consts if consts else [0.0], dtype=np.float64)
        self.depth = max(depth[1], 1)

    def __len__(self):
        return len(self.ops)

    @property
    def code(self):
        return self.ops, self.args, self.consts, self.depth


# ---------------------------------------------------------------------------
# point evaluation

@njit(cache=True)
def _smoothstep(u):
    if u <= 0.0:
        return 0.0, 0.0
    if u >= 1.0:
        return 1.0, 0.0
    fa = math.exp(-1.0 / u)
    fb = math.exp(-1.0 / (1.0 - u))
    s = fa + fb
    return fa / s, fa * fb * (1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u))) / (s * s)


@njit(cache=True)
def _bump(u):
    if abs(u) >= 1.0:
        return 0.0, 0.0
    q = 1.0 - u * u
    b = math.exp(1.0 - 1.0 / q)
    return b, b * (-2.0 * u / (q * q))


@njit(cache=True)
def _bumpstep(u, edges, cum, slope, total):
    a = min(abs(u), 1.0)
    n = edges.shape[0] - 1
    h = 1.0 / n
    j = min(int(a / h), n - 1)
    s = a / h - j
    s2 = s * s
    s3 = s2 * s
    v = ((2 * s3 - 3 * s2 + 1) * cum[j] + (s3 - 2 * s2 + s) * h * slope[j]
         + (-2 * s3 + 3 * s2) * cum[j + 1] + (s3 - s2) * h * slope[j + 1])
    if u < 0.0:
        v = -v
    return v, _bump(u)[0] / total


@njit(cache=True)
def run_program(ops, args, consts, t, x, nd, st, first=1):
    """Evaluate a program at one point; result left in st[0, :nd + 1].

    Partials are propagated in slots first..nd; with first=2 the time slot
    stays zero, which is all the flow kernels need.
    """
    sp = 0
    for i in range(ops.shape[0]):
        op = ops[i]
        if op == OP_CONST:
            st[sp, 0] = consts[args[i]]
            for k in range(1, nd + 1):
                st[sp, k] = 0.0
            sp += 1
        elif op == OP_VAR:
            j = args[i]
            st[sp, 0] = t if j == 0 else x[j - 1]
            for k in range(1, nd + 1):
                st[sp, k] = 0.0
            if nd > 0 and 1 + j >= first:
                st[sp, 1 + j] = 1.0
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            for k in range(nd + 1):
                st[sp - 1, k] += st[sp, k]
        elif op == OP_SUB:
            sp -= 1
            for k in range(nd + 1):
                st[sp - 1, k] -= st[sp, k]
        elif op == OP_MUL:
            sp -= 1
            a0 = st[sp - 1, 0]
            b0 = st[sp, 0]
            for k in range(first, nd + 1):
                st[sp - 1, k] = st[sp - 1, k] * b0 + a0 * st[sp, k]
            st[sp - 1, 0] = a0 * b0
        elif op == OP_DIV:
            sp -= 1
            b0 = st[sp, 0]
            q = st[sp - 1, 0] / b0
            for k in range(first, nd + 1):
                st[sp - 1, k] = (st[sp - 1, k] - q * st[sp, k]) / b0
            st[sp - 1, 0] = q
        elif op == OP_NEG:
            for k in range(nd + 1):
                st[sp - 1, k] = -st[sp - 1, k]
        elif op == OP_POW:
            sp -= 1
            a0 = st[sp - 1, 0]
            b0 = st[sp, 0]
            v = a0 ** b0
            const_exp = True
            for k in range(first, nd + 1):
                if st[sp, k] != 0.0:
                    const_exp = False
            if const_exp:
                dv = 0.0 if b0 == 0.0 else b0 * a0 ** (b0 - 1.0)
                for k in range(first, nd + 1):
                    st[sp - 1, k] *= dv
            else:
                la = math.log(a0) if a0 > 0.0 else math.nan
                for k in range(first, nd + 1):
                    st[sp - 1, k] = v * (b0 * st[sp - 1, k] / a0 + la * st[sp, k])
            st[sp - 1, 0] = v
        else:
            u = st[sp - 1, 0]
            if op == OP_POWI:
                p = args[i]
                f = u ** p
                fp = 0.0 if p == 0 else p * u ** (p - 1)
            elif op == OP_SIN:
                f = math.sin(u)
                fp = math.cos(u)
            elif op == OP_COS:
                f = math.cos(u)
                fp = -math.sin(u)
            elif op == OP_TAN:
                f = math.tan(u)
                fp = 1.0 + f * f
            elif op == OP_EXP:
                f = math.exp(u) if u < 709.0 else math.inf
                fp = f
            elif op == OP_LOG:
                f = math.log(u) if u > 0.0 else (-math.inf if u == 0.0 else math.nan)
                fp = 1.0 / u if u != 0.0 else math.inf
            elif op == OP_TANH:
                f = math.tanh(u)
                fp = 1.0 - f * f
            elif op == OP_SQRT:
                f = math.sqrt(u) if u >= 0.0 else math.nan
                fp = 0.5 / f if f > 0.0 else math.inf
            elif op == OP_BUMP:
                f, fp = _bump(u)
            elif op == OP_SIGMOID:
                if u >= 0.0:
                    f = 1.0 / (1.0 + math.exp(-u))
                else:
                    ez = math.exp(u)
                    f = ez / (1.0 + ez)
                fp = f * (1.0 - f)
            elif op == OP_SMOOTHSTEP:
                f, fp = _smoothstep(u)
            else:
                f, fp = _bumpstep(u, BUMP_EDGES, BUMP_CUM, BUMP_SLOPE, BUMP_INTEGRAL)
            for k in range(first, nd + 1):
                st[sp - 1, k] *= fp
            st[sp - 1, 0] = f


@njit(cache=True)
def eval_program(ops, args, consts, depth, T, X, nd):
    N = X.shape[0]
    out = np.empty((N, nd + 1))
    st = np.empty((depth, nd + 1))
    for p in range(N):
        run_program(ops, args, consts, T[p], X[p], nd, st)
        for k in range(nd + 1):
            out[p, k] = st[0, k]
    return out


# ---------------------------------------------------------------------------
# contact vector fields in closed form

@njit(cache=True)
def vector_field(kind, m, x, jet, out):
    """X_H and R.H from a jet (value, dt, grads...). out has length dim + 1."""
    H = jet[0]
    if kind == 0:
        d = 2 * m + 1
        Hz = jet[2 + 2 * m]
        s = 0.0
        for i in range(m):
            Hx = jet[2 + i]
            Hy = jet[2 + m + i]
            y = x[m + i]
            out[i] = -Hy
            out[m + i] = Hx + y * Hz
            s += y * Hy
        out[2 * m] = H - s
        out[d] = Hz
    else:
        H1 = jet[2]
        H2 = jet[3]
        He = jet[4]
        sn = math.sin(x[2])
        cs = math.cos(x[2])
        out[0] = 2.0 * math.pi * H + math.pi * cs / sn * He
        out[1] = 2.0 * math.pi * H - math.pi * sn / cs * He
        out[2] = math.pi / (sn * cs) * (H2 * sn * sn - H1 * cs * cs)
        out[3] = 2.0 * math.pi * (H1 + H2)


@njit(cache=True)
def _rhs(ops, args, consts, kind, m, t, y, d, st, jet, out):
    run_program(ops, args, consts, t, y, d + 1, st, 2)
    for k in range(d + 2):
        jet[k] = st[0, k]
    vector_field(kind, m, y, jet, out)


@njit(cache=True)
def _rk4(ops, args, consts, kind, m, t, y, dt, d, st, jet, k1, k2, k3, k4, tmp):
    """One classical RK4 step of the augmented state (x, h) in place."""
    _rhs(ops, args, consts, kind, m, t, y, d, st, jet, k1)
    for j in range(d):
        tmp[j] = y[j] + 0.5 * dt * k1[j]
    _rhs(ops, args, consts, kind, m, t + 0.5 * dt, tmp, d, st, jet, k2)
    for j in range(d):
        tmp[j] = y[j] + 0.5 * dt * k2[j]
    _rhs(ops, args, consts, kind, m, t + 0.5 * dt, tmp, d, st, jet, k3)
    for j in range(d):
        tmp[j] = y[j] + dt * k3[j]
    _rhs(ops, args, consts, kind, m, t + dt, tmp, d, st, jet, k4)
    for j in range(d + 1):
        y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])


@njit(cache=True)
def _post_step(kind, y, d, lo, hi):
    if kind == 1:
        two_pi = 2.0 * math.pi
        y[0] = y[0] % two_pi
        y[1] = y[1] % two_pi
    for j in range(d + 1):
        if not (abs(y[j]) <= EXPLOSION):
            return STATUS_EXPLODE
    if kind == 1 and (y[2] < lo or y[2] > hi):
        return STATUS_POLE
    return STATUS_OK


@njit(cache=True)
def flow_points(ops, args, consts, depth, kind, m, X0, t0, t1, nsteps, lo, hi):
    """Advance each point p from t0[p] to t1[p] in nsteps[p] equal RK4 steps.

    Returns end points, accumulated conformal factor and a status per point.
    """
    N, d = X0.shape
    X = np.empty((N, d))
    Hc = np.zeros(N)
    status = np.zeros(N, dtype=np.int64)
    st = np.empty((depth, d + 2))
    jet = np.empty(d + 2)
    k1 = np.empty(d + 1)
    k2 = np.empty(d + 1)
    k3 = np.empty(d + 1)
    k4 = np.empty(d + 1)
    tmp = np.empty(d + 1)
    y = np.empty(d + 1)
    for p in range(N):
        for j in range(d):
            y[j] = X0[p, j]
        y[d] = 0.0
        n = nsteps[p]
        if n > 0:
            dt = (t1[p] - t0[p]) / n
            for s in range(n):
                t = t0[p] + s * dt
                _rk4(ops, args, consts, kind, m, t, y, dt, d, st, jet, k1, k2, k3, k4, tmp)
                code = _post_step(kind, y, d, lo, hi)
                if code != STATUS_OK:
                    status[p] = code
                    break
        for j in range(d):
            X[p, j] = y[j]
        Hc[p] = y[d]
    return X, Hc, status


@njit(cache=True)
def flow_sweep(ops, args, consts, depth, kind, m, X0, nodes, substeps, lo, hi):
    """Integrate all points over the time mesh ``nodes`` recording every node.

    Interval i is crossed in substeps[i] equal RK4 steps.
    """
    N, d = X0.shape
    S = nodes.shape[0]
    traj = np.empty((S, N, d))
    conf = np.zeros((S, N))
    status = np.zeros(N, dtype=np.int64)
    st = np.empty((depth, d + 2))
    jet = np.empty(d + 2)
    k1 = np.empty(d + 1)
    k2 = np.empty(d + 1)
    k3 = np.empty(d + 1)
    k4 = np.empty(d + 1)
    tmp = np.empty(d + 1)
    y = np.empty(d + 1)
    for p in range(N):
        for j in range(d):
            y[j] = X0[p, j]
            traj[0, p, j] = y[j]
        y[d] = 0.0
        failed = False
        for i in range(S - 1):
            if not failed:
                n = substeps[i]
                dt = (nodes[i + 1] - nodes[i]) / n
                for s in range(n):
                    _rk4(ops, args, consts, kind, m, nodes[i] + s * dt, y, dt, d,
                         st, jet, k1, k2, k3, k4, tmp)
                    code = _post_step(kind, y, d, lo, hi)
                    if code != STATUS_OK:
                        status[p] = code
                        failed = True
                        break
            for j in range(d):
                traj[i + 1, p, j] = y[j] if not failed else math.nan
            conf[i + 1, p] = y[d] if not failed else math.nan
    return traj, conf, status
