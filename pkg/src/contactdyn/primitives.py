"""Smooth building blocks: standard bump, smooth step, normalized bump integral.

Each function returns ``(value, derivative)`` on numpy arrays.
"""

import numpy as np

_TABLE_INTERVALS = 4096


def bump(u):
    """exp(1 - 1/(1 - u^2)) on |u| < 1, zero outside; equals 1 at u = 0."""
    u = np.asarray(u, float)
    inside = np.abs(u) < 1.0
    q = np.where(inside, 1.0 - u * u, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        b = np.where(inside, np.exp(1.0 - 1.0 / q), 0.0)
        db = np.where(inside, b * (-2.0 * u / (q * q)), 0.0)
    return b, db


def sigmoid(u):
    u = np.asarray(u, float)
    with np.errstate(over="ignore"):
        s = np.where(u >= 0, 1.0 / (1.0 + np.exp(-np.abs(u))),
                     np.exp(-np.abs(u)) / (1.0 + np.exp(-np.abs(u))))
    return s, s * (1.0 - s)


def smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/s)."""
    u = np.asarray(u, float)
    inside = (u > 0.0) & (u < 1.0)
    a_arg = np.where(inside, u, 0.5)
    b_arg = np.where(inside, 1.0 - u, 0.5)
    with np.errstate(under="ignore"):
        fa = np.exp(-1.0 / a_arg)
        fb = np.exp(-1.0 / b_arg)
        S = fa + fb
        val = np.where(inside, fa / S, np.where(u >= 1.0, 1.0, 0.0))
        der = np.where(inside, fa * fb * (1.0 / a_arg ** 2 + 1.0 / b_arg ** 2) / (S * S), 0.0)
    return val, der


def _build_table(n=_TABLE_INTERVALS):
    g, w = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, 1.0, n + 1)
    h = edges[1] - edges[0]
    s = edges[:-1, None] + 0.5 * h * (g[None, :] + 1.0)
    pieces = 0.5 * h * (bump(s)[0] @ w)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    total = cum[-1]
    return edges, cum / total, bump(edges)[0] / total, total


BUMP_EDGES, BUMP_CUM, BUMP_SLOPE, BUMP_INTEGRAL = _build_table()


def bumpstep(u):
    """Odd normalized integral of the bump: Sigma(u) = int_0^u bump / int_0^1 bump.

    Sigma = +-1 for |u| >= 1 and Sigma'(0) = 1 / int_0^1 bump. Values come
    from a cubic Hermite table of the exact cumulative integral; the
    derivative is returned exactly.
    """
    u = np.asarray(u, float)
    a = np.minimum(np.abs(u), 1.0)
    n = BUMP_EDGES.size - 1
    h = 1.0 / n
    j = np.minimum((a / h).astype(int), n - 1)
    s = a / h - j
    y0, y1 = BUMP_CUM[j], BUMP_CUM[j + 1]
    m0, m1 = BUMP_SLOPE[j], BUMP_SLOPE[j + 1]
    s2, s3 = s * s, s * s * s
    val = ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0
           + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * m1)
    return np.sign(u) * val, bump(u)[0] / BUMP_INTEGRAL


def _hermite_integrals(s):
    s2, s3, s4 = s * s, s * s * s, s * s * s * s
    return (s4 / 2 - s3 + s, s4 / 4 - 2 * s3 / 3 + s2 / 2, -s4 / 2 + s3, s4 / 4 - s3 / 3)


def _build_integral_table():
    n = BUMP_EDGES.size - 1
    h = 1.0 / n
    i00, i10, i01, i11 = _hermite_integrals(1.0)
    pieces = h * (i00 * BUMP_CUM[:-1] + i10 * h * BUMP_SLOPE[:-1]
                  + i01 * BUMP_CUM[1:] + i11 * h * BUMP_SLOPE[1:])
    return np.concatenate([[0.0], np.cumsum(pieces)])


BUMP_CUM2 = _build_integral_table()


def bumpstep_integral(u):
    """W(u) = int_0^u Sigma(s) ds, an even function; exact on the Hermite table."""
    u = np.asarray(u, float)
    a = np.minimum(np.abs(u), 1.0)
    n = BUMP_EDGES.size - 1
    h = 1.0 / n
    j = np.minimum((a / h).astype(int), n - 1)
    s = a / h - j
    i00, i10, i01, i11 = _hermite_integrals(s)
    inner = BUMP_CUM2[j] + h * (i00 * BUMP_CUM[j] + i10 * h * BUMP_SLOPE[j]
                                + i01 * BUMP_CUM[j + 1] + i11 * h * BUMP_SLOPE[j + 1])
    return inner + np.maximum(np.abs(u) - 1.0, 0.0)


def smooth_ramp(u):
    """A(u) = int_{-inf}^u (1 + Sigma)/2: zero for u <= -1 and equal to u for u >= 1."""
    u = np.asarray(u, float)
    mid = 0.5 * (u + 1.0) + 0.5 * (bumpstep_integral(u) - BUMP_CUM2[-1])
    return np.where(u <= -1.0, 0.0, np.where(u >= 1.0, u, mid))
