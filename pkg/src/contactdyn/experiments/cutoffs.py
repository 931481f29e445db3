"""Cutoff constructions for the divergent-sequence examples.

Everything here is built from the smooth primitives so the resulting
Hamiltonians compile like any user expression.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import log, pi

import numpy as np

from ..errors import ConfigError, DomainError
from ..primitives import BUMP_INTEGRAL, bumpstep, smooth_ramp, smoothstep

SIGMA_PRIME_0 = float(1.0 / BUMP_INTEGRAL)


def epsilon_k(k):
    """Support radius making rho_k'(0) = 1."""
    if k < 2:
        raise DomainError("k must be at least 2")
    return pi * SIGMA_PRIME_0 / (k * k * log(k))


def _radius_sq(M):
    m = M.n - 1
    names = [f"x{i}" for i in range(1, m + 1)] + [f"y{i}" for i in range(1, m + 1)]
    return " + ".join(f"{n}^2" for n in names)


@dataclass(frozen=True)
class CutoffFamily:
    """eta_k (radial, 1 near 0, support radius eps_k) and rho_k (odd plateau)."""
    k: int

    @property
    def eps(self):
        return epsilon_k(self.k)

    @property
    def plateau(self):
        return pi / (self.k * self.k * log(self.k))

    def rho(self, z):
        s, ds = bumpstep(np.asarray(z, float) / self.eps)
        return self.plateau * s, self.plateau * ds / self.eps

    def eta(self, r):
        u = (np.asarray(r, float) ** 2 / self.eps ** 2 - 0.25) / 0.75
        v, dv = smoothstep(u)
        return 1.0 - v, -dv * 2.0 * np.asarray(r, float) / (0.75 * self.eps ** 2)

    def eta_text(self, M):
        e2 = self.eps ** 2
        return f"(1 - smoothstep(({_radius_sq(M)})/{e2!r}*{4 / 3!r} - {1 / 3!r}))"

    def hamiltonian_text(self, M):
        k = self.k
        return f"{self.eta_text(M)}/{k * k} * sin(pi*bumpstep(z/{self.eps!r}))"

    def verify(self, samples=200001):
        """Check the defining properties on a fine grid; returns named residuals."""
        eps = self.eps
        z = np.linspace(-3 * eps, 3 * eps, samples)
        r, dr = self.rho(z)
        outer = np.abs(z) >= eps
        r_eta = np.linspace(0, 2 * eps, samples)
        e, _ = self.eta(r_eta)
        return {
            "odd": float(np.max(np.abs(r + r[::-1]))),
            "rho_at_0": float(abs(self.rho(0.0)[0])),
            "rho_prime_at_0_minus_1": float(abs(self.rho(0.0)[1] - 1.0)),
            "plateau_error": float(np.max(np.abs(np.abs(r[outer]) - self.plateau))),
            "max_rho_prime": float(np.max(np.abs(dr))),
            "eta_core_error": float(np.max(np.abs(e[r_eta <= 0.5 * eps] - 1.0))),
            "eta_outside_max": float(np.max(np.abs(e[r_eta >= eps]))),
        }


def divergent_factors_text(M, k=4):
    k = int(k)
    if k < 2:
        raise ConfigError("k must be at least 2")
    return CutoffFamily(k).hamiltonian_text(M)


def _plateau(name, lo, hi, width):
    return f"smoothstep(({name} - {lo - width!r})/{width!r})*smoothstep(({hi + width!r} - {name})/{width!r})"


def isotopy_bump_text(M):
    """rho = 1 near the segment 0 <= x1 <= 1 of the x1-axis, compact support."""
    m = M.n - 1
    parts = [_plateau("x1", -0.25, 1.25, 0.25)]
    parts += [_plateau(f"x{i}", -0.5, 0.5, 0.5) for i in range(2, m + 1)]
    parts += [_plateau(f"y{i}", -0.5, 0.5, 0.5) for i in range(1, m + 1)]
    parts.append(_plateau("z", -1.0, 1.0, 4.0))
    return "*".join(parts)


def divergent_isotopies_text(M, k=1):
    k = int(k)
    if k < 1:
        raise ConfigError("k must be at least 1")
    eps = 1.0 / k
    return f"-{eps!r}*tanh(y1/{eps!r}) * {isotopy_bump_text(M)}"


def ball_bump_text(M, radius=1.0, height=1.0):
    return f"{float(height)!r}*(1 - smoothstep(({_radius_sq(M)} + z^2)/{float(radius) ** 2!r}))"


# -- middle-thirds construction --------------------------------------------

def cantor_intervals(k):
    """The 2^k closed intervals of the k-th middle-thirds stage, as Fractions."""
    ivs = [(Fraction(0), Fraction(1))]
    for _ in range(k):
        nxt = []
        for a, b in ivs:
            w = (b - a) / 3
            nxt += [(a, a + w), (b - w, b)]
        ivs = nxt
    return ivs


def cantor_function(t, digits=60):
    """Cantor function from the ternary expansion (vectorized)."""
    t = np.clip(np.asarray(t, float), 0.0, 1.0)
    out = np.zeros_like(t)
    x = t.copy()
    done = np.zeros(t.shape, bool)
    scale = 0.5
    for _ in range(digits):
        x = 3.0 * x
        d = np.floor(x)
        d = np.minimum(d, 2.0)
        x = x - d
        hit = (d == 1.0) & ~done
        out = np.where(hit, out + scale, out)
        done |= hit
        out = np.where(~done & (d == 2.0), out + scale, out)
        scale *= 0.5
    out[t >= 1.0] = 1.0
    return out


class CantorDensity:
    """Mollified (3/2)^k * indicator of the k-th stage, transition width 3^-k/10."""

    def __init__(self, k):
        if not 0 <= k <= 10:
            raise DomainError("cantor stage k must lie in 0..10")
        self.k = k
        ivs = cantor_intervals(k)
        self.intervals = ivs
        self.left = np.array([float(a) for a, _ in ivs])
        self.right = np.array([float(b) for _, b in ivs])
        self.height = 1.5 ** k
        self.delta = 3.0 ** (-k) / 10.0

    def _steps(self, t):
        t = np.asarray(t, float)
        tt = t[..., None]
        ua, dua = bumpstep((tt - self.left) / self.delta)
        ub, dub = bumpstep((tt - self.right) / self.delta)
        val = 0.5 * (ua - ub).sum(-1)
        der = 0.5 * (dua - dub).sum(-1) / self.delta
        return val, der

    def __call__(self, t):
        return self.height * self._steps(t)[0]

    def derivative(self, t):
        return self.height * self._steps(t)[1]

    def integral(self, t):
        """F_k(t) = int_0^t G_k, exactly through the ramp antiderivative."""
        tt = np.asarray(t, float)[..., None]
        d = self.delta
        va = smooth_ramp((tt - self.left) / d) - smooth_ramp(-self.left / d)
        vb = smooth_ramp((tt - self.right) / d) - smooth_ramp(-self.right / d)
        return self.height * d * (va - vb).sum(-1)

    def raw(self, t):
        """The unmollified step function."""
        t = np.asarray(t, float)[..., None]
        return self.height * np.any((t >= self.left) & (t <= self.right), axis=-1)

    def edges(self):
        return np.unique(np.concatenate([self.left, self.right]))


def cantor_text(k):
    dens = CantorDensity(int(k))
    d = dens.delta
    terms = " + ".join(f"bumpstep((t - {a!r})/{d!r}) - bumpstep((t - {b!r})/{d!r})"
                       for a, b in zip(dens.left.tolist(), dens.right.tolist()))
    return f"{0.5 * dens.height!r}*({terms})"


def cantor_field(M, k=4):
    """G_k as a compiled space-constant field."""
    from ..expr import parse
    from ..hamfield import ExpressionField

    k = int(k)
    dens = CantorDensity(k)
    field = ExpressionField(M, parse(cantor_text(k), M.coord_names), label=f"cantor(k={k})",
                            source=("builtin", "cantor", {"k": k}))
    field.density = dens
    return field


def step_l1_distance(k, j):
    """Exact L1 distance between the unmollified stage densities (Fraction)."""
    pts = sorted({p for iv in cantor_intervals(k) + cantor_intervals(j) for p in iv}
                 | {Fraction(0), Fraction(1)})
    ivk, ivj = cantor_intervals(k), cantor_intervals(j)
    hk, hj = Fraction(3, 2) ** k, Fraction(3, 2) ** j

    def inside(ivs, x):
        return any(a <= x <= b for a, b in ivs)

    total = Fraction(0)
    for a, b in zip(pts[:-1], pts[1:]):
        mid = (a + b) / 2
        gk = hk if inside(ivk, mid) else 0
        gj = hj if inside(ivj, mid) else 0
        total += abs(gk - gj) * (b - a)
    return total
