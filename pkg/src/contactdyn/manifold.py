"""Model contact manifolds: Darboux space and the Hopf-coordinate 3-sphere.

Points are plain coordinate arrays. A batch of points has shape (N, dim); a
single point has shape (dim,). Darboux coordinates are ordered
(x1..x_{n-1}, y1..y_{n-1}, z); Hopf coordinates are (xi1, xi2, eta).
"""

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import DomainError, PoleSingularity, ResolutionTooCoarse

TWO_PI = 2.0 * np.pi

DARBOUX = "darboux"
HOPF = "hopf"


@dataclass(frozen=True)
class ChartedManifold:
    kind: str
    n: int = 2
    box: tuple = ()
    pole_margin: float = 1e-3

    def __post_init__(self):
        if self.kind not in (DARBOUX, HOPF):
            raise DomainError(f"unknown manifold kind {self.kind!r}")
        if self.kind == HOPF and self.n != 2:
            raise DomainError("the Hopf sphere has n = 2")
        if self.n < 2:
            raise DomainError("n must be at least 2")
        if not 0.0 < self.pole_margin < np.pi / 4:
            raise DomainError("pole margin must lie in (0, pi/4)")
        if self.kind == DARBOUX:
            box = self.box or ((-2.0, 2.0),) * self.dim
            box = tuple((float(lo), float(hi)) for lo, hi in box)
            if len(box) != self.dim or any(hi <= lo for lo, hi in box):
                raise DomainError("box needs one increasing interval per coordinate")
            object.__setattr__(self, "box", box)
        else:
            object.__setattr__(self, "box", ((0.0, TWO_PI), (0.0, TWO_PI),
                                             (0.0, np.pi / 2)))

    @property
    def dim(self):
        return 2 * self.n - 1

    @property
    def kind_code(self):
        return 0 if self.kind == DARBOUX else 1

    @property
    def coord_names(self):
        if self.kind == HOPF:
            return ("xi1", "xi2", "eta")
        m = self.n - 1
        return (tuple(f"x{i}" for i in range(1, m + 1))
                + tuple(f"y{i}" for i in range(1, m + 1)) + ("z",))

    @property
    def periodic(self):
        if self.kind == HOPF:
            return np.array([True, True, False])
        return np.zeros(self.dim, dtype=bool)

    @property
    def eta_bounds(self):
        return self.pole_margin, np.pi / 2 - self.pole_margin

    def __str__(self):
        if self.kind == HOPF:
            return "HopfSphere"
        return f"Darboux(n={self.n})"

    # -- point handling -------------------------------------------------
    def coords(self, X):
        """Return X as a float array of shape (N, dim) and whether it was 1-D."""
        if isinstance(X, Point):
            X = X.coords
        A = np.asarray(X, dtype=float)
        single = A.ndim == 1
        A = np.atleast_2d(A)
        if A.ndim != 2 or A.shape[1] != self.dim:
            raise DomainError(f"expected points with {self.dim} coordinates, got shape {np.shape(X)}")
        return A, single

    def wrap(self, X):
        A = np.array(X, dtype=float, copy=True)
        if self.kind == HOPF:
            A[..., :2] = np.mod(A[..., :2], TWO_PI)
        return A

    def check(self, X):
        """Validate points, raising DomainError or PoleSingularity."""
        A, _ = self.coords(X)
        if not np.all(np.isfinite(A)):
            raise DomainError("non-finite coordinates")
        if self.kind == HOPF:
            lo, hi = self.eta_bounds
            eta = A[:, 2]
            if np.any((eta < lo) | (eta > hi)):
                raise PoleSingularity(
                    f"eta outside [{lo:g}, {hi:g}] (pole margin {self.pole_margin:g})")
        return A

    def distance(self, X, Y):
        """Chart distance: Euclidean, with angular differences wrapped to [-pi, pi]."""
        D = np.asarray(X, dtype=float) - np.asarray(Y, dtype=float)
        if self.kind == HOPF:
            D = D.copy()
            D[..., :2] = np.mod(D[..., :2] + np.pi, TWO_PI) - np.pi
        return np.sqrt(np.sum(D * D, axis=-1))

    # -- geometry -------------------------------------------------------
    def alpha(self, X):
        A, single = self.coords(X)
        out = np.zeros_like(A)
        if self.kind == DARBOUX:
            m = self.n - 1
            out[:, :m] = -A[:, m:2 * m]
            out[:, -1] = 1.0
        else:
            s2 = np.sin(A[:, 2]) ** 2
            out[:, 0] = s2 / TWO_PI
            out[:, 1] = (1.0 - s2) / TWO_PI
        return out[0] if single else out

    def d_alpha(self, X):
        """Matrix W with W[i, j] = d(alpha)(e_i, e_j)."""
        A, single = self.coords(X)
        N, d = A.shape
        W = np.zeros((N, d, d))
        if self.kind == DARBOUX:
            m = self.n - 1
            for i in range(m):
                W[:, i, m + i] = 1.0
                W[:, m + i, i] = -1.0
        else:
            sc = np.sin(A[:, 2]) * np.cos(A[:, 2]) / np.pi
            # d(alpha) = (sc/pi) (d eta ^ d xi1 - d eta ^ d xi2)
            W[:, 0, 2] = -sc
            W[:, 2, 0] = sc
            W[:, 1, 2] = sc
            W[:, 2, 1] = -sc
        return W[0] if single else W

    def reeb(self, X):
        A, single = self.coords(X)
        out = np.zeros_like(A)
        if self.kind == DARBOUX:
            out[:, -1] = 1.0
        else:
            out[:, 0] = TWO_PI
            out[:, 1] = TWO_PI
        return out[0] if single else out

    def density(self, X):
        """Coordinate density of the normalized volume (up to the box normalization)."""
        A, single = self.coords(X)
        if self.kind == DARBOUX:
            out = np.ones(A.shape[0])
        else:
            out = np.sin(A[:, 2]) * np.cos(A[:, 2]) / (2.0 * np.pi ** 2)
        return out[0] if single else out

    def bordered_matrix(self, X):
        """The 2n x 2n antisymmetric matrix [[0, alpha], [-alpha^T, d alpha]]."""
        A, single = self.coords(X)
        N, d = A.shape
        B = np.zeros((N, d + 1, d + 1))
        a = self.alpha(A)
        B[:, 0, 1:] = a
        B[:, 1:, 0] = -a
        B[:, 1:, 1:] = self.d_alpha(A)
        return B[0] if single else B

    def volume_coefficient(self, X):
        """|alpha ^ (d alpha)^(n-1)| in chart coordinates, via the bordered determinant."""
        B = self.bordered_matrix(X)
        return factorial(self.n - 1) * np.sqrt(np.abs(np.linalg.det(B)))


@dataclass(frozen=True)
class Point:
    coords: np.ndarray
    manifold: ChartedManifold

    def __post_init__(self):
        c = self.manifold.wrap(np.asarray(self.coords, dtype=float).reshape(self.manifold.dim))
        self.manifold.check(c)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class CovectorData:
    alpha: np.ndarray
    d_alpha: np.ndarray


def darboux(n=2, box=None):
    if box is None:
        return ChartedManifold(DARBOUX, n)
    if np.isscalar(box):
        box = ((-float(box), float(box)),) * (2 * n - 1)
    return ChartedManifold(DARBOUX, n, tuple(map(tuple, box)))


def hopf(pole_margin=1e-3):
    return ChartedManifold(HOPF, 2, pole_margin=pole_margin)


def manifold_from_config(cfg):
    kind = cfg.get("kind", DARBOUX).lower()
    if kind in ("hopf", "hopfsphere", "sphere"):
        return hopf(cfg.get("pole_margin", 1e-3))
    if kind == DARBOUX:
        return darboux(cfg.get("n", 2), cfg.get("box"))
    raise DomainError(f"unknown manifold kind {kind!r}")


def exterior_data_at(M, x):
    A = M.check(x)
    if A.shape[0] != 1:
        raise DomainError("exterior_data_at takes a single point")
    return CovectorData(M.alpha(A[0]), M.d_alpha(A[0]))


def reeb_at(M, x):
    A = M.check(x)
    return M.reeb(A[0]) if A.shape[0] == 1 else M.reeb(A)


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor grid with weights summing to one, plus optional zero-weight nodes.

    ``axes`` holds the 1-D node arrays of the tensor part; ``spacing`` the
    typical node gap per axis, used to bound local refinement.
    """
    manifold: ChartedManifold
    nodes: np.ndarray
    weights: np.ndarray
    axes: tuple
    spacing: np.ndarray
    bounds: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.nodes.shape[0]

    def mean(self, values):
        return np.asarray(values) @ self.weights

    def with_extra(self, points):
        P, _ = self.manifold.coords(points)
        P = self.manifold.check(self.manifold.wrap(P))
        return QuadratureGrid(self.manifold, np.vstack([self.nodes, P]),
                              np.concatenate([self.weights, np.zeros(len(P))]),
                              self.axes, self.spacing, self.bounds, dict(self.meta, extra=len(P)))


def _per_axis(resolution, d):
    if np.isscalar(resolution):
        return (int(resolution),) * d
    res = tuple(int(r) for r in resolution)
    if len(res) != d:
        raise ResolutionTooCoarse(f"need {d} resolutions, got {len(res)}")
    return res


def quadrature_grid(M, resolution, *, box=None, eta_band=None, min_resolution=4):
    """Tensor-product quadrature for the normalized volume.

    Hopf: uniform periodic nodes in xi1, xi2 and Gauss-Legendre nodes in
    u = sin^2(eta), in which the volume density is constant. ``eta_band``
    restricts eta to a sub-interval and renormalizes; for functions of the
    angles alone the mean is unchanged.
    Darboux: cell-centred uniform nodes on the box (odd counts hit the
    centre), equal weights.
    """
    res = _per_axis(resolution, M.dim)
    if min(res) < min_resolution:
        raise ResolutionTooCoarse(f"resolution {res} below {min_resolution} per axis")
    if M.kind == HOPF:
        lo, hi = M.eta_bounds
        if eta_band is not None:
            lo, hi = max(lo, eta_band[0]), min(hi, eta_band[1])
            if hi <= lo:
                raise DomainError("empty eta band")
        g, gw = np.polynomial.legendre.leggauss(res[2])
        # full sphere: GL over u in [0, 1]; nodes never reach the poles
        ulo, uhi = (0.0, 1.0) if eta_band is None else (np.sin(lo) ** 2, np.sin(hi) ** 2)
        u = 0.5 * (uhi - ulo) * g + 0.5 * (uhi + ulo)
        eta = np.arcsin(np.sqrt(u))
        if np.any((eta < M.eta_bounds[0]) | (eta > M.eta_bounds[1])):
            raise PoleSingularity("eta quadrature nodes fall inside the pole margin")
        axes = (TWO_PI * np.arange(res[0]) / res[0], TWO_PI * np.arange(res[1]) / res[1], eta)
        w_axes = (np.full(res[0], 1.0 / res[0]), np.full(res[1], 1.0 / res[1]), gw / gw.sum())
        spacing = np.array([TWO_PI / res[0], TWO_PI / res[1],
                            (eta.max() - eta.min()) / max(res[2] - 1, 1)])
        bounds = np.array([[-np.inf, np.inf], [-np.inf, np.inf], [lo, hi]])
    else:
        bx = M.box if box is None else (tuple(box) if not np.isscalar(box)
                                        else ((-box, box),) * M.dim)
        axes, w_axes, spacing = [], [], []
        for (lo, hi), r in zip(bx, res):
            h = (hi - lo) / r
            axes.append(lo + h * (np.arange(r) + 0.5))
            w_axes.append(np.full(r, 1.0 / r))
            spacing.append(h)
        axes, w_axes, spacing = tuple(axes), tuple(w_axes), np.array(spacing)
        bounds = np.array(bx, dtype=float)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    wmesh = np.meshgrid(*w_axes, indexing="ij")
    weights = np.prod(np.stack([w.ravel() for w in wmesh], axis=1), axis=1)
    weights = weights / weights.sum()
    meta = {"resolution": list(res), "kind": M.kind}
    if eta_band is not None:
        meta["eta_band"] = [float(lo), float(hi)]
    if M.kind == DARBOUX:
        meta["box"] = [list(b) for b in bounds.tolist()]
    return QuadratureGrid(M, nodes, weights, axes, spacing, bounds, meta)
