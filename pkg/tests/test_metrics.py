
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactdyn.errors import NotBasicWarning, ResolutionTooCoarse
from contactdyn.flow import IdentityFlow, identity_system, integrate_system
from contactdyn.hamfield import parse_hamiltonian
from contactdyn.manifold import darboux, hopf, quadrature_grid
from contactdyn.metrics import (bd_length_and_energy, c0_distance, contact_distance, contact_norm,
                                displacement_energy_functional, extrema, sup_norm,
                                time_quadrature)

LN_COSH_PI = 2.4503111742581460047
TWO_OVER_PI = 0.63661977236758134308
BOX = ((-1.0, 1.0),) * 3


def norm(M, text, **kw):
    return contact_norm(M, parse_hamiltonian(text, M), **kw)


def test_norm_of_appendix_field(S3):
    n = norm(S3, "0.5*cos(xi1)")
    assert n.total == pytest.approx(1.0, abs=1e-6)
    assert n.osc_integral == pytest.approx(1.0, abs=1e-6)
    assert abs(n.mean_integral) < 1e-12


def test_norm_of_reeb_hamiltonian(S3):
    n = norm(S3, "1")
    assert n.total == pytest.approx(1.0, abs=1e-12)
    assert n.osc_integral == 0.0


def test_norm_of_one_minus_appendix(S3):
    assert norm(S3, "1 - 0.5*cos(xi1)").total == pytest.approx(2.0, abs=1e-6)


def test_norm_of_space_constant_sine(S3):
    n = norm(S3, "sin(2*pi*t)", grid=quadrature_grid(S3, 2, min_resolution=1), t_samples=256)
    assert n.osc_integral == 0.0
    assert n.total == pytest.approx(TWO_OVER_PI, abs=1e-6)


def test_time_samples_floor():
    with pytest.raises(ResolutionTooCoarse):
        time_quadrature(32)
    t, w = time_quadrature(64)
    assert len(t) == 65 and w.sum() == pytest.approx(1.0)


def test_simpson_is_exact_on_cubics():
    t, w = time_quadrature(64)
    assert w @ (4 * t ** 3) == pytest.approx(1.0, abs=1e-14)


def test_coarse_grid_detected(R3):
    H = parse_hamiltonian("sin(5*x1)*cos(4*y1)", R3)
    with pytest.raises(ResolutionTooCoarse):
        contact_norm(R3, H, quadrature_grid(R3, 4, box=BOX))
    n = contact_norm(R3, H, quadrature_grid(R3, 4, box=BOX), strict=False)
    assert n.grid_meta["refine_delta_rel"] > 0.05


def test_refinement_recovers_off_grid_maximum(R3):
    H = parse_hamiltonian("-(x1 - 0.123)^2 - (y1 + 0.377)^2 - z^2", R3)
    g = quadrature_grid(R3, 9, box=BOX)
    hi, lo, _, ghi, _ = extrema(H, g, np.array([0.0]))
    assert hi[0] == pytest.approx(0.0, abs=1e-12)
    assert ghi[0] < hi[0]


def test_sup_norm():
    assert sup_norm(np.zeros((3, 4))) == 0.0
    assert sup_norm(np.array([[0.1, -2.0]])) == 2.0


def test_sup_norm_appendix(S3):
    X0 = np.column_stack([np.linspace(0, 2 * np.pi, 16, endpoint=False), np.zeros(16),
                          np.full(16, 1.45)])
    X0[0, 0] = 0.0
    S = integrate_system(S3, parse_hamiltonian("0.5*cos(xi1)", S3), X0, t_samples=4,
                         richardson=False)
    assert sup_norm(S.conformal[-1]) >= LN_COSH_PI - 1e-9


def test_c0_distance_of_equal_maps(S3):
    S = integrate_system(S3, parse_hamiltonian("0.5*cos(xi1)", S3), [[1.0, 1.0, 1.4]], t_samples=4)
    assert c0_distance(S3, S.flow, S.flow, S.seeds) == (0.0, 0.0)


def test_reeb_half_shift_distance(S3):
    S = integrate_system(S3, parse_hamiltonian("1", S3), [[0.3, 0.2, 0.9]], t_samples=2)
    d, dbar = c0_distance(S3, S.flow_map(0.5), IdentityFlow(S3), S.seeds)
    assert d == pytest.approx(np.pi * np.sqrt(2), abs=1e-9)
    assert dbar == pytest.approx(2 * np.pi * np.sqrt(2), abs=1e-9)


def _darboux_system(text, seeds=((0.1, 0.2, 0.3), (-0.2, 0.1, 0.0))):
    M = darboux()
    return integrate_system(M, parse_hamiltonian(text, M), np.array(seeds), dt=1e-2, t_samples=8,
                            richardson=False)


def test_contact_distance_to_self():
    A = _darboux_system("0.3*y1 + 0.2*x1*z")
    r = contact_distance(A, A, grid=quadrature_grid(A.manifold, 7, box=BOX))
    assert r.d_alpha == 0.0


def test_contact_distance_components():
    A = _darboux_system("y1")
    B = _darboux_system("z")
    r = contact_distance(A, B, grid=quadrature_grid(A.manifold, 7, box=BOX), strict=False)
    assert r.d_alpha == pytest.approx(r.d_bar_M + r.conf_sup + r.ham_norm)
    # h_B = t, h_A = 0
    assert r.conf_sup == pytest.approx(1.0, abs=1e-12)


def test_bd_of_space_constant_sine(S3):
    g = quadrature_grid(S3, 2, min_resolution=1)
    r = bd_length_and_energy(S3, parse_hamiltonian("sin(2*pi*t)", S3), g, 64)
    assert abs(r["ell_bd"]) < 1e-10
    assert r["norm"] == pytest.approx(TWO_OVER_PI, abs=1e-5)
    assert r["reduction_check"] < 1e-10
    assert r["energy_upper"] <= r["ell_bd"]


def test_bd_equals_norm_for_constant_mean(R3):
    g = quadrature_grid(R3, 7, box=BOX)
    H = parse_hamiltonian("0.5 + 0.2*sin(x1)*cos(t)", R3)
    r = bd_length_and_energy(R3, H, g, 64, reduction=False, strict=False)
    assert r["ell_bd"] == pytest.approx(r["norm"], abs=1e-12)


def test_bd_warns_on_non_basic(R3):
    g = quadrature_grid(R3, 5, box=BOX)
    with pytest.warns(NotBasicWarning):
        bd_length_and_energy(R3, parse_hamiltonian("z", R3), g, 64, reduction=False, strict=False)


def test_translation_displaces_ball(R3):
    A = integrate_system(R3, parse_hamiltonian("y1", R3), [[0, 0, 0]], t_samples=4)
    r = np.linspace(-0.4, 0.4, 5)
    K = np.array([[x, y, z] for x in r for y in r for z in r if x * x + y * y + z * z <= 0.16])
    # linear H: the midpoint grid misses the boundary extremes by half a spacing
    out = displacement_energy_functional(A, K, grid=quadrature_grid(R3, 21, box=BOX))
    assert out["displaced"] and out["gap"] > 0.19
    assert out["functional"] == pytest.approx(out["norm"]) and out["norm"] > 0


def test_identity_does_not_displace(R3):
    A = identity_system(R3, [[0, 0, 0]], t_samples=4)
    out = displacement_energy_functional(A, [[0, 0, 0], [0.1, 0, 0]],
                                         grid=quadrature_grid(R3, 5, box=BOX))
    assert not out["displaced"]


def test_reeb_quarter_turn_displaces(S3):
    A = integrate_system(S3, parse_hamiltonian("1", S3), [[0.0, 0.0, 0.8]], t_samples=4)
    K = np.array([[a, b, 0.8] for a in (-0.1, 0.0, 0.1) for b in (-0.1, 0.0, 0.1)])
    assert displacement_energy_functional(A, K, t=0.25)["displaced"]
    # a full period returns every point
    assert not displacement_energy_functional(A, K, t=1.0)["displaced"]


# -- properties ------------------------------------------------------------------

_COEF = st.floats(-2.0, 2.0)


@settings(max_examples=25)
@given(st.lists(_COEF, min_size=4, max_size=4), st.floats(0, 6.2))
def test_norm_sandwich_per_time(a, p):
    """|H_t| <= osc H_t + |c(H_t)| <= 3 |H_t| pointwise in time."""
    M = hopf()
    H = parse_hamiltonian(f"{a[0]!r} + {a[1]!r}*sin(eta)*cos(xi1 + {p!r}) + "
                          f"{a[2]!r}*cos(eta)*sin(xi2) + {a[3]!r}*cos(2*eta)", M)
    hi, lo, mean, _, _ = extrema(H, quadrature_grid(M, (8, 8, 8)), np.array([0.0]))
    sup = max(abs(hi[0]), abs(lo[0]))
    n = hi[0] - lo[0] + abs(mean[0])
    assert sup - 1e-12 <= n <= 3 * sup + 1e-12


def _systems(coefs):
    M = darboux()
    seeds = np.array([[0.1, 0.2, 0.3], [-0.3, 0.0, 0.2]])
    out = []
    for a, b in coefs:
        H = parse_hamiltonian(f"{a!r}*y1 + {b!r}*sin(x1) + 0.1*z", M)
        out.append(integrate_system(M, H, seeds, dt=1e-2, t_samples=8, richardson=False))
    return out


_PAIR = st.tuples(st.floats(-1, 1), st.floats(-1, 1))


@settings(max_examples=8)
@given(_PAIR, _PAIR, _PAIR)
def test_contact_distance_symmetry_and_triangle(p, q, r):
    A, B, C = _systems([p, q, r])
    g = quadrature_grid(A.manifold, 5, box=BOX)
    kw = dict(grid=g, strict=False)
    ab, ba = contact_distance(A, B, **kw), contact_distance(B, A, **kw)
    assert ab.d_alpha == pytest.approx(ba.d_alpha, abs=1e-10)
    ac, cb = contact_distance(A, C, **kw), contact_distance(C, B, **kw)
    assert ab.d_alpha <= ac.d_alpha + cb.d_alpha + 1e-9
