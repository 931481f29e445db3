import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactdyn import algebra as al
from contactdyn.errors import CutoffTooTight, DomainError
from contactdyn.experiments.sphere import sphere_seeds
from contactdyn.flow import identity_system, integrate_system
from contactdyn.hamfield import parse_hamiltonian
from contactdyn.manifold import darboux, hopf, quadrature_grid
from contactdyn.symplectization import (admissible_norm, compose_lifts, cutoff_agreement,
                                        cutoff_function, cutoff_hamiltonian, d_W, identity_lift,
                                        lift_system, sandwich_bounds, symplectic_defect)

LN_COSH_PI = 2.4503111742581460047
LN_2 = 0.69314718055994530942


@pytest.fixture(scope="module")
def appendix_lift():
    M = hopf()
    X0 = sphere_seeds(8)
    X0[0] = [0.0, 0.0, 1.40]
    A = integrate_system(M, parse_hamiltonian("0.5*cos(xi1)", M), X0, t_samples=10)
    return lift_system(A)


@pytest.fixture(scope="module")
def reeb_lift():
    M = hopf()
    A = integrate_system(M, parse_hamiltonian("1", M), [[0.2, 0.3, 0.8], [1.0, 2.0, 1.1]],
                         t_samples=4)
    return lift_system(A, theta0=[0.5, -0.25])


def test_reeb_lift(reeb_lift):
    L = reeb_lift
    np.testing.assert_allclose(L.trajectories[..., :3], L.parent.trajectories)
    np.testing.assert_allclose(L.trajectories[..., 3], [[0.5, -0.25]] * 5, atol=1e-14)
    XW = np.array([[0.1, 0.2, 0.9, 0.7]])
    assert L.hamiltonian.values(0.3, XW)[0] == pytest.approx(np.exp(0.7))


def test_identity_lift(S3):
    L = lift_system(identity_system(S3, [[0.5, 0.5, 0.5]], t_samples=4), verify=False)
    XW = np.array([[0.1, 0.2, 0.9, 0.7]])
    np.testing.assert_allclose(L.forward(0.7, XW), XW)
    np.testing.assert_allclose(identity_lift(XW), XW)


def test_appendix_lift_theta(appendix_lift):
    assert appendix_lift.trajectories[-1, 0, -1] == pytest.approx(LN_COSH_PI, abs=1e-8)
    assert appendix_lift.meta["direct_deviation"] < 1e-4


def test_admissible_norm_of_constant(S3):
    H = parse_hamiltonian("1", S3)
    g = quadrature_grid(S3, 4)
    value, base = admissible_norm(H, 0.0, LN_2, g, with_base=True)
    assert value == pytest.approx(1.0, abs=1e-12)
    lo, hi = sandwich_bounds(0.0, LN_2, base)
    assert lo == pytest.approx(1.0) and hi == pytest.approx(2.0)
    assert lo - 1e-12 <= value <= hi


def test_admissible_norm_of_zero(S3):
    assert admissible_norm(parse_hamiltonian("0", S3), -1.0, 1.0, quadrature_grid(S3, 4)) == 0.0


def test_admissible_norm_needs_interval(S3):
    with pytest.raises(DomainError):
        admissible_norm(parse_hamiltonian("1", S3), 1.0, 1.0)


def test_cutoff_function_plateau():
    rho = cutoff_function(0.0, 1.0, 0.5)
    v, _ = rho(np.array([-0.5, 0.0, 1.5, -1.5, 2.5]))
    np.testing.assert_allclose(v, [1, 1, 1, 0, 0], atol=1e-15)


def test_cutoff_of_identity_parent(S3):
    L = lift_system(identity_system(S3, [[0.5, 0.5, 0.5]], t_samples=4), verify=False)
    hw = cutoff_hamiltonian(L, 0.0, 0.0, 0.5)
    assert np.all(hw.values(0.3, np.array([[0.1, 0.2, 0.9, 0.0], [1, 1, 1, 5.0]])) == 0.0)


def test_cutoff_reeb_parent(reeb_lift):
    assert cutoff_agreement(reeb_lift, 0.0, 0.0, 0.1, thetas=[0.0]) < 1e-6


def test_cutoff_appendix_parent(appendix_lift):
    assert cutoff_agreement(appendix_lift, 0.0, 0.0, 3.2) < 1e-5


def test_cutoff_too_tight(appendix_lift):
    # these seeds reach |h| close to pi, above ln cosh pi
    with pytest.raises(CutoffTooTight):
        cutoff_hamiltonian(appendix_lift, 0.0, 0.0, 2.5)


def test_symplectic_defect_identity(S3):
    P = np.array([[0.3, 0.2, 0.9, 0.1], [1.0, 2.0, 1.2, -0.4]])
    assert symplectic_defect(S3, identity_lift, P) < 1e-9


def test_symplectic_defect_of_lift(appendix_lift):
    P = np.column_stack([appendix_lift.parent.seeds[:4], np.zeros(4)])
    assert symplectic_defect(appendix_lift.manifold, appendix_lift.map(1.0), P) < 1e-4


def test_symplectic_defect_negative_control():
    M = darboux()

    def naive(XW):
        XW = np.atleast_2d(XW).copy()
        XW[:, 0] *= 2
        return XW

    assert symplectic_defect(M, naive, np.array([[0.1, 0.3, 0.2, 0.0]])) > 0.1


@settings(max_examples=6)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_lift_functoriality(a, b):
    """The lift of A # B is the composite of the lifts."""
    M = darboux()
    X = [[0.1, -0.2, 0.3], [0.0, 0.4, -0.1]]
    A = integrate_system(M, parse_hamiltonian(f"{a!r}*sin(x1) + 0.3*y1 + 0.2*z", M), X,
                         dt=1e-2, t_samples=4, richardson=False)
    B = integrate_system(M, parse_hamiltonian(f"{b!r}*z*y1 + 0.1*x1", M), X,
                         dt=1e-2, t_samples=4, richardson=False)
    LC = lift_system(al.compose(A, B), verify=False)
    both = compose_lifts(lift_system(A, verify=False), lift_system(B, verify=False))
    XW = np.column_stack([np.array(X), [0.2, -0.1]])
    for t in (0.5, 1.0):
        np.testing.assert_allclose(both(t, XW), LC.forward(t, XW), atol=1e-10)
    assert d_W(LC, LC) == 0.0
