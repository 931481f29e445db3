import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactdyn import algebra as al
from contactdyn.errors import DomainError, ManifoldMismatch, NotMonotone
from contactdyn.flow import IntegratedFlow, identity_system, integrate_system
from contactdyn.hamfield import parse_hamiltonian
from contactdyn.manifold import darboux, hopf

SEEDS = np.array([[0.0, 0.0, 1.40], [2.0, 1.0, 1.45], [4.5, 3.0, 1.42]])
TIMES = (0.25, 0.5, 1.0)


def system(M, text, seeds=SEEDS, dt=1e-3, t_samples=8):
    return integrate_system(M, parse_hamiltonian(text, M), seeds, dt=dt, t_samples=t_samples,
                            richardson=False)


@pytest.fixture(scope="module")
def A():
    return system(hopf(), "0.5*cos(xi1)")


@pytest.fixture(scope="module")
def A_coarse():
    """Coarse parent for the nested inverse checks, as in the group-law suite."""
    return system(hopf(), "0.5*cos(xi1)", seeds=SEEDS[:1], dt=1e-2, t_samples=4)


@pytest.fixture(scope="module")
def R():
    return system(hopf(), "1")


def test_compose_with_identity(A):
    I = identity_system(A.manifold, A.seeds, t_samples=8)
    C = al.compose(A, I)
    np.testing.assert_allclose(C.trajectories, A.trajectories, atol=1e-12)
    X = np.array([[1.0, 1.0, 1.3]])
    for t in TIMES:
        assert al.ComposeHamiltonian(A, I).values(t, X)[0] == pytest.approx(A.hamiltonian.values(t, X)[0])


def test_compose_appendix_with_reeb(A, R):
    HF = al.ComposeHamiltonian(A, R)
    for k in (2, 4, 8):
        t = A.times[k]
        Y = A.trajectories[k]
        expected = 0.5 * np.cos(Y[:, 0]) + np.exp(A.conformal[k])
        np.testing.assert_allclose(HF.values(t, Y), expected, rtol=1e-8)


def test_compose_with_inverse_is_identity(A_coarse):
    A = A_coarse
    C = al.compose(A, al.inverse(A))
    M = A.manifold
    assert np.max(M.distance(C.trajectories, A.seeds[None])) < 1e-5
    assert np.max(np.abs(C.conformal)) < 1e-5


def test_inverse_of_reeb(R):
    Hbar = al.InverseHamiltonian(R)
    X = np.array([[0.3, 0.4, 0.9], [5.0, 1.0, 1.2]])
    np.testing.assert_allclose(Hbar.values(0.5, X), -1.0, atol=1e-12)


def test_inverse_of_appendix_is_negation(A):
    Hbar = al.InverseHamiltonian(A)
    X = np.array([[0.3, 0.4, 1.40], [5.0, 1.0, 1.45], [2.0, 2.0, 1.5]])
    for t in TIMES:
        np.testing.assert_allclose(Hbar.values(t, X), -A.hamiltonian.values(t, X), atol=1e-6)


def test_inverse_routes_agree(A_coarse):
    A = A_coarse
    a, b = al.inverse(A, "flow"), al.inverse(A, "hamiltonian")
    assert np.max(A.manifold.distance(a.trajectories, b.trajectories)) < 1e-5
    assert b.meta["composition_to_identity"] < 1e-5


def test_double_inverse(R3):
    A = system(R3, "0.3*sin(x1) + 0.2*y1*z", seeds=[[0.1, 0.2, 0.3]], dt=1e-2, t_samples=2)
    B = al.inverse(al.inverse(A, "flow"), dt=1e-2)
    assert np.max(R3.distance(B.trajectories, A.trajectories)) < 1e-5


def test_conjugate_by_identity(A):
    C = al.conjugate(A, al.ContactDiffeo.identity(A.manifold))
    np.testing.assert_allclose(C.trajectories, A.trajectories, atol=1e-12)
    np.testing.assert_allclose(C.conformal, A.conformal, atol=1e-12)


def test_conjugated_reeb_hamiltonian(R, A):
    phi = al.ContactDiffeo.from_system(A, 1.0)
    K = al.ConjugateHamiltonian(R, phi)
    X = np.array([[0.3, 0.4, 1.45], [2.0, 1.0, 1.42]])
    np.testing.assert_allclose(K.values(0.5, X), np.exp(-phi.factor(X)), rtol=1e-10)


def test_strictly_contact_conjugation_keeps_basic(S3):
    # phi = time-0.3 map of the Reeb flow (g = 0); Re(z1 conj(z2)) is basic and smooth on S^3
    A = system(S3, "0.1*sin(eta)*cos(eta)*cos(xi1 - xi2) + 0.1",
               seeds=[[0.5, 0.2, 0.8], [1.0, 3.0, 0.7]])
    phi = al.ContactDiffeo.from_flow(IntegratedFlow(parse_hamiltonian("1", S3), 1e-3), 0.3)
    C = al.conjugate(A, phi)
    assert np.max(np.abs(C.conformal)) < 1e-6


def test_change_of_form(A, S3):
    zero = parse_hamiltonian("0", S3)
    B = al.change_of_form(A, zero)
    np.testing.assert_array_equal(B.conformal, A.conformal)
    c = parse_hamiltonian("0.7", S3)
    C = al.change_of_form(A, c)
    X = np.array([[0.3, 0.4, 1.45]])
    assert C.hamiltonian.values(0.5, X)[0] == pytest.approx(np.exp(0.7) * A.hamiltonian.values(0.5, X)[0])
    np.testing.assert_allclose(C.conformal, A.conformal, atol=1e-14)


def test_change_of_form_round_trip(A, S3):
    f = parse_hamiltonian("0.2*sin(xi1)*cos(eta)", S3)
    back = al.change_of_form(al.change_of_form(A, f), parse_hamiltonian("-0.2*sin(xi1)*cos(eta)", S3))
    X = np.array([[0.3, 0.4, 1.45], [4.0, 1.0, 1.3]])
    np.testing.assert_allclose(back.hamiltonian.values(0.3, X), A.hamiltonian.values(0.3, X), atol=1e-10)
    np.testing.assert_allclose(back.conformal, A.conformal, atol=1e-10)


def test_reparameterize_identity(A):
    B = al.reparameterize(A, al.Reparameterization.identity())
    np.testing.assert_allclose(B.trajectories, A.trajectories, atol=1e-10)


def test_reparameterize_linear(R3):
    A = system(R3, "sin(3*t)*x1 + y1", seeds=[[0.1, 0.2, 0.3]])
    s = 0.6
    B = al.reparameterize(A, al.Reparameterization.linear(s))
    X = np.array([[0.4, -0.2, 0.1]])
    for t in TIMES:
        assert B.hamiltonian.values(t, X)[0] == pytest.approx(s * A.hamiltonian.values(s * t, X)[0])
    Y, _ = A.flow.forward(s, A.seeds)
    np.testing.assert_allclose(B.final, Y, atol=1e-10)


def test_reparameterize_routes_agree(R3):
    A = system(R3, "0.5*x1 + y1*z", seeds=[[0.1, 0.2, 0.3]])
    z = al.Reparameterization.from_expression("t^2")
    a, b = al.reparameterize(A, z), al.reparameterize(A, z, "hamiltonian", dt=1e-3)
    assert np.max(R3.distance(a.trajectories, b.trajectories)) < 1e-8


def test_reparameterize_cantor_is_basic(R):
    B = al.reparameterize(R, al.Reparameterization.cantor(3))
    assert np.max(np.abs(B.conformal)) < 1e-10


def test_non_monotone_zeta_rejected(R3):
    A = system(R3, "x1", seeds=[[0.0, 0.0, 0.0]])
    with pytest.raises(NotMonotone):
        al.reparameterize(A, al.Reparameterization.from_expression("sin(6*t)"), "hamiltonian")


def test_compose_rejects_mismatch(A, R3):
    B = system(R3, "1", seeds=[[0.0, 0.0, 0.0]])
    with pytest.raises(ManifoldMismatch):
        al.compose(A, B)
    with pytest.raises(DomainError):
        al.compose(A, system(A.manifold, "1", t_samples=4))


@settings(max_examples=8)
@given(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4), st.floats(0.0, 6.0))
def test_compose_routes_agree_on_darboux(a, b, p):
    M = darboux()
    X = [[0.1, -0.2, 0.3]]
    A = system(M, f"{a!r}*sin(x1 + {p!r}) + 0.2*y1", seeds=X, dt=1e-2, t_samples=4)
    B = system(M, f"{b!r}*z*y1 + 0.1", seeds=X, dt=1e-2, t_samples=4)
    c1, c2 = al.compose(A, B), al.compose(A, B, "hamiltonian", dt=1e-2)
    assert np.max(M.distance(c1.trajectories, c2.trajectories)) < 1e-5
    np.testing.assert_allclose(c1.conformal, c2.conformal, atol=1e-5)
