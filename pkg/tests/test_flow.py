import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactdyn.errors import DomainError, ManifoldMismatch, PoleCrossing, StepExplosion
from contactdyn.flow import (IdentityFlow, identity_system, integrate_system,
                             pullback_conformal_factor, trajectories_to_csv)
from contactdyn.hamfield import parse_hamiltonian
from contactdyn.manifold import darboux, hopf

TANH_PI = 0.99627207622074994426
MINUS_LN_COSH_PI = -2.4503111742581460047


@pytest.fixture(scope="module")
def appendix():
    M = hopf()
    return integrate_system(M, parse_hamiltonian("0.5*cos(xi1)", M),
                            [[0.0, 0.0, 1.4], [1.0, 2.0, 1.45], [4.0, 0.5, 1.3]], t_samples=10)


def test_reeb_flow_half_time(S3):
    S = integrate_system(S3, parse_hamiltonian("1", S3), [[0.0, 0.0, np.pi / 4]], t_samples=2)
    np.testing.assert_allclose(S.trajectories[1, 0], [np.pi, np.pi, np.pi / 4], atol=1e-12)
    assert np.max(np.abs(S.conformal)) < 1e-14


def test_appendix_endpoint(appendix):
    assert np.sin(appendix.final[0, 0]) == pytest.approx(TANH_PI, abs=1e-10)


def test_appendix_conformal_factor(appendix):
    assert appendix.conformal[-1, 0] == pytest.approx(MINUS_LN_COSH_PI, abs=1e-9)


def test_richardson_estimate_recorded(appendix):
    assert 0.0 <= appendix.meta["richardson_error"] < 1e-8


def test_pullback_identity(S3):
    assert pullback_conformal_factor(S3, IdentityFlow(S3), 1.0, [1.0, 2.0, 0.7]) == pytest.approx(0.0, abs=1e-9)


def test_pullback_appendix(appendix):
    h = pullback_conformal_factor(appendix.manifold, appendix, 1.0, [0.0, 0.0, 1.4])
    assert h == pytest.approx(MINUS_LN_COSH_PI, abs=1e-3)


def test_pullback_reeb(S3):
    S = integrate_system(S3, parse_hamiltonian("1", S3), [[0.3, 0.4, 0.8]], t_samples=4)
    for t in (0.25, 0.5, 1.0):
        assert abs(pullback_conformal_factor(S3, S, t, [0.3, 0.4, 0.8])) < 1e-6


def test_translation_flow(R3):
    S = integrate_system(R3, parse_hamiltonian("y1", R3), [[0.0, 0.5, 0.0]], t_samples=4)
    np.testing.assert_allclose(S.final[0], [-1.0, 0.5, 0.0], atol=1e-12)
    assert np.max(np.abs(S.conformal)) == 0.0


def test_factor_of_z_field(R3):
    # X_H = (0, y, z) for H = z and R.H = 1, so h_t = t
    S = integrate_system(R3, parse_hamiltonian("z", R3), [[0.1, 0.2, 0.3]], t_samples=4)
    np.testing.assert_allclose(S.conformal[:, 0], S.times, atol=1e-12)
    np.testing.assert_allclose(S.final[0], [0.1, 0.2 * np.e, 0.3 * np.e], rtol=1e-10)


def test_flow_map_and_inverse(appendix):
    phi = appendix.flow_map(1.0)
    X = np.array([[0.5, 0.5, 1.2]])
    np.testing.assert_allclose(phi.inverse(phi(X)), X, atol=1e-10)
    np.testing.assert_allclose(phi(appendix.seeds), appendix.final)


def test_dt_limits(S3):
    H = parse_hamiltonian("1", S3)
    with pytest.raises(DomainError):
        integrate_system(S3, H, [[0, 0, 1.0]], dt=2e-2)
    with pytest.raises(DomainError):
        integrate_system(S3, H, [[0, 0, 1.0]], method="Euler")


def test_pole_crossing(S3):
    with pytest.raises(PoleCrossing):
        integrate_system(S3, parse_hamiltonian("0.5*cos(xi1)", S3), [[-np.pi / 2, 0.0, 0.01]],
                         t_samples=4)


def test_step_explosion(R3):
    with pytest.raises(StepExplosion):
        integrate_system(R3, parse_hamiltonian("exp(exp(exp(10*y1)))", R3), [[0.0, 1.0, 0.0]])


def test_manifold_mismatch(S3, R3):
    with pytest.raises(ManifoldMismatch):
        integrate_system(R3, parse_hamiltonian("1", S3), [[0, 0, 1.0]])


def test_identity_system(S3):
    S = identity_system(S3, [[1.0, 2.0, 0.5]], t_samples=3)
    assert S.trajectories.shape == (4, 1, 3)
    assert np.all(S.conformal == 0)


def test_trajectories_csv(R3):
    S = integrate_system(R3, parse_hamiltonian("y1", R3), [[0, 1, 0], [1, 0, 0]], t_samples=2)
    buf = io.StringIO()
    trajectories_to_csv(S, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "seed_id,t,x1,y1,z,h"
    assert len(lines) == 1 + 2 * 3
    row = lines[3].split(",")
    assert row[0] == "0" and float(row[1]) == 1.0 and float(row[2]) == pytest.approx(-1.0)


@settings(max_examples=15)
@given(st.floats(0, 6.28), st.floats(0, 6.28), st.floats(0.9, 1.3), st.floats(0.1, 1.0))
def test_forward_backward_round_trip(a, b, eta, t):
    M = hopf()
    S = integrate_system(M, parse_hamiltonian("0.3*sin(eta)*cos(xi1 + t) + 0.2", M), [[a, b, eta]],
                         dt=1e-2, t_samples=1, richardson=False)
    Y, h = S.flow.forward(t, np.array([[a, b, eta]]))
    Z, g = S.flow.backward(t, Y)
    assert M.distance(Z, np.array([[a, b, eta]]))[0] < 1e-9
    assert abs(h[0] + g[0]) < 1e-9


@settings(max_examples=15)
@given(st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3))
def test_autonomous_semigroup(p):
    M = darboux()
    S = integrate_system(M, parse_hamiltonian("x1*y1 + sin(z) + 0.5", M), [p], dt=1e-3,
                         t_samples=2, richardson=False)
    half, full = S.trajectories[1], S.trajectories[2]
    Y, h = S.flow.forward(0.5, half)
    np.testing.assert_allclose(Y, full, atol=1e-10)
    assert h[0] + S.conformal[1, 0] == pytest.approx(S.conformal[2, 0], abs=1e-10)


@settings(max_examples=10)
@given(st.floats(0, 6.28), st.floats(1.38, 1.5))
def test_cointegrated_factor_matches_pullback(a, eta):
    # h_t <= pi and cos(eta_t) = cos(eta_0) e^{h_t/2}, so these seeds stay off the pole
    M = hopf()
    S = integrate_system(M, parse_hamiltonian("0.5*cos(xi1)", M), [[a, 0.3, eta]], dt=1e-3,
                         t_samples=2, richardson=False)
    fd = pullback_conformal_factor(M, S, 1.0, [a, 0.3, eta])
    assert fd == pytest.approx(S.conformal[-1, 0], abs=1e-4)
