import numpy as np
import pytest
from hypothesis import given, strategies as st

from contactdyn.errors import DomainError, PoleSingularity
from contactdyn.manifold import (ChartedManifold, Point, darboux, exterior_data_at, hopf,
                                 manifold_from_config, quadrature_grid, reeb_at)
from contactdyn.hamfield import parse_hamiltonian


def test_darboux_origin_form(R3):
    data = exterior_data_at(R3, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(data.alpha, [0.0, 0.0, 1.0])
    W = np.zeros((3, 3))
    W[0, 1], W[1, 0] = 1.0, -1.0
    np.testing.assert_allclose(data.d_alpha, W)


def test_darboux_form_at_1_3_5(R3):
    np.testing.assert_allclose(exterior_data_at(R3, [1.0, 3.0, 5.0]).alpha, [-3.0, 0.0, 1.0])


def test_hopf_form_at_quarter_pi(S3):
    a = exterior_data_at(S3, [0.3, 1.1, np.pi / 4]).alpha
    np.testing.assert_allclose(a, [1 / (4 * np.pi), 1 / (4 * np.pi), 0.0], atol=1e-15)


@pytest.mark.parametrize("x", [[0, 0, 0], [1.0, -1.5, 0.3], [-0.2, 0.7, 1.9]])
def test_darboux_reeb(R3, x):
    np.testing.assert_allclose(reeb_at(R3, x), [0, 0, 1])


def test_darboux_reeb_higher_dimension():
    M = darboux(3)
    np.testing.assert_allclose(reeb_at(M, [0.1, 0.2, 0.3, 0.4, 0.5]), [0, 0, 0, 0, 1])


@pytest.mark.parametrize("x", [[0.0, 0.0, 0.5], [2.0, 4.0, 1.2]])
def test_hopf_reeb(S3, x):
    np.testing.assert_allclose(reeb_at(S3, x), [2 * np.pi, 2 * np.pi, 0.0])


@given(st.floats(0.05, 1.52), st.floats(0, 6.28), st.floats(0, 6.28))
def test_hopf_reeb_normalization(eta, a, b):
    M = hopf()
    x = np.array([a, b, eta])
    R = M.reeb(x)
    assert abs(M.alpha(x) @ R - 1.0) < 1e-12
    np.testing.assert_allclose(M.d_alpha(x) @ R, 0.0, atol=1e-12)


def test_pole_margin(S3):
    with pytest.raises(PoleSingularity):
        exterior_data_at(S3, [0.0, 0.0, 1e-5])
    with pytest.raises(PoleSingularity):
        S3.check([[0.0, 0.0, np.pi / 2]])


def test_coordinates_must_be_finite(R3):
    with pytest.raises(DomainError):
        R3.check([[np.nan, 0.0, 0.0]])
    with pytest.raises(DomainError):
        R3.check([[0.0, 0.0]])


def test_point_wraps_angles(S3):
    p = Point([2 * np.pi + 0.5, -0.5, 1.0], S3)
    np.testing.assert_allclose(p.coords, [0.5, 2 * np.pi - 0.5, 1.0])


def test_manifold_from_config():
    assert manifold_from_config({"kind": "hopf"}) == hopf()
    M = manifold_from_config({"kind": "darboux", "n": 3, "box": 1.0})
    assert M.dim == 5 and M.box[0] == (-1.0, 1.0)
    with pytest.raises(DomainError):
        manifold_from_config({"kind": "torus"})


def test_manifold_is_hashable():
    assert len({hopf(), hopf(), darboux()}) == 2
    assert isinstance(hopf(), ChartedManifold)


def _mean(M, text, resolution):
    g = quadrature_grid(M, resolution)
    return g.mean(parse_hamiltonian(text, M).values(0.0, g.nodes))


def test_hopf_mean_of_constant(S3):
    assert _mean(S3, "1", (8, 8, 8)) == pytest.approx(1.0, abs=1e-14)


def test_hopf_mean_of_appendix_field(S3):
    assert abs(_mean(S3, "0.5*cos(xi1)", (32, 32, 16))) < 1e-12


def test_hopf_mean_of_sin_squared(S3):
    assert _mean(S3, "sin(eta)^2", (8, 8, 16)) == pytest.approx(0.5, abs=1e-8)


def test_hopf_mean_of_polynomial_is_exact(S3):
    # int_0^{pi/2} cos^4 eta * 2 sin eta cos eta d eta = 1/3
    assert _mean(S3, "cos(eta)^4", (4, 4, 8)) == pytest.approx(1 / 3, abs=1e-12)


def test_darboux_grid_mean(R3):
    g = quadrature_grid(R3, 9, box=((-1, 1),) * 3)
    assert g.weights.sum() == pytest.approx(1.0)
    # midpoint rule on x^2: exactly 1/3 - h^2/12 with h = 2/9
    value = g.mean(parse_hamiltonian("x1^2", R3).values(0.0, g.nodes))
    assert value == pytest.approx(1 / 3 - (2 / 9) ** 2 / 12, abs=1e-14)


def test_grid_resolution_floor(S3):
    from contactdyn.errors import ResolutionTooCoarse
    with pytest.raises(ResolutionTooCoarse):
        quadrature_grid(S3, 2)
    assert len(quadrature_grid(S3, 2, min_resolution=1)) == 8
