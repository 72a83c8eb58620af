from __future__ import annotations

import json

import numpy as np
import pytest

from ecskit import chartcalc as C
from ecskit import d2family as D
from ecskit.d1family import InvalidDataError
from ecskit.poly2 import Poly2

PTS = np.array([[0.3, 0.4], [-0.2, 0.1], [0.05, -0.35]])


def fd_ricci(conn, x, h=1e-5):
    """Oracle: Ricci from central differences of the evaluated Gamma."""
    x = np.asarray(x, float)
    G = conn(x[None])[0]
    dG = np.empty((2, 2, 2, 2))
    for m in range(2):
        e = np.zeros(2)
        e[m] = h
        dG[..., m] = (conn((x + e)[None])[0] - conn((x - e)[None])[0]) / (2 * h)
    rho = np.zeros((2, 2))
    for l in range(2):
        for j in range(2):
            for i in range(2):
                rho[l, j] += dG[i, j, l, i] - dG[i, i, l, j]
                for m in range(2):
                    rho[l, j] += G[i, i, m] * G[m, j, l] - G[i, j, m] * G[m, i, l]
    return rho


def test_flat_connection_has_zero_ricci():
    assert np.abs(D.ricci_of_connection(D.SurfaceConnection.flat(), PTS)).max() == 0


def test_nonsymmetric_ricci_fixture():
    conn = D.non_projectively_flat_connection()
    rho = D.ricci_of_connection(conn, PTS)
    np.testing.assert_allclose(rho[:, 0, 1], -1.0)
    np.testing.assert_allclose(rho[:, 1, 0], 0.0)
    for x, r in zip(PTS, rho):
        np.testing.assert_allclose(r, fd_ricci(conn, x), atol=1e-8)


def test_ricci_matches_difference_oracle_on_searched_connection(nonflat4):
    for x, r in zip(PTS, D.ricci_of_connection(nonflat4.conn, PTS)):
        np.testing.assert_allclose(r, fd_ricci(nonflat4.conn, x), atol=1e-8)


def test_torsion_rejected():
    G = [[[Poly2.zero()] * 2 for _ in range(2)] for _ in range(2)]
    G[0][0][1] = Poly2.x()
    with pytest.raises(ValueError, match="torsion"):
        D.SurfaceConnection(G)


def test_projective_flatness_fixtures(nonflat4):
    assert D.projective_flatness_residual(D.SurfaceConnection.flat()) == 0
    assert D.projective_flatness_residual(D.non_projectively_flat_connection()) > 1e-3
    assert D.projective_flatness_residual(nonflat4.conn) < 1e-9


def test_projective_change_of_flat_is_projectively_flat():
    pi = [Poly2([[0.1, 0.3], [0.2, 0.0], [0.5, 0.0]]), Poly2([[0.0, -0.4, 0.2], [0.3, 0.0, 0.0]])]
    conn = D.SurfaceConnection.projective_change(D.SurfaceConnection.flat(), pi)
    assert D.ricci_parallel_residual(conn) > 1e-3
    assert D.projective_flatness_residual(conn) < 1e-12


def test_area_parallel_residual(nonflat4):
    assert D.area_parallel_residual(D.SurfaceConnection.flat(), D.AreaForm()) == 0
    assert D.area_parallel_residual(D.non_projectively_flat_connection(), D.AreaForm()) > 1e-9
    assert D.area_parallel_residual(nonflat4.conn, nonflat4.zeta) < 1e-9


def test_ricci_symmetric_when_zeta_parallel(nonflat4):
    assert D.area_parallel_residual(nonflat4.conn, nonflat4.zeta) < 1e-9
    assert D.ricci_symmetry_residual(nonflat4.conn) < 1e-9


@pytest.mark.parametrize("eps", [1, -1])
def test_phi_equation_flat(eps):
    d = D.flat_fixture(epsilon=eps)
    assert D.phi_residual(d) < 1e-12


def test_phi_equation_nonflat(nonflat4):
    assert D.phi_residual(nonflat4) < 1e-9


def test_tau_examples(nonflat4):
    zeta = D.AreaForm()
    zero = [[Poly2.zero()] * 2] * 2
    assert np.abs(D.tau_from_phi(zeta, zero, PTS)).max() == 0
    phi = [[Poly2.const(1.0), Poly2.zero()], [Poly2.zero(), Poly2.zero()]]
    tau = D.tau_from_phi(zeta, phi, PTS)
    np.testing.assert_array_equal(tau[:, 1, 1], 1.0)
    assert np.abs(tau[:, [0, 0, 1], [0, 1, 0]]).max() == 0
    # independent contraction with explicit loops at one point
    x = PTS[0]
    z = float(nonflat4.zeta(x[None])[0])
    Z = np.array([[0.0, z], [-z, 0.0]])
    P = np.array([[nonflat4.phi[a][b](*x) for b in range(2)] for a in range(2)])
    oracle = np.zeros((2, 2))
    for j in range(2):
        for k in range(2):
            for l in range(2):
                for m in range(2):
                    oracle[j, k] += Z[j, l] * Z[k, m] * P[l, m]
    np.testing.assert_allclose(D.tau_from_phi(nonflat4.zeta, nonflat4.phi, x[None])[0], oracle, rtol=1e-13)


def test_riemann_extension():
    flat = D.riemann_extension(D.SurfaceConnection.flat())
    g = flat(np.array([0.1, 0.2, 0.3, 0.4]))
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[2, 0] = expected[1, 3] = expected[3, 1] = 1
    np.testing.assert_array_equal(g, expected)
    assert flat.signature == (2, 2)


def test_riemann_extension_invariant_description(nonflat4):
    conn = nonflat4.conn
    h = D.riemann_extension(conn)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.uniform(-0.3, 0.3, 2)
        p = rng.normal(size=2)
        g = h(np.r_[x, p])
        assert np.abs(g[2:, 2:]).max() == 0  # verticals null and orthogonal
        xi, w = rng.normal(size=2), rng.normal(size=4)
        assert np.r_[0, 0, xi] @ g @ w == pytest.approx(xi @ w[:2], abs=1e-14)
        u1, u2 = D.horizontal_lift(conn, x, p, rng.normal(size=2)), D.horizontal_lift(conn, x, p, rng.normal(size=2))
        assert abs(u1 @ g @ u2) < 1e-13
        assert abs(u1 @ g @ u1) < 1e-13


def test_quadruple_is_h_minus_two_tau(nonflat4):
    F = D.build_d2_metric(nonflat4)
    h = D.riemann_extension(nonflat4.conn)
    X = np.array([[0.1, -0.2, 0.5, 0.3], [-0.3, 0.2, -0.4, 0.9]])
    tau = D.tau_from_phi(nonflat4.zeta, nonflat4.phi, X)
    diff = F.metric(X) - h.metric(X)
    np.testing.assert_allclose(diff[:, :2, :2], -2 * tau, atol=1e-13)
    assert np.abs(diff[:, 2:, :]).max() == 0


def test_theta_rho_term():
    d = D.nonflat_fixture(6)
    F = D.build_d2_metric(d)
    X = np.array([[0.1, -0.2, 0.5, 0.3, 0.7, -0.4]])
    theta = 0.7**2 - 0.4**2  # gram diag(1, -1)
    rho = D.ricci_of_connection(d.conn, X)
    base = F.metric(np.c_[X[:, :4], np.zeros((1, 2))])
    np.testing.assert_allclose(F.metric(X)[0, :2, :2] - base[0, :2, :2], -theta * rho[0], atol=1e-13)
    assert d.signature == (3, 3)


def test_jet_matches_differencing(nonflat4):
    d = D.nonflat_fixture(5)
    F = D.build_d2_metric(d)
    X = C.random_grid(np.zeros(5), 0.3, 3, seed=1)
    g, dg, ddg = F.jet(X)
    g2, dg2, ddg2 = C._fd_jet(F, X, np.full(5, 1e-4), True)
    assert np.abs(dg - dg2).max() < 1e-7
    assert np.abs(ddg - ddg2).max() < 1e-4


def test_flat_fixture_locally_symmetric():
    d = D.flat_fixture()
    prof = C.ToleranceProfile(D.default_grid(d, per_axis=3))
    rep = D.run_suite(d, prof)
    assert rep["passed"], rep
    assert rep["classification"] == "locally symmetric"
    assert D.local_symmetry_dichotomy(d, prof) == "symmetric"


@pytest.mark.parametrize("n", [4, 5, 6])
def test_nonflat_fixture_is_ecs(n):
    d = D.nonflat_fixture(n)
    prof = C.ToleranceProfile(D.default_grid(d, per_axis=2))
    rep = D.run_suite(d, prof)
    assert rep["passed"], rep
    assert rep["classification"] == "ECS, d=2"
    assert rep["max_nabla_riem"] > 1e-3


def test_search_reaches_tolerance():
    conn, zeta, res = D.search_nonflat_connection(seed=2)
    assert np.abs(res.fun).max() < 1e-9
    assert D.projective_flatness_residual(conn) < 1e-9
    assert D.area_parallel_residual(conn, zeta) < 1e-9
    assert D.ricci_parallel_residual(conn) > 1e-3


def test_missing_phi_reported():
    d = D.flat_fixture()
    d.phi = None
    assert "phi is missing" in D.validate(d)
    with pytest.raises(InvalidDataError):
        D.build_d2_metric(d)


def test_nonsymmetric_ricci_flagged_unsupported():
    conn = D.non_projectively_flat_connection()
    d = D.D2Data(conn, D.AreaForm(), 4, 1, phi=[[Poly2.zero()] * 2] * 2)
    assert any(p.startswith("unsupported") for p in D.validate(d))


def test_bad_epsilon_and_dimension():
    d = D.flat_fixture()
    d.epsilon = 0
    assert any("epsilon" in p for p in D.validate(d))
    d = D.flat_fixture()
    d.n = 3
    assert any("at least 4" in p for p in D.validate(d))


def test_serialization_round_trip(nonflat4):
    text = json.dumps(nonflat4.to_dict())
    back = D.D2Data.from_dict(json.loads(text))
    X = np.array([[0.1, -0.2, 0.5, 0.3]])
    assert np.array_equal(D.build_d2_metric(back)(X), D.build_d2_metric(nonflat4)(X))


def test_chart_enforced(nonflat4):
    with pytest.raises(C.ChartDomainError):
        nonflat4.conn(np.array([[0.9, 0.0]]))
