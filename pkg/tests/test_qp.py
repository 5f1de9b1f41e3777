import numpy as np
import pytest

from roadgrid.errors import NumericalBreakdown
from roadgrid.qp import FeasibilityCertificate, feasibility_certificate, solve_qp


def test_box_qp_with_multipliers():
    # min x^2 s.t. x >= 3  ->  x = 3, multiplier 6 on the active bound
    res = solve_qp(np.array([[2.0]]), np.zeros(1),
                   G=np.array([[-1.0]]), h=np.array([-3.0]))
    assert res.converged
    assert res.x[0] == pytest.approx(3.0, abs=1e-8)
    assert res.z[0] == pytest.approx(6.0, abs=1e-6)


def test_equality_qp_dual_sign():
    # min 1/2 x'x s.t. x1 + x2 = 4 -> x = (2, 2); dV/db = -y so y = -2
    res = solve_qp(np.eye(2), np.zeros(2), A=np.array([[1.0, 1.0]]), b=np.array([4.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, [2.0, 2.0], atol=1e-8)
    assert res.y[0] == pytest.approx(-2.0, abs=1e-7)
    h = 1e-5
    res2 = solve_qp(np.eye(2), np.zeros(2), A=np.array([[1.0, 1.0]]), b=np.array([4.0 + h]))
    assert (res2.objective - res.objective) / h == pytest.approx(-res.y[0], rel=1e-3)


def test_unconstrained_path():
    res = solve_qp(np.diag([2.0, 4.0]), np.array([-2.0, -8.0]))
    np.testing.assert_allclose(res.x, [1.0, 2.0], atol=1e-9)


def test_rejects_indefinite_diagonal():
    with pytest.raises(ValueError):
        solve_qp(np.array([[-1.0]]), np.zeros(1), G=np.array([[1.0]]), h=np.array([1.0]))


def test_complementary_slackness_and_feasibility():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n, mi = 6, 8
        m = rng.normal(size=(n, n))
        P = m @ m.T + 0.5 * np.eye(n)
        c = rng.normal(size=n)
        G = rng.normal(size=(mi, n))
        x0 = rng.normal(size=n)
        h = G @ x0 + rng.uniform(0.1, 1.0, mi)  # x0 strictly feasible
        A = rng.normal(size=(2, n))
        b = A @ x0
        res = solve_qp(P, c, A=A, b=b, G=G, h=h, tol=1e-10)
        assert res.converged
        assert np.abs(A @ res.x - b).max() <= 1e-7
        slack = h - G @ res.x
        assert slack.min() >= -1e-8
        assert (res.z >= -1e-10).all()
        assert np.abs(res.z * slack).max() <= 1e-6 * (1 + abs(res.objective))
        grad = P @ res.x + c + A.T @ res.y + G.T @ res.z
        assert np.abs(grad).max() <= 1e-6 * (1 + np.abs(c).max())


def test_matches_conic_reference_on_random_instances():
    import cvxpy as cp
    rng = np.random.default_rng(11)
    for k in range(8):
        n, mi, me = 5, 7, 2
        m = rng.normal(size=(n, n))
        P = m @ m.T + np.eye(n)
        c = rng.normal(size=n)
        G = rng.normal(size=(mi, n))
        x0 = rng.normal(size=n)
        h = G @ x0 + rng.uniform(0.05, 2.0, mi)
        A = rng.normal(size=(me, n))
        b = A @ x0
        mine = solve_qp(P, c, A=A, b=b, G=G, h=h, tol=1e-10)
        x = cp.Variable(n)
        prob = cp.Problem(cp.Minimize(0.5 * cp.quad_form(x, P) + c @ x),
                          [A @ x == b, G @ x <= h])
        prob.solve(solver="CLARABEL")
        assert mine.objective == pytest.approx(prob.value, rel=1e-6, abs=1e-6)
        np.testing.assert_allclose(mine.x, x.value, atol=1e-5)


def test_infeasible_certificate():
    # x >= 1 and x <= 0 cannot hold
    G = np.array([[-1.0], [1.0]])
    h = np.array([-1.0, 0.0])
    cert = feasibility_certificate(None, None, G, h, n=1)
    assert isinstance(cert, FeasibilityCertificate)
    assert not cert.feasible
    assert cert.violation == pytest.approx(1.0, abs=1e-6)


def test_feasible_certificate():
    cert = feasibility_certificate(np.array([[1.0, 1.0]]), np.array([2.0]),
                                   np.array([[1.0, 0.0]]), np.array([5.0]))
    assert cert.feasible


def test_breakdown_raises_on_infeasible():
    with pytest.raises(NumericalBreakdown):
        solve_qp(np.eye(1), np.zeros(1), G=np.array([[-1.0], [1.0]]),
                 h=np.array([-1.0, 0.0]), max_iter=30)
