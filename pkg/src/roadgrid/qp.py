"""Dense convex-QP solver with multipliers.

Solves

    min  1/2 x'Px + c'x
    s.t. A x  = b        (multipliers y)
         G x <= h        (multipliers z >= 0)

with a Mehrotra predictor-corrector primal-dual interior point method.
Problem sizes here are small (worst case a few hundred variables), so the
Newton systems are factored densely. The Lagrangian convention is

    L = 1/2 x'Px + c'x + y'(Ax - b) + z'(Gx - h),

hence dV/db = -y for the optimal value V of a perturbed right-hand side.

A phase-1 elastic LP (`feasibility_certificate`) backs infeasibility
detection: it returns the minimal total constraint violation together with
the LP duals, which act as a Farkas-style certificate when the violation is
positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import NumericalBreakdown


@dataclass
class QPResult:
    x: np.ndarray
    y: np.ndarray            # equality multipliers
    z: np.ndarray            # inequality multipliers, >= 0
    slack: np.ndarray        # h - Gx at the solution
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    duality_gap: float
    converged: bool


def _as_2d(m, ncols):
    if m is None or (hasattr(m, "size") and m.size == 0):
        return np.zeros((0, ncols))
    m = np.asarray(m, dtype=float)
    return m.reshape(-1, ncols)


def solve_qp(P, c, A=None, b=None, G=None, h=None, tol=1e-9, max_iter=60) -> QPResult:
    """Solve the QP; raises NumericalBreakdown if the iteration stalls."""
    c = np.asarray(c, dtype=float)
    n = c.size
    P = np.zeros((n, n)) if P is None else np.asarray(P, dtype=float)
    if np.any(np.diag(P) < -1e-12):
        raise ValueError("quadratic diagonal must be nonnegative for a convex QP")
    A = _as_2d(A, n)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    G = _as_2d(G, n)
    h = np.zeros(G.shape[0]) if h is None else np.asarray(h, dtype=float)
    me, mi = A.shape[0], G.shape[0]

    if mi == 0 and me == 0:
        x = np.linalg.lstsq(P, -c, rcond=None)[0]
        obj = 0.5 * x @ P @ x + c @ x
        return QPResult(x, np.zeros(0), np.zeros(0), np.zeros(0), obj, 0, 0.0, 0.0, 0.0, True)

    # infeasible start: least-squares on the equalities, unit slacks elsewhere
    x = np.linalg.lstsq(A, b, rcond=None)[0] if me else np.zeros(n)
    s = np.maximum(np.abs(h - G @ x), 1.0) if mi else np.zeros(0)
    z = np.ones(mi)
    y = np.zeros(me)

    scale_d = 1.0 + np.linalg.norm(c, np.inf)
    scale_p = 1.0 + max(np.linalg.norm(b, np.inf) if me else 0.0,
                        np.linalg.norm(h, np.inf) if mi else 0.0)

    def residuals():
        rd = P @ x + c + (A.T @ y if me else 0) + (G.T @ z if mi else 0)
        rp = A @ x - b if me else np.zeros(0)
        rg = G @ x + s - h if mi else np.zeros(0)
        return rd, rp, rg

    delta = 1e-11
    it = 0
    for it in range(1, max_iter + 1):
        rd, rp, rg = residuals()
        if not (np.all(np.isfinite(rd)) and np.all(np.isfinite(x))):
            raise NumericalBreakdown("iterates diverged (likely infeasible problem)")
        mu = (s @ z) / mi if mi else 0.0
        pr = max(np.linalg.norm(rp, np.inf) if me else 0.0,
                 np.linalg.norm(rg, np.inf) if mi else 0.0)
        dr = np.linalg.norm(rd, np.inf)
        if pr / scale_p <= tol and dr / scale_d <= tol and mu <= tol * scale_d:
            obj = 0.5 * x @ P @ x + c @ x
            return QPResult(x, y, z, (h - G @ x) if mi else np.zeros(0),
                            obj, it - 1, pr, dr, mu * mi, True)

        w = z / s if mi else np.zeros(0)
        kkt_dim = n + me
        reg = delta
        for attempt in range(6):
            kkt = np.zeros((kkt_dim, kkt_dim))
            kkt[:n, :n] = P + (G.T * w) @ G if mi else P
            kkt[:n, :n] += reg * np.eye(n)
            if me:
                kkt[:n, n:] = A.T
                kkt[n:, :n] = A
                kkt[n:, n:] = -reg * np.eye(me)
            try:
                lu = scipy.linalg.lu_factor(kkt)
                break
            except (scipy.linalg.LinAlgError, ValueError):
                reg *= 100.0
        else:
            raise NumericalBreakdown("KKT factorization failed")

        def newton(rc):
            rhs = np.empty(kkt_dim)
            extra = G.T @ ((z * rg - rc) / s) if mi else 0.0
            rhs[:n] = -rd - extra
            if me:
                rhs[n:] = -rp
            if not np.all(np.isfinite(rhs)):
                raise NumericalBreakdown("iterates diverged (likely infeasible problem)")
            sol = scipy.linalg.lu_solve(lu, rhs)
            dx = sol[:n]
            dy = sol[n:] if me else np.zeros(0)
            ds = -rg - G @ dx if mi else np.zeros(0)
            dz = (-rc - z * ds) / s if mi else np.zeros(0)
            return dx, dy, ds, dz

        def step_len(v, dv):
            neg = dv < 0
            if not np.any(neg):
                return 1.0
            return min(1.0, float(np.min(-v[neg] / dv[neg])))

        # predictor
        rc_aff = s * z
        dxa, dya, dsa, dza = newton(rc_aff)
        if mi:
            ap = step_len(s, dsa)
            ad = step_len(z, dza)
            mu_aff = ((s + ap * dsa) @ (z + ad * dza)) / mi
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            rc = s * z + dsa * dza - sigma * mu
            dx, dy, ds, dz = newton(rc)
            ap = 0.99 * step_len(s, ds)
            ad = 0.99 * step_len(z, dz)
        else:
            dx, dy, ds, dz = dxa, dya, dsa, dza
            ap = ad = 1.0

        if not np.all(np.isfinite(dx)) or (me and not np.all(np.isfinite(dy))):
            raise NumericalBreakdown("non-finite Newton step")
        x = x + ap * dx
        y = y + ad * dy
        if mi:
            s = s + ap * ds
            z = z + ad * dz

    rd, rp, rg = residuals()
    mu = (s @ z) / mi if mi else 0.0
    raise NumericalBreakdown(
        f"interior point method did not converge in {max_iter} iterations "
        f"(primal {max(np.linalg.norm(rp, np.inf) if me else 0, np.linalg.norm(rg, np.inf) if mi else 0):.2e}, "
        f"dual {np.linalg.norm(rd, np.inf):.2e}, mu {mu:.2e})")


@dataclass
class FeasibilityCertificate:
    violation: float                 # minimal total elastic violation
    equality_duals: np.ndarray
    inequality_duals: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.violation <= 1e-7


def feasibility_certificate(A, b, G, h, n=None) -> FeasibilityCertificate:
    """Phase-1 elastic LP: min sum of constraint violations.

    A strictly positive optimum certifies infeasibility; the LP duals are the
    Farkas certificate (a separating combination of the constraints).
    """
    if n is None:
        n = (A.shape[1] if A is not None and A.size else G.shape[1])
    A = _as_2d(A, n)
    G = _as_2d(G, n)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    h = np.zeros(G.shape[0]) if h is None else np.asarray(h, dtype=float)
    me, mi = A.shape[0], G.shape[0]
    # variables: [x, e+, e-, t] with A x + e+ - e- = b, G x - t <= h, e,t >= 0
    nv = n + 2 * me + mi
    cost = np.concatenate([np.zeros(n), np.ones(2 * me + mi)])
    A_eq = np.hstack([A, np.eye(me), -np.eye(me), np.zeros((me, mi))]) if me else None
    G_ub = np.hstack([G, np.zeros((mi, 2 * me)), -np.eye(mi)]) if mi else None
    bounds = [(None, None)] * n + [(0, None)] * (2 * me + mi)
    res = scipy.optimize.linprog(
        cost, A_ub=G_ub, b_ub=h if mi else None, A_eq=A_eq, b_eq=b if me else None,
        bounds=bounds, method="highs")
    if not res.success:
        raise NumericalBreakdown(f"phase-1 LP failed: {res.message}")
    eq_duals = np.asarray(res.eqlin.marginals) if me else np.zeros(0)
    in_duals = np.asarray(res.ineqlin.marginals) if mi else np.zeros(0)
    return FeasibilityCertificate(float(res.fun), eq_duals, in_duals)
