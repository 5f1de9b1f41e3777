import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import triangle_road
from roadgrid.errors import UnreachableOD, ValidationError
from roadgrid.network import RoadLink, TransportNetwork, UtilityCoefficients
from roadgrid.traffic import (PenaltyTerms, TrafficProblem, decompose_paths, link_time,
                              link_time_integral, logit_split, od_travel_times,
                              shortest_times, solve)

GOLDEN_ORACLE_TOL = 1e-4


def test_link_time_values():
    lk = RoadLink(1, 1, 2, free_flow_time=1.0, capacity=10.0)
    assert link_time(lk, 0.0) == pytest.approx(1.0)
    assert link_time(lk, 10.0) == pytest.approx(1.15)
    lk2 = RoadLink(2, 1, 2, free_flow_time=2.0, capacity=10.0)
    assert link_time(lk2, 20.0) == pytest.approx(6.8)
    with pytest.raises(ValueError):
        link_time(lk, -1.0)


def test_link_time_is_increasing():
    lk = RoadLink(1, 1, 2, 1.0, 7.0)
    v = np.linspace(0, 40, 100)
    t = [link_time(lk, x) for x in v]
    assert all(b > a for a, b in zip(t, t[1:]))


def test_link_time_integral_values():
    lk = RoadLink(1, 1, 2, 1.0, 10.0)
    assert link_time_integral(lk, 0.0) == pytest.approx(0.0)
    assert link_time_integral(lk, 10.0) == pytest.approx(10.3)
    with pytest.raises(ValueError):
        link_time_integral(lk, -2.0)


@given(st.floats(0.1, 50.0))
def test_integral_derivative_matches_time(v):
    lk = RoadLink(1, 1, 2, 1.3, 8.0, 0.15, 4.0)
    h = 1e-5 * max(v, 1.0)
    fd = (link_time_integral(lk, v + h) - link_time_integral(lk, v - h)) / (2 * h)
    assert fd == pytest.approx(link_time(lk, v), rel=1e-8)


def test_shortest_times_triangle():
    net = triangle_road()
    tt, paths = shortest_times(net, {1: 1.0, 2: 1.0, 3: 0.5, 4: 0.5})
    assert tt[(1, 2)] == pytest.approx(1.0)
    assert tt[(1, 3)] == pytest.approx(1.0)
    assert paths[(1, 2)] == (1,)
    # make the detour cheaper than the direct link
    tt2, paths2 = shortest_times(net, {1: 2.0, 2: 1.0, 3: 0.5, 4: 0.5})
    assert tt2[(1, 2)] == pytest.approx(1.5)
    assert paths2[(1, 2)] == (2, 3)


def test_shortest_times_single_link():
    net = TransportNetwork(
        nodes=(1, 2), links=(RoadLink(1, 1, 2, 1.7, 5.0),),
        ev_origins={1: 3.0}, charging_destinations={2: 0.0},
        conventional_od={}, charging_energy={(1, 2): 1.0},
        utility=UtilityCoefficients(1.0, 1.0))
    tt, paths = shortest_times(net, {1: 1.7})
    assert tt[(1, 2)] == pytest.approx(1.7)


def test_shortest_times_unreachable():
    net = TransportNetwork(
        nodes=(1, 2, 3), links=(RoadLink(1, 1, 2, 1.0, 5.0),),
        ev_origins={1: 3.0}, charging_destinations={2: 0.0, 3: 0.0},
        conventional_od={}, charging_energy={(1, 2): 1.0, (1, 3): 1.0},
        utility=UtilityCoefficients(1.0, 1.0))
    with pytest.raises(UnreachableOD):
        shortest_times(net, {1: 1.0})


def test_logit_split_examples():
    assert np.allclose(logit_split(np.array([2.0, 2.0]), 50.0), [25.0, 25.0])
    split = logit_split(np.array([0.0, math.log(3.0)]), 40.0)
    assert np.allclose(split, [30.0, 10.0])
    assert np.allclose(logit_split(np.array([5.0]), 7.0), [7.0])
    d = logit_split({"a": 1.0, "b": 1.0 + math.log(3.0)}, 40.0)
    assert d["a"] == pytest.approx(30.0)


def test_logit_split_guards():
    with pytest.raises(ValueError):
        logit_split(np.array([]), 1.0)
    with pytest.raises(ValueError):
        logit_split(np.array([1.0]), -1.0)


def test_logit_split_overflow_safety():
    split = logit_split(np.array([1e6, 1e6 + 1.0]), 10.0)
    assert np.isfinite(split).all()
    assert split.sum() == pytest.approx(10.0)


@given(st.lists(st.floats(-30, 30), min_size=1, max_size=6), st.floats(0, 1e4))
def test_logit_split_sums_to_total(costs, total):
    split = logit_split(np.array(costs), total)
    assert split.sum() == pytest.approx(total, abs=1e-12 * max(total, 1.0))
    assert (split >= 0).all()


def _fixed_price_problem(prices, **kw):
    return TrafficProblem(network=triangle_road(**kw), fixed_prices=np.asarray(prices, float))


def test_problem_mode_exclusivity():
    net = triangle_road()
    with pytest.raises(ValidationError):
        TrafficProblem(network=net)
    with pytest.raises(ValidationError):
        TrafficProblem(network=net, fixed_prices=np.zeros(2),
                       penalty=PenaltyTerms(np.zeros(2), np.zeros(2), 1.0))


def test_two_parallel_identical_links_split_equally():
    # single od, fixed destination choice (one destination reachable two ways)
    links = (RoadLink(1, 1, 2, 1.0, 10.0), RoadLink(2, 1, 2, 1.0, 10.0))
    net = TransportNetwork(
        nodes=(1, 2), links=links, ev_origins={1: 30.0},
        charging_destinations={2: 0.0}, conventional_od={},
        charging_energy={(1, 2): 0.0}, utility=UtilityCoefficients(1.0, 0.1))
    sol = solve(TrafficProblem(network=net, fixed_prices=np.zeros(1)), tol=1e-9)
    assert sol.converged
    assert sol.link_flows[0] == pytest.approx(sol.link_flows[1], rel=1e-4)
    assert sol.link_flows.sum() == pytest.approx(30.0, abs=1e-9)


def test_symmetric_prices_split_demand_equally():
    sol = solve(_fixed_price_problem([26.0, 26.0]), tol=1e-9)
    assert sol.converged
    assert sol.od_flow(1, 2) == pytest.approx(25.0, abs=1e-6)
    assert sol.od_flow(1, 3) == pytest.approx(25.0, abs=1e-6)


def brute_force_cda(problem, refine=120):
    """Nested golden-section minimizer over (q2, detour flows); exact path enumeration."""
    from roadgrid.traffic import _Graph, _Objective
    net = problem.network
    g = _Graph(net)
    obj = _Objective(problem, "money")
    q_tot = net.ev_origins[1]

    def value(q2, a, b):
        q3 = q_tot - q2
        v = np.array([(q2 - a) + b, a + (q3 - b), a, b])
        return obj.value(g, v, np.array([[q2, q3]]))

    def golden(f, lo, hi, iters):
        gr = (math.sqrt(5) - 1) / 2
        x1, x2 = lo + (1 - gr) * (hi - lo), lo + gr * (hi - lo)
        f1, f2 = f(x1), f(x2)
        for _ in range(iters):
            if f1 < f2:
                hi, x2, f2 = x2, x1, f1
                x1 = lo + (1 - gr) * (hi - lo)
                f1 = f(x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + gr * (hi - lo)
                f2 = f(x2)
        return (lo + hi) / 2

    def best_given_q2(q2):
        fa = lambda a: value(q2, a, golden(lambda b: value(q2, a, b), 0, q_tot - q2, 60))
        a = golden(fa, 0, q2, 60)
        b = golden(lambda bb: value(q2, a, bb), 0, q_tot - q2, 60)
        return value(q2, a, b)

    q2 = golden(best_given_q2, 1e-3, q_tot - 1e-3, refine)
    return best_given_q2(q2), q2


def test_asymmetric_prices_match_grid_oracle():
    problem = _fixed_price_problem([20.0, 32.0])
    sol = solve(problem, tol=1e-9)
    assert sol.converged
    f_star, q2_star = brute_force_cda(problem)
    assert sol.objective == pytest.approx(f_star, rel=1e-3)
    assert sol.od_flow(1, 2) == pytest.approx(q2_star, abs=5e-3 * 50)
    # destination shares follow the softmax of the equilibrium generalized costs
    net = problem.network
    b1, b2 = net.utility.beta1, net.utility.beta2
    util = np.array([
        -b1 * sol.od_time(1, 2) - b2 * 0.5 * 20.0,
        -b1 * sol.od_time(1, 3) - b2 * 0.5 * 32.0,
    ])
    share = np.exp(util - util.max())
    share = share / share.sum()
    np.testing.assert_allclose(sol.od_flows[0] / 50.0, share, atol=1e-3)


def test_penalty_mode_matches_grid_oracle():
    problem = TrafficProblem(
        network=triangle_road(),
        penalty=PenaltyTerms(lambda_hat=np.array([22.0, 27.0]),
                             supply_target=np.array([30.0, 20.0]), alpha=1.0))
    sol = solve(problem, tol=1e-9)
    assert sol.converged
    f_star, _ = brute_force_cda(problem)
    assert sol.objective == pytest.approx(f_star, rel=1e-3)


def test_feasibility_residuals(toy):
    from roadgrid.network import incidence
    problem = _fixed_price_problem([20.0, 32.0])
    sol = solve(problem, tol=1e-8)
    net = problem.network
    inc = incidence(net)
    node_pos = {n: k for k, n in enumerate(net.nodes)}
    for c_idx, (r, s, kind) in enumerate(sol.class_ods):
        demand = sol.od_flow(r, s)
        target = demand * inc.od_vector(r, s)
        resid = inc.matrix @ sol.class_flows[c_idx] - target
        assert np.abs(resid).max() <= 1e-9
    assert np.abs(sol.class_flows.sum(axis=0) - sol.link_flows).max() <= 1e-9
    assert sol.od_flows.sum() == pytest.approx(50.0, abs=1e-9)
    assert (sol.od_flows > 0).all()


def test_wardrop_used_paths_equal_time():
    problem = _fixed_price_problem([26.0, 26.0])
    sol = solve(problem, tol=1e-9)
    for (r, s) in ((1, 2), (1, 3)):
        paths = decompose_paths(sol, r, s)
        q_rs = sol.od_flow(r, s)
        times = {lk.id: link_time(lk, sol.link_flows[k])
                 for k, lk in enumerate(problem.network.links)}
        significant = [sum(times[i] for i in links) for links, flow in paths
                       if flow >= 1e-6 * q_rs]
        tt = sol.od_time(r, s)
        for pt in significant:
            assert abs(pt - tt) <= max(1e-4, 1e-6) * tt


def test_monotone_objective_trace():
    trace = []
    solve(_fixed_price_problem([20.0, 32.0]), tol=1e-10, trace=trace)
    diffs = np.diff(np.array(trace))
    assert (diffs <= 1e-8 * np.abs(np.array(trace[:-1]))).all()


def test_unit_systems_agree():
    money = solve(_fixed_price_problem([20.0, 32.0]), tol=1e-10, units="money")
    hours = solve(_fixed_price_problem([20.0, 32.0]), tol=1e-10, units="time")
    np.testing.assert_allclose(money.od_flows, hours.od_flows, rtol=1e-5)
    np.testing.assert_allclose(money.link_flows, hours.link_flows, atol=1e-3)


def test_warm_start_reproduces_solution():
    problem = _fixed_price_problem([20.0, 32.0])
    cold = solve(problem, tol=1e-9)
    warm = solve(problem, tol=1e-9, start=(cold.class_flows, cold.od_flows))
    assert warm.iterations <= 3
    assert warm.objective == pytest.approx(cold.objective, rel=1e-9)


def test_od_travel_times_uncongested_single_link():
    links = (RoadLink(1, 1, 2, 1.7, 1e9),)
    net = TransportNetwork(
        nodes=(1, 2), links=links, ev_origins={1: 5.0},
        charging_destinations={2: 0.0}, conventional_od={},
        charging_energy={(1, 2): 0.0}, utility=UtilityCoefficients(1.0, 0.1))
    sol = solve(TrafficProblem(network=net, fixed_prices=np.zeros(1)), tol=1e-9)
    assert sol.od_time(1, 2) == pytest.approx(1.7, rel=1e-9)
    assert od_travel_times(sol)[(1, 2)] == pytest.approx(1.7, rel=1e-9)


def test_two_used_paths_same_time():
    # congest the direct link so the detour carries flow too
    problem = _fixed_price_problem([20.0, 60.0], cap_12=3.0)
    sol = solve(problem, tol=1e-10)
    paths = decompose_paths(sol, 1, 2)
    flows = {links: flow for links, flow in paths}
    assert len([f for f in flows.values() if f > 1e-3]) >= 2
    times = {lk.id: link_time(lk, sol.link_flows[k])
             for k, lk in enumerate(problem.network.links)}
    p_times = [sum(times[i] for i in links) for links, flow in paths if flow > 1e-3]
    assert max(p_times) - min(p_times) <= 1e-3 * min(p_times)


def test_unreachable_od_raises_in_solve():
    net = TransportNetwork(
        nodes=(1, 2, 3), links=(RoadLink(1, 1, 2, 1.0, 5.0),),
        ev_origins={1: 3.0}, charging_destinations={2: 0.0, 3: 0.0},
        conventional_od={}, charging_energy={(1, 2): 1.0, (1, 3): 1.0},
        utility=UtilityCoefficients(1.0, 1.0))
    with pytest.raises(UnreachableOD):
        solve(TrafficProblem(network=net, fixed_prices=np.zeros(2)))


def test_max_iter_returns_tagged_nonconverged():
    sol = solve(_fixed_price_problem([20.0, 32.0]), tol=1e-14, max_iter=3)
    assert not sol.converged
    assert sol.iterations == 3
    assert np.isfinite(sol.objective)


def test_conventional_traffic_shares_network():
    net = dataclasses.replace(triangle_road(), conventional_od={(1, 2): 12.0})
    sol = solve(TrafficProblem(network=net, fixed_prices=np.array([26.0, 26.0])),
                tol=1e-9)
    assert sol.converged
    # background traffic pushes ev demand toward destination 3
    assert sol.od_flow(1, 3) > sol.od_flow(1, 2)
    total = sol.od_flows.sum() + 12.0
    assert sol.link_flows.sum() >= total - 1e-6  # all demand is routed
