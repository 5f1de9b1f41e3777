import numpy as np
import pytest
from hypothesis import given, strategies as st

from roadgrid.errors import ValidationError
from roadgrid.scenarios import Scenario, ScenarioSet, expectation, sample_uniform


def test_sample_uniform_basic():
    s = sample_uniform([1, 2, 3], 20, 0.5, 1.5, seed=11)
    assert len(s) == 20
    for scen in s:
        assert scen.probability == pytest.approx(0.05)
        assert all(0.5 <= f <= 1.5 for f in scen.factors.values())
        assert set(scen.factors) == {1, 2, 3}


def test_sample_uniform_degenerate_interval():
    s = sample_uniform([4], 1, 1.0, 1.0, seed=0)
    assert len(s) == 1
    assert s.scenarios[0].probability == 1.0
    assert s.scenarios[0].factor(4) == 1.0


def test_sample_uniform_is_deterministic():
    a = sample_uniform([1, 2], 5, 0.5, 1.5, seed=42)
    b = sample_uniform([1, 2], 5, 0.5, 1.5, seed=42)
    for x, y in zip(a, b):
        assert x.factors == y.factors and x.probability == y.probability


def test_sample_uniform_rejects_negative_lo():
    with pytest.raises(ValueError):
        sample_uniform([1], 3, -0.1, 1.0, seed=0)
    with pytest.raises(ValueError):
        sample_uniform([1], 0, 0.5, 1.5, seed=0)
    with pytest.raises(ValueError):
        sample_uniform([1], 3, 1.0, 0.5, seed=0)


def test_sample_uniform_mean_smoke():
    n, lo, hi = 2000, 0.5, 1.5
    s = sample_uniform([1], n, lo, hi, seed=3)
    mean = np.mean([scen.factor(1) for scen in s])
    assert abs(mean - (lo + hi) / 2) <= 3 * (hi - lo) / np.sqrt(12 * n)


def test_expectation_examples():
    s = ScenarioSet((Scenario("a", {}, 0.5), Scenario("b", {}, 0.5)))
    assert expectation(s, {"a": 2.0, "b": 4.0}) == pytest.approx(3.0)
    single = ScenarioSet((Scenario("a", {}, 1.0),))
    assert expectation(single, {"a": 7.0}) == pytest.approx(7.0)
    skew = ScenarioSet((Scenario("a", {}, 0.25), Scenario("b", {}, 0.75)))
    assert expectation(skew, {"a": 0.0, "b": 4.0}) == pytest.approx(3.0)


def test_expectation_missing_scenario():
    s = ScenarioSet((Scenario("a", {}, 0.5), Scenario("b", {}, 0.5)))
    with pytest.raises(KeyError):
        expectation(s, {"a": 1.0})


def test_expectation_accepts_callable():
    s = ScenarioSet((Scenario("a", {1: 2.0}, 0.5), Scenario("b", {1: 4.0}, 0.5)))
    assert expectation(s, lambda scen: scen.factor(1)) == pytest.approx(3.0)


@given(st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(-50, 50), st.floats(-50, 50)),
                min_size=1, max_size=8),
       st.floats(-3, 3), st.floats(-3, 3))
def test_expectation_is_linear(rows, a, b):
    weights = np.array([w for w, _, _ in rows])
    probs = weights / weights.sum()
    scens = ScenarioSet(tuple(Scenario(f"s{k}", {}, float(p)) for k, p in enumerate(probs)))
    v = {f"s{k}": x for k, (_, x, _) in enumerate(rows)}
    w = {f"s{k}": y for k, (_, _, y) in enumerate(rows)}
    combo = {key: a * v[key] + b * w[key] for key in v}
    lhs = expectation(scens, combo)
    rhs = a * expectation(scens, v) + b * expectation(scens, w)
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_scenario_set_invariants():
    with pytest.raises(ValidationError):
        ScenarioSet((Scenario("a", {}, 0.4), Scenario("b", {}, 0.4)))
    with pytest.raises(ValidationError):
        ScenarioSet((Scenario("a", {}, 0.5), Scenario("a", {}, 0.5)))
    with pytest.raises(ValidationError):
        ScenarioSet((Scenario("a", {1: -0.2}, 1.0),))
    with pytest.raises(ValidationError):
        ScenarioSet((Scenario("a", {}, 0.0), Scenario("b", {}, 1.0)))
