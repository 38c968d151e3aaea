import math

import numpy as np
import pytest

from tests.conftest import ordered_sampler, uniform_sampler
from vicsek_reach.dynamics import InadmissibleControl, Open, Periodic, SimConfig, SwarmState, SystemKind, random_state
from vicsek_reach.metrics import Trace, heading_span, interaction_graph, order_parameter, window_union_connected
from vicsek_reach.steering import (
    ControlPlan,
    Disordered,
    HeadingBand,
    OrderBox,
    Phase,
    RegimeViolation,
    SpanAtLeast,
    SpanBelow,
    TargetSet,
    compose,
    disorder_threshold,
    effective_eta,
    horizon,
    make_adversary,
    partition_by_ordinate,
    plan_break_connectivity,
    plan_disorder,
    plan_order,
    plan_span_at_least_pi,
    replay,
    span_threshold,
    system_i_constants,
)
from vicsek_reach.steering.base import Frame, ScriptAdversary

I, II = SystemKind.SYSTEM_I, SystemKind.SYSTEM_II


def run_many(plan, cfg, sampler, trials, adversary="random", check=None, seed=0):
    fails = 0
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        res = replay(plan, cfg, sampler(rng), make_adversary(adversary), seed=k)
        ok = res.reached if check is None else check(res)
        fails += not ok
    return fails


# -- targets and partitions ------------------------------------------------------


def test_target_sets():
    assert OrderBox(0.6).contains([0.3, -0.3])
    assert not OrderBox(0.6).contains([0.31])
    assert HeadingBand(math.pi - 0.1, 0.4).contains([-math.pi + 0.05])
    assert Disordered(0.1).contains([0.0, -math.pi])
    assert SpanAtLeast(math.pi).contains([0.0, math.pi / 2, -math.pi / 2])
    assert SpanBelow(1.0).contains([0.0, 0.5])
    for bad in (lambda: OrderBox(0), lambda: Disordered(1.0), lambda: TargetSet("nope", 0.5)):
        with pytest.raises(ValueError):
            bad()


def test_partition_examples(rng):
    p = partition_by_ordinate(np.array([1.0, 5.0]), [1, 1])
    assert list(p[0]) == [1]
    p = partition_by_ordinate(np.zeros(4), [2, 2])
    assert list(p[0]) == [0, 1] and list(p[1]) == [2, 3]
    y = rng.uniform(0, 1, 5)
    p = partition_by_ordinate(y, [2, 2, 1])
    order = np.argsort(-y, kind="stable")
    assert list(p[0]) == sorted(order[:2]) and list(p[2]) == [order[4]]
    assert min(y[p[0]]) >= max(y[p[1]]) >= max(y[p[2]])
    with pytest.raises(ValueError):
        partition_by_ordinate(y, [2, 2])


def test_frame_rotation_periodic_lattice():
    cfg = SimConfig(2, 0.01, 1.0, Periodic(5.0))
    pos = np.array([[1.0, 2.0], [4.5, 0.5]])
    assert np.allclose(Frame(0.0).ordinate(cfg, pos), pos[:, 1])
    with pytest.raises(ValueError):
        Frame(0.3).ordinate(cfg, pos)


# -- horizons ----------------------------------------------------------------------


def test_horizon_examples(open10):
    assert plan_order(II, 0.6, 0.6, open10).horizon == 10
    assert horizon(None) == 0
    d = plan_disorder(II, 0.1, 0.6, open10)
    assert d.constants["split_steps"] == 335
    assert d.constants["steer_steps"] == 5
    assert d.horizon == 340
    c = compose(plan_order(II, effective_eta(0.6), 0.6, open10), d)
    assert c.horizon == 350
    assert c.target == Disordered(0.1)
    with pytest.raises(ValueError):
        compose()


def test_plan_order_errors(open10):
    with pytest.raises(ValueError):
        plan_order(II, 0.0, 0.6, open10)
    with pytest.raises(ValueError):
        plan_order(II, 0.5, 0.0, open10)


def test_system_i_regime_flags():
    cfg8 = SimConfig(8, 0.01, 1.0)
    assert plan_order(I, 0.5, 1.3, cfg8).proven
    p = plan_order(I, 0.5, 0.6, cfg8)
    assert not p.proven and "unproven" in p.regime_note
    c = system_i_constants(8, 0.5, 1.3)
    assert c["t2"] == c["t1"] + math.ceil(math.pi / (1.3 - 2 * c["eps2"]))


def test_describe_is_json(open10):
    import json

    doc = json.loads(plan_disorder(II, 0.1, 0.6, open10).describe())
    assert doc["horizon"] == 340
    assert [p["name"] for p in doc["phases"]] == ["split", "steer"]


# -- replay semantics ------------------------------------------------------------


def test_reached_at_time_zero(open10, rng):
    st = ordered_sampler(open10, 0.2)(rng)
    res = replay(plan_order(II, 0.6, 0.6, open10), open10, st)
    assert res.first_hit == 0 and res.reached


def test_inadmissible_plan_trips(open10, rng):
    bad = ControlPlan("bad", II, 0.6, (Phase("x", 2, lambda ctx: (np.full(10, 0.1), np.full(10, 0.6))),), OrderBox(0.6))
    with pytest.raises(InadmissibleControl):
        replay(bad, open10, random_state(open10, rng))


def test_monotone_descent_system_ii(open10):
    eta, alpha = 0.6, 0.6
    plan = plan_order(II, alpha, eta, open10)
    for k in range(30):
        rng = np.random.default_rng(k)
        res = replay(plan, open10, random_state(open10, rng), make_adversary("endpoint"), seed=k)
        m = [np.abs(s.headings).max() for s in res.states]
        for a, b in zip(m, m[1:]):
            if a > alpha / 2 + eta / 2:
                assert b <= a - eta / 2 + 1e-9


# -- order -----------------------------------------------------------------------


@pytest.mark.parametrize("adv", ["endpoint", "random", "plus", "minus"])
def test_order_system_ii(open10, adv):
    assert run_many(plan_order(II, 0.6, 0.6, open10), open10, uniform_sampler(open10), 50, adv) == 0


@pytest.mark.parametrize("n, eta", [(8, 1.3), (3, 1.0), (10, 1.4), (10, 0.6)])
def test_order_system_i(n, eta):
    cfg = SimConfig(n, 0.01, 1.0)
    plan = plan_order(I, 0.4, eta, cfg)
    assert run_many(plan, cfg, uniform_sampler(cfg), 40, "endpoint") == 0


def test_order_exhaustive_tiny():
    from vicsek_reach.verify import check_robust_reachability

    cfg = SimConfig(2, 0.01, 1.0)
    plan = plan_order(II, 2.0, 2.5, cfg)
    assert plan.horizon <= 4
    rep = check_robust_reachability(plan, cfg, uniform_sampler(cfg), trials=3)
    assert rep.exhaustive and rep.failures == 0


# -- disorder --------------------------------------------------------------------


@pytest.mark.parametrize("n", [10, 11, 2, 3])
@pytest.mark.parametrize("kind", [I, II])
def test_disorder_open(n, kind):
    cfg = SimConfig(n, 0.01, 1.0)
    e = effective_eta(0.6)
    plan = compose(plan_order(kind, e, 0.6, cfg), plan_disorder(kind, 0.1, 0.6, cfg))
    assert run_many(plan, cfg, uniform_sampler(cfg), 8) == 0


def test_disorder_eps_range(open10):
    for eps in (0.0, 1.0):
        with pytest.raises(ValueError):
            plan_disorder(II, eps, 0.6, open10)


def test_separation_growth(open10):
    # during the split the ordinate gap between the groups grows by >= 2 v sin(eta/4) per step
    plan = plan_disorder(II, 0.1, 0.6, open10)
    v, rate = open10.v, 2 * open10.v * math.sin(0.6 / 4)
    T = plan.constants["split_steps"]
    for k in range(5):
        rng = np.random.default_rng(k)
        res = replay(plan, open10, ordered_sampler(open10, 0.6)(rng), make_adversary("endpoint"), seed=k)
        labels = partition_by_ordinate(res.states[0].positions[:, 1], plan.constants["sizes"]).labels
        gaps = [s.positions[labels == 0, 1].min() - s.positions[labels == 1, 1].max() for s in res.states[: T + 1]]
        assert all(b - a >= rate - 1e-12 for a, b in zip(gaps, gaps[1:]))
        assert gaps[T] > open10.r_max


def test_periodic_threshold_and_gate():
    assert disorder_threshold(0.6, 0.01, 1.0) == pytest.approx(2.0415, abs=1e-4)
    assert span_threshold(0.6, 0.01, 1.0) == pytest.approx(2.0415, abs=1e-4)
    ok = SimConfig(10, 0.01, 1.0, Periodic(5.0))
    assert plan_disorder(II, 0.1, 0.6, ok).constants["threshold"] == pytest.approx(2.0415, abs=1e-4)
    with pytest.raises(RegimeViolation):
        plan_disorder(II, 0.1, 0.6, SimConfig(10, 0.01, 1.0, Periodic(2.0)))


@pytest.mark.parametrize("n, eps", [(10, 0.1), (11, 0.1), (11, 0.05)])
@pytest.mark.parametrize("kind", [I, II])
def test_disorder_periodic(n, eps, kind):
    cfg = SimConfig(n, 0.01, 1.0, Periodic(5.0))
    plan = compose(plan_order(kind, effective_eta(0.6), 0.6, cfg), plan_disorder(kind, eps, 0.6, cfg))
    assert plan.constants["1:disorder"]["K"] >= 4
    assert run_many(plan, cfg, uniform_sampler(cfg), 3) == 0


# -- span ------------------------------------------------------------------------


@pytest.mark.parametrize("n", [3, 4, 10, 11])
@pytest.mark.parametrize("kind", [I, II])
def test_span_open(n, kind):
    cfg = SimConfig(n, 0.01, 1.0)
    plan = plan_span_at_least_pi(kind, 0.6, cfg)
    assert plan.proven
    assert run_many(plan, cfg, uniform_sampler(cfg), 6, "endpoint") == 0


def test_span_two_agents_flagged():
    cfg = SimConfig(2, 0.01, 1.0)
    plan = plan_span_at_least_pi(II, 0.6, cfg)
    assert not plan.proven
    res = replay(plan, cfg, random_state(cfg, np.random.default_rng(0)), make_adversary("zero"))
    assert res.reached


@pytest.mark.parametrize("kind", [I, II])
def test_span_periodic(kind):
    cfg = SimConfig(10, 0.01, 1.0, Periodic(5.0))
    plan = plan_span_at_least_pi(kind, 0.6, cfg)
    assert run_many(plan, cfg, uniform_sampler(cfg), 3) == 0


def test_span_errors():
    with pytest.raises(RegimeViolation):
        plan_span_at_least_pi(II, math.pi, SimConfig(4, 0.01, 1.0))
    with pytest.raises(RegimeViolation):
        plan_span_at_least_pi(II, 0.6, SimConfig(4, 0.01, 1.0, Periodic(2.0)))
    with pytest.raises(RegimeViolation):
        plan_span_at_least_pi(II, 0.6, SimConfig(3, 0.01, 1.0, Periodic(5.0)))


# -- connectivity ----------------------------------------------------------------


def _window_disconnected(plan, cfg):
    a, b = plan.constants["window"]
    return lambda res: not window_union_connected(Trace(cfg, res.states), a, b - a)


@pytest.mark.parametrize("boundary", [Open(), Periodic(5.0)])
@pytest.mark.parametrize("kind", [I, II])
def test_break_connectivity(kind, boundary):
    cfg = SimConfig(10, 0.01, 1.0, boundary)
    plan = plan_break_connectivity(kind, 0.6, cfg, 200)
    assert plan.target is None
    assert run_many(plan, cfg, uniform_sampler(cfg), 3, check=_window_disconnected(plan, cfg)) == 0


def test_break_zero_window_and_persistence(open10):
    plan = plan_break_connectivity(II, 0.6, open10, 0)
    a, b = plan.constants["window"]
    assert a == b
    res = replay(plan, open10, random_state(open10, np.random.default_rng(3)), make_adversary("endpoint"), seed=3)
    assert not window_union_connected(Trace(open10, res.states), a, 0)
    # once apart the groups stay apart through the rest of the plan
    plan = plan_break_connectivity(II, 0.6, open10, 100)
    a, b = plan.constants["window"]
    res = replay(plan, open10, random_state(open10, np.random.default_rng(4)), make_adversary("endpoint"), seed=4)
    for s in res.states[a : b + 1]:
        g = interaction_graph(open10, s).undirected()
        top = partition_by_ordinate(s.positions[:, 1], plan.constants["sizes"]).labels == 0
        assert not g[np.ix_(top, ~top)].any()


def test_break_periodic_gate():
    with pytest.raises(RegimeViolation):
        plan_break_connectivity(II, 0.6, SimConfig(10, 0.01, 1.0, Periodic(2.0)), 10)
    p = plan_break_connectivity(II, 0.6, SimConfig(10, 0.01, 1.0, Periodic(5.0)), 10)
    assert p.constants["K"] >= 4


# -- admissibility from arbitrary states ------------------------------------------


@pytest.mark.parametrize("kind", [I, II])
def test_plans_admissible_from_arbitrary_states(kind):
    """Preconditioned plans stay admissible even when started outside their precondition."""
    cfg = SimConfig(7, 0.05, 1.0)
    plans = [plan_disorder(kind, 0.1, 0.6, cfg), plan_span_at_least_pi(kind, 0.6, cfg), plan_order(kind, 0.3, 0.6, cfg)]
    for plan in plans:
        for k in range(3):
            replay(plan, cfg, random_state(cfg, np.random.default_rng(k)), make_adversary("endpoint"), seed=k, record=False)


def test_script_adversary_is_replayable(open10, rng):
    plan = plan_order(II, 0.6, 0.6, open10)
    st = random_state(open10, rng)
    script = rng.choice([-1.0, 0.0, 1.0], size=(plan.horizon, 10))
    a = replay(plan, open10, st, ScriptAdversary(script))
    b = replay(plan, open10, st, ScriptAdversary(script))
    assert np.array_equal(a.final.headings, b.final.headings)
