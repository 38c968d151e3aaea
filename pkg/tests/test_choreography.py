import math

import numpy as np
import pytest

from tests.conftest import ordered_sampler
from vicsek_reach.dynamics import Periodic, SimConfig, SystemKind, wrap_heading
from vicsek_reach.metrics import heading_span
from vicsek_reach.steering import (
    BifurcateThenMerge,
    Turn,
    Vortex,
    cumulative_rotation,
    make_adversary,
    plan_choreography,
    replay,
    turn_horizon,
)

I, II = SystemKind.SYSTEM_I, SystemKind.SYSTEM_II


def test_turn_horizon_example():
    assert turn_horizon(math.pi / 2, 0.6, 10, 0.1) == 3
    assert math.ceil(((math.pi - 0.1) * 10 + 0.6) / (2 * 9 * 0.6)) == 3


def test_turn_zero(open10, rng):
    plan = plan_choreography(II, Turn(0.0), 0.6, 10, open10)
    assert plan.horizon == 0
    res = replay(plan, open10, ordered_sampler(open10, 0.1)(rng))
    assert res.first_hit == 0


@pytest.mark.parametrize("kind", [I, II])
@pytest.mark.parametrize("g", [math.pi / 2, -math.pi / 2, 1.0, -2.5])
def test_turn_synchronized(kind, g, open10):
    eta, K, eps = 0.6, 10, 0.1
    plan = plan_choreography(kind, Turn(g), eta, K, open10, eps)
    for k in range(20):
        rng = np.random.default_rng(k)
        res = replay(plan, open10, ordered_sampler(open10, eps)(rng), make_adversary("endpoint"), seed=k)
        assert all(heading_span(s.headings) <= 2 * eta / K + 2 * eps for s in res.states)
        assert np.abs(wrap_heading(res.final.headings - g)).max() <= eta / K
        # headings sweep monotonically toward the target
        d = [np.abs(wrap_heading(s.headings - g)).max() for s in res.states]
        assert all(b <= a + 1e-12 for a, b in zip(d, d[1:]) if a > eta / K)


def test_turn_needs_valid_K(open10):
    with pytest.raises(ValueError):
        plan_choreography(II, Turn(1.0), 0.6, None, open10)
    with pytest.raises(ValueError):
        plan_choreography(II, Turn(4.0), 0.6, 10, open10)


@pytest.mark.parametrize("boundary", [None, Periodic(5.0)])
def test_vortex_system_i(boundary, open10):
    cfg = open10 if boundary is None else SimConfig(10, 0.01, 1.0, boundary)
    plan = plan_choreography(I, Vortex(4 * math.pi), 0.6, 10, cfg)
    assert plan.proven
    for k in range(5):
        rng = np.random.default_rng(k)
        res = replay(plan, cfg, ordered_sampler(cfg, 0.1)(rng), make_adversary("random"), seed=k)
        assert cumulative_rotation(res.states).min() >= 4 * math.pi
        assert res.reached


def test_vortex_flags_and_errors(open10):
    assert not plan_choreography(II, Vortex(3.0), 0.6, 10, open10).proven
    with pytest.raises(ValueError):
        plan_choreography(I, Vortex(0.0), 0.6, 10, open10)


@pytest.mark.parametrize("boundary", [None, Periodic(5.0)])
@pytest.mark.parametrize("kind", [I, II])
def test_bifurcate_then_merge(kind, boundary, open10):
    cfg = open10 if boundary is None else SimConfig(10, 0.01, 1.0, boundary)
    plan = plan_choreography(kind, BifurcateThenMerge(0.5), 0.6, None, cfg)
    split_end = plan.constants["split_end"]
    for k in range(3):
        rng = np.random.default_rng(k)
        res = replay(plan, cfg, ordered_sampler(cfg, 0.6)(rng), make_adversary("random"), seed=k)
        mid = res.states[split_end].headings
        up, down = mid[mid > 0], mid[mid < 0]
        # two synchronized subgroups heading roughly up and down
        assert len(up) == 5 and len(down) == 5
        assert heading_span(up) < 0.7 and heading_span(down) < 0.7
        assert res.member_at_horizon


def test_unknown_choreography(open10):
    with pytest.raises(TypeError):
        plan_choreography(II, "spin", 0.6, 10, open10)
