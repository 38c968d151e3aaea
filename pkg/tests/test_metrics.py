import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vicsek_reach.dynamics import Open, Periodic, SimConfig, StepInput, SwarmState, SystemKind, random_state, step, wrap_heading
from vicsek_reach.metrics import (
    Connectivity,
    DirectedGraphSnapshot,
    MetricSeries,
    Trace,
    connectivity,
    covering_arc,
    heading_span,
    interaction_graph,
    metric_series,
    order_parameter,
    window_union_connected,
)

angles = st.lists(st.floats(-math.pi, math.pi, exclude_max=True), min_size=1, max_size=30)


def test_order_parameter_examples():
    assert order_parameter([0.3] * 5) == pytest.approx(1.0)
    assert order_parameter([0.0, math.pi]) == pytest.approx(0.0, abs=1e-15)
    assert order_parameter([0.0, math.pi / 2]) == pytest.approx(math.sqrt(2) / 2)


@given(angles, st.floats(-10, 10))
def test_order_parameter_rotation_invariant(th, a):
    th = np.array(th)
    phi = order_parameter(th)
    assert 0 <= phi <= 1
    assert order_parameter(wrap_heading(th + a)) == pytest.approx(phi, abs=1e-12)


def test_span_examples():
    assert heading_span([1.0, 1.0, 1.0]) == 0.0
    assert heading_span([-3.0, 3.0]) == pytest.approx(2 * math.pi - 6)
    assert heading_span([0.0, math.pi / 2, -math.pi / 2]) == pytest.approx(math.pi)


@given(angles)
def test_covering_arc_covers(th):
    th = np.array(th)
    start, length = covering_arc(th)
    assert length == pytest.approx(heading_span(th))
    off = np.mod(th - start, 2 * math.pi)
    off = np.where(off > 2 * math.pi - 1e-9, 0.0, off)
    assert np.all(off <= length + 1e-9)


def _graph(edges, n):
    adj = np.eye(n, dtype=bool)
    for j, i in edges:
        adj[j, i] = True
    return DirectedGraphSnapshot(adj)


def test_connectivity_examples():
    g1 = _graph([], 1)
    assert connectivity(g1, Connectivity.WEAK) and connectivity(g1, Connectivity.STRONG)
    g2 = _graph([(0, 1)], 2)
    assert connectivity(g2, Connectivity.WEAK) and not connectivity(g2, Connectivity.STRONG)
    g3 = _graph([(0, 1), (1, 2), (2, 0)], 3)
    assert connectivity(g3, "strong")


def test_strong_implies_weak(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        adj = rng.random((n, n)) < 0.3
        np.fill_diagonal(adj, True)
        g = DirectedGraphSnapshot(adj)
        if connectivity(g, Connectivity.STRONG):
            assert connectivity(g, Connectivity.WEAK)


def test_interaction_graph_edges():
    cfg = SimConfig(2, 0.01, [1.0, 2.0])
    s = SwarmState(0, [[0, 0], [1.5, 0]], [0, 0])
    g = interaction_graph(cfg, s)
    assert g.has_edge(0, 1) and not g.has_edge(1, 0)
    assert g.has_edge(0, 0) and g.has_edge(1, 1)
    far = interaction_graph(SimConfig(2, 0.01, 1.0), SwarmState(0, [[0, 0], [3, 0]], [0, 0]))
    assert np.array_equal(far.adj, np.eye(2, dtype=bool))
    near = interaction_graph(SimConfig(2, 0.01, 1.0), SwarmState(0, [[0, 0], [0.5, 0]], [0, 0]))
    assert near.adj.all()


def test_homogeneous_graph_symmetric(rng):
    cfg = SimConfig(15, 0.01, 1.0, Periodic(4.0))
    for _ in range(20):
        g = interaction_graph(cfg, random_state(cfg, rng))
        assert np.array_equal(g.adj, g.adj.T)
        assert connectivity(g, Connectivity.WEAK) == connectivity(g, Connectivity.STRONG)


def test_window_union():
    cfg = SimConfig(2, 0.01, 1.0)
    apart = SwarmState(0, [[0, 0], [5, 0]], [0, 0])
    close = SwarmState(1, [[0, 0], [0.5, 0]], [0, 0])
    assert not window_union_connected(Trace(cfg, [apart, apart, apart]), 0, 2)
    assert window_union_connected(Trace(cfg, [apart, close, apart]), 0, 2)
    with pytest.raises(IndexError):
        window_union_connected(Trace(cfg, [apart]), 0, 1)


def test_metric_series_stride_invariance(rng):
    cfg = SimConfig(6, 0.05, 1.0, Periodic(3.0))
    s = random_state(cfg, rng)
    states = [s]
    for _ in range(12):
        s = step(cfg, s, SystemKind.SYSTEM_I, rng.uniform(-0.5, 0.5, 6))
        states.append(s)
    tr = Trace(cfg, states)
    full = metric_series(tr, 1)
    assert len(full) == 13
    for k in (2, 3, 5):
        sub = metric_series(tr, k)
        ref = full.subsample(k)
        assert np.array_equal(sub.t, ref.t) and np.array_equal(sub.phi, ref.phi)
    with pytest.raises(ValueError):
        MetricSeries(np.arange(2), np.zeros(3), np.zeros(2), np.zeros(2, bool))
