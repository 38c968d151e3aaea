"""Order parameter, heading span and interaction-graph connectivity."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .dynamics import SimConfig, SwarmState, neighbor_matrix

TWO_PI = 2.0 * math.pi


def order_parameter(headings) -> float:
    th = np.asarray(headings, dtype=float)
    if th.size == 0:
        raise ValueError("order parameter of an empty swarm")
    c = np.cos(th).sum()
    s = np.sin(th).sum()
    return min(1.0, math.sqrt(c * c + s * s) / th.size)


def heading_span(headings) -> float:
    """Length of the shortest arc covering every heading.

    Sort the angles and remove the largest circular gap between neighbours.
    """
    th = np.sort(np.asarray(headings, dtype=float))
    if th.size <= 1:
        return 0.0
    gaps = np.diff(th)
    wrap_gap = th[0] + TWO_PI - th[-1]
    largest = max(float(gaps.max()), wrap_gap)
    span = TWO_PI - largest
    return max(0.0, span)


def covering_arc(headings):
    """``(start, length)`` of a shortest covering arc; its midpoint is ``start + length / 2``."""
    th = np.sort(np.asarray(headings, dtype=float))
    if th.size <= 1:
        return float(th[0]), 0.0
    gaps = np.diff(th)
    k = int(np.argmax(gaps))
    wrap_gap = th[0] + TWO_PI - th[-1]
    if wrap_gap >= gaps[k]:
        return float(th[0]), float(th[-1] - th[0])
    return float(th[k + 1]), float(TWO_PI - gaps[k])


class Connectivity(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True, eq=False)
class DirectedGraphSnapshot:
    """Directed interaction graph; ``adj[j, i]`` is the edge (j, i), i.e. j within r_i of i."""

    adj: np.ndarray

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def has_edge(self, j: int, i: int) -> bool:
        return bool(self.adj[j, i])

    def undirected(self) -> np.ndarray:
        return self.adj | self.adj.T


def interaction_graph(cfg: SimConfig, state: SwarmState) -> DirectedGraphSnapshot:
    return DirectedGraphSnapshot(neighbor_matrix(cfg, state.positions).T.copy())


def _connected(adj: np.ndarray, connection: str) -> bool:
    if adj.shape[0] <= 1:
        return True
    ncomp, _ = connected_components(csr_matrix(adj), directed=True, connection=connection)
    return ncomp == 1


def connectivity(g: DirectedGraphSnapshot, mode=Connectivity.WEAK) -> bool:
    mode = Connectivity(mode)
    return _connected(g.adj, mode.value)


@dataclass(eq=False)
class Trace:
    """Time-ordered states of one trajectory under a fixed configuration."""

    cfg: SimConfig
    states: List[SwarmState] = field(default_factory=list)

    def __len__(self):
        return len(self.states)

    def graph(self, k: int) -> DirectedGraphSnapshot:
        return interaction_graph(self.cfg, self.states[k])


def union_graph(graphs: Sequence[DirectedGraphSnapshot]) -> np.ndarray:
    acc = np.zeros_like(graphs[0].adj)
    for g in graphs:
        acc |= g.undirected()
    return acc


def window_union_connected(trace: Trace, t: int, T: int) -> bool:
    """Whether the union of undirected snapshots over steps ``t .. t+T`` is connected."""
    if t < 0 or T < 0 or t + T >= len(trace):
        raise IndexError(f"window [{t}, {t + T}] outside trace of length {len(trace)}")
    acc = union_graph([trace.graph(k) for k in range(t, t + T + 1)])
    return _connected(acc, "weak")


@dataclass(frozen=True, eq=False)
class MetricSeries:
    t: np.ndarray
    phi: np.ndarray
    d_theta: np.ndarray
    weak_connected: np.ndarray

    def __post_init__(self):
        lengths = {len(self.t), len(self.phi), len(self.d_theta), len(self.weak_connected)}
        if len(lengths) > 1:
            raise ValueError("metric columns must have equal length")

    def __len__(self):
        return len(self.t)

    def subsample(self, stride: int) -> "MetricSeries":
        keep = np.asarray(self.t) % stride == 0
        return MetricSeries(self.t[keep], self.phi[keep], self.d_theta[keep], self.weak_connected[keep])

    @classmethod
    def empty(cls) -> "MetricSeries":
        return cls(np.zeros(0, int), np.zeros(0), np.zeros(0), np.zeros(0, bool))


def state_metrics(cfg: SimConfig, state: SwarmState):
    return (
        order_parameter(state.headings),
        heading_span(state.headings),
        connectivity(interaction_graph(cfg, state), Connectivity.WEAK),
    )


def metric_series(trace: Trace, stride: int = 1) -> MetricSeries:
    rows = [(s.t, *state_metrics(trace.cfg, s)) for s in trace.states if s.t % stride == 0]
    if not rows:
        return MetricSeries.empty()
    t, phi, d, w = zip(*rows)
    return MetricSeries(np.array(t), np.array(phi), np.array(d), np.array(w, dtype=bool))
