"""Synchronized group manoeuvres: turns, vortices, and a split followed by a merge."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..dynamics import SimConfig, SystemKind, wrap_heading
from .base import ControlPlan, Frame, HeadingBand, OrderBox, Phase, bounded, compose, full
from .disorder import _open_phases, effective_eta, periodic_disorder_K, _periodic_phases
from .order import plan_order


@dataclass(frozen=True)
class Turn:
    """Rotate the whole flock by ``target`` radians (|target| <= pi)."""

    target: float


@dataclass(frozen=True)
class Vortex:
    """Keep turning counter-clockwise until every heading has swept ``total`` radians."""

    total: float


@dataclass(frozen=True)
class BifurcateThenMerge:
    """Split into two synchronized groups, then reunite them into ``OrderBox(alpha)``."""

    alpha: float = 0.5


Choreography = Union[Turn, Vortex, BifurcateThenMerge]


def turn_horizon(g: float, eta: float, K: int, eps: float) -> int:
    """Steps for a flock inside a band of width ``eps`` around 0 to settle within eta/2K of ``g``."""
    g = abs(g)
    if g == 0:
        return 0
    loose = math.ceil(((2 * g - eps) * K + eta) / (2 * (K - 1) * eta))
    # the slowest agent gains eta(1 - 1/K) per push and needs one landing step
    tight = 1 + max(math.ceil((g + eps / 2 - eta + eta / (2 * K)) * K / ((K - 1) * eta)), 0)
    return max(loose, tight)


def turn_rule(g: float, eta: float, K: int):
    """Push toward ``g`` at full speed, land once within one step of it."""
    dK = eta / (2 * K)
    push = eta - dK
    s = 1.0 if g >= 0 else -1.0

    def rule(ctx):
        d = ctx.rel_means()
        far = s * d < s * g - push
        u = np.where(far, s * push, g - d)
        return bounded(full(d.shape[0], dK), u, eta)

    return rule


def _center_setup(angle: float):
    def setup(ctx):
        ctx.memo["frame"] = Frame(float(wrap_heading(angle)))

    return setup


def _check_K(K):
    if K is None or int(K) < 2:
        raise ValueError(f"the discretization K must be an integer >= 2, got {K}")
    return int(K)


def plan_turn(kind, g: float, eta: float, K: int, eps: float = 0.1) -> ControlPlan:
    kind = SystemKind.parse(kind)
    K = _check_K(K)
    if not abs(g) <= math.pi:
        raise ValueError(f"turn angle must lie in [-pi, pi], got {g}")
    T = turn_horizon(g, eta, K, eps)
    phases = (Phase("turn", T, turn_rule(g, eta, K)),) if T else ()
    return ControlPlan(
        name="turn",
        kind=kind,
        eta=eta,
        phases=phases,
        target=HeadingBand(float(wrap_heading(g)), 2 * eta / K),
        precondition=OrderBox(eps),
        constants={"angle": g, "K": K, "eps": eps, "steps": T},
    )


def plan_vortex(kind, total: float, eta: float, K: int, eps: float = 0.1) -> ControlPlan:
    """Chain quarter turns until the cumulative rotation exceeds ``total``.

    One extra half quarter absorbs the landing slack, so the sweep of every
    heading reaches at least ``total``.
    """
    kind = SystemKind.parse(kind)
    K = _check_K(K)
    if not total > 0:
        raise ValueError(f"vortex total must be positive, got {total}")
    q = math.pi / 2
    m = math.ceil((total + q / 2) / q)
    phases = []
    for j in range(m):
        w = eps if j == 0 else eta / K
        T = turn_horizon(q, eta, K, w)
        phases.append(Phase(f"quarter-{j + 1}", T, turn_rule(q, eta, K), setup=_center_setup(j * q), group=j))
    proven = kind is SystemKind.SYSTEM_I
    note = "" if proven else "System II averages raw angles, so turning through the +-pi cut is not rotation invariant"
    return ControlPlan(
        name="vortex",
        kind=kind,
        eta=eta,
        phases=tuple(phases),
        target=HeadingBand(float(wrap_heading(m * q)), 2 * eta / K),
        precondition=OrderBox(eps),
        proven=proven,
        regime_note=note,
        constants={"total": total, "quarters": m, "K": K, "eps": eps},
    )


def plan_bifurcate_merge(kind, alpha: float, eta: float, cfg: SimConfig, eps: float = 0.1, K: Optional[int] = None):
    kind = SystemKind.parse(kind)
    e = effective_eta(eta)
    n = cfg.n
    sizes, roles = [math.ceil(n / 2), n // 2], [1, -1]
    if not cfg.periodic:
        phases, consts = _open_phases(n, e, eps, cfg.v, cfg.r_max, sizes, roles)
    else:
        K = periodic_disorder_K(cfg, e, eps, two_sets_only=True) if K is None else int(K)
        phases, consts = _periodic_phases(cfg, e, eps, K, two_sets_only=True)
    split = ControlPlan("bifurcate", kind, eta, phases, None, precondition=OrderBox(e), constants=consts)
    merge = plan_order(kind, alpha, eta, cfg)
    plan = compose(split, merge, name="bifurcate-merge")
    return ControlPlan(
        name=plan.name,
        kind=kind,
        eta=eta,
        phases=plan.phases,
        target=OrderBox(alpha),
        precondition=OrderBox(e),
        proven=plan.proven,
        regime_note=plan.regime_note,
        constants={**plan.constants, "split_end": split.horizon},
    )


def plan_choreography(kind, choreo: Choreography, eta: float, K: Optional[int], cfg: SimConfig, eps: float = 0.1):
    """Dispatch on the choreography type. Turn and Vortex start from ``OrderBox(eps)``."""
    if isinstance(choreo, Turn):
        return plan_turn(kind, choreo.target, eta, K, eps)
    if isinstance(choreo, Vortex):
        return plan_vortex(kind, choreo.total, eta, K, eps)
    if isinstance(choreo, BifurcateThenMerge):
        return plan_bifurcate_merge(kind, choreo.alpha, eta, cfg, eps, K)
    raise TypeError(f"unknown choreography {choreo!r}")


def cumulative_rotation(states) -> np.ndarray:
    """Signed heading change of every agent summed over a trajectory."""
    th = np.array([s.headings for s in states])
    if th.shape[0] < 2:
        return np.zeros(th.shape[1] if th.ndim == 2 else 0)
    return wrap_heading(np.diff(th, axis=0)).sum(axis=0)
