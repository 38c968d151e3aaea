"""Holding two groups apart long enough that the interaction graphs stay disconnected."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import SimConfig, SystemKind
from . import periodic as P
from .base import ControlPlan, Phase, RegimeViolation, bounded, compose, full
from .disorder import effective_eta, roles_setup, split_rule
from .order import order_horizon_ii, plan_order, plan_order_ii


def order_prefix(kind: SystemKind, eta: float, e: float, cfg: SimConfig) -> ControlPlan:
    """Reach the order box S^1_e; System II keeps descending for ceil(2pi/eta - 1/4) steps."""
    if kind is SystemKind.SYSTEM_II:
        T2 = max(math.ceil(2 * math.pi / eta - 0.25), order_horizon_ii(e, eta))
        return plan_order_ii(e, eta, duration=T2)
    return plan_order(kind, e, eta, cfg)


def two_lines_rule(eta: float, K: int):
    """Group 1 zig-zags along 3L/4, group 2 along L/4."""

    def rule(ctx):
        d = ctx.rel_means()
        line = np.where(ctx.memo["roles"] > 0, 0.75, 0.25) * ctx.cfg.L
        above = ctx.ordinate() >= line
        step = 1.5 * eta / K
        return bounded(full(d.shape[0], eta / (2 * K)), np.where(above, -step, step) - d, eta)

    return rule


def plan_break_connectivity(kind, eta: float, cfg: SimConfig, T_window: int, boundary=None, K=None) -> ControlPlan:
    """Order the flock, then split it into two groups kept out of range.

    ``constants["window"]`` holds the inclusive step range ``[start, start +
    T_window]`` on which no edge joins the two groups.
    """
    kind = SystemKind.parse(kind)
    if T_window < 0:
        raise ValueError("T_window must be non-negative")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if boundary is not None and boundary != cfg.boundary:
        raise ValueError("boundary argument disagrees with the configuration")
    n = cfg.n
    e = effective_eta(eta)
    sizes, roles = [math.ceil(n / 2), n // 2], [1, -1]
    if not cfg.periodic:
        T1 = math.floor(cfg.r_max / (2 * cfg.v * math.sin(e / 4))) + 1
        hold = Phase("split-hold", T1 + T_window, split_rule(e / 8, 3 * e / 8, e), setup=roles_setup(sizes, roles))
        consts = {"T1": T1}
        lead = T1
    else:
        L = cfg.L
        if not L > 2 * cfg.r_max:
            raise RegimeViolation(f"side length L={L} must exceed 2 r_max = {2 * cfg.r_max:.6g}")

        def ok(K):
            return L / 2 >= P.MARGIN * (cfg.r_max + 2 * cfg.v * math.sin(2 * e / K))

        K = P.choose_K(ok, "separation") if K is None else int(K)
        Tg = P.gather_steps(L, cfg.v, e, K, reach=0.75)
        hold = Phase("two-lines", Tg + T_window, two_lines_rule(e, K), setup=roles_setup(sizes, roles))
        consts = {"K": K, "gather_steps": Tg}
        lead = Tg
    prefix = order_prefix(kind, eta, e, cfg)
    start = prefix.horizon + lead
    consts.update({"sizes": sizes, "T_window": T_window, "window": [start, start + T_window], "eta_eff": e})
    body = ControlPlan("separate", kind, eta, (hold,), None, constants=consts)
    plan = compose(prefix, body, name="break-connectivity")
    return ControlPlan(
        name=plan.name,
        kind=kind,
        eta=eta,
        phases=plan.phases,
        target=None,
        proven=prefix.proven,
        regime_note=prefix.regime_note,
        constants={**consts, "order_steps": prefix.horizon},
    )
