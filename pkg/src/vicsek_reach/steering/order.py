"""Steering any state into the order box S^1_alpha = {max_i |theta_i| <= alpha/2}."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import SimConfig, SystemKind, wrap_heading
from ..metrics import covering_arc
from .base import ControlPlan, OrderBox, Phase, PlanContext, full


def order_horizon_ii(alpha: float, eta: float) -> int:
    return math.ceil((2 * math.pi - alpha) / eta)


def descent_rule(alpha: float, eta: float, center=None):
    """Push every local mean toward ``center`` and land within alpha/2 of it.

    ``center`` may be a float or a memo key naming a stored angle; ``None``
    means the frame origin. Requires ``alpha <= eta``.
    """

    def rule(ctx: PlanContext):
        d = ctx.rel_means()
        if center is not None:
            c = ctx.memo[center] if isinstance(center, str) else center
            d = wrap_heading(d - c)
        n = d.shape[0]
        delta = full(n, alpha / 2)
        u = -d
        hi = d > eta - alpha / 2
        lo = d < alpha / 2 - eta
        delta[hi | lo] = eta / 4
        u = np.where(hi, -0.75 * eta, np.where(lo, 0.75 * eta, u))
        return delta, u

    return rule


def _check_alpha(alpha: float):
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not alpha < 2 * math.pi:
        raise ValueError(f"alpha must be below 2pi, got {alpha}")


def plan_order_ii(alpha: float, eta: float, duration=None) -> ControlPlan:
    _check_alpha(alpha)
    a = min(alpha, eta)
    T = order_horizon_ii(a, eta) if duration is None else int(duration)
    return ControlPlan(
        name="order",
        kind=SystemKind.SYSTEM_II,
        eta=eta,
        phases=(Phase("descent", T, descent_rule(a, eta)),),
        target=OrderBox(alpha),
        constants={"alpha": alpha, "alpha_eff": a, "t1": T},
    )


def system_i_constants(n: int, alpha: float, eta: float) -> dict:
    proven = eta > math.pi / 2 - math.pi / n
    eps1 = min((eta - math.pi / 2 + math.pi / n) / 3, math.pi / 8)
    if eps1 <= 0:
        eps1 = min(eta / 8, math.pi / 8)
    eps2 = min(math.pi / 8, eta / 4, alpha / 2)
    t1 = math.ceil((math.pi / 2 - eta + eps2) / (eta - 2 * eps2)) + 2
    # phase B must last at least one step when eta is large
    t1 = max(t1, 2)
    tc = math.ceil(math.pi / (eta - 2 * eps2))
    return {
        "proven": proven,
        "eps1": eps1,
        "eps2": eps2,
        "gain": (n - 2) / (2 * (n - 1)),
        "t1": t1,
        "sweep": tc,
        "t2": t1 + tc,
    }


def _midpoint_setup(ctx: PlanContext):
    start, length = covering_arc(ctx.means)
    ctx.memo["theta_star"] = float(wrap_heading(start + length / 2))


def _compress_rule(eps1: float, gain: float, eta: float):
    def rule(ctx):
        d = wrap_heading(ctx.means - ctx.memo["theta_star"])
        u = np.where(d >= 0, -2 * eps1 - gain * d, 2 * eps1 - gain * d)
        lim = eta - eps1
        return full(d.shape[0], eps1), np.clip(u, -lim, lim)

    return rule


def _approach_rule(eps2: float, eta: float):
    def rule(ctx):
        d = wrap_heading(ctx.means - ctx.memo["theta_star"])
        lim = eta - eps2
        return full(d.shape[0], eps2), np.clip(-d, -lim, lim)

    return rule


def _sweep_rule(eps2: float, eta: float):
    """Carry a band near theta* to 0, always turning through the side theta* is on."""

    def rule(ctx):
        m = ctx.means
        lim = eta - eps2
        near = np.abs(m) <= lim
        if ctx.memo["theta_star"] <= 0:
            # positive pushes unless strictly between lim and pi - eps2
            push = np.where((m > lim) & (m < math.pi - eps2), -lim, lim)
        else:
            push = np.where((m < -lim) & (m > -math.pi + eps2), lim, -lim)
        return full(m.shape[0], eps2), np.where(near, -m, push)

    return rule


def plan_order_i(n: int, alpha: float, eta: float) -> ControlPlan:
    _check_alpha(alpha)
    c = system_i_constants(n, alpha, eta)
    phases = (
        Phase("compress", 1, _compress_rule(c["eps1"], c["gain"], eta), setup=_midpoint_setup),
        Phase("approach", c["t1"] - 1, _approach_rule(c["eps2"], eta)),
        Phase("sweep", c["sweep"], _sweep_rule(c["eps2"], eta)),
    )
    note = (
        "proven: eta > pi/2 - pi/n"
        if c["proven"]
        else f"unproven: eta={eta:.6g} <= pi/2 - pi/n = {math.pi / 2 - math.pi / n:.6g}"
    )
    return ControlPlan(
        name="order",
        kind=SystemKind.SYSTEM_I,
        eta=eta,
        phases=phases,
        target=OrderBox(alpha),
        proven=c["proven"],
        regime_note=note,
        constants={"alpha": alpha, **{k: v for k, v in c.items() if k != "proven"}},
    )


def plan_order(kind, alpha: float, eta: float, cfg: SimConfig) -> ControlPlan:
    """Plan reaching the order box ``OrderBox(alpha)`` from any state."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    kind = SystemKind.parse(kind)
    if kind is SystemKind.SYSTEM_II:
        return plan_order_ii(alpha, eta)
    return plan_order_i(cfg.n, alpha, eta)
