"""Spreading the headings over at least a half circle (d_theta >= pi)."""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import SimConfig, SystemKind, wrap_heading
from ..metrics import covering_arc
from . import periodic as P
from .base import ControlPlan, Frame, Phase, RegimeViolation, SpanAtLeast, bounded, full
from .disorder import gather_rule, roles_setup, split_rule
from .order import descent_rule, order_horizon_ii


def _frame_setup(ctx):
    start, length = covering_arc(ctx.state.headings)
    ctx.memo["frame"] = Frame(float(wrap_heading(start + length / 2)))


def _lattice_setup(ctx):
    """Move the frame to the multiple of pi/2 closest to the current one."""
    b = ctx.frame.angle
    q = int(round(b / (math.pi / 2)))
    ctx.memo["frame"] = Frame(float(wrap_heading(q * math.pi / 2)))


def normalize_phases(kind: SystemKind, eta: float, lattice: bool):
    """Bring every heading within eta/2 of a frame origin.

    System II descends onto 0 from anywhere. System I picks the midpoint of the
    initial covering arc as its frame (rotation-equivariant dynamics); on the
    torus it then moves to the nearest lattice direction.
    """
    if kind is SystemKind.SYSTEM_II:
        return [Phase("order", order_horizon_ii(eta, eta), descent_rule(eta, eta))]
    phases = [Phase("descent", math.ceil(math.pi / eta) - 1, descent_rule(eta, eta), setup=_frame_setup)]
    if lattice:
        phases.append(Phase("to-axis", math.ceil(math.pi / (2 * eta)), descent_rule(eta, eta), setup=_lattice_setup))
    return phases


def _four_sizes(n: int):
    base, extra = divmod(n, 4)
    return [base + (1 if k < extra else 0) for k in range(4)]


def four_set_steer_rule(eta: float, K: int):
    """Targets +-(pi/2) straddled by eta/2K: sets 1..4 go to pi/2+, pi/2-, -pi/2+, -pi/2-."""
    dK = eta / (2 * K)
    tgt = np.array([math.pi / 2 + dK, math.pi / 2 - dK, -math.pi / 2 + dK, -math.pi / 2 - dK])
    thr = np.array([math.pi / 2 + 2 * dK - eta, math.pi / 2 - eta, -math.pi / 2 + eta, -math.pi / 2 - 2 * dK + eta])
    sign = np.array([1.0, 1.0, -1.0, -1.0])

    def rule(ctx):
        d = ctx.rel_means()
        lab = ctx.memo["labels"]
        s = sign[lab]
        far = s * d < s * thr[lab]
        u = np.where(far, s * (eta - dK), tgt[lab] - d)
        return bounded(full(d.shape[0], dK), u, eta)

    return rule


def span_K(cfg: SimConfig, eta: float) -> int:
    L, v, r = cfg.L, cfg.v, cfg.r_max

    def ok(K):
        split = P.split_steps(r, v, eta, K)
        steer = P.steer_steps(math.pi / 2, eta, K, extra=eta / (2 * K))
        E = P.excursion(v, eta, K, split, steer, math.pi / 2 + eta / (2 * K))
        return L > P.MARGIN * (r + 2 * E)

    return P.choose_K(ok, "span")


def plan_span_at_least_pi(kind, eta: float, cfg: SimConfig, boundary=None, K=None) -> ControlPlan:
    """Plan from any state to d_theta >= pi."""
    kind = SystemKind.parse(kind)
    if not 0 < eta < math.pi:
        raise RegimeViolation(f"the span construction needs 0 < eta < pi, got {eta}")
    if boundary is not None and boundary != cfg.boundary:
        raise ValueError("boundary argument disagrees with the configuration")
    n, v, r = cfg.n, cfg.v, cfg.r_max
    proven = True
    note = ""
    if not cfg.periodic:
        pre = normalize_phases(kind, eta, lattice=False)
        if n >= 3:
            sizes, roles = [math.ceil((n - 1) / 2), 1, (n - 1) // 2], [1, 0, -1]
            t_split = math.floor(r / (v * (math.sin(eta / 4) - math.sin(eta / 8)))) + 1
            target = 3 * math.pi / 4
        else:
            sizes, roles = [1, 1], [1, -1]
            t_split = math.floor(r / (2 * v * math.sin(eta / 4))) + 1
            target = math.pi / 2
            proven = False
            note = "two agents reach span pi only at exact antipodes; target met only without uncertainty"
        # pushes gain at least 5eta/8 per step from [eta/4, eta/2], plus one landing step
        t_steer = max(math.ceil(8 * target / (5 * eta) - 0.6), 1)
        if n >= 3:
            t_steer = max(t_steer, math.ceil(6 * math.pi / (5 * eta)) - 1)
        steer = _push_hold_rule(eta, target)
        phases = pre + [
            Phase("split", t_split, split_rule(eta / 8, 3 * eta / 8, eta), setup=roles_setup(sizes, roles)),
            Phase("steer", t_steer, steer),
        ]
        consts = {"sizes": sizes, "split_steps": t_split, "steer_steps": t_steer, "target": target}
    else:
        thr = P.span_threshold(eta, v, r)
        if not cfg.L > thr:
            raise RegimeViolation(f"side length L={cfg.L} must exceed {thr:.6g}")
        if n < 4:
            raise RegimeViolation("the torus construction needs four non-empty groups (n >= 4)")
        K = span_K(cfg, eta) if K is None else int(K)
        dK = eta / (2 * K)
        pre = normalize_phases(kind, eta, lattice=True)
        sizes = _four_sizes(n)
        t_gather = P.gather_steps(cfg.L, v, eta, K)
        t_split = P.split_steps(r, v, eta, K)
        t_steer = P.steer_steps(math.pi / 2, eta, K, extra=dK)
        phases = pre + [
            Phase("gather", t_gather, gather_rule(eta, K)),
            Phase("split", t_split, split_rule(dK, eta / 2 - dK, eta), setup=roles_setup(sizes, [1, 1, -1, -1])),
            Phase("steer", t_steer, four_set_steer_rule(eta, K)),
        ]
        consts = {
            "K": K,
            "threshold": thr,
            "sizes": sizes,
            "gather_steps": t_gather,
            "split_steps": t_split,
            "steer_steps": t_steer,
        }
    return ControlPlan(
        name="span",
        kind=kind,
        eta=eta,
        phases=tuple(phases),
        target=SpanAtLeast(math.pi),
        proven=proven,
        regime_note=note,
        constants=consts,
    )


def _push_hold_rule(eta: float, target: float):
    """Groups go to +target, 0 and -target with margin eta/8, pushing by 3eta/4."""

    def rule(ctx):
        d = ctx.rel_means()
        roles = ctx.memo["roles"]
        far = (roles != 0) & (roles * d < target - 0.75 * eta)
        u = np.where(far, roles * 0.75 * eta, roles * target - d)
        return bounded(full(d.shape[0], eta / 8), u, eta)

    return rule
