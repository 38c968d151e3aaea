"""Splitting an ordered flock into groups whose headings cancel (phi <= eps).

Open boundaries: separate the flock vertically until the groups lose contact,
then steer the groups to opposite headings. On the torus the flock is first
gathered onto the horizontal mid-line so that the groups can separate without
meeting again through the wrap.
"""

from __future__ import annotations

import math

import numpy as np

from ..dynamics import SimConfig, SystemKind
from . import periodic as P
from .base import ControlPlan, Disordered, OrderBox, Phase, RegimeViolation, bounded, full, partition_by_ordinate

# System I needs the starting headings on a half circle; plans never use a
# noise bound larger than this.
ETA_CAP = 1.5


def effective_eta(eta: float) -> float:
    return min(eta, ETA_CAP)


def beta_of(eps: float, eta: float) -> float:
    return min(eta / 2, 2 * math.asin(eps / 2))


def _check_eps(eps: float):
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def roles_setup(sizes, roles):
    """Phase setup storing per-agent roles (+1 up, -1 down, 0 level) from the ordinate."""

    def setup(ctx):
        part = partition_by_ordinate(ctx.ordinate(), sizes)
        ctx.memo["partition"] = part
        ctx.memo["roles"] = np.asarray(roles, dtype=float)[part.labels]
        ctx.memo["labels"] = part.labels

    return setup


def split_rule(delta: float, offset: float, eta: float):
    """Hold each agent at ``role * offset`` relative to the frame."""

    def rule(ctx):
        d = ctx.rel_means()
        return bounded(full(d.shape[0], delta), ctx.memo["roles"] * offset - d, eta)

    return rule


def steer_rule(eta: float, push_delta: float, push_u: float, hold_delta: float, target: float, capture: float):
    """Push up-movers toward +target and down-movers toward -target.

    An agent is pushed with ``(push_delta, +-push_u)`` until its local mean
    passes ``target - capture`` (mirrored for down-movers), then set to the
    target with margin ``hold_delta``. Level agents are held at 0.
    """

    def rule(ctx):
        d = ctx.rel_means()
        roles = ctx.memo["roles"]
        n = d.shape[0]
        delta = full(n, hold_delta)
        u = roles * target - d
        far = (roles * d < target - capture) & (roles != 0)
        delta[far] = push_delta
        u = np.where(far, roles * push_u, u)
        return bounded(delta, u, eta)

    return rule


def open_sizes(n: int):
    if n % 2 == 0:
        return [n // 2, n // 2], [1, -1]
    return [(n - 1) // 2, 1, (n - 1) // 2], [1, 0, -1]


def _open_phases(n: int, eta: float, eps: float, v: float, r_max: float, sizes, roles, group=0):
    beta = beta_of(eps, eta)
    three = 0 in roles
    if three:
        t_split = math.floor(r_max / (v * (math.sin(eta / 4) - math.sin(eta / 8)))) + 1
        target = P.c_n(n)
    else:
        t_split = math.floor(r_max / (2 * v * math.sin(eta / 4))) + 1
        target = math.pi / 2
    t_steer = max(math.ceil((2 * target - 2 * beta) / eta - 0.5), 1)
    phases = (
        Phase("split", t_split, split_rule(eta / 8, 3 * eta / 8, eta), setup=roles_setup(sizes, roles), group=group),
        Phase("steer", t_steer, steer_rule(eta, eta / 4, 0.75 * eta, beta, target, eta - beta), group=group),
    )
    consts = {"beta": beta, "sizes": list(sizes), "split_steps": t_split, "steer_steps": t_steer, "target": target}
    return phases, consts


def _periodic_case_two(n: int, eps: float) -> bool:
    return n % 2 == 1 and eps <= 1.0 / n


def periodic_disorder_K(cfg: SimConfig, eta: float, eps: float, two_sets_only=False) -> int:
    L, v, r = cfg.L, cfg.v, cfg.r_max
    n = cfg.n
    three = _periodic_case_two(n, eps) and not two_sets_only
    target = P.c_n(n) if three else math.pi / 2

    def ok(K):
        split = P.split_steps(r, v, eta, K, three)
        steer = P.steer_steps(target, eta, K)
        E = P.excursion(v, eta, K, split, steer, target)
        if not L > P.MARGIN * (r + 2 * E):
            return False
        if two_sets_only:
            return True
        bound = 2 * math.sin(eta / (4 * K)) + (1.0 / n if n % 2 and not three else 0.0)
        return bound <= eps

    return P.choose_K(ok, "disorder")


def gather_rule(eta: float, K: int, line: float = 0.5):
    """Zig-zag every agent onto the horizontal line ``line * L``."""

    def rule(ctx):
        d = ctx.rel_means()
        above = ctx.ordinate() >= line * ctx.cfg.L
        step = 1.5 * eta / K
        return bounded(full(d.shape[0], eta / (2 * K)), np.where(above, -step, step) - d, eta)

    return rule


def _periodic_phases(cfg: SimConfig, eta: float, eps: float, K: int, two_sets_only=False, group=0):
    n, L, v, r = cfg.n, cfg.L, cfg.v, cfg.r_max
    three = _periodic_case_two(n, eps) and not two_sets_only
    if three:
        sizes, roles = [(n - 1) // 2, 1, (n - 1) // 2], [1, 0, -1]
        target = P.c_n(n)
    else:
        sizes, roles = [math.ceil(n / 2), n // 2], [1, -1]
        target = math.pi / 2
    dK = eta / (2 * K)
    t_gather = P.gather_steps(L, v, eta, K)
    t_split = P.split_steps(r, v, eta, K, three)
    t_steer = P.steer_steps(target, eta, K)
    phases = (
        Phase("gather", t_gather, gather_rule(eta, K), group=group),
        Phase("split", t_split, split_rule(dK, eta / 2 - dK, eta), setup=roles_setup(sizes, roles), group=group),
        Phase("steer", t_steer, steer_rule(eta, dK, eta - dK, dK, target, eta - dK), group=group),
    )
    consts = {
        "K": K,
        "sizes": sizes,
        "gather_steps": t_gather,
        "split_steps": t_split,
        "steer_steps": t_steer,
        "target": target,
    }
    return phases, consts


def plan_disorder(kind, eps: float, eta: float, cfg: SimConfig, boundary=None, K=None) -> ControlPlan:
    """Plan from the order box S^1_eta into the disordered set {phi <= eps}.

    Compose with :func:`plan_order` (``alpha = effective_eta(eta)``) for
    arbitrary starts. ``boundary`` defaults to ``cfg.boundary``.
    """
    _check_eps(eps)
    if not eta > 0:
        raise ValueError("eta must be positive")
    kind = SystemKind.parse(kind)
    if boundary is not None and boundary != cfg.boundary:
        raise ValueError("boundary argument disagrees with the configuration")
    e = effective_eta(eta)
    n = cfg.n
    if not cfg.periodic:
        sizes, roles = open_sizes(n)
        phases, consts = _open_phases(n, e, eps, cfg.v, cfg.r_max, sizes, roles)
    else:
        thr = P.disorder_threshold(e, cfg.v, cfg.r_max, n, eps)
        if not cfg.L > thr:
            raise RegimeViolation(f"side length L={cfg.L} must exceed {thr:.6g}")
        K = periodic_disorder_K(cfg, e, eps) if K is None else int(K)
        phases, consts = _periodic_phases(cfg, e, eps, K)
        consts["threshold"] = thr
    consts.update({"eps": eps, "eta_eff": e})
    return ControlPlan(
        name="disorder",
        kind=kind,
        eta=eta,
        phases=phases,
        target=Disordered(eps),
        precondition=OrderBox(e),
        constants=consts,
    )
