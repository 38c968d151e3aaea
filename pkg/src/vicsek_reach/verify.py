"""Reachability replay checks, analytic cross-checks and first-passage statistics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from .dynamics import SimConfig, SwarmState
from .metrics import MetricSeries, heading_span, order_parameter
from .steering.base import Adversary, ControlPlan, ScriptAdversary, make_adversary, replay

EXHAUSTIVE_LIMIT = 10**5
MIN_GAPS = 20


# -- robust reachability -------------------------------------------------------


@dataclass
class ReachabilityReport:
    plan: str
    trials: int
    failures: int
    horizon: int
    first_hits: List[Optional[int]]
    members_at_horizon: List[Optional[bool]]
    adversary: str
    exhaustive: bool
    branches: int = 1

    def __post_init__(self):
        if not 0 <= self.failures <= self.trials:
            raise ValueError("failures must lie in [0, trials]")

    @property
    def worst_hit(self) -> Optional[int]:
        hits = [h for h in self.first_hits if h is not None]
        return max(hits) if hits else None

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def rows(self):
        return [
            (k, "" if h is None else h, "" if m is None else int(m))
            for k, (h, m) in enumerate(zip(self.first_hits, self.members_at_horizon))
        ]

    def summary(self) -> str:
        mode = f"exhaustive over {self.branches} uncertainty scripts" if self.exhaustive else self.adversary
        return (
            f"plan={self.plan} horizon={self.horizon} trials={self.trials} failures={self.failures} "
            f"worst_first_hit={self.worst_hit} adversary={mode}"
        )


def branch_count(n: int, horizon: int) -> int:
    return 3 ** (n * horizon)


def _scripts(n: int, horizon: int):
    for combo in itertools.product((-1.0, 0.0, 1.0), repeat=n * horizon):
        yield np.asarray(combo).reshape(horizon, n)


def check_robust_reachability(
    plan: ControlPlan,
    cfg: SimConfig,
    init_sampler: Callable[[np.random.Generator], SwarmState],
    adversary: Union[str, Adversary, None] = "endpoint",
    trials: int = 100,
    seed: int = 0,
    exhaustive: Optional[bool] = None,
) -> ReachabilityReport:
    """Replay ``plan`` from ``trials`` sampled initial states.

    A trial succeeds when the target holds at time 0 or at some step in
    ``[1, horizon]``. When ``3^(n * horizon) <= 10^5`` every uncertainty script
    in ``{-delta, 0, +delta}`` is replayed and a trial succeeds only if all of
    them do; otherwise ``adversary`` supplies the uncertainty. Inadmissible
    controls propagate as :class:`~vicsek_reach.dynamics.InadmissibleControl`.
    """
    if plan.target is None:
        raise ValueError("plan has no target set to check")
    if isinstance(adversary, str) or adversary is None:
        adversary = make_adversary(adversary or "endpoint")
    H = plan.horizon
    branches = branch_count(cfg.n, H)
    if exhaustive is None:
        exhaustive = branches <= EXHAUSTIVE_LIMIT
    if exhaustive and branches > EXHAUSTIVE_LIMIT:
        raise ValueError(f"{branches} scripts exceed the exhaustive limit {EXHAUSTIVE_LIMIT}")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    hits, members = [], []
    failures = 0
    for ss in seeds:
        init_rng, adv_seed = np.random.default_rng(ss.spawn(1)[0]), ss.generate_state(1)[0]
        init = init_sampler(init_rng)
        if exhaustive:
            worst_hit, all_member, ok = 0, True, True
            for script in _scripts(cfg.n, H):
                res = replay(plan, cfg, init, ScriptAdversary(script), record=False)
                if not res.reached:
                    ok, worst_hit = False, None
                elif worst_hit is not None:
                    worst_hit = max(worst_hit, res.first_hit)
                all_member = all_member and bool(res.member_at_horizon)
            hits.append(worst_hit)
            members.append(all_member)
        else:
            res = replay(plan, cfg, init, adversary, seed=int(adv_seed), record=False)
            ok = res.reached
            hits.append(res.first_hit)
            members.append(res.member_at_horizon)
        failures += not ok
    return ReachabilityReport(
        plan=plan.name,
        trials=trials,
        failures=failures,
        horizon=H,
        first_hits=hits,
        members_at_horizon=members,
        adversary=repr(adversary),
        exhaustive=exhaustive,
        branches=branches if exhaustive else 1,
    )


# -- span / order cross-checks -------------------------------------------------


def lemma2_bound(eps: float) -> float:
    """Largest span guaranteeing phi >= 1 - eps."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    return math.acos((1 - eps) ** 2)


def lemma2_check(headings, eps: float, tol: float = 1e-12) -> bool:
    """Whether ``span <= bound  =>  phi >= 1 - eps`` holds for ``headings``."""
    if heading_span(headings) > lemma2_bound(eps):
        return True
    return order_parameter(headings) >= 1 - eps - tol


def span_bruteforce_oracle(headings, grid: int = 10**4) -> float:
    """Shortest covering arc over ``grid`` evenly spaced start angles.

    Over-estimates the true span by at most 2pi/grid.
    """
    if grid < 10**3:
        raise ValueError("grid must have at least 1000 points")
    th = np.asarray(headings, dtype=float).ravel()
    if th.size == 0:
        return 0.0
    best = math.inf
    two_pi = 2 * math.pi
    for chunk in np.array_split(np.arange(grid), max(1, grid * th.size // 2_000_000)):
        starts = -math.pi + two_pi * chunk / grid
        lengths = np.mod(th[None, :] - starts[:, None], two_pi).max(axis=1)
        best = min(best, float(lengths.min()))
    return best


# -- switching -----------------------------------------------------------------


@dataclass
class SwitchRecord:
    """Alternating first-passage times; even indices are ordered hits, odd ones disordered hits."""

    times: List[int]
    high: float
    low: float

    @property
    def ordered_times(self) -> List[int]:
        return self.times[0::2]

    @property
    def disordered_times(self) -> List[int]:
        return self.times[1::2]

    @property
    def gaps(self) -> List[int]:
        """Durations between consecutive ordered hits (one full order-disorder-order cycle)."""
        o = self.ordered_times
        return [b - a for a, b in zip(o, o[1:])]

    @property
    def cycles(self) -> int:
        return len(self.gaps)


def extract_switches(series, eps: float, high: Optional[float] = None, low: Optional[float] = None) -> SwitchRecord:
    """Alternate between first times with phi >= high and phi <= low.

    ``high`` and ``low`` default to ``1 - eps`` and ``eps``. ``series`` is a
    :class:`MetricSeries` (its ``t`` column is used) or a plain phi array
    indexed from 0.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    high = 1 - eps if high is None else high
    low = eps if low is None else low
    if not low < high:
        raise ValueError("the disordered threshold must lie below the ordered one")
    if isinstance(series, MetricSeries):
        t, phi = np.asarray(series.t), np.asarray(series.phi)
    else:
        phi = np.asarray(series, dtype=float)
        t = np.arange(phi.shape[0])
    if phi.size == 0:
        raise ValueError("series is empty")
    hit_high = np.flatnonzero(phi >= high)
    hit_low = np.flatnonzero(phi <= low)
    times: List[int] = []
    pos, want_high = -1, True
    while True:
        arr = hit_high if want_high else hit_low
        k = np.searchsorted(arr, pos, side="right")
        if k == arr.size:
            break
        pos = int(arr[k])
        times.append(int(t[pos]))
        want_high = not want_high
    return SwitchRecord(times, high, low)


# -- tails ---------------------------------------------------------------------


class Insufficient(ValueError):
    """Too few samples for tail diagnostics."""


@dataclass
class TailReport:
    t: np.ndarray
    survival: np.ndarray
    slope: float
    intercept: float
    envelope_c: float
    envelope_T: int
    envelope_found: bool
    gaps: int = 0
    notes: List[str] = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"gaps={self.gaps} log-survival slope={self.slope:.6g} "
            f"envelope c={self.envelope_c:.6g} T={self.envelope_T} found={self.envelope_found}"
        )


def survival(gaps: Sequence[float]):
    """Empirical P(gap > t) at every distinct gap value t."""
    g = np.sort(np.asarray(gaps, dtype=float))
    t = np.unique(g)
    s = 1.0 - np.searchsorted(g, t, side="right") / g.size
    return t, s


def _envelope(g: np.ndarray, t: np.ndarray, s: np.ndarray):
    """Smallest c for P(gap > t) <= c^floor(t/T) over a grid of T; picks the fastest per-step rate."""
    best = (1.0, int(max(g.max(), 1)), False)
    best_rate = math.inf
    cands = np.unique(np.maximum(1, np.quantile(g, np.linspace(0.05, 1.0, 20)).astype(int)))
    for T in cands:
        m = np.floor(t / T)
        mask = m >= 1
        if not mask.any():
            continue
        c = float(np.max(s[mask] ** (1.0 / m[mask])))
        if c < 1.0:
            rate = c ** (1.0 / T)
            if rate < best_rate:
                best_rate, best = rate, (c, int(T), True)
    return best


def tail_report(gaps: Sequence[float], min_count: int = 5) -> TailReport:
    """Survival table, log-survival slope and a geometric envelope check.

    The slope is a least-squares fit of log P(gap > t) against t over the
    points with at least ``min_count`` surviving samples.
    """
    g = np.asarray(gaps, dtype=float)
    if g.size < MIN_GAPS:
        raise Insufficient(f"need at least {MIN_GAPS} gaps, got {g.size}")
    t, s = survival(g)
    keep = s * g.size >= min_count
    notes = []
    if keep.sum() >= 2:
        slope, intercept = np.polyfit(t[keep], np.log(s[keep]), 1)
    else:
        slope, intercept = -math.inf, 0.0
        notes.append("fewer than two survival points with enough samples; slope undefined")
    c, T, found = _envelope(g, t, s)
    return TailReport(t, s, float(slope), float(intercept), c, T, found, int(g.size), notes)
