"""Plan abstraction, target sets, partitions, adversaries and the replay loop.

A :class:`ControlPlan` is a list of :class:`Phase` objects. Each phase runs for a
fixed number of steps and owns a feedback rule mapping the current context
(state, local means, step counters) to per-agent ``(delta, u)``. Phases that
belong to the same constructive argument share a scratch ``memo`` dict, so a
partition computed when one phase starts is visible to the next.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..dynamics import (
    SimConfig,
    StepInput,
    SwarmState,
    SystemKind,
    advance,
    mean_headings_with_fallback,
    wrap_heading,
)
from ..metrics import heading_span, order_parameter

MEMBERSHIP_TOL = 1e-9


class RegimeViolation(ValueError):
    """Plan parameters fall outside the range where the construction applies."""


# -- target sets -------------------------------------------------------------


@dataclass(frozen=True)
class TargetSet:
    """Predicate over swarm states.

    ``kind`` is one of ``order_box`` (max |theta_i| <= alpha/2), ``band``
    (max |theta_i - center| <= alpha/2), ``ordered`` (phi >= 1 - eps),
    ``disordered`` (phi <= eps), ``span_below`` (d_theta < alpha) and
    ``span_at_least`` (d_theta >= alpha).
    """

    kind: str
    value: float
    center: float = 0.0

    def __post_init__(self):
        if self.kind in ("order_box", "band", "span_below", "span_at_least"):
            if not 0 < self.value < 2 * math.pi:
                raise ValueError(f"alpha must lie in (0, 2pi), got {self.value}")
        elif self.kind in ("ordered", "disordered"):
            if not 0 < self.value < 1:
                raise ValueError(f"eps must lie in (0, 1), got {self.value}")
        else:
            raise ValueError(f"unknown target kind {self.kind!r}")

    def contains(self, headings: np.ndarray) -> bool:
        th = np.asarray(headings, dtype=float)
        tol = MEMBERSHIP_TOL
        if self.kind == "order_box":
            return bool(np.max(np.abs(th)) <= self.value / 2 + tol)
        if self.kind == "band":
            return bool(np.max(np.abs(wrap_heading(th - self.center))) <= self.value / 2 + tol)
        if self.kind == "ordered":
            return order_parameter(th) >= 1 - self.value - tol
        if self.kind == "disordered":
            return order_parameter(th) <= self.value + tol
        at_least = heading_span(th) >= self.value - tol
        return at_least if self.kind == "span_at_least" else not at_least

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "value": self.value}
        if self.kind == "band":
            d["center"] = self.center
        return d


def OrderBox(alpha: float) -> TargetSet:
    return TargetSet("order_box", alpha)


def HeadingBand(center: float, alpha: float) -> TargetSet:
    return TargetSet("band", alpha, center)


def Ordered(eps: float) -> TargetSet:
    return TargetSet("ordered", eps)


def Disordered(eps: float) -> TargetSet:
    return TargetSet("disordered", eps)


def SpanBelow(alpha: float) -> TargetSet:
    return TargetSet("span_below", alpha)


def SpanAtLeast(alpha: float) -> TargetSet:
    return TargetSet("span_at_least", alpha)


# -- partitions ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Partition:
    sets: Tuple[np.ndarray, ...]
    labels: np.ndarray

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, k):
        return self.sets[k]


def partition_by_ordinate(ordinate, sizes: Sequence[int]) -> Partition:
    """Split agents into consecutive blocks of the descending-ordinate order.

    ``ordinate`` is either a :class:`SwarmState` (second coordinate used) or a
    plain array. Ties keep ascending agent index.
    """
    y = ordinate.positions[:, 1] if isinstance(ordinate, SwarmState) else np.asarray(ordinate, float)
    sizes = [int(s) for s in sizes]
    if any(s < 0 for s in sizes) or sum(sizes) != y.shape[0]:
        raise ValueError(f"sizes {sizes} do not partition {y.shape[0]} agents")
    order = np.lexsort((np.arange(y.shape[0]), -y))
    labels = np.empty(y.shape[0], dtype=int)
    sets = []
    start = 0
    for k, s in enumerate(sizes):
        block = np.sort(order[start:start + s])
        labels[block] = k
        sets.append(block)
        start += s
    return Partition(tuple(sets), labels)


# -- frames --------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Rotated view of the plane: headings measured from ``angle``.

    Only used with rotation-equivariant dynamics (System I). On the torus the
    angle must be a multiple of pi/2 so the rotation maps the box onto itself.
    """

    angle: float = 0.0

    def headings(self, th: np.ndarray) -> np.ndarray:
        return wrap_heading(np.asarray(th) - self.angle) if self.angle else np.asarray(th)

    def ordinate(self, cfg: SimConfig, positions: np.ndarray) -> np.ndarray:
        if not self.angle:
            return positions[:, 1]
        if cfg.periodic:
            q = int(round(self.angle / (math.pi / 2)))
            if abs(self.angle - q * math.pi / 2) > 1e-9:
                raise ValueError(f"torus frames need a multiple of pi/2, got {self.angle}")
            s, c = [(0, 1), (1, 0), (0, -1), (-1, 0)][q % 4]
            return np.mod(-positions[:, 0] * s + positions[:, 1] * c, cfg.boundary.L)
        return -positions[:, 0] * math.sin(self.angle) + positions[:, 1] * math.cos(self.angle)


IDENTITY = Frame()


# -- plans ---------------------------------------------------------------------


@dataclass
class PlanContext:
    cfg: SimConfig
    kind: SystemKind
    eta: float
    t: int
    k: int
    state: SwarmState
    means: np.ndarray
    memo: dict

    @property
    def frame(self) -> Frame:
        return self.memo.get("frame", IDENTITY)

    def rel_means(self) -> np.ndarray:
        """Local means measured in the current frame."""
        return self.frame.headings(self.means)

    def ordinate(self) -> np.ndarray:
        return self.frame.ordinate(self.cfg, self.state.positions)


Rule = Callable[[PlanContext], Tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class Phase:
    name: str
    duration: int
    rule: Rule
    setup: Optional[Callable[[PlanContext], None]] = None
    group: int = 0

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("phase duration must be non-negative")


@dataclass(frozen=True)
class ControlPlan:
    name: str
    kind: SystemKind
    eta: float
    phases: Tuple[Phase, ...]
    target: Optional[TargetSet]
    precondition: Optional[TargetSet] = None
    proven: bool = True
    regime_note: str = ""
    constants: Dict[str, object] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return horizon(self)

    def phase_starts(self) -> List[int]:
        out, t = [], 0
        for ph in self.phases:
            out.append(t)
            t += ph.duration
        return out

    def describe(self) -> str:
        """Structured text (JSON) listing phases and constants, for audit."""
        doc = {
            "name": self.name,
            "system": self.kind.value,
            "eta": self.eta,
            "horizon": self.horizon,
            "proven": self.proven,
            "regime_note": self.regime_note,
            "target": None if self.target is None else self.target.to_dict(),
            "precondition": None if self.precondition is None else self.precondition.to_dict(),
            "phases": [
                {"name": p.name, "start": s, "duration": p.duration, "group": p.group}
                for p, s in zip(self.phases, self.phase_starts())
            ],
            "constants": self.constants,
        }
        return json.dumps(doc, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def horizon(plan: Optional[ControlPlan]) -> int:
    if plan is None:
        return 0
    return sum(p.duration for p in plan.phases)


def compose(*plans: ControlPlan, name: Optional[str] = None) -> ControlPlan:
    """Run plans back to back; each keeps its own memo group."""
    if not plans:
        raise ValueError("compose needs at least one plan")
    phases = []
    constants = {}
    offset = 0
    for idx, p in enumerate(plans):
        groups = sorted({ph.group for ph in p.phases})
        remap = {g: offset + i for i, g in enumerate(groups)}
        offset += len(groups)
        phases.extend(Phase(ph.name, ph.duration, ph.rule, ph.setup, remap[ph.group]) for ph in p.phases)
        constants[f"{idx}:{p.name}"] = p.constants
    kinds = {p.kind for p in plans}
    if len(kinds) != 1:
        raise ValueError("cannot compose plans for different systems")
    notes = [p.regime_note for p in plans if p.regime_note]
    return ControlPlan(
        name=name or "+".join(p.name for p in plans),
        kind=plans[0].kind,
        eta=min(p.eta for p in plans),
        phases=tuple(phases),
        target=plans[-1].target,
        precondition=plans[0].precondition,
        proven=all(p.proven for p in plans),
        regime_note="; ".join(notes),
        constants=constants,
    )


def full(n: int, value: float) -> np.ndarray:
    return np.full(n, float(value))


def bounded(delta: np.ndarray, u: np.ndarray, eta: float):
    """Clip ``u`` into ``[-(eta - delta), eta - delta]``.

    Inside the regime a construction is built for the clip never binds; it only
    keeps controls admissible when a precondition does not hold.
    """
    lim = eta - delta
    return delta, np.clip(u, -lim, lim)


# -- adversaries ---------------------------------------------------------------


class Adversary:
    """Chooses the uncertainty b_i(t) within |b_i| <= delta_i. Plans never see it."""

    name = "adversary"

    def reset(self, seed) -> None:
        self.rng = np.random.default_rng(seed)

    def __call__(self, t: int, delta: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def __repr__(self):
        return self.name


class ZeroAdversary(Adversary):
    name = "zero"

    def __call__(self, t, delta):
        return np.zeros_like(delta)


class EndpointAdversary(Adversary):
    """Random corner choice b_i = +-delta_i."""

    name = "endpoint"

    def __call__(self, t, delta):
        return np.where(self.rng.random(delta.shape) < 0.5, -delta, delta)


class RandomAdversary(Adversary):
    """b_i uniform in [-delta_i, delta_i]."""

    name = "random"

    def __call__(self, t, delta):
        return delta * self.rng.uniform(-1.0, 1.0, delta.shape)


class FixedSignAdversary(Adversary):
    def __init__(self, sign: float):
        self.sign = float(np.sign(sign))
        self.name = f"fixed{'+' if self.sign >= 0 else '-'}"

    def __call__(self, t, delta):
        return self.sign * delta


class ScriptAdversary(Adversary):
    """Replays a fixed (horizon, n) table of choices in {-1, 0, +1}."""

    name = "script"

    def __init__(self, choices: np.ndarray):
        self.choices = np.asarray(choices, dtype=float)

    def __call__(self, t, delta):
        return self.choices[t] * delta


ADVERSARIES = {
    "zero": ZeroAdversary,
    "endpoint": EndpointAdversary,
    "random": RandomAdversary,
    "plus": lambda: FixedSignAdversary(+1),
    "minus": lambda: FixedSignAdversary(-1),
}


def make_adversary(name: str) -> Adversary:
    try:
        return ADVERSARIES[name]()
    except KeyError:
        raise ValueError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)}") from None


# -- replay --------------------------------------------------------------------


@dataclass
class ReplayResult:
    plan: str
    horizon: int
    first_hit: Optional[int]
    member_at_horizon: Optional[bool]
    final: SwarmState
    states: List[SwarmState]
    phase_log: List[Tuple[int, str]]
    events: list
    controls: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]

    @property
    def reached(self) -> bool:
        return self.first_hit is not None


def replay(
    plan: ControlPlan,
    cfg: SimConfig,
    init: SwarmState,
    adversary: Optional[Adversary] = None,
    seed=0,
    record: bool = True,
    record_controls: bool = False,
) -> ReplayResult:
    """Drive ``init`` through ``plan`` with uncertainty from ``adversary``.

    Admissibility is checked at every step and raises
    :class:`~vicsek_reach.dynamics.InadmissibleControl`. ``first_hit`` is 0 when
    the initial state is already in the target, otherwise the first step in
    ``[1, horizon]`` whose state is in it.
    """
    adversary = adversary or ZeroAdversary()
    adversary.reset(seed)
    target = plan.target
    state = init
    states = [state] if record else []
    first_hit = 0 if target is not None and target.contains(state.headings) else None
    memos: Dict[int, dict] = {}
    phase_log = []
    events: list = []
    controls = []
    t = 0
    for ph in plan.phases:
        memo = memos.setdefault(ph.group, {})
        phase_log.append((t, ph.name))
        for k in range(ph.duration):
            means = mean_headings_with_fallback(cfg, state, plan.kind, events)
            ctx = PlanContext(cfg, plan.kind, plan.eta, t, k, state, means, memo)
            if k == 0 and ph.setup is not None:
                ph.setup(ctx)
            delta, u = ph.rule(ctx)
            delta = np.asarray(delta, dtype=float)
            if delta.shape != (state.n,):
                delta = np.broadcast_to(delta, (state.n,))
            b = adversary(t, delta)
            inp = StepInput.control(u, b, delta, plan.eta)
            if record_controls:
                controls.append((inp.u, inp.b, inp.delta))
            state = advance(cfg, state, means + inp.values)
            t += 1
            if record:
                states.append(state)
            if first_hit is None and target is not None and target.contains(state.headings):
                first_hit = t
    member = None if target is None else target.contains(state.headings)
    return ReplayResult(plan.name, t, first_hit, member, state, states, phase_log, events, controls)
