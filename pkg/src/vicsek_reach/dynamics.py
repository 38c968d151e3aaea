"""State, configuration and one-step evolution of the two heading-update systems.

System I updates each heading to the weighted circular mean of its neighbours'
headings (``atan2`` of the weighted sine and cosine sums); System II uses the
plain weighted arithmetic mean of the raw angles. Both add a per-agent
perturbation (noise or control plus uncertainty), wrap the result into
``[-pi, pi)`` and then advance positions with the *new* headings.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Optional, Union

import numpy as np

if TYPE_CHECKING:
    from .noise import NoiseSpec

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# A weighted heading vector whose norm falls below this fraction of the total
# weight is treated as cancelled (atan2(0, 0) has no meaningful direction).
DEGENERATE_REL_TOL = 1e-12


class DegenerateMeanError(ArithmeticError):
    """The weighted heading vectors of an agent's neighbourhood cancel out."""


class SystemKind(enum.Enum):
    SYSTEM_I = "I"
    SYSTEM_II = "II"

    @classmethod
    def parse(cls, value: Union[str, "SystemKind"]) -> "SystemKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper().replace("SYSTEM", "").replace("_", "").strip()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown system kind {value!r}")


@dataclass(frozen=True)
class Open:
    """Agents move freely in the plane."""

    @property
    def periodic(self) -> bool:
        return False


@dataclass(frozen=True)
class Periodic:
    """Agents live on the torus ``[0, L)^2``."""

    L: float

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"periodic side length must be positive, got {self.L}")

    @property
    def periodic(self) -> bool:
        return True


Boundary = Union[Open, Periodic]

# weight_rule(cfg, positions, dist) -> F with F[i, j] = f_ij
WeightRule = Callable[["SimConfig", np.ndarray, np.ndarray], np.ndarray]


def indicator_weights(cfg: "SimConfig", positions: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """f_ij = 1 when agent j lies within agent i's radius, else 0."""
    return (dist <= cfg.radii[:, None]).astype(float)


@dataclass(frozen=True, eq=False)
class SimConfig:
    n: int
    v: float
    radii: np.ndarray
    boundary: Boundary = field(default_factory=Open)
    weight_rule: Optional[WeightRule] = None
    noise: Optional["NoiseSpec"] = None
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need at least two agents, got n={self.n}")
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ValueError(f"speed must be positive, got v={self.v}")
        radii = np.asarray(self.radii, dtype=float)
        if radii.ndim == 0:
            radii = np.full(self.n, float(radii))
        if radii.shape != (self.n,):
            raise ValueError(f"expected {self.n} radii, got shape {radii.shape}")
        if np.any(~np.isfinite(radii)) or np.any(radii < 0):
            raise ValueError("radii must be finite and non-negative")
        radii = radii.copy()
        radii.setflags(write=False)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "radii", radii)

    @property
    def r_max(self) -> float:
        return float(self.radii.max())

    @property
    def periodic(self) -> bool:
        return self.boundary.periodic

    @property
    def L(self) -> Optional[float]:
        return self.boundary.L if self.boundary.periodic else None

    @property
    def uses_indicator_weights(self) -> bool:
        return self.weight_rule is None or self.weight_rule is indicator_weights

    def weights(self, positions: np.ndarray, dist: np.ndarray) -> np.ndarray:
        rule = self.weight_rule or indicator_weights
        return np.asarray(rule(self, positions, dist), dtype=float)


@dataclass(frozen=True, eq=False)
class SwarmState:
    t: int
    positions: np.ndarray
    headings: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        th = np.array(self.headings, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must have shape (n, 2), got {pos.shape}")
        if th.shape != (pos.shape[0],):
            raise ValueError("one heading per agent required")
        pos.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "headings", th)

    @property
    def n(self) -> int:
        return self.headings.shape[0]

    def permuted(self, perm) -> "SwarmState":
        perm = np.asarray(perm)
        return SwarmState(self.t, self.positions[perm], self.headings[perm])


@dataclass(frozen=True, eq=False)
class StepInput:
    """Additive heading perturbation for one step.

    ``provenance`` is ``"noise"`` for a raw noise draw, or ``"control"`` when the
    perturbation is a control ``u`` plus an uncertainty ``b`` with margin ``delta``.
    """

    values: np.ndarray
    provenance: str = "noise"
    u: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    delta: Optional[np.ndarray] = None

    @classmethod
    def noise(cls, xi) -> "StepInput":
        return cls(np.asarray(xi, dtype=float), "noise")

    @classmethod
    def zero(cls, n: int) -> "StepInput":
        return cls(np.zeros(n), "noise")

    @classmethod
    def control(cls, u, b, delta, eta: float, atol: float = 1e-12) -> "StepInput":
        u = np.asarray(u, dtype=float)
        b = np.asarray(b, dtype=float)
        delta = np.asarray(delta, dtype=float)
        if delta.shape != u.shape:
            delta = np.broadcast_to(delta, u.shape)
        check_admissible(u, delta, eta, atol=atol)
        if (np.abs(b) > delta + atol).any():
            raise InadmissibleControl("uncertainty exceeds its margin |b_i| <= delta_i")
        return cls(u + b, "control", u, b, delta)


class InadmissibleControl(ValueError):
    """A control violates delta_i in (0, eta) or |u_i| <= eta - delta_i."""


def check_admissible(u: np.ndarray, delta: np.ndarray, eta: float, atol: float = 1e-12) -> None:
    u = np.asarray(u, dtype=float)
    delta = np.asarray(delta, dtype=float)
    # NaN and inf fail these comparisons, so one pass also rejects non-finite input
    margin_ok = ((delta > 0) & (delta < eta)).all()
    if margin_ok and (np.abs(u) <= eta - delta + atol).all():
        return
    if not (np.isfinite(u).all() and np.isfinite(delta).all()):
        raise InadmissibleControl("non-finite control or margin")
    if not margin_ok:
        raise InadmissibleControl(f"margin outside (0, eta={eta}): {delta}")
    excess = np.abs(u) - (eta - delta)
    i = int(np.argmax(excess))
    raise InadmissibleControl(f"|u_{i}|={abs(u[i]):.6g} exceeds eta - delta_{i}={eta - delta[i]:.6g}")


def wrap_heading(x):
    """Map an angle (or array of angles) into ``[-pi, pi)``."""
    if np.ndim(x) == 0:
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"cannot wrap non-finite angle {x}")
        r = math.fmod(x + math.pi, TWO_PI)
        if r < 0:
            r += TWO_PI
        r -= math.pi
        return -math.pi if r >= math.pi else r
    arr = np.asarray(x, dtype=float)
    if not np.isfinite(arr).all():
        raise ValueError("cannot wrap non-finite angles")
    r = np.fmod(arr + math.pi, TWO_PI)
    r[r < 0] += TWO_PI
    r -= math.pi
    r[r >= math.pi] = -math.pi
    return r


def _axis_gaps(cfg: SimConfig, d: np.ndarray) -> np.ndarray:
    d = np.abs(d)
    if cfg.periodic:
        L = cfg.boundary.L
        d = np.mod(d, L)
        d = np.minimum(d, L - d)
    return d


def pair_distance(cfg: SimConfig, xi, xj) -> float:
    """Euclidean distance, or minimum-image distance on the torus."""
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    if xi.shape != (2,) or xj.shape != (2,):
        raise ValueError("points must be 2-vectors")
    g = _axis_gaps(cfg, xi - xj)
    return math.sqrt(g[0] * g[0] + g[1] * g[1])


def distance_matrix(cfg: SimConfig, positions: np.ndarray) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    g = _axis_gaps(cfg, positions[:, None, :] - positions[None, :, :])
    return np.sqrt(np.einsum("ijk,ijk->ij", g, g))


def neighbor_matrix(cfg: SimConfig, positions: np.ndarray, method: str = "brute") -> np.ndarray:
    """Boolean ``A`` with ``A[i, j]`` true iff j is within agent i's radius.

    ``method="grid"`` buckets agents into square cells of side ``r_max`` and only
    measures pairs in adjacent cells; it returns exactly the brute-force matrix.
    """
    positions = np.asarray(positions, dtype=float)
    if method == "brute":
        return distance_matrix(cfg, positions) <= cfg.radii[:, None]
    if method != "grid":
        raise ValueError(f"unknown neighbour search method {method!r}")

    n = positions.shape[0]
    cell = cfg.r_max
    if cell <= 0:
        return np.eye(n, dtype=bool)
    if cfg.periodic:
        L = cfg.boundary.L
        ncell = int(L // cell)
        if ncell < 3:
            return neighbor_matrix(cfg, positions, "brute")
        cell = L / ncell
        keys = np.floor(positions / cell).astype(int) % ncell
    else:
        ncell = None
        keys = np.floor(positions / cell).astype(int)

    buckets: dict = {}
    for idx, key in enumerate(map(tuple, keys)):
        buckets.setdefault(key, []).append(idx)

    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        cx, cy = keys[i]
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                k = (cx + dx, cy + dy)
                if ncell is not None:
                    k = (k[0] % ncell, k[1] % ncell)
                cand.extend(buckets.get(k, ()))
        cand = np.unique(np.asarray(cand, dtype=int))
        gx = _axis_gaps(cfg, positions[i, 0] - positions[cand, 0])
        gy = _axis_gaps(cfg, positions[i, 1] - positions[cand, 1])
        adj[i, cand] = np.sqrt(gx * gx + gy * gy) <= cfg.radii[i]
    return adj


def neighbor_set(cfg: SimConfig, state: SwarmState, i: int) -> set:
    if not 0 <= i < state.n:
        raise IndexError(f"agent id {i} out of range")
    gx = _axis_gaps(cfg, state.positions[i, 0] - state.positions[:, 0])
    gy = _axis_gaps(cfg, state.positions[i, 1] - state.positions[:, 1])
    d = np.sqrt(gx * gx + gy * gy)
    return set(np.flatnonzero(d <= cfg.radii[i]).tolist())


def weight_matrix(cfg: SimConfig, state: SwarmState) -> np.ndarray:
    dist = distance_matrix(cfg, state.positions)
    return cfg.weights(state.positions, dist)


def local_mean_headings(cfg: SimConfig, state: SwarmState, kind: SystemKind, compiled: bool = True):
    """Neighbourhood mean heading of every agent.

    Returns ``(means, degenerate)`` where ``degenerate`` flags System I agents
    whose weighted heading vectors cancel; their entry in ``means`` is NaN.
    Indicator weights go through a compiled loop unless ``compiled`` is false.
    """
    kind = SystemKind.parse(kind)
    th = state.headings
    if compiled and cfg.uses_indicator_weights:
        from ._kernels import local_means

        L = cfg.boundary.L if cfg.periodic else -1.0
        return local_means(state.positions, th, cfg.radii, L, kind is SystemKind.SYSTEM_I)
    F = weight_matrix(cfg, state)
    total = F.sum(axis=1)
    if kind is SystemKind.SYSTEM_II:
        return wrap_heading(F @ th / total), np.zeros(state.n, bool)
    S = F @ np.sin(th)
    C = F @ np.cos(th)
    degenerate = np.sqrt(S * S + C * C) <= DEGENERATE_REL_TOL * total
    means = np.where(degenerate, np.nan, wrap_heading(np.arctan2(S, C)))
    return means, degenerate


def local_mean_heading(cfg: SimConfig, state: SwarmState, i: int, kind: SystemKind) -> float:
    if not 0 <= i < state.n:
        raise IndexError(f"agent id {i} out of range")
    means, degenerate = local_mean_headings(cfg, state, kind)
    if degenerate[i]:
        raise DegenerateMeanError(f"agent {i}: weighted heading vectors cancel at t={state.t}")
    return float(means[i])


@dataclass(frozen=True)
class DegenerateEvent:
    t: int
    agent: int


def mean_headings_with_fallback(cfg, state, kind, events: Optional[list] = None) -> np.ndarray:
    """Local means where cancelled System I neighbourhoods fall back to the own heading."""
    means, degenerate = local_mean_headings(cfg, state, kind)
    if degenerate.any():
        for i in np.flatnonzero(degenerate):
            log.debug("degenerate mean for agent %d at t=%d; keeping own heading", i, state.t)
            if events is not None:
                events.append(DegenerateEvent(state.t, int(i)))
        means = np.where(degenerate, state.headings, means)
    return means


def advance(cfg: SimConfig, state: SwarmState, new_headings: np.ndarray) -> SwarmState:
    """Move every agent one step along its new heading."""
    th = wrap_heading(new_headings)
    pos = np.empty_like(state.positions)
    pos[:, 0] = state.positions[:, 0] + cfg.v * np.cos(th)
    pos[:, 1] = state.positions[:, 1] + cfg.v * np.sin(th)
    if cfg.periodic:
        L = cfg.boundary.L
        np.mod(pos, L, out=pos)
        pos[pos >= L] = 0.0
    return SwarmState(state.t + 1, pos, th)


def step(
    cfg: SimConfig,
    state: SwarmState,
    kind: SystemKind,
    inp: Union[StepInput, np.ndarray],
    events: Optional[list] = None,
) -> SwarmState:
    values = inp.values if isinstance(inp, StepInput) else np.asarray(inp, dtype=float)
    if values.shape != (state.n,):
        raise ValueError(f"step input must have length {state.n}, got shape {values.shape}")
    means = mean_headings_with_fallback(cfg, state, kind, events)
    return advance(cfg, state, means + values)


def random_state(cfg: SimConfig, rng: np.random.Generator, box: Optional[float] = None) -> SwarmState:
    """Uniform headings in [-pi, pi) and uniform positions in the box.

    Open boundaries use ``[0, box)^2`` (default 5).
    """
    side = cfg.boundary.L if cfg.periodic else (5.0 if box is None else box)
    pos = rng.uniform(0.0, side, size=(cfg.n, 2))
    th = rng.uniform(-math.pi, math.pi, size=cfg.n)
    return SwarmState(0, pos, th)


def check_weight_rule(cfg: SimConfig, rng: np.random.Generator, trials: int = 100) -> None:
    """Probe a weight rule on random states for f_ii > 0 and f_ij = 0 beyond r_i."""
    for _ in range(trials):
        st = random_state(cfg, rng)
        dist = distance_matrix(cfg, st.positions)
        F = cfg.weights(st.positions, dist)
        if F.shape != (cfg.n, cfg.n) or np.any(F < 0):
            raise ValueError("weights must be a non-negative n x n matrix")
        if np.any(np.diag(F) <= 0):
            raise ValueError("weight rule violates f_ii > 0")
        if np.any(F[dist > cfg.radii[:, None]] != 0):
            raise ValueError("weight rule gives f_ij != 0 beyond r_i")
