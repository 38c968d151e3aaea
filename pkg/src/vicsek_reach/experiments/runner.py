"""Free runs, steered runs, reachability checks and figure presets."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .. import _kernels
from ..dynamics import DegenerateEvent, Periodic, SimConfig, StepInput, SwarmState, SystemKind, random_state, step
from ..metrics import MetricSeries, Trace, metric_series, state_metrics
from ..noise import NoiseStream, UniformIID
from ..steering import (
    BifurcateThenMerge,
    ControlPlan,
    Turn,
    Vortex,
    compose,
    effective_eta,
    make_adversary,
    plan_break_connectivity,
    plan_choreography,
    plan_disorder,
    plan_order,
    plan_span_at_least_pi,
    replay,
)
from ..verify import ReachabilityReport, check_robust_reachability
from .config import ConfigError, ExperimentConfig, seed_streams

BLOCK = 1 << 16
EVENT_CAP = 10_000


@dataclass
class TraceRecord:
    series: MetricSeries
    states: List[SwarmState] = field(default_factory=list)
    events: List[DegenerateEvent] = field(default_factory=list)
    event_count: int = 0
    phase_log: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


# -- initial states ------------------------------------------------------------


def initial_state(exp: ExperimentConfig, cfg: SimConfig, rng: np.random.Generator) -> SwarmState:
    spec = exp.init or {"kind": "uniform"}
    kind = spec.get("kind", "uniform")
    st = random_state(cfg, rng, spec.get("box"))
    if kind == "uniform":
        return st
    if kind == "aligned":
        return SwarmState(0, st.positions, np.full(cfg.n, float(spec.get("heading", 0.0))))
    if kind == "ordered":
        w = float(spec.get("width", 0.1))
        return SwarmState(0, st.positions, rng.uniform(-w / 2, w / 2, cfg.n))
    raise ConfigError(f"unknown init kind {kind!r}")


def init_sampler(exp: ExperimentConfig, cfg: SimConfig):
    return lambda rng: initial_state(exp, cfg, rng)


# -- free runs -----------------------------------------------------------------


def run_free(exp: ExperimentConfig, seed: Optional[int] = None, steps: Optional[int] = None) -> TraceRecord:
    """Noise-driven evolution; deterministic in ``(exp, seed)``.

    Indicator weights use the compiled kernel; custom weight rules fall back
    to the vectorized step. Both consume the same per-agent noise streams.
    """
    seed = exp.seeds[0] if seed is None else seed
    steps = exp.steps if steps is None else int(steps)
    cfg = exp.sim_config(seed)
    s_init, _, s_noise = seed_streams(seed)
    state = initial_state(exp, cfg, np.random.default_rng(s_init))
    noise = NoiseStream(exp.noise, cfg.n, s_noise) if exp.noise is not None else None
    if cfg.uses_indicator_weights:
        rec = _free_kernel(exp, cfg, state, noise, steps)
    else:
        rec = _free_python(exp, cfg, state, noise, steps)
    rec.meta.update({"seed": seed, "steps": steps, "stride": exp.stride, "system": exp.system.value, "n": cfg.n})
    return rec


def _noise_block(noise: Optional[NoiseStream], steps: int, n: int) -> np.ndarray:
    return noise.block(steps) if noise is not None else np.zeros((steps, n))


def _free_kernel(exp, cfg, state, noise, steps) -> TraceRecord:
    stride = exp.stride
    pos = np.array(state.positions, dtype=float)
    th = np.array(state.headings, dtype=float)
    radii = np.asarray(cfg.radii, dtype=float)
    L = float(cfg.L) if cfg.periodic else -1.0
    circular = exp.system is SystemKind.SYSTEM_I
    m = steps // stride + 1
    out_t = np.zeros(m, np.int64)
    out_phi, out_span = np.zeros(m), np.zeros(m)
    out_weak = np.zeros(m, np.bool_)
    phi, span, weak = _kernels.state_metrics(pos, th, radii, L)
    out_t[0], out_phi[0], out_span[0], out_weak[0] = 0, phi, span, weak
    n_out = 1
    ev_t = np.zeros(EVENT_CAP, np.int64)
    ev_a = np.zeros(EVENT_CAP, np.int64)
    n_ev = 0
    states = [state] if exp.save_states else []
    # saving states needs a pause at every stride
    chunk = stride if exp.save_states else BLOCK
    t = 0
    while t < steps:
        blk = _noise_block(noise, min(chunk, steps - t), cfg.n)
        n_out, n_ev = _kernels.run_block(
            pos, th, radii, cfg.v, L, circular, blk, t, stride,
            out_t, out_phi, out_span, out_weak, n_out, ev_t, ev_a, n_ev,
        )
        t += blk.shape[0]
        if exp.save_states and t % stride == 0:
            states.append(SwarmState(t, pos.copy(), th.copy()))
    series = MetricSeries(out_t[:n_out], out_phi[:n_out], out_span[:n_out], out_weak[:n_out])
    k = min(n_ev, EVENT_CAP)
    events = [DegenerateEvent(int(a), int(b)) for a, b in zip(ev_t[:k], ev_a[:k])]
    return TraceRecord(series, states, events, int(n_ev))


def _free_python(exp, cfg, state, noise, steps) -> TraceRecord:
    stride = exp.stride
    rows = [(0, *state_metrics(cfg, state))]
    states = [state] if exp.save_states else []
    events: list = []
    t = 0
    while t < steps:
        blk = _noise_block(noise, min(BLOCK, steps - t), cfg.n)
        for xi in blk:
            state = step(cfg, state, exp.system, StepInput.noise(xi), events)
            t += 1
            if t % stride == 0:
                rows.append((t, *state_metrics(cfg, state)))
                if exp.save_states:
                    states.append(state)
    tt, phi, d, w = zip(*rows)
    series = MetricSeries(np.array(tt), np.array(phi), np.array(d), np.array(w, dtype=bool))
    return TraceRecord(series, states, events[:EVENT_CAP], len(events))


def run_seeds(exp: ExperimentConfig, workers: int = 1) -> Dict[int, TraceRecord]:
    """Free runs for every configured seed, optionally in worker processes."""
    if workers <= 1 or len(exp.seeds) == 1:
        return {s: run_free(exp, s) for s in exp.seeds}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        recs = pool.map(run_free, [exp] * len(exp.seeds), exp.seeds)
        return dict(zip(exp.seeds, recs))


# -- plans ---------------------------------------------------------------------


def build_plan(spec: dict, kind: SystemKind, cfg: SimConfig) -> ControlPlan:
    """Build a plan from its config section; preconditioned plans get an order prefix by default."""
    spec = dict(spec)
    name = spec.get("kind")
    eta = float(spec.get("eta", 0.6))
    eps = float(spec.get("eps", 0.1))
    K = spec.get("K")
    if name == "order":
        plan = plan_order(kind, float(spec.get("alpha", eta)), eta, cfg)
    elif name == "disorder":
        plan = plan_disorder(kind, eps, eta, cfg, K=K)
    elif name == "span":
        plan = plan_span_at_least_pi(kind, eta, cfg, K=K)
    elif name == "break":
        plan = plan_break_connectivity(kind, eta, cfg, int(spec.get("T_window", 1000)), K=K)
    elif name == "turn":
        plan = plan_choreography(kind, Turn(float(spec.get("angle", math.pi / 2))), eta, K or 10, cfg, eps)
    elif name == "vortex":
        plan = plan_choreography(kind, Vortex(float(spec.get("total", 4 * math.pi))), eta, K or 10, cfg, eps)
    elif name == "bifurcate":
        plan = plan_choreography(kind, BifurcateThenMerge(float(spec.get("alpha", 0.5))), eta, K, cfg, eps)
    else:
        raise ConfigError(f"unknown plan kind {name!r}")
    if plan.precondition is not None and spec.get("compose_order", True):
        alpha = plan.precondition.value
        if name == "disorder" or name == "bifurcate":
            alpha = effective_eta(eta)
        plan = compose(plan_order(kind, alpha, eta, cfg), plan, name=f"order+{plan.name}")
    return plan


def run_steered(exp: ExperimentConfig, plan: Optional[ControlPlan] = None, adversary=None, seed=None) -> TraceRecord:
    """Replay a plan with a pluggable adversary; inadmissible controls raise."""
    seed = exp.seeds[0] if seed is None else seed
    cfg = exp.sim_config(seed)
    plan = plan or build_plan(exp.plan, exp.system, cfg)
    adversary = adversary or make_adversary(exp.adversary)
    s_init, _, s_noise = seed_streams(seed)
    init = initial_state(exp, cfg, np.random.default_rng(s_init))
    res = replay(plan, cfg, init, adversary, seed=s_noise)
    series = metric_series(Trace(cfg, res.states), exp.stride)
    meta = {
        "seed": seed,
        "plan": plan.name,
        "horizon": res.horizon,
        "first_hit": res.first_hit,
        "member_at_horizon": res.member_at_horizon,
        "proven": plan.proven,
        "adversary": repr(adversary),
    }
    states = res.states if exp.save_states else []
    return TraceRecord(series, states, res.events, len(res.events), res.phase_log, meta)


def run_verify(exp: ExperimentConfig, seed=None) -> ReachabilityReport:
    seed = exp.seeds[0] if seed is None else seed
    cfg = exp.sim_config(seed)
    plan = build_plan(exp.plan, exp.system, cfg)
    return check_robust_reachability(plan, cfg, init_sampler(exp, cfg), exp.adversary, exp.trials, seed)


# -- figures -------------------------------------------------------------------

FIGURE_SIZES = (10, 25, 40)


def figure_config(fig_id: int, n: int, steps: int = 10**6, stride: int = 1, seed: int = 0) -> ExperimentConfig:
    """Preset: side 5 torus, speed 0.01, noise U[-0.6, 0.6]; radius 1 or U[0, 2]."""
    if fig_id not in (1, 2, 3, 4):
        raise ConfigError(f"figure id must be 1..4, got {fig_id}")
    return ExperimentConfig(
        system=SystemKind.SYSTEM_II if fig_id in (1, 3) else SystemKind.SYSTEM_I,
        n=n,
        v=0.01,
        radius={"uniform": [0.0, 2.0]} if fig_id in (3, 4) else 1.0,
        boundary=Periodic(5.0),
        noise=UniformIID(0.6),
        steps=steps,
        stride=stride,
        seeds=[seed],
    )


def reproduce_figure(fig_id: int, seed: int = 0, steps: int = 10**6, stride: int = 1, sizes=FIGURE_SIZES):
    """One free run per flock size; returns ``{n: TraceRecord}``."""
    return {n: run_free(figure_config(fig_id, n, steps, stride, seed), seed) for n in sizes}
