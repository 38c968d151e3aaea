"""Experiment configuration read from YAML.

Grammar (all keys optional unless noted)::

    system: I | II                 # required
    n: 10                          # required
    v: 0.01
    radius: 1.0                    # a number, a list of n numbers,
                                   # or {uniform: [lo, hi]} drawn per seed
    boundary: {kind: periodic, L: 5.0} | {kind: open}
    noise: {kind: uniform, half_width: 0.6} | {kind: gaussian, sigma: s}
           | {kind: truncated_gaussian, sigma: s, cut: c} | null (no noise)
    init: {kind: uniform, box: 5.0} | {kind: aligned, heading: 0.0}
          | {kind: ordered, width: 0.1}
    mode: free | steered | verify
    steps: 1000000                 # free runs
    stride: 1                      # metric sampling stride
    seeds: [0]
    out_dir: out                   # overridden by VICSEK_OUT_DIR
    save_states: false
    plan: {kind: order | disorder | span | break | turn | vortex | bifurcate,
           eta: 0.6, alpha: ..., eps: ..., T_window: ..., K: ...,
           angle: ..., total: ..., compose_order: true}
    adversary: random | endpoint | zero | plus | minus
    trials: 100                    # verify mode
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import yaml

from ..dynamics import Open, Periodic, SimConfig, SystemKind
from ..noise import NoiseSpec, noise_from_dict, noise_to_dict

OUT_ENV = "VICSEK_OUT_DIR"
MODES = ("free", "steered", "verify")


class ConfigError(ValueError):
    pass


def seed_streams(seed: int):
    """Independent (init, radii, noise) seed sequences for one trajectory."""
    return np.random.SeedSequence(seed).spawn(3)


@dataclass
class ExperimentConfig:
    system: SystemKind
    n: int
    v: float = 0.01
    radius: Union[float, list, dict] = 1.0
    boundary: Union[Open, Periodic] = field(default_factory=lambda: Periodic(5.0))
    noise: Optional[NoiseSpec] = None
    init: dict = field(default_factory=lambda: {"kind": "uniform"})
    mode: str = "free"
    steps: int = 1000
    stride: int = 1
    seeds: List[int] = field(default_factory=lambda: [0])
    out_dir: str = "out"
    save_states: bool = False
    plan: Optional[dict] = None
    adversary: str = "random"
    trials: int = 100

    def __post_init__(self):
        self.system = SystemKind.parse(self.system)
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.steps) < 1:
            raise ConfigError("steps must be at least 1")
        if int(self.stride) < 1:
            raise ConfigError("stride must be at least 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.mode != "free" and not self.plan:
            raise ConfigError(f"mode {self.mode!r} needs a plan section")
        self.steps, self.stride, self.n = int(self.steps), int(self.stride), int(self.n)
        self.seeds = [int(s) for s in self.seeds]

    def radii(self, seed: int) -> np.ndarray:
        r = self.radius
        if isinstance(r, dict):
            lo, hi = r["uniform"]
            rng = np.random.default_rng(seed_streams(seed)[1])
            return rng.uniform(float(lo), float(hi), self.n)
        return np.broadcast_to(np.asarray(r, dtype=float), (self.n,)).copy()

    def sim_config(self, seed: int) -> SimConfig:
        return SimConfig(self.n, self.v, self.radii(seed), self.boundary, noise=self.noise, seed=seed)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.out_dir)

    def to_dict(self) -> dict:
        b = {"kind": "periodic", "L": self.boundary.L} if self.boundary.periodic else {"kind": "open"}
        return {
            "system": self.system.value,
            "n": self.n,
            "v": self.v,
            "radius": self.radius,
            "boundary": b,
            "noise": None if self.noise is None else noise_to_dict(self.noise),
            "init": self.init,
            "mode": self.mode,
            "steps": self.steps,
            "stride": self.stride,
            "seeds": self.seeds,
            "out_dir": self.out_dir,
            "save_states": self.save_states,
            "plan": self.plan,
            "adversary": self.adversary,
            "trials": self.trials,
        }


def _boundary(d) -> Union[Open, Periodic]:
    if d is None:
        return Periodic(5.0)
    if isinstance(d, str):
        d = {"kind": d}
    kind = str(d.get("kind", "periodic")).lower()
    if kind == "open":
        return Open()
    if kind == "periodic":
        return Periodic(float(d.get("L", 5.0)))
    raise ConfigError(f"unknown boundary kind {kind!r}")


def from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    unknown = set(d) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("system", "n"):
        if key not in d:
            raise ConfigError(f"missing required key {key!r}")
    if "boundary" in d:
        d["boundary"] = _boundary(d["boundary"])
    if d.get("noise") is not None:
        d["noise"] = noise_from_dict(d["noise"])
    try:
        return ExperimentConfig(**d)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return from_dict(data)
