"""Independent per-agent heading noise and density lower-bound certificates.

All randomness comes from numpy's PCG64 bit generator. A trajectory seed is
expanded with :class:`numpy.random.SeedSequence`; each agent owns a spawned
child stream, so the draws of agent ``i`` do not depend on how many values the
other agents have consumed or on the block size used to fetch them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtr, ndtri


class NoCertificate(ValueError):
    """The requested box [-eta, eta] is not inside the noise support."""


@dataclass(frozen=True)
class UniformIID:
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")


@dataclass(frozen=True)
class GaussianIID:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class TruncatedGaussianIID:
    sigma: float
    cut: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.cut > 0):
            raise ValueError("sigma and cut must be positive")


NoiseSpec = Union[UniformIID, GaussianIID, TruncatedGaussianIID]


def noise_from_dict(d: dict) -> NoiseSpec:
    kind = str(d.get("kind", "uniform")).lower()
    if kind == "uniform":
        return UniformIID(float(d["half_width"]))
    if kind == "gaussian":
        return GaussianIID(float(d["sigma"]))
    if kind in ("truncated_gaussian", "truncated"):
        return TruncatedGaussianIID(float(d["sigma"]), float(d["cut"]))
    raise ValueError(f"unknown noise kind {kind!r}")


def noise_to_dict(spec: NoiseSpec) -> dict:
    if isinstance(spec, UniformIID):
        return {"kind": "uniform", "half_width": spec.half_width}
    if isinstance(spec, GaussianIID):
        return {"kind": "gaussian", "sigma": spec.sigma}
    return {"kind": "truncated_gaussian", "sigma": spec.sigma, "cut": spec.cut}


def _draw(spec: NoiseSpec, rng: np.random.Generator, size) -> np.ndarray:
    if isinstance(spec, UniformIID):
        return rng.uniform(-spec.half_width, spec.half_width, size=size)
    if isinstance(spec, GaussianIID):
        return spec.sigma * rng.standard_normal(size=size)
    if isinstance(spec, TruncatedGaussianIID):
        # inverse CDF keeps exactly one uniform per draw
        a = ndtr(-spec.cut / spec.sigma)
        p = a + (1.0 - 2.0 * a) * rng.random(size=size)
        return np.clip(spec.sigma * ndtri(p), -spec.cut, spec.cut)
    raise TypeError(f"unsupported noise spec {spec!r}")


def sample(spec: NoiseSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent draws from ``spec`` using a single generator."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return _draw(spec, rng, n)


class NoiseStream:
    """Per-agent counter-split noise streams for one trajectory."""

    def __init__(self, spec: NoiseSpec, n: int, seed: Union[int, np.random.SeedSequence]):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self.spec = spec
        self.n = n
        self._rngs = [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n)]

    def draw(self) -> np.ndarray:
        return np.array([_draw(self.spec, g, None) for g in self._rngs], dtype=float)

    def block(self, steps: int) -> np.ndarray:
        """``(steps, n)`` array; row k is the draw for the k-th upcoming step."""
        out = np.empty((steps, self.n))
        for i, g in enumerate(self._rngs):
            out[:, i] = _draw(self.spec, g, steps)
        return out


@dataclass(frozen=True)
class NoiseBoundCertificate:
    eta: float
    rho_lower: float
    n: int

    @property
    def marginal_lower(self) -> float:
        return self.rho_lower ** (1.0 / self.n)


def _marginal_density(spec: NoiseSpec, x: float) -> float:
    if isinstance(spec, UniformIID):
        return 1.0 / (2.0 * spec.half_width) if abs(x) <= spec.half_width else 0.0
    if isinstance(spec, GaussianIID):
        z = x / spec.sigma
        return math.exp(-0.5 * z * z) / (spec.sigma * math.sqrt(2.0 * math.pi))
    z = x / spec.sigma
    mass = float(ndtr(spec.cut / spec.sigma) - ndtr(-spec.cut / spec.sigma))
    if abs(x) > spec.cut:
        return 0.0
    return math.exp(-0.5 * z * z) / (spec.sigma * math.sqrt(2.0 * math.pi) * mass)


def certificate(spec: NoiseSpec, eta: float, n: int) -> NoiseBoundCertificate:
    """Tightest lower bound of the joint density on ``[-eta, eta]^n``.

    Every supported marginal is symmetric and non-increasing in ``|x|``, so the
    infimum over the box is the marginal density at ``eta`` raised to ``n``.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(spec, UniformIID) and eta > spec.half_width:
        raise NoCertificate(f"eta={eta} exceeds uniform half width {spec.half_width}")
    if isinstance(spec, TruncatedGaussianIID) and eta > spec.cut:
        raise NoCertificate(f"eta={eta} exceeds truncation {spec.cut}")
    if isinstance(spec, UniformIID):
        rho = (2.0 * spec.half_width) ** (-n)
    else:
        rho = _marginal_density(spec, eta) ** n
    return NoiseBoundCertificate(eta=eta, rho_lower=rho, n=n)


@dataclass(frozen=True)
class DensityCheckReport:
    passed: bool
    edges: np.ndarray
    density: np.ndarray
    std_error: np.ndarray
    threshold: float
    worst_bin: int


def empirical_density_check(
    spec: NoiseSpec,
    cert: NoiseBoundCertificate,
    samples: int = 1_000_000,
    bins: int = 20,
    seed: int = 0,
) -> DensityCheckReport:
    """Histogram the marginal on [-eta, eta] against the certified per-agent bound.

    A bin fails when its empirical density sits more than three standard errors
    below ``rho_lower ** (1/n)``.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = sample(spec, samples, rng)
    edges = np.linspace(-cert.eta, cert.eta, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    width = edges[1] - edges[0]
    p = counts / samples
    density = p / width
    se = np.sqrt(p * (1.0 - p) / samples) / width
    slack = density + 3.0 * se - cert.marginal_lower
    return DensityCheckReport(
        passed=bool(np.all(slack >= 0)),
        edges=edges,
        density=density,
        std_error=se,
        threshold=cert.marginal_lower,
        worst_bin=int(np.argmin(slack)),
    )
