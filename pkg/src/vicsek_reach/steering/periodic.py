"""Side-length thresholds and the choice of the discretization integer K on the torus."""

from __future__ import annotations

import math
from typing import Callable

from .base import RegimeViolation

K_MIN = 4
K_MAX = 10**6
MARGIN = 1.01


def c_n(n: int) -> float:
    return math.pi / 2 + math.asin(1.0 / (n - 1))


def _sine_sum(eta: float, upper: int) -> float:
    return sum(math.sin(eta / 2 + k * eta) for k in range(upper + 1))


def disorder_threshold(eta: float, v: float, r_max: float, n: int = 2, eps: float = 1.0) -> float:
    """Smallest admissible side length (exclusive) for the torus disorder plan."""
    if n % 2 == 0 or eps > 1.0 / n:
        return 2 * r_max + 2 * v * _sine_sum(eta, math.floor(math.pi / (2 * eta) - 0.5))
    return 3 * r_max + 2 * v * _sine_sum(eta, math.floor(c_n(n) / eta - 0.5))


def span_threshold(eta: float, v: float, r_max: float) -> float:
    return 2 * r_max + 2 * v * _sine_sum(eta, math.floor(math.pi / (2 * eta) - 0.5))


def gather_steps(L: float, v: float, eta: float, K: int, reach: float = 0.5) -> int:
    """Steps to bring every ordinate within one step of a line ``reach * L`` away at most."""
    return math.ceil(reach * L / (v * math.sin(eta / K)))


def split_steps(r_max: float, v: float, eta: float, K: int, three_sets: bool = False) -> int:
    rate = math.sin(eta / 2 - eta / K)
    if three_sets:
        rate -= math.sin(eta / (2 * K))
    return math.floor(r_max / ((1 if three_sets else 2) * v * rate)) + 1


def steer_steps(target: float, eta: float, K: int, extra: float = 0.0) -> int:
    """Steps for a group starting in [eta/2 - eta/K, eta/2] to settle at ``target``.

    ``extra`` widens the capture threshold (used by the four-set construction).
    """
    num = (2 * target - eta) * K + eta + 2 * extra * K
    return max(math.ceil(num / (2 * (K - 1) * eta)), 1)


def _max_sin(lo: float, hi: float) -> float:
    if lo > hi:
        lo = hi
    if lo <= math.pi / 2 <= hi:
        return 1.0
    return max(math.sin(lo), math.sin(hi))


def excursion(v: float, eta: float, K: int, split: int, steer: int, target: float) -> float:
    """Upper bound on how far a group drifts from the gathering line by the end of steering."""
    e = v * math.sin(2 * eta / K) + split * v * math.sin(eta / 2)
    band = eta / (2 * K)
    for s in range(1, steer + 1):
        lo = eta / 2 - eta / K + s * (1 - 1 / K) * eta
        hi = eta / 2 + s * eta
        e += v * _max_sin(min(lo, target - band), min(hi, target + band))
    return e


def choose_K(ok: Callable[[int], bool], what: str) -> int:
    """Smallest K >= 4 accepted by ``ok``; scans linearly, then geometrically up to 10^6."""
    for K in range(K_MIN, 2001):
        if ok(K):
            return K
    K = 2000
    while K < K_MAX:
        K = min(K_MAX, int(K * 1.25))
        if ok(K):
            return K
    raise RegimeViolation(f"no discretization K <= {K_MAX} satisfies the {what} bounds")
