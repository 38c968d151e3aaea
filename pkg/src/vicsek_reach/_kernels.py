"""Compiled loops for indicator weights: free runs and one-step local means.

The kernel mirrors :func:`vicsek_reach.dynamics.step` operation by operation so
that both paths agree to rounding; tests compare them directly.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from .dynamics import DEGENERATE_REL_TOL

_PI = math.pi
_TWO_PI = 2.0 * math.pi


@nb.njit(cache=True, nogil=True)
def _wrap(x):
    r = np.fmod(x + _PI, _TWO_PI)
    if r < 0:
        r += _TWO_PI
    r -= _PI
    if r >= _PI:
        return -_PI
    return r


@nb.njit(cache=True, nogil=True)
def _gap(d, L):
    d = abs(d)
    if L > 0:
        d = d % L
        d = min(d, L - d)
    return d


@nb.njit(cache=True, nogil=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@nb.njit(cache=True, nogil=True)
def _metrics(pos, th, radii, L, scratch):
    n = th.shape[0]
    c = 0.0
    s = 0.0
    for i in range(n):
        c += math.cos(th[i])
        s += math.sin(th[i])
    phi = min(1.0, math.sqrt(c * c + s * s) / n)

    scratch[:] = th
    scratch.sort()
    largest = scratch[0] + _TWO_PI - scratch[n - 1]
    for i in range(n - 1):
        g = scratch[i + 1] - scratch[i]
        if g > largest:
            largest = g
    span = max(0.0, _TWO_PI - largest)

    parent = np.arange(n)
    comps = n
    for i in range(n):
        for j in range(i + 1, n):
            gx = _gap(pos[i, 0] - pos[j, 0], L)
            gy = _gap(pos[i, 1] - pos[j, 1], L)
            d = math.sqrt(gx * gx + gy * gy)
            if d <= radii[i] or d <= radii[j]:
                a = _find(parent, i)
                b = _find(parent, j)
                if a != b:
                    parent[a] = b
                    comps -= 1
    return phi, span, comps == 1


@nb.njit(cache=True, nogil=True)
def local_means(pos, th, radii, L, circular):
    """Neighbourhood means and System I degeneracy flags for one state."""
    n = th.shape[0]
    means = np.empty(n)
    degenerate = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        S = 0.0
        C = 0.0
        total = 0.0
        acc = 0.0
        for j in range(n):
            gx = _gap(pos[i, 0] - pos[j, 0], L)
            gy = _gap(pos[i, 1] - pos[j, 1], L)
            if math.sqrt(gx * gx + gy * gy) <= radii[i]:
                total += 1.0
                if circular:
                    S += math.sin(th[j])
                    C += math.cos(th[j])
                else:
                    acc += th[j]
        if circular:
            if math.sqrt(S * S + C * C) <= DEGENERATE_REL_TOL * total:
                means[i] = np.nan
                degenerate[i] = True
            else:
                means[i] = _wrap(math.atan2(S, C))
        else:
            means[i] = _wrap(acc / total)
    return means, degenerate


@nb.njit(cache=True, nogil=True)
def run_block(pos, th, radii, v, L, circular, noise, t0, stride,
              out_t, out_phi, out_span, out_weak, n_out,
              ev_t, ev_agent, n_ev):
    """Advance ``noise.shape[0]`` steps in place.

    Metrics are recorded for every state whose time index is a multiple of
    ``stride``; the state at ``t0`` itself is assumed to be recorded already.
    Returns the updated output and event counters.
    """
    n = th.shape[0]
    new = np.empty(n)
    scratch = np.empty(n)
    for k in range(noise.shape[0]):
        for i in range(n):
            S = 0.0
            C = 0.0
            total = 0.0
            acc = 0.0
            for j in range(n):
                gx = _gap(pos[i, 0] - pos[j, 0], L)
                gy = _gap(pos[i, 1] - pos[j, 1], L)
                if math.sqrt(gx * gx + gy * gy) <= radii[i]:
                    total += 1.0
                    if circular:
                        S += math.sin(th[j])
                        C += math.cos(th[j])
                    else:
                        acc += th[j]
            if circular:
                if math.sqrt(S * S + C * C) <= DEGENERATE_REL_TOL * total:
                    mean = th[i]
                    if n_ev < ev_t.shape[0]:
                        ev_t[n_ev] = t0 + k
                        ev_agent[n_ev] = i
                    n_ev += 1
                else:
                    mean = _wrap(math.atan2(S, C))
            else:
                mean = _wrap(acc / total)
            new[i] = _wrap(mean + noise[k, i])
        for i in range(n):
            th[i] = new[i]
            x = pos[i, 0] + v * math.cos(new[i])
            y = pos[i, 1] + v * math.sin(new[i])
            if L > 0:
                x = x % L
                y = y % L
                if x >= L:
                    x = 0.0
                if y >= L:
                    y = 0.0
            pos[i, 0] = x
            pos[i, 1] = y
        t = t0 + k + 1
        if t % stride == 0:
            phi, span, weak = _metrics(pos, th, radii, L, scratch)
            out_t[n_out] = t
            out_phi[n_out] = phi
            out_span[n_out] = span
            out_weak[n_out] = weak
            n_out += 1
    return n_out, n_ev


@nb.njit(cache=True, nogil=True)
def state_metrics(pos, th, radii, L):
    return _metrics(pos, th, radii, L, np.empty(th.shape[0]))
