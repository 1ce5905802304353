"""Trace distance, qubit coherence and the discrete BLP non-Markovianity measure."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import _amps, hermitian_eigenvalues

# positive increments at or below this are floating-point noise
EPS_POS = 1e-12
# N above this counts as non-Markovian for thresholds and revivals
EPS_N = 1e-6


def trace_distance(a, b) -> float:
    """D = 1/2 Tr|a - b|, from the eigenvalues of the Hermitian difference."""
    x, y = _amps(a), _amps(b)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    # fixed operand order so that D(a, b) == D(b, a) bit for bit
    if x.tobytes() > y.tobytes():
        x, y = y, x
    d = 0.5 * float(np.sum(np.abs(hermitian_eigenvalues(x - y))))
    return min(d, 1.0)


def coherence(rho) -> float:
    """|<0|rho|1>|, half the l1-norm coherence of a qubit state."""
    r = _amps(rho)
    if r.shape != (2, 2):
        raise ValueError(f"coherence needs a qubit state, got shape {r.shape}")
    return abs(complex(r[0, 1]))


@dataclass(frozen=True)
class NmResult:
    N: float
    n_used: int
    converged: bool
    positive_intervals: tuple[tuple[int, int], ...] = field(default_factory=tuple)


def blp_from_distances(D: Sequence[float], start: int = 0, converged: bool = True,
                       eps_pos: float = EPS_POS) -> NmResult:
    """Sum the positive trace-distance increments of a sampled sequence.

    ``D[i]`` is the distance at step ``start + i``; reported intervals use
    those step indices and are inclusive on both ends.
    """
    D = np.asarray(D, dtype=float)
    if D.size == 0:
        raise ValueError("empty distance sequence")
    dD = np.diff(D)
    pos = dD > eps_pos
    intervals = []
    run_start = None
    for idx, flag in enumerate(pos):
        n = start + idx + 1
        if flag and run_start is None:
            run_start = n
        elif not flag and run_start is not None:
            intervals.append((run_start, n - 1))
            run_start = None
    if run_start is not None:
        intervals.append((run_start, start + len(dD)))
    return NmResult(
        N=math.fsum(dD[pos]),
        n_used=len(dD),
        converged=converged,
        positive_intervals=tuple(intervals),
    )


def blp_measure(traj, eps_pos: float = EPS_POS) -> NmResult:
    """Discrete BLP measure of a trajectory of the optimal state pair."""
    if not traj.records:
        raise ValueError("empty trajectory")
    D = [r.D for r in traj.records]
    return blp_from_distances(D, start=traj.records[0].n, converged=traj.converged,
                              eps_pos=eps_pos)


@dataclass(frozen=True)
class ThresholdResult:
    param_name: str
    threshold: float
    bracket: tuple[float, float]
    resolved: bool


def nonmarkovianity(cfg) -> NmResult:
    from .models import run_model

    return blp_measure(run_model(cfg))


def find_threshold(base_cfg, param: str, lo: float, hi: float, resolution: float = 1e-3,
                   eps_n: float = EPS_N) -> ThresholdResult:
    """Bisect for the smallest strength at which N exceeds ``eps_n``.

    Requires the indicator to be off at ``lo`` and on at ``hi``; otherwise the
    result is returned unresolved with ``threshold`` set to NaN.
    """
    from .models import with_param

    if hi < lo:
        raise ValueError(f"invalid bracket: lo={lo} > hi={hi}")
    if not resolution > 0:
        raise ValueError("resolution must be positive")

    def active(x):
        return nonmarkovianity(with_param(base_cfg, param, x)).N > eps_n

    if hi == lo or active(lo) or not active(hi):
        return ThresholdResult(param, math.nan, (lo, hi), False)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if active(mid):
            hi = mid
        else:
            lo = mid
    return ThresholdResult(param, 0.5 * (lo + hi), (lo, hi), True)


def detect_revivals(curve: Sequence[tuple[float, float]], eps_n: float = EPS_N):
    """Parameter gaps where N vanishes between two non-Markovian points.

    Returns ``(first, last)`` parameter values of every maximal run of
    points with ``N <= eps_n`` that has an ``N > eps_n`` neighbour on each side.
    """
    gaps = []
    seen_active = False
    gap = None
    for x, n in curve:
        if n > eps_n:
            if gap is not None and seen_active:
                gaps.append(tuple(gap))
            gap = None
            seen_active = True
        elif gap is None:
            gap = [x, x]
        else:
            gap[1] = x
    return gaps
