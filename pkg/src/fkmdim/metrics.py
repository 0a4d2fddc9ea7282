"""Orbit-segment distances: Bowen, average, and Feldman-Katok.

The FK distance between two orbit segments of length ``n`` is

    d_FK_n(x, y) = inf{delta > 0 : fbar_{n,delta}(x, y) < delta},

where ``fbar_{n,delta} = 1 - k/n`` and ``k`` is the size of the largest
order-preserving partial matching ``i -> pi(i)`` with
``d(T^i x, T^pi(i) y) < delta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigError
from .systems import OrbitSegment, SystemSpec, feature_stack

Mode = Literal["exact", "bisection"]


@dataclass(frozen=True)
class MatchCertificate:
    """An order-preserving partial bijection witnessing a matching size."""

    pairs: tuple[tuple[int, int], ...]
    delta: float
    n: int

    @property
    def size(self) -> int:
        return len(self.pairs)

    def verify(self, a: OrbitSegment, b: OrbitSegment, band: float = 0.0) -> bool:
        """Check monotonicity, index range and ``d < delta + band`` for every pair."""
        D = cross_distances(a, b)
        prev_i = prev_j = -1
        for i, j in self.pairs:
            if not (prev_i < i < self.n and prev_j < j < self.n):
                return False
            if not D[i, j] < self.delta + band:
                return False
            prev_i, prev_j = i, j
        return True


@dataclass(frozen=True)
class FkDistance:
    value: float
    n: int
    mode: str
    tolerance: float
    certificate: MatchCertificate | None = None


def _check_pair(a: OrbitSegment, b: OrbitSegment) -> int:
    if a.length != b.length:
        raise ConfigError(f"orbit lengths differ: {a.length} vs {b.length}")
    if a.system is not b.system and a.system.name != b.system.name:
        raise ConfigError("orbits come from different systems")
    return a.length


def cross_distances(a: OrbitSegment, b: OrbitSegment) -> np.ndarray:
    """``D[i, j] = d(T^i x, T^j y)``."""
    return K.cross_matrix(a.features, b.features, a.system.metric, a.system.weights)


def bowen_distance(a: OrbitSegment, b: OrbitSegment) -> float:
    _check_pair(a, b)
    return float(np.max(np.diagonal(cross_distances(a, b))))


def average_distance(a: OrbitSegment, b: OrbitSegment) -> float:
    _check_pair(a, b)
    return float(np.mean(np.diagonal(cross_distances(a, b))))


def max_match_size(a: OrbitSegment, b: OrbitSegment, delta: float) -> int:
    _check_pair(a, b)
    if not delta > 0:
        raise ConfigError("delta must be positive")
    return int(K.match_count(cross_distances(a, b), float(delta), True))


def f_bar(a: OrbitSegment, b: OrbitSegment, delta: float) -> float:
    n = _check_pair(a, b)
    return (n - max_match_size(a, b, delta)) / n


def match_table(hit: np.ndarray) -> np.ndarray:
    """Full LCS table for a boolean match matrix (certificate route)."""
    n, m = hit.shape
    L = np.zeros((n + 1, m + 1), dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = max(L[i - 1, j], L[i, j - 1])
            if hit[i - 1, j - 1]:
                best = max(best, L[i - 1, j - 1] + 1)
            L[i, j] = best
    return L


def match_certificate(a: OrbitSegment, b: OrbitSegment, delta: float,
                      strict: bool = True) -> MatchCertificate:
    """A maximum matching at threshold ``delta``, recovered by backtracking."""
    n = _check_pair(a, b)
    D = cross_distances(a, b)
    hit = D < delta if strict else D <= delta
    L = match_table(hit)
    pairs = []
    i = j = n
    while i > 0 and j > 0:
        if hit[i - 1, j - 1] and L[i, j] == L[i - 1, j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif L[i - 1, j] == L[i, j]:
            i -= 1
        else:
            j -= 1
    return MatchCertificate(tuple(reversed(pairs)), float(delta), n)


def _same_point(a: OrbitSegment, b: OrbitSegment) -> bool:
    return a.features.shape == b.features.shape and np.array_equal(a.features, b.features)


def fk_distance(a: OrbitSegment, b: OrbitSegment, mode: Mode = "exact",
                tol: float = 1e-6, certificate: bool = False) -> FkDistance:
    """FK distance between two orbit segments.

    ``exact`` returns the infimum itself (an element of the breakpoint set
    of iterate distances and multiples of ``1/n``); ``bisection`` returns a
    value within ``tol`` above it.  With ``certificate=True`` a maximum
    matching at the returned value is attached.
    """
    n = _check_pair(a, b)
    if mode not in ("exact", "bisection"):
        raise ConfigError(f"unknown mode {mode!r}")
    if mode == "bisection" and not tol > 0:
        raise ConfigError("tol must be positive in bisection mode")
    if _same_point(a, b):
        value = 0.0
    elif mode == "exact":
        value = float(K.fk_exact(cross_distances(a, b)))
    else:
        value = float(K.fk_bisect(cross_distances(a, b), float(tol)))
    cert = None
    if certificate:
        cert = match_certificate(a, b, value, strict=False) if value > 0 else \
            MatchCertificate(tuple((i, i) for i in range(n)), 0.0, n)
    return FkDistance(value, n, mode, 0.0 if mode == "exact" else tol, cert)


def fk_ball_membership(center: OrbitSegment, y: OrbitSegment, epsilon: float,
                       closed: bool = False, band: float | None = None) -> str:
    """``"in"``, ``"out"`` or ``"boundary"`` when ``|d_FK - epsilon| <= band``."""
    _check_pair(center, y)
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if _same_point(center, y):
        return "in"
    band = center.system.band if band is None else band
    d = float(K.fk_exact(cross_distances(center, y)))
    if band > 0 and abs(d - epsilon) <= band:
        return "boundary"
    return "in" if (d <= epsilon if closed else d < epsilon) else "out"


def fk_ball_contains(center: OrbitSegment, y: OrbitSegment, epsilon: float,
                     closed: bool = False, boundary: Literal["in", "out"] = "out",
                     band: float | None = None) -> bool:
    """FK ball membership; boundary cases resolve to ``boundary``.

    With ``band=0`` this is the plain strict (open) or non-strict (closed)
    comparison of the exact distance.
    """
    state = fk_ball_membership(center, y, epsilon, closed, band)
    if state == "boundary":
        return boundary == "in"
    return state == "in"


def fk_matrix(segments: Sequence[OrbitSegment]) -> np.ndarray:
    """Exact pairwise FK distances of a sample of equal-length segments."""
    F = feature_stack(segments)
    sysm = segments[0].system
    return K.fk_pairwise(F, sysm.metric, sysm.weights)


def fk_cross_matrix(left: Sequence[OrbitSegment], right: Sequence[OrbitSegment]) -> np.ndarray:
    FA = feature_stack(left)
    FB = feature_stack(right)
    if FA.shape[1] != FB.shape[1]:
        raise ConfigError("orbit lengths differ")
    sysm = left[0].system
    return K.fk_cross(FA, FB, sysm.metric, sysm.weights)


def fk_incidence(centers: Sequence[OrbitSegment], targets: Sequence[OrbitSegment],
                 epsilon: float, closed: bool = False) -> np.ndarray:
    """Boolean matrix: ``targets[q]`` in the FK ``epsilon``-ball of ``centers[p]``."""
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    FA = feature_stack(centers)
    FB = feature_stack(targets)
    if FA.shape[1] != FB.shape[1]:
        raise ConfigError("orbit lengths differ")
    sysm = centers[0].system
    return K.ball_incidence(FA, FB, float(epsilon), bool(closed), sysm.metric, sysm.weights)


def system_of(segments: Sequence[OrbitSegment]) -> SystemSpec:
    return segments[0].system


def bowen_matrix(segments: Sequence[OrbitSegment]) -> np.ndarray:
    """Pairwise Bowen distances ``max_i d(T^i x, T^i y)``."""
    F = feature_stack(segments)
    sysm = segments[0].system
    out = np.zeros((F.shape[0], F.shape[0]))
    for i in range(F.shape[1]):
        Fi = np.ascontiguousarray(F[:, i])
        np.maximum(out, K.cross_matrix(Fi, Fi, sysm.metric, sysm.weights), out=out)
    return out


def average_matrix(segments: Sequence[OrbitSegment]) -> np.ndarray:
    """Pairwise averaged distances ``(1/n) sum_i d(T^i x, T^i y)``."""
    F = feature_stack(segments)
    sysm = segments[0].system
    out = np.zeros((F.shape[0], F.shape[0]))
    for i in range(F.shape[1]):
        Fi = np.ascontiguousarray(F[:, i])
        out += K.cross_matrix(Fi, Fi, sysm.metric, sysm.weights)
    return out / F.shape[1]
