"""FK spanning sets, the 5r-covering lemma and Caratheodory covering sums.

Covers are built from balls centred at sample points.  The quantity
``M_FK(T, d, Z, s, N, eps)`` is available exactly on toy instances
(:func:`caratheodory_value_small`); at realistic sizes the critical exponent
is approximated by the growth rate of fixed-length greedy cover counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, InstanceTooLarge
from .metrics import bowen_matrix, fk_cross_matrix, fk_incidence, fk_matrix
from .rng import stream
from .systems import OrbitSegment, SystemSpec, orbits


@dataclass
class CoverEstimate:
    n: int
    epsilon: float
    count: int
    method: str
    center_indices: list[int]
    centers: list[np.ndarray] = field(repr=False)


@dataclass
class CriticalExponentEstimate:
    epsilon: float
    s_value: float
    n_range: tuple[int, int]
    per_n_counts: list[tuple[int, int]]
    regression_r2: float
    window: tuple[int, int] = (0, 0)
    saturated_from: int | None = None  # first length whose count exceeded the saturation cap


def _check_sample(sample: Sequence[OrbitSegment]) -> int:
    if not sample:
        raise ConfigError("empty sample")
    n = sample[0].length
    if any(s.length != n for s in sample):
        raise ConfigError("all orbit segments must share one length")
    return n


def _verify_cover(sample, centers, epsilon) -> None:
    # independent route: exact distances rather than the single-DP incidence test
    D = fk_cross_matrix([sample[i] for i in centers], sample)
    if not (D < epsilon).any(axis=0).all():
        raise AssertionError("cover verification failed")


def greedy_cover_indices(incidence: np.ndarray) -> list[int]:
    """Greedy set cover on a square incidence matrix; ties go to the lowest index."""
    m = incidence.shape[1]
    uncovered = np.ones(m, dtype=bool)
    gains = incidence.sum(axis=1, dtype=np.int64)
    chosen = []
    while uncovered.any():
        best = int(np.argmax(gains))
        if gains[best] == 0:
            raise AssertionError("a sample point is not in its own ball")
        chosen.append(best)
        newly = incidence[best] & uncovered
        uncovered &= ~newly
        gains -= incidence[:, newly].sum(axis=1, dtype=np.int64)
    return chosen


def greedy_fk_cover(sample: Sequence[OrbitSegment], epsilon: float,
                    verify: bool = True) -> CoverEstimate:
    """Greedy cover of the sample by open FK balls centred at sample points."""
    n = _check_sample(sample)
    inc = fk_incidence(sample, sample, epsilon)
    chosen = greedy_cover_indices(inc)
    if verify:
        _verify_cover(sample, chosen, epsilon)
    return CoverEstimate(n, epsilon, len(chosen), "greedy", chosen,
                         [sample[i].origin for i in chosen])


def min_cover_indices(incidence: np.ndarray) -> list[int]:
    """Optimal set cover by branch and bound (rows are candidate sets)."""
    m = incidence.shape[1]
    sets = [int(sum(1 << j for j in np.flatnonzero(row))) for row in incidence]
    full = (1 << m) - 1
    covering = [[i for i, s in enumerate(sets) if s >> j & 1] for j in range(m)]
    best = greedy_cover_indices(incidence)
    best_len = [len(best)]
    best_sol = [list(best)]

    def search(covered: int, picked: list[int]) -> None:
        if covered == full:
            if len(picked) < best_len[0]:
                best_len[0] = len(picked)
                best_sol[0] = list(picked)
            return
        if len(picked) + 1 >= best_len[0]:
            return
        # branch on the uncovered element with the fewest candidate sets
        free = [j for j in range(m) if not covered >> j & 1]
        j = min(free, key=lambda t: len(covering[t]))
        largest = max(bin(s & ~covered).count("1") for s in sets)
        if len(picked) + math.ceil(len(free) / largest) >= best_len[0]:
            return
        for i in sorted(covering[j], key=lambda i: -bin(sets[i] & ~covered).count("1")):
            picked.append(i)
            search(covered | sets[i], picked)
            picked.pop()

    search(0, [])
    return sorted(best_sol[0])


def exact_min_cover(sample: Sequence[OrbitSegment], epsilon: float,
                    limit: int = 20) -> CoverEstimate:
    n = _check_sample(sample)
    if len(sample) > limit:
        raise InstanceTooLarge(f"exact cover limited to {limit} points, got {len(sample)}")
    inc = fk_incidence(sample, sample, epsilon)
    chosen = min_cover_indices(inc)
    _verify_cover(sample, chosen, epsilon)
    return CoverEstimate(n, epsilon, len(chosen), "exact", chosen,
                         [sample[i].origin for i in chosen])


def separated_indices(incidence: np.ndarray) -> list[int]:
    """Greedy maximal subset with no member inside another member's ball."""
    blocked = np.zeros(incidence.shape[0], dtype=bool)
    chosen: list[int] = []
    for q in range(incidence.shape[0]):
        if not blocked[q]:
            chosen.append(q)
            blocked |= incidence[q] | incidence[:, q]
    return chosen


def max_separated_set(sample: Sequence[OrbitSegment], epsilon: float) -> list[np.ndarray]:
    """Greedy maximal subset with pairwise ``d_FK_n >= epsilon``."""
    _check_sample(sample)
    inc = fk_incidence(sample, sample, epsilon)
    chosen = separated_indices(inc)
    near = inc[chosen].any(axis=0)
    if not near.all():
        raise AssertionError("separated set is not maximal")
    return [sample[i].origin for i in chosen]


def five_r_cover(balls: Sequence[tuple[OrbitSegment, float]], band: float | None = None) -> list[int]:
    """Disjoint subfamily whose 5-fold enlargements reach every input centre.

    Balls are scanned by decreasing radius (stable in input order) and kept
    when their centre is farther than ``r_i + r_j + band`` from every kept
    centre, which certifies disjointness.  A rejected ball meets a kept ball
    of at least its radius, so its centre lies within ``2 r_j + band`` of
    that kept centre.
    """
    if not balls:
        raise ConfigError("empty ball family")
    centers = [c for c, _ in balls]
    _check_sample(centers)
    radii = np.array([float(r) for _, r in balls])
    if (radii <= 0).any():
        raise ConfigError("radii must be positive")
    band = centers[0].system.band if band is None else band
    D = fk_matrix(centers)
    order = sorted(range(len(balls)), key=lambda i: (-radii[i], i))
    kept: list[int] = []
    for i in order:
        if all(D[i, j] > radii[i] + radii[j] + band for j in kept):
            kept.append(i)
    return kept


def window_incidence(system: SystemSpec, centers: Sequence[np.ndarray],
                     targets: Sequence[np.ndarray], epsilon: float, N: int, n_max: int,
                     closed: bool = False) -> dict[int, np.ndarray]:
    """Ball incidence matrices ``{n: inc}`` for every length in ``[N, n_max]``."""
    if not 1 <= N <= n_max:
        raise ConfigError("need 1 <= N <= n_max")
    out = {}
    for n in range(N, n_max + 1):
        out[n] = fk_incidence(orbits(system, centers, n), orbits(system, targets, n),
                              epsilon, closed=closed)
    return out


def min_weight_cover(masks: Sequence[int], costs: Sequence[float], m: int) -> float:
    """Minimum total cost of a family of bitmasks covering ``m`` elements."""
    best_cost: dict[int, float] = {}
    for mask, c in zip(masks, costs):
        if mask and c < best_cost.get(mask, math.inf):
            best_cost[mask] = c
    by_low: list[list[tuple[int, float]]] = [[] for _ in range(m)]
    for mask, c in best_cost.items():
        for j in range(m):
            if mask >> j & 1:
                by_low[j].append((mask, c))
    full = (1 << m) - 1
    f = [math.inf] * (full + 1)
    f[0] = 0.0
    for mask in range(1, full + 1):
        low = (mask & -mask).bit_length() - 1
        best = math.inf
        for bmask, c in by_low[low]:
            v = f[mask & ~bmask] + c
            if v < best:
                best = v
        f[mask] = best
    return f[full]


def caratheodory_value_small(system: SystemSpec, sample: Sequence[np.ndarray],
                             epsilon: float, s: float, N: int, n_max: int,
                             centers: Sequence[np.ndarray] | None = None) -> float:
    """Exact ``min sum e^{-n_i s}`` over mixed-length covers of a tiny sample.

    Centres range over ``centers`` (default: the sample itself) and lengths
    over ``[N, n_max]``.  Returns ``inf`` when some point is in no ball.
    """
    if len(sample) == 0:
        raise ConfigError("empty sample")
    if len(sample) > 15 or n_max > 10:
        raise InstanceTooLarge("caratheodory oracle needs <= 15 points and n_max <= 10")
    if s < 0:
        raise ConfigError("s must be non-negative")
    centers = sample if centers is None else centers
    inc = window_incidence(system, centers, sample, epsilon, N, n_max)
    masks, costs = [], []
    for n, mat in inc.items():
        for row in mat:
            masks.append(int(sum(1 << int(j) for j in np.flatnonzero(row))))
            costs.append(math.exp(-n * s))
    return min_weight_cover(masks, costs, len(sample))


# counts above this fraction of the sample size no longer track the covering number
SATURATION = 0.25


def saturation_prefix(counts: Sequence[int], cap: float | None) -> int:
    """Number of leading lengths usable for the fit (at least 3 when available)."""
    k = len(counts)
    if cap is None:
        return k
    cut = next((i for i, c in enumerate(counts) if c > cap), k)
    return max(cut, min(k, 3))


def growth_regression(ns: Sequence[int], counts: Sequence[int]) -> tuple[float, float, tuple[int, int]]:
    """Upper-envelope slope of ``log(count)`` against ``n``.

    Least-squares slopes are fitted on every suffix window holding at least
    half of the points (and at least 3, when available); the largest slope
    is returned with its ``r^2`` and window.  Negative slopes clip to 0.
    """
    ns = np.asarray(ns, dtype=float)
    ys = np.log(np.asarray(counts, dtype=float))
    k = len(ns)
    if k < 2:
        raise ConfigError("growth regression needs at least two lengths")
    min_pts = min(k, max(3, (k + 1) // 2)) if k >= 3 else k
    best = (-math.inf, 1.0, (int(ns[0]), int(ns[-1])))
    for start in range(0, k - min_pts + 1):
        x = ns[start:]
        y = ys[start:]
        xc = x - x.mean()
        slope = float((xc * (y - y.mean())).sum() / (xc * xc).sum())
        resid = y - (y.mean() + slope * xc)
        tot = float(((y - y.mean()) ** 2).sum())
        r2 = 1.0 if tot == 0 else max(0.0, 1.0 - float((resid ** 2).sum()) / tot)
        if slope > best[0]:
            best = (slope, r2, (int(x[0]), int(x[-1])))
    return max(0.0, best[0]), best[1], best[2]


def growth_estimate(epsilon: float, per_n: list[tuple[int, int]], n_range: tuple[int, int],
                    sample_size: int | None) -> CriticalExponentEstimate:
    """Fit the growth rate on the unsaturated prefix of ``per_n``."""
    counts = [c for _, c in per_n]
    cap = None if sample_size is None else SATURATION * sample_size
    use = saturation_prefix(counts, cap)
    s_value, r2, window = growth_regression([n for n, _ in per_n[:use]], counts[:use])
    sat = next((n for n, c in per_n if cap is not None and c > cap), None)
    return CriticalExponentEstimate(epsilon, s_value, n_range, per_n, r2, window, sat)


def _sample_points(system: SystemSpec, sample_size: int, n_max: int, seed: int,
                   measure: str, name: str) -> list[np.ndarray]:
    return system.sample(stream(seed, name), sample_size, n=n_max, measure=measure)


def _check_range(n_range: tuple[int, int]) -> tuple[int, int]:
    lo, hi = int(n_range[0]), int(n_range[1])
    if not 1 <= lo < hi:
        raise ConfigError(f"invalid n range {n_range}")
    return lo, hi


def span_growth_rate(system: SystemSpec, sample_size: int, epsilon: float,
                     n_range: tuple[int, int], seed: int, measure: str = "uniform",
                     points: Sequence[np.ndarray] | None = None,
                     verify: bool = False) -> CriticalExponentEstimate:
    """Growth rate of greedy FK cover counts of a seeded sample.

    Lengths from the first count above ``SATURATION * sample size`` onwards
    are left out of the fit: once most sample points need their own ball the
    count reflects the sample, not the system.  ``points`` overrides the
    seeded sample (used for degenerate samples).
    """
    lo, hi = _check_range(n_range)
    if points is None:
        if sample_size < 100:
            raise ConfigError("growth-rate estimates need sample_size >= 100")
        points = _sample_points(system, sample_size, hi, seed, measure, "covering")
    per_n = []
    for n in range(lo, hi + 1):
        est = greedy_fk_cover(orbits(system, points, n), epsilon, verify=verify)
        per_n.append((n, est.count))
    return growth_estimate(epsilon, per_n, (lo, hi), len(points))


@dataclass
class MdimEstimate:
    rows: list[tuple[float, float, float]]
    estimates: list[CriticalExponentEstimate]

    @property
    def proxy(self) -> float:
        """Largest ratio among the two smallest epsilon values."""
        smallest = sorted(self.rows, key=lambda r: r[0])[:2]
        return max(r[2] for r in smallest)


def _check_eps_list(epsilon_list: Sequence[float]) -> list[float]:
    eps = [float(e) for e in epsilon_list]
    if not eps:
        raise ConfigError("empty epsilon list")
    if any(not 0 < e < 1 for e in eps):
        raise ConfigError("every epsilon must lie in (0, 1)")
    return eps


def mdim_bowen_estimate(system: SystemSpec, epsilon_list: Sequence[float], sample_size: int,
                        n_range: tuple[int, int], seed: int,
                        measure: str = "uniform", verify: bool = False) -> MdimEstimate:
    """Per-epsilon cover growth rates normalised by ``log(1/eps)``."""
    eps = _check_eps_list(epsilon_list)
    lo, hi = _check_range(n_range)
    points = _sample_points(system, sample_size, hi, seed, measure, "covering")
    ests = [span_growth_rate(system, sample_size, e, (lo, hi), seed, points=points, verify=verify)
            for e in eps]
    rows = [(e, est.s_value, est.s_value / math.log(1 / e)) for e, est in zip(eps, ests)]
    return MdimEstimate(rows, ests)


def greedy_bowen_cover(sample: Sequence[OrbitSegment], epsilon: float) -> CoverEstimate:
    """Greedy cover by Bowen balls ``d_n < epsilon``; used for comparisons."""
    n = _check_sample(sample)
    chosen = greedy_cover_indices(bowen_matrix(sample) < epsilon)
    return CoverEstimate(n, epsilon, len(chosen), "greedy-bowen", chosen,
                         [sample[i].origin for i in chosen])
