"""FK packings: disjoint closed-ball families and packing sums.

Two closed balls of the same length ``n`` are certified disjoint when their
centres satisfy ``d_FK_n > 2 eps + band``.  Balls of different lengths live
in different metrics, so a mixed pair is accepted only when the centres are
``2 eps``-separated in both metrics and no sample point lies in both balls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .covering import (CriticalExponentEstimate, MdimEstimate, _check_eps_list, _check_range,
                       _check_sample, _sample_points, growth_estimate)
from .errors import ConfigError, InstanceTooLarge
from .metrics import fk_incidence, fk_matrix
from .systems import OrbitSegment, SystemSpec, orbits


@dataclass
class PackingEstimate:
    n: int
    epsilon: float
    count: int
    center_indices: list[int]
    centers: list[np.ndarray] = field(repr=False)
    lengths: list[int] = field(default_factory=list)
    sum_value: float = 0.0
    discarded: list[int] = field(default_factory=list)


def _separation_conflicts(sample: Sequence[OrbitSegment], epsilon: float) -> np.ndarray:
    band = sample[0].system.band
    return fk_incidence(sample, sample, 2 * epsilon + band, closed=True)


def greedy_fk_packing(sample: Sequence[OrbitSegment], epsilon: float) -> PackingEstimate:
    """Greedy maximal ``2 eps``-separated subset (scan order = sample order)."""
    n = _check_sample(sample)
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    conflict = _separation_conflicts(sample, epsilon)
    blocked = np.zeros(len(sample), dtype=bool)
    chosen: list[int] = []
    for q in range(len(sample)):
        if not blocked[q]:
            chosen.append(q)
            blocked |= conflict[q] | conflict[:, q]
    if not conflict[chosen].any(axis=0).all():
        raise AssertionError("packing is not maximal")
    return PackingEstimate(n, epsilon, len(chosen), chosen, [sample[i].origin for i in chosen],
                           [n] * len(chosen), float(len(chosen)))


class PackingInstance:
    """Precomputed distances for packings of a point sample over a length window."""

    def __init__(self, system: SystemSpec, points: Sequence[np.ndarray], epsilon: float,
                 N: int, n_max: int):
        if len(points) == 0:
            raise ConfigError("empty sample")
        if not 1 <= N <= n_max:
            raise ConfigError("need 1 <= N <= n_max")
        if not epsilon > 0:
            raise ConfigError("epsilon must be positive")
        self.system = system
        self.points = list(points)
        self.epsilon = epsilon
        self.lengths = list(range(N, n_max + 1))
        band = system.band
        self.dist: dict[int, np.ndarray] = {}
        self.closed: dict[int, np.ndarray] = {}
        for n in self.lengths:
            segs = orbits(system, self.points, n)
            self.dist[n] = fk_matrix(segs)
            self.closed[n] = fk_incidence(segs, segs, epsilon, closed=True)
        self.sep = {n: self.dist[n] > 2 * epsilon + band for n in self.lengths}

    @property
    def size(self) -> int:
        return len(self.points)

    def compatible(self, i: int, n: int, j: int, m: int, universe: np.ndarray | None = None) -> bool:
        if i == j:
            return False
        if n == m:
            return bool(self.sep[n][i, j])
        if not (self.sep[n][i, j] and self.sep[m][i, j]):
            return False
        both = self.closed[n][i] & self.closed[m][j]
        if universe is not None:
            both = both & universe
        return not both.any()

    def family_ok(self, family: Sequence[tuple[int, int]], universe: np.ndarray | None = None) -> bool:
        return all(self.compatible(i, n, j, m, universe)
                   for a, (i, n) in enumerate(family) for (j, m) in family[a + 1:])

    def exact(self, members: Sequence[int], s: float) -> tuple[float, list[tuple[int, int]]]:
        """Maximum of ``sum e^{-n s}`` over certified disjoint families (branch and bound)."""
        members = list(members)
        universe = np.zeros(self.size, dtype=bool)
        universe[members] = True
        nodes = sorted(((i, n) for i in members for n in self.lengths),
                       key=lambda t: (-math.exp(-t[1] * s), t[0], t[1]))
        weights = [math.exp(-n * s) for _, n in nodes]
        k = len(nodes)
        adj = [[self.compatible(*nodes[a], *nodes[b], universe) for b in range(k)] for a in range(k)]
        best = [0.0, []]
        # suffix bound: at most one node per point can be taken
        def bound(start: int, used: set) -> float:
            seen, tot = set(), 0.0
            for t in range(start, k):
                i = nodes[t][0]
                if i not in seen and i not in used:
                    seen.add(i)
                    tot += weights[t]
            return tot

        def search(start: int, chosen: list[int], total: float) -> None:
            if total > best[0] + 1e-15:
                best[0] = total
                best[1] = list(chosen)
            if start >= k:
                return
            used = {nodes[c][0] for c in chosen}
            if total + bound(start, used) <= best[0] + 1e-15:
                return
            for t in range(start, k):
                if nodes[t][0] in used or not all(adj[t][c] for c in chosen):
                    continue
                chosen.append(t)
                search(t + 1, chosen, total + weights[t])
                chosen.pop()
                if total + bound(t + 1, used) <= best[0] + 1e-15:
                    return

        search(0, [], 0.0)
        fam = sorted(nodes[t] for t in best[1])
        return best[0], fam

    def single_length(self, n: int, members: Sequence[int] | None = None) -> list[int]:
        members = range(self.size) if members is None else members
        chosen: list[int] = []
        for q in members:
            if all(self.sep[n][p, q] for p in chosen):
                chosen.append(q)
        return chosen

    def local_search(self, s: float) -> tuple[float, list[tuple[int, int]]]:
        """Best single-length greedy family, then hill-climbing on lengths."""
        best_n = max(self.lengths,
                     key=lambda n: (len(self.single_length(n)) * math.exp(-n * s), -n))
        family = [(i, best_n) for i in self.single_length(best_n)]
        improved = True
        while improved:
            improved = False
            used = {i for i, _ in family}
            # shorten a member when the family stays disjoint
            for idx, (i, n) in enumerate(family):
                for m in self.lengths:
                    if m >= n:
                        break
                    rest = family[:idx] + family[idx + 1:]
                    if all(self.compatible(i, m, j, mm) for j, mm in rest):
                        family[idx] = (i, m)
                        improved = True
                        break
            # add any point that fits at some length
            for q in range(self.size):
                if q in used:
                    continue
                for m in self.lengths:
                    if all(self.compatible(q, m, j, mm) for j, mm in family):
                        family.append((q, m))
                        used.add(q)
                        improved = True
                        break
        family.sort()
        return sum(math.exp(-n * s) for _, n in family), family


def _estimate(inst: PackingInstance, family: list[tuple[int, int]], value: float) -> PackingEstimate:
    lengths = [n for _, n in family]
    return PackingEstimate(min(lengths) if lengths else inst.lengths[0], inst.epsilon, len(family),
                           [i for i, _ in family], [inst.points[i] for i, _ in family],
                           lengths, value)


def packing_family(system: SystemSpec, sample: Sequence[np.ndarray], epsilon: float, s: float,
                   N: int, n_max: int, exact_limit: int = 36) -> PackingEstimate:
    """Best certified disjoint family found for ``sup sum e^{-n_i s}``.

    Exact branch and bound when the instance has at most ``exact_limit``
    (point, length) nodes; otherwise single-length greedy packings followed
    by local search (a lower bound on the supremum).
    """
    if s < 0:
        raise ConfigError("s must be non-negative")
    inst = PackingInstance(system, sample, epsilon, N, n_max)
    if inst.size * len(inst.lengths) <= exact_limit:
        value, fam = inst.exact(range(inst.size), s)
    else:
        value, fam = inst.local_search(s)
    return _estimate(inst, fam, value)


def packing_value(system: SystemSpec, sample: Sequence[np.ndarray], epsilon: float, s: float,
                  N: int, n_max: int, exact_limit: int = 36) -> float:
    return packing_family(system, sample, epsilon, s, N, n_max, exact_limit).sum_value


def packing_sum_in_interval(system: SystemSpec, sample: Sequence[np.ndarray], epsilon: float,
                            s: float, N: int, a: float, b: float,
                            span: int = 2) -> PackingEstimate | None:
    """Disjoint family with ``sum e^{-s n_i}`` in ``(a, b)``, or ``None``.

    Picks ``N1 >= N`` with ``e^{-s N1} < b - a``, takes the best family with
    lengths in ``[N1, N1 + span]`` and, when its sum exceeds ``b``, discards
    members one at a time (largest index first) until the sum drops below
    ``b``; every single step removes less than ``b - a``.  Returns ``None``
    when no family found exceeds ``b``.
    """
    if not a < b:
        raise ConfigError("need a < b")
    if a < 0:
        raise ConfigError("need a >= 0")
    if not s > 0:
        raise ConfigError("s must be positive")
    N1 = max(N, math.ceil(math.log(1.0 / (b - a)) / s)) if b - a < 1 else N
    while math.exp(-s * N1) >= b - a:
        N1 += 1
    inst = PackingInstance(system, sample, epsilon, N1, N1 + span)
    if inst.size * len(inst.lengths) <= 36:
        total, fam = inst.exact(range(inst.size), s)
    else:
        total, fam = inst.local_search(s)
    if not total > b:
        return None
    fam = list(fam)
    discarded = []
    while total >= b:
        i, n = fam.pop()
        discarded.append(i)
        total -= math.exp(-s * n)
        if not inst.family_ok(fam):
            raise AssertionError("discarding broke disjointness")
    total = sum(math.exp(-s * n) for _, n in fam)
    if not a < total < b:
        raise AssertionError("discard loop missed the interval")
    est = _estimate(inst, fam, total)
    est.discarded = discarded
    return est


def decomposition_infimum_small(system: SystemSpec, sample: Sequence[np.ndarray], epsilon: float,
                                s: float, N: int, n_max: int) -> float:
    """Minimum over set partitions of the sample of the summed packing values."""
    m = len(sample)
    if m == 0:
        raise ConfigError("empty sample")
    if m > 12:
        raise InstanceTooLarge("partition oracle limited to 12 points")
    inst = PackingInstance(system, sample, epsilon, N, n_max)
    full = (1 << m) - 1
    pv = [0.0] * (full + 1)
    for mask in range(1, full + 1):
        pv[mask] = inst.exact([j for j in range(m) if mask >> j & 1], s)[0]
    g = [math.inf] * (full + 1)
    g[0] = 0.0
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        sub = rest
        best = math.inf
        while True:
            part = sub | low
            v = pv[part] + g[mask ^ part]
            if v < best:
                best = v
            if sub == 0:
                break
            sub = (sub - 1) & rest
        g[mask] = best
    return g[full]


def packing_growth_rate(system: SystemSpec, sample_size: int, epsilon: float,
                        n_range: tuple[int, int], seed: int, measure: str = "uniform",
                        points: Sequence[np.ndarray] | None = None) -> CriticalExponentEstimate:
    """Growth rate of greedy ``2 eps``-separated counts (saturation as for covers)."""
    lo, hi = _check_range(n_range)
    if points is None:
        if sample_size < 100:
            raise ConfigError("growth-rate estimates need sample_size >= 100")
        points = _sample_points(system, sample_size, hi, seed, measure, "packing")
    per_n = []
    for n in range(lo, hi + 1):
        per_n.append((n, greedy_fk_packing(orbits(system, points, n), epsilon).count))
    return growth_estimate(epsilon, per_n, (lo, hi), len(points))


def mdim_packing_estimate(system: SystemSpec, epsilon_list: Sequence[float], sample_size: int,
                          n_range: tuple[int, int], seed: int,
                          measure: str = "uniform") -> MdimEstimate:
    eps = _check_eps_list(epsilon_list)
    lo, hi = _check_range(n_range)
    points = _sample_points(system, sample_size, hi, seed, measure, "packing")
    ests = [packing_growth_rate(system, sample_size, e, (lo, hi), seed, points=points) for e in eps]
    rows = [(e, est.s_value, est.s_value / math.log(1 / e)) for e, est in zip(eps, ests)]
    return MdimEstimate(rows, ests)


def _perturb(system: SystemSpec, x: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    y = np.array(x, copy=True)
    if not system.consumes_coordinates:
        y[0] = (y[0] + rng.uniform(-radius, radius)) % 1.0
        return y
    k = int(rng.integers(0, len(y)))
    if system.name == "unit-cube-shift":
        y[k] = rng.random()
    elif system.name == "doubling-map":
        y[k] = 1 - y[k]
    else:
        y[k] = (y[k] + rng.integers(1, system.symbols)) % system.symbols
    return y


def jittered_enlargement(system: SystemSpec, points: Sequence[np.ndarray], radius: float,
                         N: int, n_max: int, count: int, rng: np.random.Generator,
                         tries: int = 200) -> list[np.ndarray]:
    """``points`` plus up to ``count`` perturbed copies, each within ``radius`` of its source.

    Every added point ``y`` of source ``x`` satisfies ``d_FK_n(x, y) < radius``
    for all ``n`` in ``[N, n_max]``, checked with exact distances.
    """
    from .metrics import fk_cross_matrix

    out = [np.asarray(p) for p in points]
    added = 0
    for _ in range(tries):
        if added >= count:
            break
        x = out[int(rng.integers(0, len(points)))]
        y = _perturb(system, x, radius, rng)
        if all(fk_cross_matrix(orbits(system, [x], n), orbits(system, [y], n))[0, 0] < radius
               for n in range(N, n_max + 1)):
            out.append(y)
            added += 1
    return out
