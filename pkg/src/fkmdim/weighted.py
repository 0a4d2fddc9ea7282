"""Weighted FK-Bowen covers on finite instances.

A weighted cover assigns a non-negative weight ``c_i`` to each candidate
ball ``B_FK_{n_i}(x_i, eps)`` so that every target point receives total
weight at least one.  With finitely many candidate centres and lengths the
infimum of ``sum c_i e^{-n_i s}`` is a linear program.  Its dual is the
search for a measure on the targets with small ball masses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .covering import caratheodory_value_small, window_incidence
from .entropy import EmpiricalMeasure
from .errors import ConfigError, Infeasible, InstanceTooLarge
from .metrics import fk_cross_matrix
from .systems import SystemSpec, orbits

VERIFY_TOL = 1e-9
# relative slack when comparing two independently rounded float sums
COMPARE_RTOL = 1e-12

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass
class WeightedCover:
    """Optimal weighted cover: ``items`` are ``(center index, n, c)`` with ``c > 0``."""

    items: list[tuple[int, int, float]]
    target: list[np.ndarray]
    centers: list[np.ndarray]
    epsilon: float
    s: float
    N: int
    value: float

    def domination(self, system: SystemSpec) -> np.ndarray:
        """Total weight received by each target point, from exact distances."""
        total = np.zeros(len(self.target))
        for ci, n, c in self.items:
            d = fk_cross_matrix(orbits(system, [self.centers[ci]], n),
                                orbits(system, self.target, n))[0]
            total[d < self.epsilon] += c
        return total


def _columns(system, centers, target, epsilon, N, n_max):
    inc = window_incidence(system, centers, target, epsilon, N, n_max)
    cols, lengths = [], []
    for n, mat in inc.items():
        for ci in range(mat.shape[0]):
            cols.append((ci, n))
            lengths.append(n)
    A = np.concatenate([inc[n].T for n in inc], axis=1).astype(float)  # targets x columns
    return A, cols, np.array(lengths)


def _solve_exact(M: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Unique solution of an overdetermined consistent system, or None."""
    rows, ncol = len(M), len(M[0]) if M else 0
    aug = [row[:] + [b] for row, b in zip(M, rhs)]
    piv_cols, r = [], 0
    for c in range(ncol):
        p = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if p is None:
            return None
        aug[r], aug[p] = aug[p], aug[r]
        pv = aug[r][c]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    if any(aug[i][ncol] != 0 for i in range(r, rows)):
        return None
    return [aug[i][ncol] for i in range(ncol)]


def _polish(A: np.ndarray, x: np.ndarray) -> list[Fraction] | None:
    """Recover the exact rational vertex behind a floating LP solution."""
    support = np.flatnonzero(x > 1e-9)
    tight = np.flatnonzero(np.abs(A @ x - 1.0) < 1e-8)
    if len(support) == 0 or len(tight) < len(support):
        return None
    sub = [[Fraction(int(A[i, j])) for j in support] for i in tight]
    y = _solve_exact(sub, [Fraction(1)] * len(tight))
    if y is None or any(v <= 0 for v in y):
        return None
    full = [Fraction(0)] * A.shape[1]
    for j, v in zip(support, y):
        full[j] = v
    for i in range(A.shape[0]):
        if sum(full[j] for j in support if A[i, j]) < 1:
            return None
    return full


def _exact_objective(weights: Sequence[Fraction], costs: np.ndarray) -> float:
    return float(sum(w * Fraction(float(c)) for w, c in zip(weights, costs) if w))


def weighted_cover(system: SystemSpec, target: Sequence[np.ndarray], epsilon: float, s: float,
                   N: int, n_max: int, centers: Sequence[np.ndarray] | None = None) -> WeightedCover:
    """Optimal discretized weighted cover of ``target`` (at most 15 points)."""
    target = list(target)
    centers = target if centers is None else list(centers)
    if not target or not centers:
        raise ConfigError("target and candidate centres must be nonempty")
    if len(target) > 15:
        raise InstanceTooLarge("weighted cover oracle needs <= 15 target points")
    if not 1 <= N <= n_max:
        raise ConfigError("need 1 <= N <= n_max")
    if s < 0:
        raise ConfigError("s must be non-negative")
    A, cols, lengths = _columns(system, centers, target, epsilon, N, n_max)
    bare = np.flatnonzero(A.sum(axis=1) == 0)
    if len(bare):
        raise Infeasible(f"target points {bare.tolist()} lie in no candidate ball")
    costs = np.exp(-lengths * s)
    res = linprog(costs, A_ub=-A, b_ub=-np.ones(len(target)), bounds=(0, None),
                  method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        raise Infeasible(f"LP solver failed: {res.message}")
    exact = _polish(A, res.x)
    if exact is not None:
        weights = [float(v) for v in exact]
        value = _exact_objective(exact, costs)
    else:
        weights = [float(v) if v > 1e-12 else 0.0 for v in res.x]
        value = float(res.fun)
    items = [(cols[j][0], cols[j][1], w) for j, w in enumerate(weights) if w > 0]
    return WeightedCover(items, target, centers, float(epsilon), float(s), N, value)


def weighted_cover_value_small(system: SystemSpec, target: Sequence[np.ndarray],
                               candidate_centers: Sequence[np.ndarray] | None, epsilon: float,
                               s: float, N: int, n_max: int) -> float:
    """``inf sum c_i e^{-n_i s}`` over weighted covers by candidate balls of lengths in ``[N, n_max]``."""
    return weighted_cover(system, target, epsilon, s, N, n_max, candidate_centers).value


def n_hypothesis_holds(N: int, delta: float) -> bool:
    """``N > 2`` and ``n^2 e^{-n delta} < 1`` for every ``n >= N``."""
    if N <= 2 or not delta > 0:
        return False
    # n^2 e^{-n delta} decreases once n > 2/delta
    top = max(N, math.ceil(2.0 / delta) + 1)
    return all(n * n * math.exp(-n * delta) < 1.0 for n in range(N, top + 1))


@dataclass
class SandwichReport:
    epsilon: float
    s: float
    delta: float
    N: int
    n_max: int
    left: float    # M at (6 eps, s + delta)
    middle: float  # W at (eps, s)
    right: float   # M at (eps, s)
    left_ok: bool
    right_ok: bool

    @property
    def passed(self) -> bool:
        return self.left_ok and self.right_ok

    def as_dict(self) -> dict:
        return {"epsilon": self.epsilon, "s": self.s, "delta": self.delta, "N": self.N,
                "n_max": self.n_max, "M_6eps_s_plus_delta": self.left, "W_eps_s": self.middle,
                "M_eps_s": self.right, "left_ok": self.left_ok, "right_ok": self.right_ok}


def _le(a: float, b: float) -> bool:
    return a <= b or a <= b * (1 + COMPARE_RTOL)


def cover_sandwich_check(system: SystemSpec, target: Sequence[np.ndarray],
                           candidate_centers: Sequence[np.ndarray] | None, epsilon: float,
                           s: float, delta: float, N: int, n_max: int) -> SandwichReport:
    """Check ``M(6 eps, s + delta) <= W(eps, s) <= M(eps, s)`` on one instance."""
    if not n_hypothesis_holds(N, delta):
        raise ConfigError(f"N={N} violates N > 2 and n^2 e^(-n delta) < 1 for delta={delta}")
    centers = list(target) if candidate_centers is None else list(candidate_centers)
    left = caratheodory_value_small(system, target, 6 * epsilon, s + delta, N, n_max, centers)
    middle = weighted_cover_value_small(system, target, centers, epsilon, s, N, n_max)
    right = caratheodory_value_small(system, target, epsilon, s, N, n_max, centers)
    return SandwichReport(float(epsilon), float(s), float(delta), N, n_max, left, middle, right,
                          _le(left, middle), _le(middle, right))


@dataclass
class FrostmanCheck:
    c: float
    max_ratio: float      # max over constraints of mu(B) / ((1/c) e^{-sn})
    max_violation: float  # max over constraints of mu(B) - (1/c) e^{-sn}


def frostman_verify(mu: EmpiricalMeasure, centers: Sequence[np.ndarray], epsilon: float, s: float,
                    N: int, n_max: int, c: float) -> FrostmanCheck:
    """Recompute every ball mass from exact distances and compare with ``(1/c) e^{-sn}``."""
    worst_ratio, worst_gap = 0.0, -math.inf
    for n in range(N, n_max + 1):
        d = fk_cross_matrix(orbits(mu.system, centers, n), mu.segments(n))
        masses = (d < epsilon).astype(float) @ mu.weights
        bound = math.exp(-s * n) / c
        worst_ratio = max(worst_ratio, float(masses.max()) / bound)
        worst_gap = max(worst_gap, float(masses.max()) - bound)
    return FrostmanCheck(c, worst_ratio, worst_gap)


def frostman_measure_small(system: SystemSpec, K: Sequence[np.ndarray], epsilon: float, s: float,
                           N: int, n_max: int,
                           candidate_centers: Sequence[np.ndarray] | None = None) -> EmpiricalMeasure:
    """A probability measure on ``K`` with ``mu(B_FK_n(x, eps)) <= (1/c) e^{-sn}``.

    ``c`` is the discretized weighted cover value of ``K``.  The measure comes
    from the dual program ``max sum p_j`` subject to ``p(B) <= e^{-sn}`` for
    every candidate ball, normalized by its total.  Raises
    :class:`Infeasible` if the re-verified constraints fail.
    """
    K = list(K)
    centers = K if candidate_centers is None else list(candidate_centers)
    c = weighted_cover_value_small(system, K, centers, epsilon, s, N, n_max)
    if not c > 0:
        raise ConfigError("weighted cover value is zero")
    A, _, lengths = _columns(system, centers, K, epsilon, N, n_max)
    bounds = np.exp(-lengths * s)
    res = linprog(-np.ones(len(K)), A_ub=A.T, b_ub=bounds, bounds=(0, None),
                  method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        raise Infeasible(f"no measure found: {res.message}")
    p = np.where(res.x > 1e-15, res.x, 0.0)
    keep = np.flatnonzero(p > 0)
    weights = p[keep] / p[keep].sum()
    weights = weights / math.fsum(weights)
    mu = EmpiricalMeasure(system, [K[i] for i in keep], weights, "explicit")
    check = frostman_verify(mu, centers, epsilon, s, N, n_max, c)
    if check.max_violation > VERIFY_TOL:
        raise Infeasible(f"ball-mass constraint violated by {check.max_violation:.3e}")
    return mu
