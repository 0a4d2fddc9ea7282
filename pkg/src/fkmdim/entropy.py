"""Empirical measures and Brin-Katok style local entropy with FK balls."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .metrics import bowen_matrix, fk_incidence
from .rng import stream
from .systems import OrbitSegment, SystemSpec, orbit, orbits


@dataclass(eq=False)
class EmpiricalMeasure:
    """Finitely many weighted atoms standing in for a Borel probability measure."""

    system: SystemSpec
    atoms: list[np.ndarray]
    weights: np.ndarray
    source: str = "explicit"
    _segments: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.atoms) == 0:
            raise ConfigError("a measure needs at least one atom")
        if len(self.weights) != len(self.atoms):
            raise ConfigError("one weight per atom")
        if (self.weights <= 0).any():
            raise ConfigError("atom weights must be positive")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"weights sum to {self.weights.sum()!r}, not 1")

    def __len__(self) -> int:
        return len(self.atoms)

    def segments(self, n: int) -> list[OrbitSegment]:
        if n not in self._segments:
            self._segments[n] = orbits(self.system, self.atoms, n)
        return self._segments[n]


def empirical_from_sampler(system: SystemSpec, m: int, seed: int, measure: str = "uniform",
                           n_max: int | None = None) -> EmpiricalMeasure:
    """``m`` iid draws from a built-in sampler, each with weight ``1/m``."""
    if m < 1:
        raise ConfigError("need at least one atom")
    atoms = system.sample(stream(seed, f"measure:{measure}"), m, n=n_max, measure=measure)
    return EmpiricalMeasure(system, atoms, np.full(m, 1.0 / m), f"iid-sampler:{measure}")


def empirical_from_orbit(system: SystemSpec, x0, m: int, n_max: int | None = None) -> EmpiricalMeasure:
    """Uniform measure on the first ``m`` points of the orbit of ``x0``."""
    if m < 1:
        raise ConfigError("need at least one atom")
    n_max = system.horizon if n_max is None else n_max
    point = system.encode(x0, n=n_max + m - 1) if not isinstance(x0, np.ndarray) else x0
    seg = orbit(system, point, m) if system.consumes_coordinates else None
    if seg is not None and len(seg.points[-1]) < system.required_length(n_max):
        raise ConfigError("orbit start point too short for the requested atoms")
    atoms = list(seg.points) if seg is not None else _rotation_orbit(system, point, m)
    return EmpiricalMeasure(system, atoms, np.full(m, 1.0 / m), f"orbit-of-x0:{x0}")


def _rotation_orbit(system: SystemSpec, point: np.ndarray, m: int) -> list[np.ndarray]:
    pts = [point]
    for _ in range(m - 1):
        pts.append(system.apply_map(pts[-1]))
    return pts


def measure_from_descriptor(system: SystemSpec, descriptor: str, m: int, seed: int,
                            n_max: int) -> EmpiricalMeasure:
    """``uniform``, ``bernoulli:p`` or ``orbit:x0``."""
    kind, _, arg = descriptor.partition(":")
    if kind == "orbit":
        if not arg:
            raise ConfigError("orbit measure needs a start point, e.g. orbit:0.1")
        return empirical_from_orbit(system, arg if system.is_shift else float(arg), m, n_max)
    if kind in ("uniform", "bernoulli"):
        return empirical_from_sampler(system, m, seed, descriptor, n_max)
    raise ConfigError(f"unknown measure descriptor {descriptor!r}")


def ball_masses(mu: EmpiricalMeasure, centers: Sequence[OrbitSegment], epsilon: float) -> np.ndarray:
    """``mu(B_FK_n(x, eps))`` for each centre (open balls, all of one length)."""
    n = centers[0].length
    inc = fk_incidence(centers, mu.segments(n), epsilon)
    return inc @ mu.weights


def ball_mass(mu: EmpiricalMeasure, x: OrbitSegment, epsilon: float, n: int | None = None) -> float:
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    if n is not None and n != x.length:
        x = orbit(x.system, x.origin, n)
    return float(ball_masses(mu, [x], epsilon)[0])


def bowen_ball_mass(mu: EmpiricalMeasure, x: OrbitSegment, radius: float) -> float:
    """Mass of the Bowen ball ``{y : d_n(x, y) < radius}``."""
    segs = [x] + mu.segments(x.length)
    d = bowen_matrix(segs)[0, 1:]
    return float(mu.weights[d < radius].sum())


@dataclass
class LocalEntropyEstimate:
    point: np.ndarray = field(repr=False)
    epsilon: float
    n_window: tuple[int, int]
    per_n: list[tuple[int, float, float]]
    lower: float
    upper: float
    floored: bool


def _suffix(n_window: tuple[int, int]) -> list[int]:
    lo, hi = int(n_window[0]), int(n_window[1])
    if hi - lo + 1 < 4:
        raise ConfigError("entropy window must hold at least 4 lengths")
    ns = list(range(lo, hi + 1))
    return ns[len(ns) - (len(ns) + 1) // 2:]


def _entropy_rows(masses: dict[int, float], m: int) -> tuple[list, bool]:
    rows, floored = [], False
    for n, mass in masses.items():
        if mass <= 0:
            mass = 1.0 / (2 * m)
            floored = True
        rows.append((n, mass, -math.log(mass) / n))
    return rows, floored


def local_entropy_many(mu: EmpiricalMeasure, points: Sequence[np.ndarray], epsilon: float,
                       n_window: tuple[int, int]) -> list[LocalEntropyEstimate]:
    lo, hi = int(n_window[0]), int(n_window[1])
    top = _suffix((lo, hi))
    masses = {}
    for n in range(lo, hi + 1):
        masses[n] = ball_masses(mu, orbits(mu.system, points, n), epsilon)
    out = []
    for k, x in enumerate(points):
        rows, floored = _entropy_rows({n: float(masses[n][k]) for n in masses}, len(mu))
        vals = [v for n, _, v in rows if n in top]
        out.append(LocalEntropyEstimate(x, epsilon, (lo, hi), rows, min(vals), max(vals), floored))
    return out


def local_entropy(mu: EmpiricalMeasure, x: np.ndarray, epsilon: float,
                  n_window: tuple[int, int]) -> LocalEntropyEstimate:
    """Per-length ``-log mu(B_FK_n(x, eps)) / n`` with suffix min/max proxies.

    ``lower``/``upper`` are the min/max over the top half of the window.
    Zero masses are floored at ``1/(2m)`` and flagged.
    """
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    return local_entropy_many(mu, [x], epsilon, n_window)[0]


@dataclass
class IntegratedEntropy:
    lower: float
    upper: float
    lower_se: float
    upper_se: float
    points: list[LocalEntropyEstimate] = field(repr=False)

    @property
    def any_floored(self) -> bool:
        return any(p.floored for p in self.points)


def integrated_local_entropy(mu: EmpiricalMeasure, epsilon: float, n_window: tuple[int, int],
                             eval_points: int, seed: int) -> IntegratedEntropy:
    """Monte Carlo integrals of the lower and upper local entropies over ``mu``."""
    if not 1 <= eval_points <= len(mu):
        raise ConfigError("eval_points must lie in [1, number of atoms]")
    rng = stream(seed, "entropy-eval")
    idx = rng.choice(len(mu), size=eval_points, replace=True, p=mu.weights)
    ests = local_entropy_many(mu, [mu.atoms[i] for i in idx], epsilon, n_window)
    lows = np.array([e.lower for e in ests])
    ups = np.array([e.upper for e in ests])
    se = (lambda v: float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0)
    return IntegratedEntropy(float(lows.mean()), float(ups.mean()), se(lows), se(ups), ests)
