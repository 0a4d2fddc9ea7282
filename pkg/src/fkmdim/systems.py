"""Built-in dynamical systems, orbit segments and seeded samplers.

A state point is a 1-D numpy array.  Shift systems store a finite truncation
of the symbol sequence and every application of the shift drops the first
coordinate, so an orbit of length ``n`` needs ``precision + n - 1``
coordinates.  The doubling map is stored the same way, as the binary
expansion of the point.  Circle rotation stores a single real in ``[0, 1)``.

Distances are evaluated on *features*: a fixed-length float vector per point
(the first ``precision`` coordinates for shifts, the real value for circle
maps).  Vectorised distance matrices between two stacks of features are what
the matching kernels consume.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, TruncationError

# Float rounding allowance added on top of the truncation error in every
# tolerance band; float64 sums of 64 dyadic terms are not exact.
FLOAT_SLACK = 1e-12

from ._kernels import METRIC_ABS, METRIC_ARC, METRIC_MISMATCH, cross_matrix

SYSTEM_NAMES = ("full-shift-k", "unit-cube-shift", "rotation-alpha", "doubling-map")


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """A topological dynamical system with a truncated state encoding.

    Instances are immutable; every method is a pure function of its inputs.
    """

    name: str
    params: Mapping[str, Any]
    precision: int
    metric: int
    symbols: int = 0
    alpha: float = 0.0
    horizon: int = 64
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.metric == METRIC_ARC:
            w = np.ones(1)
        elif self.metric == METRIC_MISMATCH:
            w = 2.0 ** (-64.0 * np.arange(1, -(-self.precision // 64) + 1))
        else:
            w = 0.5 ** np.arange(1, self.precision + 1)
        object.__setattr__(self, "weights", w)

    # -- encoding ---------------------------------------------------------
    @property
    def is_shift(self) -> bool:
        return self.name in ("full-shift-k", "unit-cube-shift")

    @property
    def consumes_coordinates(self) -> bool:
        """True when each application of the map drops one stored coordinate."""
        return self.name != "rotation-alpha"

    @property
    def distance_error_bound(self) -> float:
        return 2.0 ** (-self.precision)

    @property
    def band(self) -> float:
        """Symmetric tolerance band used around strict comparisons."""
        return self.distance_error_bound + FLOAT_SLACK

    @property
    def diameter(self) -> float:
        if self.metric == METRIC_ARC:
            return 0.5
        return 1.0 - 2.0 ** (-self.precision)

    def required_length(self, n: int) -> int:
        """Number of stored coordinates needed for an orbit of length ``n``."""
        if not self.consumes_coordinates:
            return 1
        extra = 1 if self.name == "doubling-map" else 0
        return self.precision + extra + n - 1

    def encode(self, value: Any, n: int | None = None) -> np.ndarray:
        """Build a state point from a human-friendly value.

        Shifts accept a symbol sequence or a string such as ``"0101"``;
        the sequence is repeated periodically up to the length needed for
        ``n`` iterations (default: the system horizon).  Circle maps accept a
        real number; the doubling map expands it exactly in binary.
        """
        length = self.required_length(self.horizon if n is None else n)
        if self.is_shift:
            if isinstance(value, str):
                seq = [float(ch) if self.name == "unit-cube-shift" else int(ch) for ch in value]
            else:
                seq = list(np.asarray(value).ravel())
            if not seq:
                raise ConfigError("empty symbol sequence")
            reps = -(-length // len(seq))
            arr = np.tile(np.asarray(seq), reps)[: max(length, len(seq))]
            return self._check_domain(arr)
        x = float(value) if not isinstance(value, Fraction) else value
        if self.name == "rotation-alpha":
            return np.array([float(x) % 1.0])
        frac = Fraction(str(x)) if isinstance(x, float) else Fraction(x)
        frac -= frac.numerator // frac.denominator
        bits = np.empty(length, dtype=np.int8)
        for i in range(length):
            frac *= 2
            bit = 1 if frac >= 1 else 0
            bits[i] = bit
            frac -= bit
        return bits

    def _check_domain(self, arr: np.ndarray) -> np.ndarray:
        if self.name == "full-shift-k":
            arr = arr.astype(np.int8)
            if arr.min() < 0 or arr.max() >= self.symbols:
                raise ConfigError(f"symbols must lie in 0..{self.symbols - 1}")
            return arr
        arr = arr.astype(np.float64)
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ConfigError("unit-cube-shift coordinates must lie in [0, 1]")
        return arr

    # -- dynamics ---------------------------------------------------------
    def apply_map(self, x: np.ndarray) -> np.ndarray:
        if self.name == "rotation-alpha":
            return np.array([(float(x[0]) + self.alpha) % 1.0])
        if len(x) < 2:
            raise TruncationError("point truncation exhausted")
        return x[1:]

    def features(self, x: np.ndarray) -> np.ndarray:
        """Distance-ready float vector of a single point."""
        if self.name == "rotation-alpha":
            return np.asarray(x, dtype=np.float64)[:1]
        if self.name == "doubling-map":
            need = self.precision + 1
            if len(x) < need:
                raise TruncationError(f"doubling point needs {need} bits, has {len(x)}")
            return np.array([float(np.dot(x[:need], 0.5 ** np.arange(1, need + 1)))])
        if len(x) < self.precision:
            raise TruncationError(
                f"point has {len(x)} coordinates, distance needs {self.precision}")
        return self._pack(np.asarray(x[None, : self.precision]))[0]

    def orbit_features(self, x: np.ndarray, n: int) -> np.ndarray:
        """Features of ``x, Tx, ..., T^{n-1}x`` as an ``(n, f)`` array."""
        if self.name == "rotation-alpha":
            # iterate exactly like apply_map so orbits agree bit-for-bit
            vals = np.empty(n)
            v = float(x[0])
            for i in range(n):
                vals[i] = v
                v = (v + self.alpha) % 1.0
            return vals[:, None]
        need = self.required_length(n)
        if len(x) < need:
            raise TruncationError(
                f"point has {len(x)} coordinates; an orbit of length {n} needs {need}")
        if self.name == "doubling-map":
            win = np.lib.stride_tricks.sliding_window_view(x[:need], self.precision + 1)
            return (win @ (0.5 ** np.arange(1, self.precision + 2)))[:, None]
        win = np.lib.stride_tricks.sliding_window_view(x[:need], self.precision)
        return self._pack(win)

    def _pack(self, win: np.ndarray) -> np.ndarray:
        """Encode rows of coordinates as distance features."""
        if self.metric != METRIC_MISMATCH:
            return np.ascontiguousarray(win, dtype=np.float64)
        words = len(self.weights)
        planes = max(1, int(self.symbols - 1).bit_length())
        sym = np.asarray(win, dtype=np.int64)
        pad = words * 64 - sym.shape[1]
        out = []
        for p in range(planes):
            bits = ((sym >> p) & 1).astype(np.uint8)
            if pad:
                bits = np.pad(bits, ((0, 0), (0, pad)))
            packed = np.packbits(bits, axis=1, bitorder="big")
            out.append(packed.view(">u8").astype(np.uint64))
        return np.ascontiguousarray(np.concatenate(out, axis=1))

    def base_distance(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.distance_matrix(self.features(x)[None, :], self.features(y)[None, :])[0, 0])

    def distance_matrix(self, fa: np.ndarray, fb: np.ndarray) -> np.ndarray:
        """All distances between rows of two feature stacks."""
        fa = np.ascontiguousarray(np.atleast_2d(fa))
        fb = np.ascontiguousarray(np.atleast_2d(fb))
        return cross_matrix(fa, fb, self.metric, self.weights)

    # -- sampling ---------------------------------------------------------
    def sample(self, rng: np.random.Generator, count: int, n: int | None = None,
               measure: str = "uniform") -> list[np.ndarray]:
        """Draw ``count`` points supporting orbits of length ``n``.

        ``measure`` is ``"uniform"`` (the natural invariant measure: uniform
        Bernoulli for the full shift, iid Lebesgue for the cube shift,
        Lebesgue for circle maps) or ``"bernoulli:p"`` for the full shift on
        two symbols with ``P(symbol 1) = p``.
        """
        length = self.required_length(self.horizon if n is None else n)
        kind, _, arg = measure.partition(":")
        if self.name == "rotation-alpha":
            if kind != "uniform":
                raise ConfigError(f"measure {measure!r} not supported for {self.name}")
            return [np.array([v]) for v in rng.random(count)]
        if self.name == "unit-cube-shift":
            if kind != "uniform":
                raise ConfigError(f"measure {measure!r} not supported for {self.name}")
            draws = rng.random((count, length))
            res = self.params.get("resolution")
            if res:
                draws = np.floor(draws * res) / (res - 1) if res > 1 else np.zeros_like(draws)
                draws = np.minimum(draws, 1.0)
            return list(draws)
        k = self.symbols if self.name == "full-shift-k" else 2
        if kind == "uniform":
            draws = rng.integers(0, k, size=(count, length), dtype=np.int8)
        elif kind == "bernoulli":
            if k != 2:
                raise ConfigError("bernoulli:p measures need a two-symbol system")
            try:
                p = float(arg)
            except ValueError:
                raise ConfigError(f"bad bernoulli parameter {arg!r}") from None
            if not 0.0 <= p <= 1.0:
                raise ConfigError("bernoulli parameter must lie in [0, 1]")
            draws = (rng.random((count, length)) < p).astype(np.int8)
        else:
            raise ConfigError(f"unknown measure {measure!r}")
        return list(draws)


@dataclass(frozen=True, eq=False)
class OrbitSegment:
    """The first ``length`` iterates of ``origin`` with cached features."""

    system: SystemSpec
    origin: np.ndarray
    length: int
    points: tuple
    features: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.length


def make_system(name: str, params: Mapping[str, Any] | None = None) -> SystemSpec:
    """Construct one of the built-in systems.

    ``full-shift-k`` takes ``k`` (default 2; the alias ``full-shift-2`` etc.
    fixes it), every system takes ``L`` (truncation length) and ``horizon``
    (default maximal orbit length for sampled points); ``rotation-alpha``
    takes ``alpha``; ``unit-cube-shift`` optionally takes ``resolution``.
    """
    params = dict(params or {})
    if name.startswith("full-shift-") and name != "full-shift-k":
        try:
            params.setdefault("k", int(name.rsplit("-", 1)[1]))
        except ValueError:
            raise ConfigError(f"unknown system {name!r}") from None
        name = "full-shift-k"
    if name not in SYSTEM_NAMES:
        raise ConfigError(f"unknown system {name!r}; expected one of {', '.join(SYSTEM_NAMES)}")
    default_l = 64 if name in ("full-shift-k", "unit-cube-shift") else 40
    L = int(params.get("L", default_l))
    if L < 1:
        raise ConfigError("truncation length L must be >= 1")
    horizon = int(params.get("horizon", 64))
    if horizon < 1:
        raise ConfigError("horizon must be >= 1")
    if name == "full-shift-k":
        k = int(params.get("k", 2))
        if k < 2:
            raise ConfigError("full shift needs k >= 2 symbols")
        params["k"] = k
        return SystemSpec(f"full-shift-k", _freeze(params), L, METRIC_MISMATCH, symbols=k,
                          horizon=horizon)
    if name == "unit-cube-shift":
        res = params.get("resolution")
        if res is not None and int(res) < 1:
            raise ConfigError("resolution must be >= 1")
        return SystemSpec(name, _freeze(params), L, METRIC_ABS, horizon=horizon)
    if name == "rotation-alpha":
        alpha = float(params.get("alpha", params.get("α", (5 ** 0.5 - 1) / 2)))
        if not 0.0 <= alpha < 1.0:
            raise ConfigError("alpha must lie in [0, 1)")
        params["alpha"] = alpha
        return SystemSpec(name, _freeze(params), L, METRIC_ARC, alpha=alpha, horizon=horizon)
    return SystemSpec(name, _freeze(params), L, METRIC_ARC, horizon=horizon)


def _freeze(params: dict) -> Mapping[str, Any]:
    from types import MappingProxyType
    return MappingProxyType(dict(sorted(params.items())))


def orbit(system: SystemSpec, x: np.ndarray, n: int) -> OrbitSegment:
    """Materialize ``(x, Tx, ..., T^{n-1}x)``."""
    if n < 1:
        raise ConfigError("orbit length must be positive")
    x = np.asarray(x)
    if len(x) < system.required_length(n):
        raise TruncationError(
            f"point has {len(x)} coordinates; an orbit of length {n} needs "
            f"{system.required_length(n)}")
    pts = [x]
    for _ in range(n - 1):
        pts.append(system.apply_map(pts[-1]))
    feats = np.ascontiguousarray(system.orbit_features(x, n))
    return OrbitSegment(system, x, n, tuple(pts), feats)


def orbits(system: SystemSpec, points: Sequence[np.ndarray], n: int) -> list[OrbitSegment]:
    return [orbit(system, p, n) for p in points]


def feature_stack(segments: Sequence[OrbitSegment]) -> np.ndarray:
    """Stack orbit features into an ``(m, n, f)`` array; lengths must agree."""
    if not segments:
        raise ConfigError("empty sample")
    n = segments[0].length
    if any(s.length != n for s in segments):
        raise ConfigError("all orbit segments must share one length")
    return np.ascontiguousarray(np.stack([s.features for s in segments]))
