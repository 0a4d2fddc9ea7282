import math
from fractions import Fraction

import numpy as np
import pytest

from fkmdim import ConfigError, TruncationError, make_system, orbit
from fkmdim.rng import stream
from fkmdim.systems import FLOAT_SLACK

from oracles import base_distance_exact

ALL = [("full-shift-2", {"L": 32}), ("full-shift-3", {"L": 32}), ("unit-cube-shift", {"L": 24}),
       ("rotation-alpha", {}), ("doubling-map", {"L": 30})]


def test_single_mismatch_at_first_index():
    s = make_system("full-shift-2", {"L": 32})
    assert s.base_distance(s.encode("0"), s.encode("1" + "0" * 40)) == 0.5


def test_alternating_sequences_distance():
    s = make_system("full-shift-2", {"L": 32})
    assert s.base_distance(s.encode("01"), s.encode("10")) == 1 - 2.0 ** -32


def test_zero_rotation_is_identity():
    s = make_system("rotation-alpha", {"alpha": 0})
    x = s.encode(0.37)
    assert np.array_equal(s.apply_map(x), x)


def test_orbit_examples():
    s = make_system("full-shift-2", {"L": 32})
    seg = orbit(s, s.encode("01"), 2)
    assert np.array_equal(seg.points[1][:8], [1, 0, 1, 0, 1, 0, 1, 0])

    r = make_system("rotation-alpha", {"alpha": 0.25})
    pts = orbit(r, r.encode(0.0), 4).points
    assert [float(p[0]) for p in pts] == [0.0, 0.25, 0.5, 0.75]

    d = make_system("doubling-map", {"L": 40})
    feats = orbit(d, d.encode(0.3), 3).features[:, 0]
    assert np.allclose(feats, [0.3, 0.6, 0.2], atol=2.0 ** -40)


def test_error_bound_and_band():
    s = make_system("full-shift-2", {"L": 20})
    assert s.distance_error_bound == 2.0 ** -20
    assert s.band == 2.0 ** -20 + FLOAT_SLACK


@pytest.mark.parametrize("name,params", [
    ("full-shift-1", {}), ("full-shift-k", {"k": 1}), ("nope", {}),
    ("full-shift-2", {"L": 0}), ("rotation-alpha", {"alpha": 1.0}),
    ("rotation-alpha", {"alpha": -0.1}),
])
def test_invalid_systems(name, params):
    with pytest.raises(ConfigError):
        make_system(name, params)


def test_truncation_is_enforced():
    s = make_system("full-shift-2", {"L": 8})
    x = np.zeros(10, dtype=np.int8)
    orbit(s, x, 3)
    with pytest.raises(TruncationError):
        orbit(s, x, 4)


@pytest.mark.parametrize("name,params", ALL)
def test_distance_matches_exact_summation(name, params):
    s = make_system(name, params)
    rng = stream(3, f"exact:{name}")
    pts = s.sample(rng, 40, n=1)
    for x, y in zip(pts[::2], pts[1::2]):
        exact = base_distance_exact(s, x, y)
        assert abs(s.base_distance(x, y) - float(exact)) <= s.band


@pytest.mark.parametrize("name,params", ALL)
def test_metric_axioms_on_sampled_triples(name, params):
    s = make_system(name, params)
    pts = s.sample(stream(5, f"tri:{name}"), 3000, n=1)
    F = np.stack([s.features(p) for p in pts])
    a, b, c = F[0::3], F[1::3], F[2::3]
    dab = np.diagonal(s.distance_matrix(a, b))
    dba = np.diagonal(s.distance_matrix(b, a))
    dbc = np.diagonal(s.distance_matrix(b, c))
    dac = np.diagonal(s.distance_matrix(a, c))
    assert np.array_equal(dab, dba)
    assert (dac <= dab + dbc + 4 * s.distance_error_bound).all()
    assert (np.diagonal(s.distance_matrix(a, a)) == 0).all()


@pytest.mark.parametrize("name,params", ALL)
def test_orbit_shift_consistency(name, params):
    s = make_system(name, params)
    x = s.sample(stream(1, name), 1, n=6)[0]
    whole = orbit(s, x, 6)
    tail = orbit(s, s.apply_map(x), 5)
    for i in range(1, 6):
        assert np.array_equal(whole.points[i], tail.points[i - 1])
    assert np.array_equal(whole.features[1:], tail.features)


@pytest.mark.parametrize("name,params", ALL)
def test_sampler_determinism(name, params):
    s = make_system(name, params)
    a = s.sample(stream(11, "x"), 5, n=4)
    b = s.sample(stream(11, "x"), 5, n=4)
    c = s.sample(stream(12, "x"), 5, n=4)
    assert all(np.array_equal(p, q) for p, q in zip(a, b))
    assert not all(np.array_equal(p, q) for p, q in zip(a, c))


def test_bernoulli_frequency():
    s = make_system("full-shift-2", {"L": 16})
    draws = np.stack(s.sample(stream(2, "bern"), 400, n=1, measure="bernoulli:0.3"))
    freq = draws.mean()
    # 6400 draws; six standard deviations
    assert abs(freq - 0.3) < 6 * math.sqrt(0.21 / draws.size)


def test_bad_measures():
    s = make_system("full-shift-3", {"L": 8})
    with pytest.raises(ConfigError):
        s.sample(stream(0, "m"), 2, measure="bernoulli:0.5")
    with pytest.raises(ConfigError):
        make_system("full-shift-2", {"L": 8}).sample(stream(0, "m"), 2, measure="bernoulli:2")
    with pytest.raises(ConfigError):
        make_system("rotation-alpha").sample(stream(0, "m"), 2, measure="zipf")


def test_doubling_encoding_is_exact_binary():
    d = make_system("doubling-map", {"L": 10})
    bits = d.encode(Fraction(5, 8), n=1)
    assert list(bits[:4]) == [1, 0, 1, 0]


def test_symbol_domain_checked():
    with pytest.raises(ConfigError):
        make_system("full-shift-2").encode("0120")
