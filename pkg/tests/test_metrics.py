import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkmdim import (ConfigError, average_distance, bowen_distance, f_bar, fk_ball_contains,
                    fk_ball_membership, fk_distance, make_system, max_match_size, orbit)
from fkmdim.metrics import (cross_distances, fk_cross_matrix, fk_incidence, fk_matrix,
                            match_certificate)
from fkmdim.rng import stream

from oracles import distance_table, fk_sweep, lcs_recursive, max_match_exhaustive

SYSTEMS = [("full-shift-2", {"L": 16}), ("full-shift-3", {"L": 16}),
           ("unit-cube-shift", {"L": 16}), ("rotation-alpha", {}), ("doubling-map", {"L": 24})]


def pair(system, seed, n, tag="p"):
    x, y = system.sample(stream(seed, tag), 2, n=n)
    return orbit(system, x, n), orbit(system, y, n)


@pytest.fixture(scope="module")
def alt():
    s = make_system("full-shift-2", {"L": 32})
    return s, orbit(s, s.encode("01"), 2), orbit(s, s.encode("10"), 2)


# -- worked example -----------------------------------------------------------

def test_worked_example(alt):
    s, a, b = alt
    top = 1 - 2.0 ** -32
    assert bowen_distance(a, b) == top
    assert average_distance(a, b) == top
    assert max_match_size(a, b, 0.1) == 1
    assert max_match_size(a, b, 1.5) == 2
    assert f_bar(a, b, 0.1) == 0.5
    assert f_bar(a, b, 1.5) == 0.0
    assert fk_distance(a, b).value == 0.5
    assert fk_distance(a, b, "bisection", tol=1e-9).value == pytest.approx(0.5, abs=1e-9)


def test_ball_examples(alt):
    _, a, b = alt
    assert not fk_ball_contains(a, b, 0.4)
    assert fk_ball_contains(a, b, 0.5, closed=True, band=0.0)
    assert not fk_ball_contains(a, b, 0.5, closed=False, band=0.0)
    assert fk_ball_membership(a, b, 0.5) == "boundary"
    assert fk_ball_contains(a, b, 0.5, boundary="in")
    assert fk_ball_contains(a, a, 1e-9)


def test_identical_orbits(alt):
    _, a, _ = alt
    assert bowen_distance(a, a) == 0
    assert average_distance(a, a) == 0
    assert max_match_size(a, a, 1e-6) == 2
    assert fk_distance(a, a).value == 0.0


def test_rotation_isometry():
    r = make_system("rotation-alpha", {"alpha": 0.25})
    a, b = orbit(r, r.encode(0.0), 3), orbit(r, r.encode(0.1), 3)
    assert bowen_distance(a, b) == pytest.approx(0.1, abs=1e-15)
    assert average_distance(a, b) == pytest.approx(0.1, abs=1e-15)


def test_argument_errors(alt):
    s, a, _ = alt
    c = orbit(s, s.encode("01"), 3)
    with pytest.raises(ConfigError):
        bowen_distance(a, c)
    with pytest.raises(ConfigError):
        max_match_size(a, a, 0.0)
    with pytest.raises(ConfigError):
        fk_distance(a, a, "bisection", tol=0)
    with pytest.raises(ConfigError):
        fk_ball_contains(a, a, 0)


# -- DP against enumeration ---------------------------------------------------

def test_dp_matches_exhaustive_matching():
    s = make_system("full-shift-2", {"L": 3})
    rng = stream(0, "dp")
    count = 0
    for n in range(1, 7):
        for _ in range(40):
            a, b = pair(s, int(rng.integers(1 << 30)), n)
            D = distance_table(s, a.origin, b.origin, n)
            for delta in (0.2, 0.4, 0.7, 0.9):
                assert max_match_size(a, b, delta) == max_match_exhaustive(D, delta)
                count += 1
    assert count >= 500


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.booleans(), min_size=1, max_size=7), min_size=1, max_size=7)
       .filter(lambda rows: len({len(r) for r in rows}) == 1))
def test_certificate_table_matches_recursion(rows):
    from fkmdim.metrics import match_table
    hit = np.array(rows)
    assert match_table(hit)[-1, -1] == lcs_recursive(rows)


# -- exact FK distance --------------------------------------------------------

@pytest.mark.parametrize("name,params", SYSTEMS)
def test_exact_matches_dense_sweep(name, params):
    s = make_system(name, params)
    rng = stream(1, f"sweep:{name}")
    for t in range(25):
        n = int(rng.integers(1, 13))
        a, b = pair(s, t, n, name)
        D = np.array(distance_table(s, a.origin, b.origin, n), dtype=float)
        assert abs(fk_distance(a, b).value - fk_sweep(D)) <= 1e-4 + s.band


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_exact_value_is_a_breakpoint(name, params):
    s = make_system(name, params)
    for t in range(30):
        a, b = pair(s, t, 7, "bp")
        v = fk_distance(a, b).value
        D = cross_distances(a, b)
        cands = np.concatenate([D.ravel(), np.arange(0, 8) / 7])
        assert np.min(np.abs(cands - v)) == 0.0
        assert 0 <= v <= max(1.0, s.diameter)


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_exact_and_bisection_agree(name, params):
    s = make_system(name, params)
    for t in range(100):
        a, b = pair(s, t, 1 + t % 10, "bis")
        e = fk_distance(a, b).value
        v = fk_distance(a, b, "bisection", tol=1e-7).value
        assert abs(e - v) <= 1e-7


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_symmetry_and_certificates(name, params):
    s = make_system(name, params)
    for t in range(40):
        a, b = pair(s, t, 6, "sym")
        ab = fk_distance(a, b, certificate=True)
        assert ab.value == fk_distance(b, a).value
        cert = ab.certificate
        assert cert.verify(a, b, band=s.band)
        # the matching at the returned value is large enough to witness fbar < value + tol
        assert (6 - cert.size) / 6 <= ab.value


def test_certificate_rejects_bad_pairs(alt):
    _, a, b = alt
    cert = match_certificate(a, b, 0.6)
    assert cert.verify(a, b)
    from fkmdim.metrics import MatchCertificate
    assert not MatchCertificate(((0, 1), (1, 0)), 0.6, 2).verify(a, b)
    assert not MatchCertificate(((0, 0),), 0.6, 2).verify(a, b)


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_fbar_monotone_in_delta(name, params):
    s = make_system(name, params)
    deltas = np.linspace(0.01, 1.0, 40)
    for t in range(20):
        a, b = pair(s, t, 8, "mono")
        vals = [f_bar(a, b, d) for d in deltas]
        assert all(u >= v for u, v in zip(vals, vals[1:]))
        assert all(v * 8 == round(v * 8) for v in vals)


@pytest.mark.parametrize("name,params", SYSTEMS)
@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_chain_fk_average_bowen(name, params, n):
    s = make_system(name, params)
    segs = [orbit(s, x, n) for x in s.sample(stream(n, f"chain:{name}"), 120, n=n)]
    for a, b in zip(segs[::2], segs[1::2]):
        fk = fk_distance(a, b).value
        avg = average_distance(a, b)
        assert fk <= math.sqrt(avg) + 1e-9 + s.band
        assert avg <= bowen_distance(a, b) + 1e-9 + s.band


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_triangle_inequality_empirical(name, params):
    s = make_system(name, params)
    segs = [orbit(s, x, 6) for x in s.sample(stream(9, f"tri:{name}"), 120, n=6)]
    M = fk_matrix(segs)
    idx = np.arange(0, 120, 3)
    x, y, z = M[idx, idx + 1], M[idx + 1, idx + 2], M[idx, idx + 2]
    violations = int(np.sum(z > x + y + 4 * s.band))
    print(f"{name}: {violations} triangle violations in {len(idx)} triples")
    assert violations == 0


@pytest.mark.parametrize("name,params", SYSTEMS)
def test_batch_matrices_agree_with_single_calls(name, params):
    s = make_system(name, params)
    segs = [orbit(s, x, 5) for x in s.sample(stream(4, "batch"), 8, n=5)]
    M = fk_matrix(segs)
    C = fk_cross_matrix(segs[:3], segs)
    for i, j in itertools.product(range(3), range(8)):
        v = fk_distance(segs[i], segs[j]).value
        assert M[i, j] == v and C[i, j] == v
    for eps in (0.1, 0.3):
        for closed in (False, True):
            inc = fk_incidence(segs, segs, eps, closed)
            expect = (M <= eps) if closed else (M < eps)
            assert np.array_equal(inc, expect)


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="01", min_size=1, max_size=6), st.text(alphabet="01", min_size=1, max_size=6),
       st.integers(1, 6))
def test_fk_bounded_and_symmetric_on_binary(xs, ys, n):
    s = make_system("full-shift-2", {"L": 8})
    a, b = orbit(s, s.encode(xs, n), n), orbit(s, s.encode(ys, n), n)
    d = fk_distance(a, b).value
    assert 0.0 <= d <= 1.0
    assert d == fk_distance(b, a).value
    assert f_bar(a, b, d + 1e-12) < d + 1e-12 or d == 0.0
