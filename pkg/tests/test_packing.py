import math

import numpy as np
import pytest

from fkmdim import (ConfigError, InstanceTooLarge, decomposition_infimum_small, exact_min_cover,
                    greedy_fk_packing, make_system, mdim_packing_estimate, orbits,
                    packing_growth_rate, packing_sum_in_interval, packing_value)
from fkmdim.checks import closure_trial, interval_trial
from fkmdim.metrics import fk_incidence, fk_matrix
from fkmdim.packing import PackingInstance, jittered_enlargement, packing_family
from fkmdim.rng import stream

from oracles import max_independent_bruteforce, set_partitions

FS = make_system("full-shift-2", {"L": 16})
CYLINDERS = [FS.encode(w, 6) for w in ("00", "01", "10", "11")]


def brute_packing(system, pts, eps, s, N, n_max):
    """Exhaustive sup of sum e^{-ns} over families certified disjoint on the sample."""
    band = system.band
    dist = {n: fk_matrix(orbits(system, pts, n)) for n in range(N, n_max + 1)}

    def compatible(u, v):
        (i, n), (j, m) = u, v
        if i == j or not (dist[n][i, j] > 2 * eps + band and dist[m][i, j] > 2 * eps + band):
            return False
        # no sample point sits in both closed balls
        return not any(dist[n][i, q] <= eps and dist[m][j, q] <= eps for q in range(len(pts)))

    nodes = [(i, n) for i in range(len(pts)) for n in range(N, n_max + 1)]
    return max_independent_bruteforce(nodes, lambda u: math.exp(-u[1] * s), compatible)


def test_cylinder_packing():
    segs = orbits(FS, CYLINDERS, 2)
    assert greedy_fk_packing(segs, 0.02).count == 4
    assert greedy_fk_packing(segs, 0.6).count == 1
    same = orbits(FS, [CYLINDERS[0]] * 5, 2)
    assert greedy_fk_packing(same, 0.01).count == 1


def test_greedy_packing_is_separated_and_maximal():
    s = make_system("unit-cube-shift", {"L": 12})
    segs = orbits(s, s.sample(stream(0, "pk"), 200, n=6), 6)
    est = greedy_fk_packing(segs, 0.05)
    D = fk_matrix([segs[i] for i in est.center_indices])
    off = D[~np.eye(len(D), dtype=bool)]
    assert (off > 0.1).all()
    assert len(set(est.center_indices)) == est.count


def test_packing_dominates_cover_at_double_radius():
    for name in ("full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map"):
        s = make_system(name, {"L": 12})
        for t in range(6):
            segs = orbits(s, s.sample(stream(t, name), 14, n=5), 5)
            for eps in (0.05, 0.1, 0.2):
                packed = greedy_fk_packing(segs, eps).count
                assert packed >= exact_min_cover(segs, 2 * eps + 3 * s.band).count


def test_singleton_and_s_zero():
    s = make_system("unit-cube-shift", {"L": 8})
    x = s.sample(stream(1, "one"), 1, n=6)
    assert packing_value(s, x, 0.1, 0.7, 3, 6) == pytest.approx(math.exp(-2.1))
    pts = s.sample(stream(2, "zero"), 6, n=5)
    card = max(greedy_fk_packing(orbits(s, pts, n), 0.05).count for n in range(2, 6))
    assert packing_value(s, pts, 0.05, 0.0, 2, 5) >= card


@pytest.mark.parametrize("name", ["full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map"])
def test_exact_packing_matches_bruteforce(name):
    s = make_system(name, {"L": 12})
    for t in range(5):
        pts = s.sample(stream(t, f"bf:{name}"), 5 + t % 2, n=6)
        eps, sv = (0.03, 0.06, 0.1)[t % 3], 0.2 + 0.3 * t
        N = 2 + t % 2
        got = packing_value(s, pts, eps, sv, N, N + 1)
        assert got == pytest.approx(brute_packing(s, pts, eps, sv, N, N + 1), rel=1e-12)


def test_local_search_is_a_certified_lower_bound():
    s = make_system("full-shift-2", {"L": 12})
    pts = s.sample(stream(3, "ls"), 9, n=6)
    fast = packing_family(s, pts, 0.05, 0.4, 2, 5, exact_limit=0)
    exact = packing_family(s, pts, 0.05, 0.4, 2, 5, exact_limit=10 ** 9)
    assert fast.sum_value <= exact.sum_value * (1 + 1e-12)
    inst = PackingInstance(s, pts, 0.05, 2, 5)
    assert inst.family_ok(list(zip(fast.center_indices, fast.lengths)))


def test_packing_value_non_increasing_in_N():
    s = make_system("unit-cube-shift", {"L": 10})
    for t in range(5):
        pts = s.sample(stream(t, "N"), 6, n=7)
        vals = [packing_value(s, pts, 0.05, 0.3, N, 6) for N in (1, 2, 3, 4)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_packing_validation():
    with pytest.raises(ConfigError):
        greedy_fk_packing(orbits(FS, CYLINDERS, 2), 0.0)
    with pytest.raises(ConfigError):
        packing_value(FS, CYLINDERS, 0.1, -1.0, 1, 2)
    with pytest.raises(ConfigError):
        packing_value(FS, [], 0.1, 1.0, 1, 2)
    with pytest.raises(ConfigError):
        packing_sum_in_interval(FS, CYLINDERS, 0.1, 0.5, 1, 1.0, 0.5)
    with pytest.raises(InstanceTooLarge):
        decomposition_infimum_small(FS, FS.sample(stream(0, "big"), 13, n=3), 0.1, 0.5, 1, 2)


# -- interval recipe -----------------------------------------------------------

def test_interval_recipe_instances():
    feasible = 0
    for t in range(40):
        row = interval_trial(7, t)
        assert row["passed"], row
        feasible += row["feasible"]
    assert feasible >= 20


def test_interval_zero_one():
    est = packing_sum_in_interval(FS, CYLINDERS, 0.02, 0.5, 1, 0.0, 1.0)
    assert est is not None and 0 < est.sum_value < 1


def test_interval_infeasible_when_sum_cannot_exceed_b():
    # one point: the best family is a single ball with sum < 1 < b
    x = FS.sample(stream(0, "inf"), 1, n=30)
    assert packing_sum_in_interval(FS, x, 0.1, 0.5, 1, 1.0, 2.0) is None
    pts = FS.sample(stream(1, "inf"), 4, n=30)
    est = packing_sum_in_interval(FS, pts, 0.1, 0.5, 1, 3.5, 4.5)
    assert est is None


# -- closure monotonicity and decomposition --------------------------------------------

def test_jittered_points_stay_close():
    s = make_system("unit-cube-shift", {"L": 10})
    Z = s.sample(stream(0, "j"), 3, n=8)
    Zbar = jittered_enlargement(s, Z, 0.05, 2, 4, 5, stream(1, "j"))
    assert len(Zbar) > len(Z)
    for y in Zbar[len(Z):]:
        assert any(all(fk_matrix(orbits(s, [x, y], n))[0, 1] < 0.05 for n in range(2, 5)) for x in Z)


def test_closure_monotonicity():
    for t in range(50):
        row = closure_trial(11, t)
        assert row["passed"], row


def test_decomposition_on_cylinders():
    s, eps, N, n_max = 0.8, 0.02, 2, 3
    whole = packing_value(FS, CYLINDERS, eps, s, N, n_max)
    parts = list(set_partitions(list(range(4))))
    assert len(parts) == 15
    hand = min(sum(packing_value(FS, [CYLINDERS[i] for i in block], eps, s, N, n_max)
                   for block in part) for part in parts)
    got = decomposition_infimum_small(FS, CYLINDERS, eps, s, N, n_max)
    assert got == pytest.approx(hand, rel=1e-12)
    assert got <= whole * (1 + 1e-12)
    single = decomposition_infimum_small(FS, CYLINDERS[:1], eps, s, N, n_max)
    assert single == pytest.approx(packing_value(FS, CYLINDERS[:1], eps, s, N, n_max))


def test_decomposition_below_packing_value():
    for name in ("unit-cube-shift", "rotation-alpha"):
        s = make_system(name, {"L": 10})
        for t in range(4):
            pts = s.sample(stream(t, f"dec:{name}"), 6, n=5)
            d = decomposition_infimum_small(s, pts, 0.04, 0.5, 2, 3)
            assert d <= packing_value(s, pts, 0.04, 0.5, 2, 3) * (1 + 1e-12)


# -- growth rates ---------------------------------------------------------------

def test_packing_rates():
    rot = packing_growth_rate(make_system("rotation-alpha"), 300, 0.1, (4, 16), seed=1)
    assert rot.s_value <= 0.05
    full = packing_growth_rate(FS, 400, 0.1, (4, 12), seed=1)
    assert full.s_value <= math.log(2) + 0.1
    x = FS.sample(stream(0, "id"), 1, n=12)[0]
    assert packing_growth_rate(FS, 0, 0.1, (4, 12), 0, points=[x] * 120).s_value == 0.0


def test_packing_mdim_ratios():
    rot = mdim_packing_estimate(make_system("rotation-alpha"), [0.2, 0.1, 0.05], 300, (8, 32), seed=2)
    assert all(r[2] < 0.05 for r in rot.rows)
    full = mdim_packing_estimate(FS, [0.2, 0.1, 0.05], 400, (2, 10), seed=2)
    assert full.rows[-1][2] < 0.25
