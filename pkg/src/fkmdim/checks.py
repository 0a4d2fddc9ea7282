"""Seeded trial generators for the finite-instance lemma checks.

Each check draws tiny instances from a named random stream and returns one
row per trial with the computed quantities and a ``passed`` flag.
"""
from __future__ import annotations

import math
from typing import Callable

from .covering import five_r_cover
from .errors import Infeasible
from .metrics import fk_cross_matrix
from .packing import (PackingInstance, jittered_enlargement, packing_sum_in_interval,
                      packing_value)
from .rng import stream
from .systems import make_system, orbits
from .weighted import cover_sandwich_check, frostman_measure_small, frostman_verify, \
    weighted_cover_value_small

CHECK_SYSTEMS = ("full-shift-2", "unit-cube-shift", "rotation-alpha", "doubling-map")
EPS_CHOICES = (0.05, 0.1, 0.15, 0.2, 0.3)


def _system(t: int):
    return make_system(CHECK_SYSTEMS[t % len(CHECK_SYSTEMS)], {"L": 24})


def sandwich_trial(seed: int, t: int) -> dict:
    """Covers at ``6 eps`` and ``s + delta`` against weighted and plain covers."""
    rng = stream(seed, f"check:sandwich:{t}")
    system = _system(t)
    N = int(rng.integers(3, 5))
    n_max = N + int(rng.integers(0, 3))
    K = system.sample(rng, int(rng.integers(1, 9)), n=n_max)
    eps = float(rng.choice(EPS_CHOICES))
    s = round(float(rng.uniform(0.05, 1.5)), 6)
    delta = float(rng.choice([1.0, 1.5, 2.0]))
    rep = cover_sandwich_check(system, K, None, eps, s, delta, N, n_max)
    return {"trial": t, "system": system.name, "points": len(K), **rep.as_dict(),
            "passed": rep.passed}


def frostman_trial(seed: int, t: int) -> dict:
    """Measure from the dual program, re-verified from exact distances."""
    rng = stream(seed, f"check:frostman:{t}")
    system = _system(t)
    N = int(rng.integers(1, 4))
    n_max = N + int(rng.integers(0, 3))
    K = system.sample(rng, int(rng.integers(1, 11)), n=n_max)
    eps = float(rng.choice(EPS_CHOICES))
    s = round(float(rng.uniform(0.05, 1.5)), 6)
    row = {"trial": t, "system": system.name, "points": len(K), "epsilon": eps, "s": s,
           "N": N, "n_max": n_max}
    c = weighted_cover_value_small(system, K, None, eps, s, N, n_max)
    try:
        mu = frostman_measure_small(system, K, eps, s, N, n_max)
    except Infeasible as exc:
        return {**row, "c": c, "feasible": False, "reason": str(exc), "passed": False}
    chk = frostman_verify(mu, K, eps, s, N, n_max, c)
    return {**row, "c": c, "feasible": True, "atoms": len(mu), "max_ratio": chk.max_ratio,
            "max_violation": chk.max_violation, "passed": chk.max_violation <= 1e-9}


def interval_trial(seed: int, t: int) -> dict:
    """Disjoint family whose packing sum lands in a prescribed interval."""
    rng = stream(seed, f"check:interval:{t}")
    system = _system(t)
    pts = system.sample(rng, int(rng.integers(3, 9)), n=40)
    eps = float(rng.choice((0.02, 0.05, 0.1)))
    s = round(float(rng.uniform(0.05, 0.4)), 6)
    a = round(float(rng.uniform(0.0, 1.0)), 6)
    b = round(a + float(rng.uniform(0.3, 1.0)), 6)
    N = int(rng.integers(1, 4))
    row = {"trial": t, "system": system.name, "points": len(pts), "epsilon": eps, "s": s,
           "a": a, "b": b, "N": N}
    est = packing_sum_in_interval(system, pts, eps, s, N, a, b)
    if est is None:
        return {**row, "feasible": False, "passed": True}
    lengths = sorted(set(est.lengths))
    inst = PackingInstance(system, pts, eps, min(lengths), max(lengths))
    family = list(zip(est.center_indices, est.lengths))
    total = math.fsum(math.exp(-s * n) for n in est.lengths)
    ok = inst.family_ok(family) and a < total < b
    return {**row, "feasible": True, "sum": total, "family": len(family),
            "discarded": len(est.discarded), "passed": bool(ok)}


def closure_trial(seed: int, t: int) -> dict:
    """Packing value of a jittered enlargement at a larger radius is no larger."""
    rng = stream(seed, f"check:closure:{t}")
    system = _system(t)
    N = int(rng.integers(1, 3))
    n_max = N + int(rng.integers(0, 3))
    Z = system.sample(rng, int(rng.integers(2, 6)), n=n_max + 4)
    e1 = float(rng.choice((0.05, 0.1, 0.15)))
    e2 = round(e1 + float(rng.uniform(0.02, 0.1)), 6)
    s = round(float(rng.uniform(0.05, 1.0)), 6)
    Zbar = jittered_enlargement(system, Z, (e2 - e1) / 2, N, n_max, 3, rng)
    big = packing_value(system, Zbar, e2, s, N, n_max, exact_limit=10 ** 9)
    small = packing_value(system, Z, e1, s, N, n_max, exact_limit=10 ** 9)
    return {"trial": t, "system": system.name, "points": len(Z), "added": len(Zbar) - len(Z),
            "epsilon1": e1, "epsilon2": e2, "s": s, "N": N, "n_max": n_max,
            "P_enlarged_eps2": big, "P_eps1": small,
            "passed": big <= small * (1 + 1e-12)}


def five_r_trial(seed: int, t: int) -> dict:
    """Disjoint subfamily whose 5-fold enlargements cover every input centre."""
    rng = stream(seed, f"check:five-r:{t}")
    system = _system(t)
    n = int(rng.integers(1, 9))
    k = int(rng.integers(1, 13))
    segs = orbits(system, system.sample(rng, k, n=n), n)
    radii = [float(r) for r in rng.uniform(0.01, 0.3, size=k)]
    keep = five_r_cover(list(zip(segs, radii)))
    D = fk_cross_matrix(segs, segs)
    band = system.band
    disjoint = all(D[i, j] > radii[i] + radii[j] + band for i in keep for j in keep if i < j)
    covered = all(any(D[i, j] < 5 * radii[j] - band or i == j for j in keep) for i in range(k))
    return {"trial": t, "system": system.name, "balls": k, "kept": len(keep),
            "disjoint": disjoint, "covered": covered, "passed": disjoint and covered}


CHECKS: dict[str, tuple[str, Callable[[int, int], dict]]] = {
    "3.2": ("weighted cover sandwich", sandwich_trial),
    "3.3": ("measure with bounded ball masses", frostman_trial),
    "4.1": ("packing sum in an interval", interval_trial),
    "4.2": ("packing value under enlargement", closure_trial),
}


def run_checks(which, trials: int, seed: int) -> dict:
    out = {}
    for key in which:
        title, fn = CHECKS[key]
        rows = [fn(seed, t) for t in range(trials)]
        out[key] = {"check": title, "trials": trials, "passed": sum(r["passed"] for r in rows),
                    "failed": sum(not r["passed"] for r in rows), "rows": rows}
    return out

