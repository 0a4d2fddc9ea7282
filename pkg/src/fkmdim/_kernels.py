"""Compiled kernels for the order-preserving matching problem.

Every routine works on an ``(n, n)`` matrix ``D`` of iterate distances
``D[i, j] = d(T^i x, T^j y)``.  The maximum matching size at threshold
``thr`` is the longest-common-subsequence value of the boolean matrix
``D < thr`` (or ``D <= thr``), computed with one DP row.
"""
import numpy as np
from numba import njit

METRIC_MISMATCH = 0
METRIC_ABS = 1
METRIC_ARC = 2


@njit(cache=True)
def match_count(D, thr, strict):
    n = D.shape[0]
    m = D.shape[1]
    row = np.zeros(m + 1, dtype=np.int32)
    for i in range(n):
        diag = 0
        for j in range(m):
            up = row[j + 1]
            hit = D[i, j] < thr if strict else D[i, j] <= thr
            best = up if up > row[j] else row[j]
            if hit and diag + 1 > best:
                best = diag + 1
            diag = up
            row[j + 1] = best
    return row[m]


@njit(cache=True)
def fbar(D, delta):
    n = D.shape[0]
    return (n - match_count(D, delta, True)) / n


@njit(cache=True)
def fk_exact(D):
    """Exact infimum of ``{delta > 0 : fbar(delta) < delta}``.

    Breakpoints ``b_0 = 0 < b_1 < ... < b_M`` are the distinct distance
    values.  On ``(b_m, b_{m+1}]`` the strict threshold admits exactly the
    pairs with ``D <= b_m``, giving a constant ``v_m``; the first ``m`` with
    ``v_m < b_{m+1}`` yields the infimum ``max(v_m, b_m)``.  The predicate
    is monotone in ``m`` so a binary search needs O(log n) DP runs.
    """
    n = D.shape[0]
    flat = np.sort(D.ravel())
    uniq = np.empty(flat.size + 1)
    uniq[0] = 0.0
    cnt = 1
    for v in flat:
        if v > uniq[cnt - 1]:
            uniq[cnt] = v
            cnt += 1
    lo = 0
    hi = cnt - 1  # predicate holds at the last index (b_{M+1} = inf)
    while lo < hi:
        mid = (lo + hi) // 2
        v = (n - match_count(D, uniq[mid], False)) / n
        if v < uniq[mid + 1]:
            hi = mid
        else:
            lo = mid + 1
    v = (n - match_count(D, uniq[lo], False)) / n
    return v if v > uniq[lo] else uniq[lo]


@njit(cache=True)
def fk_bisect(D, tol):
    lo = 0.0
    hi = 1.0 + tol
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fbar(D, mid) < mid:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def fill_arc(D, A, B, w):
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            t = abs(A[i, 0] - B[j, 0])
            D[i, j] = t if t < 1.0 - t else 1.0 - t


@njit(cache=True)
def fill_mismatch(D, A, B, w):
    """Weighted mismatch distances from packed bitplanes.

    Features are ``planes`` blocks of ``W = len(w)`` uint64 words with
    coordinate ``c`` at bit ``63 - c % 64`` of word ``c // 64``.  OR-ing the
    plane XORs gives the mismatch mask, whose value as a binary fraction is
    the weighted mismatch sum; ``w[k] = 2^{-64(k+1)}``.
    """
    W = w.shape[0]
    planes = A.shape[1] // W
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            s = 0.0
            for k in range(W - 1, -1, -1):
                mask = A[i, k] ^ B[j, k]
                for p in range(1, planes):
                    mask |= A[i, p * W + k] ^ B[j, p * W + k]
                s += np.float64(mask) * w[k]
            D[i, j] = s


@njit(cache=True)
def fill_abs(D, A, B, w):
    f = A.shape[1]
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            s = 0.0
            for k in range(f - 1, -1, -1):
                s += w[k] * abs(A[i, k] - B[j, k])
            D[i, j] = s


def _build(fill):
    @njit(cache=True)
    def cross_matrix(A, B, w):
        D = np.empty((A.shape[0], B.shape[0]))
        fill(D, A, B, w)
        return D

    @njit(cache=True)
    def fk_pairwise(F, w):
        m = F.shape[0]
        n = F.shape[1]
        out = np.zeros((m, m))
        D = np.empty((n, n))
        for p in range(m):
            for q in range(p + 1, m):
                fill(D, F[p], F[q], w)
                out[p, q] = fk_exact(D)
                out[q, p] = out[p, q]
        return out

    @njit(cache=True)
    def fk_cross(FA, FB, w):
        n = FA.shape[1]
        out = np.empty((FA.shape[0], FB.shape[0]))
        D = np.empty((n, n))
        for p in range(FA.shape[0]):
            for q in range(FB.shape[0]):
                fill(D, FA[p], FB[q], w)
                out[p, q] = fk_exact(D)
        return out

    @njit(cache=True)
    def ball_incidence(FA, FB, eps, closed, w):
        # d_FK < eps  iff  1 - k(D < eps)/n < eps;  d_FK <= eps  iff  1 - k(D <= eps)/n <= eps
        n = FA.shape[1]
        out = np.zeros((FA.shape[0], FB.shape[0]), dtype=np.bool_)
        D = np.empty((n, n))
        for p in range(FA.shape[0]):
            for q in range(FB.shape[0]):
                fill(D, FA[p], FB[q], w)
                if closed:
                    out[p, q] = (n - match_count(D, eps, False)) / n <= eps
                else:
                    out[p, q] = (n - match_count(D, eps, True)) / n < eps
        return out

    return cross_matrix, fk_pairwise, fk_cross, ball_incidence


_TABLE = {
    METRIC_ARC: _build(fill_arc),
    METRIC_MISMATCH: _build(fill_mismatch),
    METRIC_ABS: _build(fill_abs),
}


def cross_matrix(A, B, metric, w):
    """``D[i, j]`` = distance between feature rows ``A[i]`` and ``B[j]``."""
    return _TABLE[metric][0](A, B, w)


def fk_pairwise(F, metric, w):
    """Symmetric matrix of exact FK distances between orbit stacks ``F[p]``."""
    return _TABLE[metric][1](F, w)


def fk_cross(FA, FB, metric, w):
    """Exact FK distances between every orbit of ``FA`` and every orbit of ``FB``."""
    return _TABLE[metric][2](FA, FB, w)


def ball_incidence(FA, FB, eps, closed, metric, w):
    """``out[p, q]``: orbit ``FB[q]`` lies in the FK ``eps``-ball of ``FA[p]``."""
    return _TABLE[metric][3](FA, FB, eps, closed, w)
