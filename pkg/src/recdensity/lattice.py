"""Integer lattices: LLL, integer relations, rational detection, completion."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
from mpmath import mp, mpf

from .errors import DomainError, PrecisionError
from .roots import to_fraction

__all__ = [
    "lll_reduce",
    "gram_schmidt_norms",
    "RelationSearch",
    "relation_search",
    "find_integer_relations",
    "detect_rational",
    "unimodular_completion",
    "integer_inverse",
    "determinant",
]


def lll_reduce(basis, delta: Fraction = Fraction(99, 100)) -> list[list[int]]:
    """LLL-reduce linearly independent integer rows (integral version).

    All Gram-Schmidt data is kept as integers ``d_i`` and ``lambda_ij``
    so the result is exact and deterministic.
    """
    b = [list(map(int, row)) for row in basis]
    n = len(b)
    if n <= 1:
        return b
    p, q = delta.numerator, delta.denominator

    def dot(u, v):
        return sum(x * y for x, y in zip(u, v))

    d = [0] * (n + 1)
    lam = [[0] * n for _ in range(n)]
    d[0] = 1
    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise DomainError("lattice basis rows are linearly dependent")
    k, kmax = 1, 0

    def red(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            r = _round_div(lam[k][l], d[l + 1])
            b[k] = [x - r * y for x, y in zip(b[k], b[l])]
            lam[k][l] -= r * d[l + 1]
            for i in range(l):
                lam[k][i] -= r * lam[l][i]

    def swap(k):
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        bb = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (bb * t + lm * lam[i][k]) // d[k + 1]
        d[k] = bb

    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                else:
                    if u == 0:
                        raise DomainError("lattice basis rows are linearly dependent")
                    d[k + 1] = u
        red(k, k - 1)
        lm = lam[k][k - 1]
        if q * (d[k + 1] * d[k - 1] + lm * lm) < p * d[k] * d[k]:
            swap(k)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b


def _round_div(a: int, b: int) -> int:
    # nearest integer to a/b for b > 0
    return (2 * a + b) // (2 * b)


def gram_schmidt_norms(rows) -> list[Fraction]:
    """Squared Gram-Schmidt norms, computed exactly."""
    rows = [[Fraction(x) for x in r] for r in rows]
    ortho: list[list[Fraction]] = []
    norms: list[Fraction] = []
    for r in rows:
        v = list(r)
        for o, nn in zip(ortho, norms):
            if nn == 0:
                continue
            mu = sum(x * y for x, y in zip(r, o)) / nn
            v = [x - mu * y for x, y in zip(v, o)]
        ortho.append(v)
        norms.append(sum(x * x for x in v))
    return norms


@dataclass(frozen=True)
class RelationSearch:
    """Outcome of a bounded relation search.

    ``relations`` is a basis of the relations found; every relation of
    height at most ``certified_bound`` is an integer combination of them.
    """

    relations: tuple[tuple[int, ...], ...]
    certified_bound: int
    requested_bound: int


def _canonical_sign(v):
    for x in v:
        if x:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def relation_search(values, height_bound: int, precision: int | None = None) -> RelationSearch:
    """Integer relations among ``values`` via LLL on the standard lattice.

    The lattice has rows ``(e_i, round(N v_i))`` with ``N = 2**(precision-16)``.
    A reduced row is a relation when ``|n . v| < 2**(-precision/2)`` and its
    height is within the bound.  Completeness follows from the Gram-Schmidt
    norms of the remaining rows.
    """
    precision = precision or mp.prec
    height_bound = int(height_bound)
    if precision < 4 * height_bound.bit_length():
        raise PrecisionError(
            f"{precision} bits cannot search relations up to height {height_bound}; "
            f"use at least {4 * height_bound.bit_length()} bits"
        )
    k = len(values)
    if k == 0:
        return RelationSearch((), height_bound, height_bound)
    with mp.workprec(precision + 16):
        vals = [mpf(v) for v in values]
        scale = mpmath.ldexp(mpf(1), precision - 16)
        rows = []
        for i, v in enumerate(vals):
            row = [0] * k
            row[i] = 1
            row.append(int(mpmath.nint(v * scale)))
            rows.append(row)
        reduced = lll_reduce(rows)
        tol = mpmath.ldexp(mpf(1), -(precision // 2))
        cands, rest = [], []
        for row in reduced:
            n = row[:k]
            resid = abs(mpmath.fsum(c * v for c, v in zip(n, vals)))
            height = max(abs(x) for x in n)
            if resid < tol * max(mpf(1), height) and height <= height_bound:
                cands.append((height, row))
            else:
                rest.append(row)
    cands.sort(key=lambda item: item[0])
    while True:
        if not rest:
            # at most k - 1 independent relations exist; demote the tallest
            rest.append(cands.pop()[1])
        rel = [row for _, row in cands]
        norms = gram_schmidt_norms(rel + rest)[len(rel):]
        # a relation of height H has lattice norm at most (k + 1) H
        bound = math.isqrt(int(min(norms))) // (k + 1)
        if not cands or cands[-1][0] <= bound:
            break
        # a candidate taller than the certified floor is indistinguishable from noise
        rest.append(cands.pop()[1])
    rels = tuple(sorted(_canonical_sign(r[:k]) for r in rel))
    return RelationSearch(rels, min(bound, height_bound), height_bound)


def find_integer_relations(values, height_bound: int, precision: int | None = None):
    """List of integer vectors ``n`` with ``n . values`` = 0 (numerically)."""
    return list(relation_search(values, height_bound, precision).relations)


def detect_rational(theta, q_max: int, tol) -> Fraction | None:
    """First continued-fraction convergent ``p/q`` (``q <= q_max``) within ``tol``."""
    x = to_fraction(theta)
    tol = to_fraction(mpf(tol)) if not isinstance(tol, Fraction) else tol
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    rem = x
    while True:
        a = math.floor(rem)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > q_max:
            return None
        conv = Fraction(h1, k1)
        if abs(x - conv) < tol:
            return conv
        frac = rem - a
        if frac == 0:
            return None
        rem = 1 / frac


def _ext_gcd(a: int, b: int):
    """(g, s, t) with s a + t b = g >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        qq = a // b
        a, b = b, a - qq * b
        s0, s1 = s1, s0 - qq * s1
        t0, t1 = t1, t0 - qq * t1
    if a < 0:
        a, s0, t0 = -a, -s0, -t0
    return a, s0, t0


def _completion_with_inverse(e):
    e = [int(x) for x in e]
    n = len(e)
    if n == 0:
        raise DomainError("empty vector")
    g = 0
    for x in e:
        g = math.gcd(g, x)
    if g != 1:
        raise DomainError(f"vector {e} is not primitive (gcd {g}); divide by the gcd first")
    ident = [[int(i == j) for j in range(n)] for i in range(n)]
    m = [row[:] for row in ident]
    minv = [row[:] for row in ident]
    x = list(e)
    j = n - 1
    # column operations x <- x E fold every entry into the last slot; M <- E^{-1} M keeps x M = e
    for i in range(n - 1):
        if x[i] == 0:
            continue
        d, a, b = _ext_gcd(x[i], x[j])
        xi, xj = x[i] // d, x[j] // d
        ri, rj = m[i], m[j]
        m[i] = [-b * u + a * v for u, v in zip(ri, rj)]
        m[j] = [xi * u + xj * v for u, v in zip(ri, rj)]
        for row in minv:
            ci, cj = row[i], row[j]
            row[i] = -xj * ci + xi * cj
            row[j] = a * ci + b * cj
        x[i], x[j] = 0, d
    if x[j] == -1:
        m[j] = [-v for v in m[j]]
        for row in minv:
            row[j] = -row[j]
    return m, minv


def unimodular_completion(e) -> list[list[int]]:
    """Integer matrix with determinant +-1 whose last row is ``e``."""
    return _completion_with_inverse(e)[0]


def integer_inverse(m) -> list[list[int]]:
    """Inverse of a unimodular integer matrix (exact)."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise DomainError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [v - f * w for v, w in zip(a[r], a[col])]
    inv = [[v for v in row[n:]] for row in a]
    if any(v.denominator != 1 for row in inv for v in row):
        raise DomainError("matrix is not unimodular")
    return [[int(v) for v in row] for row in inv]


def determinant(m) -> int:
    """Exact integer determinant (fraction-free Bareiss elimination)."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1
