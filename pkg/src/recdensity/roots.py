"""Certified roots of real polynomials.

Polynomials are coefficient lists, highest degree first, with exact
``Fraction`` entries (``mpf`` input is converted exactly).  Roots are
refined by Aberth iteration and enclosed with Smith disks: for a monic
``p`` of degree ``n`` and distinct approximations ``z_i`` the disks of
radius ``n |p(z_i)| / prod_{j != i} |z_i - z_j|`` cover all roots, and
every connected component holds as many roots as it has disks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from .config import cluster_tolerance
from .errors import DomainError, PrecisionError

__all__ = [
    "Root",
    "CharacteristicSpectrum",
    "find_roots",
    "poly_from_roots",
    "squarefree_decomposition",
    "to_fraction",
]

_PRIMES = (2**61 - 1, 2**89 - 1, 2**107 - 1, 2**127 - 1)


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, Fraction, Decimal, float, str or mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, mpf):
        if not mpmath.isfinite(x):
            raise DomainError(f"non-finite scalar {x}")
        p, q = mpmath.libmp.to_rational(x._mpf_)
        return Fraction(int(p), int(q))
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite scalar {x}")
        return Fraction(x)
    return Fraction(x)


def mp_value(x: Fraction) -> mpf:
    return mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class Root:
    value: mpc
    multiplicity: int
    radius: mpf

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0

    @property
    def modulus(self) -> mpf:
        return abs(self.value)


@dataclass(frozen=True)
class CharacteristicSpectrum:
    roots: tuple[Root, ...]
    precision: int

    @property
    def degree(self) -> int:
        return sum(r.multiplicity for r in self.roots)

    def values(self):
        return [r.value for r in self.roots]


# ---------------------------------------------------------------- exact algebra

def _trim(p):
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _deriv(p):
    n = len(p) - 1
    return _trim([c * (n - i) for i, c in enumerate(p[:-1])]) or [Fraction(0)]


def _monic(p):
    lc = p[0]
    return [c / lc for c in p]


def _divmod(a, b):
    a = list(a)
    db = len(b) - 1
    lb = b[0]
    q = []
    for _ in range(len(a) - db):
        f = a[0] / lb
        q.append(f)
        for i in range(len(b)):
            a[i] -= f * b[i]
        a.pop(0)
    if not q:
        q = [Fraction(0)]
    return _trim(q), (_trim(a) if a else [Fraction(0)])


def _is_zero(p):
    return all(c == 0 for c in p)


def _gcd(a, b):
    a, b = _monic(_trim(a)), _trim(b)
    while not _is_zero(b):
        _, r = _divmod(a, b)
        a, b = _monic(b), r
    return a


def squarefree_decomposition(poly) -> list[tuple[list[Fraction], int]]:
    """Yun's algorithm over Q; returns monic factors with multiplicities."""
    f = _monic(_trim([to_fraction(c) for c in poly]))
    if len(f) == 1:
        return []
    if _squarefree_mod_p(f):
        return [(f, 1)]
    out = []
    df = _deriv(f)
    a = _gcd(f, df)
    b, _ = _divmod(f, a)
    c, _ = _divmod(df, a)
    d = _sub(c, _deriv(b))
    i = 1
    while len(b) > 1:
        a = _monic(b) if _is_zero(d) else _gcd(b, d)
        if len(a) > 1:
            out.append((a, i))
        b, _ = _divmod(b, a)
        c = [Fraction(0)] if _is_zero(d) else _divmod(d, a)[0]
        d = _sub(c, _deriv(b))
        i += 1
    return out


def _sub(p, q):
    n = max(len(p), len(q))
    p = [Fraction(0)] * (n - len(p)) + list(p)
    q = [Fraction(0)] * (n - len(q)) + list(q)
    return _trim([x - y for x, y in zip(p, q)])


def _squarefree_mod_p(f) -> bool:
    """True when gcd(f, f') is 1 modulo some prime (hence over Q)."""
    den = 1
    for c in f:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in f]
    n = len(ints) - 1
    for p in _PRIMES:
        if ints[0] % p == 0:
            continue
        a = [c % p for c in ints]
        b = [(c * (n - i)) % p for i, c in enumerate(ints[:-1])]
        if len(_gcd_mod(a, b, p)) == 1:
            return True
    return False


def _gcd_mod(a, b, p):
    def trim(x):
        i = 0
        while i < len(x) - 1 and x[i] == 0:
            i += 1
        return x[i:]

    a, b = trim(a), trim(b)
    while not (len(b) == 1 and b[0] == 0):
        inv = pow(b[0], -1, p)
        r = list(a)
        while len(r) >= len(b) and not (len(r) == 1 and r[0] == 0):
            f = r[0] * inv % p
            for i in range(len(b)):
                r[i] = (r[i] - f * b[i]) % p
            r.pop(0)
            if not r:
                r = [0]
            r = trim(r)
        a, b = b, trim(r) if r else [0]
    return a


# ---------------------------------------------------------------- numerics

def _horner(coeffs, z):
    p = coeffs[0]
    dp = mpc(0)
    for c in coeffs[1:]:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _seeds(coeffs_frac, n):
    try:
        fl = np.array([float(c) for c in coeffs_frac], dtype=float)
        if np.all(np.isfinite(fl)) and n <= 2000:
            r = np.roots(fl)
            if len(r) == n and np.all(np.isfinite(r)):
                r = _aberth_float(fl, r.astype(complex))
                if r is not None:
                    return [mpc(complex(x)) for x in r]
    except (OverflowError, ValueError, np.linalg.LinAlgError):
        pass
    bound = max(abs(mp_value(c)) ** (mpf(1) / k) for k, c in enumerate(coeffs_frac[1:], 1) if c != 0) \
        if any(coeffs_frac[1:]) else mpf(1)
    bound = 2 * bound if bound > 0 else mpf(1)
    return [bound * mpmath.expj(2 * mpmath.pi * j / n + mpf("0.4")) for j in range(n)]


def _aberth_float(fl, z, maxit=200):
    """Double-precision Aberth polish of numpy seeds; None if it breaks down."""
    n = len(z)
    z = z.copy()
    # Aberth needs pairwise distinct starting points
    for i in range(n):
        for j in range(i):
            if abs(z[i] - z[j]) < 1e-12 * max(1.0, abs(z[i])):
                z[i] += 1e-9 * complex(math.cos(i + 0.3), math.sin(i + 0.3)) * max(1.0, abs(z[i]))
    with np.errstate(all="ignore"):
        for _ in range(maxit):
            p = np.full(n, fl[0], dtype=complex)
            dp = np.zeros(n, dtype=complex)
            for c in fl[1:]:
                dp = dp * z + p
                p = p * z + c
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            ratio = p / dp
            w = ratio / (1 - ratio * inv.sum(axis=1))
            w[p == 0] = 0
            if not np.all(np.isfinite(w)):
                return None
            z = z - w
            if np.max(np.abs(w) / np.maximum(1.0, np.abs(z))) < 1e-15:
                break
    if len(set(z.tolist())) != n:
        return None
    return z


def _aberth(coeffs, seeds, wp, maxit=None):
    n = len(coeffs) - 1
    z = list(seeds)
    maxit = maxit or 200 + 20 * n
    thresh = mpmath.ldexp(mpf(1), -wp + 8)
    live = list(range(n))
    for _ in range(maxit):
        still = []
        for i in live:
            p, dp = _horner(coeffs, z[i])
            if p == 0:
                continue
            s = mpc(0)
            zi = z[i]
            for j in range(n):
                if j != i:
                    diff = zi - z[j]
                    if diff == 0:
                        diff = mpmath.ldexp(mpf(1), -wp // 2)
                    s += 1 / diff
            if dp == 0:
                w = p / (abs(p) + 1) * mpmath.ldexp(mpf(1), -wp // 4)
            else:
                ratio = p / dp
                w = ratio / (1 - ratio * s)
            z[i] = zi - w
            # converged roots are frozen; the others keep iterating against them
            if abs(w) / max(mpf(1), abs(z[i])) >= thresh:
                still.append(i)
        if not still:
            break
        live = still
    return z


def _smith_radii(coeffs, z):
    n = len(z)
    eps = mpmath.ldexp(mpf(1), -mp.prec + 4)
    out = []
    for i in range(n):
        p, _ = _horner(coeffs, z[i])
        az = abs(z[i])
        bound = mpf(0)
        for c in coeffs:
            bound = bound * az + abs(c)
        den = mpf(1)
        for j in range(n):
            if j != i:
                den *= abs(z[i] - z[j])
        if den == 0:
            out.append(mpmath.inf)
        else:
            # rounding in Horner is at most 2n ulps of the absolute-value sum
            out.append(n * (abs(p) + 2 * (n + 1) * eps * bound) / den)
    return out


def _components(z, r):
    n = len(z)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i):
            if abs(z[i] - z[j]) <= r[i] + r[j]:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _enclose(points, radii, mults):
    """Centre and radius of a disk containing the given disks."""
    total = sum(mults)
    c = sum((p * m for p, m in zip(points, mults)), mpc(0)) / total
    rad = max(abs(p - c) + r for p, r in zip(points, radii))
    return c, rad


def _snap_conjugates(clusters) -> bool:
    """Make real clusters exactly real and pair non-real ones exactly.

    ``clusters`` holds ``[centre, radius, multiplicity]`` entries of a real
    polynomial, so the cluster set is closed under conjugation.  Returns
    False when a conjugate partner cannot be identified uniquely.
    """
    n = len(clusters)
    done = [False] * n
    for i in range(n):
        if done[i]:
            continue
        c, rad, mult = clusters[i]
        cc = mpmath.conj(c)
        hits = [j for j in range(n) if abs(cc - clusters[j][0]) <= rad + clusters[j][1]]
        if hits == [i]:
            clusters[i] = [mpc(c.real, 0), rad, mult]
            done[i] = True
        elif len(hits) == 1 and not done[hits[0]] and clusters[hits[0]][2] == mult:
            j = hits[0]
            u = (c + mpmath.conj(clusters[j][0])) / 2
            r = max(rad, clusters[j][1]) + abs(c - u)
            clusters[i] = [u, r, mult]
            clusters[j] = [mpmath.conj(u), r, mult]
            done[i] = done[j] = True
        else:
            return False
    return True


def _roots_of_factor(factor, wp):
    """Clusters ``[centre, radius, multiplicity]`` for a squarefree factor."""
    n = len(factor) - 1
    coeffs = [mpc(mp_value(c)) for c in factor]
    if n == 1:
        z = [-coeffs[1]]
    elif n == 2:
        b, c = coeffs[1], coeffs[2]
        disc = mpmath.sqrt(b * b - 4 * c)
        z = [(-b + disc) / 2, (-b - disc) / 2]
        if z[0] == z[1]:
            z[1] += mpmath.ldexp(mpf(1), -wp // 2)
        z = _aberth(coeffs, z, wp, maxit=20)
    else:
        z = _aberth(coeffs, _seeds(factor, n), wp)
    radii = _smith_radii(coeffs, z)
    clusters = []
    for comp in _components(z, radii):
        c, rad = _enclose([z[i] for i in comp], [radii[i] for i in comp], [1] * len(comp))
        clusters.append([c, rad, len(comp)])
    return clusters


def find_roots(poly, precision: int = 128) -> CharacteristicSpectrum:
    """All roots of a monic real polynomial with multiplicities and radii.

    Multiplicities come from an exact squarefree decomposition; roots of
    the squarefree parts that lie within ``2**(-precision/4)`` of each
    other are then merged at their centroid.  Raises ``PrecisionError``
    when some radius cannot be pushed below ``2**(-precision/2)``.
    """
    f = _trim([to_fraction(c) for c in poly])
    if len(f) < 2:
        raise DomainError("find_roots needs a polynomial of degree >= 1")
    if f[0] != 1:
        raise DomainError("find_roots expects a monic polynomial")
    target = mpmath.ldexp(mpf(1), -(precision // 2))
    factors = squarefree_decomposition(f)
    wp = precision + 64
    for _attempt in range(4):
        with mp.workprec(wp):
            clusters = []
            ok = True
            for fac, mult in factors:
                fc = _roots_of_factor(fac, wp)
                if any(c[2] > 1 for c in fc) or not _snap_conjugates(fc):
                    ok = False
                    break
                clusters.extend([c, r, mult] for c, r, _ in fc)
            if ok:
                merged = _merge_clusters(clusters, precision)
                if max(r for _, r, _ in merged) < target:
                    roots = tuple(Root(c, m, r) for c, r, m in _sorted(merged))
                    return CharacteristicSpectrum(roots, precision)
        wp *= 2
    raise PrecisionError(
        f"root isolation failed at {precision} bits; retry with a higher precision setting"
    )


def _merge_clusters(clusters, precision):
    tol = cluster_tolerance(precision)
    pts = [c for c, _, _ in clusters]
    n = len(pts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i):
            if abs(pts[i] - pts[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for g in groups.values():
        if len(g) == 1:
            out.append(list(clusters[g[0]]))
            continue
        c, rad = _enclose([clusters[i][0] for i in g], [clusters[i][1] for i in g],
                          [clusters[i][2] for i in g])
        # a merged group is closed under conjugation iff its mirror merged with it
        if all(abs(mpmath.conj(clusters[i][0]) - c) <= rad + tol for i in g) and abs(c.imag) <= rad:
            c = mpc(c.real, 0)
        out.append([c, rad, sum(clusters[i][2] for i in g)])
    return out


def _sorted(clusters):
    def key(item):
        c = item[0]
        ang = mpmath.arg(c) if c != 0 else mpf(0)
        if ang < 0:
            ang += 2 * mpmath.pi
        return (-abs(c), ang)

    return sorted(clusters, key=key)


def poly_from_roots(roots) -> list:
    """Monic coefficients (highest first) of prod (z - r)."""
    out = [mpc(1)]
    for r in roots:
        nxt = out + [mpc(0)]
        for i in range(1, len(nxt)):
            nxt[i] -= r * out[i - 1]
        out = nxt
    return out
