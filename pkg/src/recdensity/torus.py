"""Module basis of the dominant angles and per-residue-class torus forms.

For angles ``theta_1..theta_d`` the module ``M = Z + Z theta_1 + ... + Z theta_d``
is free; we produce a basis ``tau_1..tau_m, 1/g`` with ``1, tau_1..tau_m``
free of integer relations up to a certified height.  The subsequence
``f_{gn+k}`` then has the top layer ``H(n tau mod 1)`` with
``H(t) = a . cos(2 pi B t + c) + v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp, mpc, mpf

from .config import prune_tolerance
from .dominance import DominantForm
from .errors import DomainError
from .lattice import (
    _completion_with_inverse,
    detect_rational,
    relation_search,
)

__all__ = ["ModuleBasis", "module_basis", "TorusForm", "torus_forms"]


@dataclass(frozen=True)
class ModuleBasis:
    """``theta_i = sum_j b[i][j] tau_j + b[i][m] / g``.

    ``relation_bound`` is the height up to which ``1, tau_1..tau_m`` are
    certified free of integer relations (at the working precision).
    """

    taus: tuple[mpf, ...]
    g: int
    b: tuple[tuple[int, ...], ...]
    relation_bound: int
    requested_bound: int
    precision: int
    rationals: tuple = ()

    @property
    def m(self) -> int:
        return len(self.taus)

    @property
    def independence_proven(self) -> bool:
        # numerical search never proves independence; record the bound met
        return self.m == 0

    def reconstruct(self, i: int) -> mpf:
        with mp.workprec(self.precision + 32):
            row = self.b[i]
            val = mpf(row[-1]) / self.g
            for bij, t in zip(row, self.taus):
                val += bij * t
        return val

    def residuals(self, thetas) -> list[mpf]:
        with mp.workprec(self.precision + 32):
            return [abs(mpf(th) - self.reconstruct(i)) for i, th in enumerate(thetas)]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _absorb(basis, coords, theta, height_bound, precision):
    """Add ``theta`` to the module spanned by ``basis``.

    ``coords`` gives every earlier angle in the current basis.  Returns the
    new basis, updated coordinates (including ``theta``) and the certified
    relation height of the search.
    """
    search = relation_search(list(basis) + [theta], height_bound, precision)
    r = len(basis)
    if not search.relations:
        new_coords = [row + [0] for row in coords] + [[0] * r + [1]]
        return list(basis) + [theta], new_coords, search.certified_bound
    rel = list(search.relations[0])
    g = 0
    for x in rel:
        g = math.gcd(g, x)
    rel = [x // g for x in rel]
    if rel[-1] == 0:
        # the current basis is already dependent; refuse rather than guess
        raise DomainError("relation among accepted basis elements; increase precision")
    u, uinv = _completion_with_inverse(rel)
    ext = list(basis) + [theta]
    new_basis = [mpmath.fsum(u[i][j] * ext[j] for j in range(r + 1)) for i in range(r)]
    # x = U^{-1} (y, 0): old generator j has coordinates uinv[j][:r]
    gen = [list(uinv[j][:r]) for j in range(r + 1)]
    new_coords = []
    for row in coords + [[0] * r + [1]]:
        padded = row + [0] * (r + 1 - len(row))
        new_coords.append([sum(padded[j] * gen[j][i] for j in range(r + 1)) for i in range(r)])
    return new_basis, new_coords, search.certified_bound


def module_basis(thetas, precision: int = 532, q_max: int = 10**6,
                 height_bound: int = 10**40) -> ModuleBasis:
    """Basis ``tau_1..tau_m, 1/g`` of ``Z + sum Z theta_i`` in normal form.

    Rational angles are detected first (continued fractions, denominators
    up to ``q_max``) and enter exactly; irrational angles are absorbed one
    at a time with a bounded integer-relation search.
    """
    height_bound = int(height_bound)
    with mp.workprec(precision + 32):
        thetas = [mpf(t) for t in thetas]
        for t in thetas:
            if not 0 < t < 1:
                raise DomainError(f"angle {mpmath.nstr(t, 10)} is outside (0, 1)")
        tol = Fraction(1, 2 ** (precision // 2))
        rats: list[Fraction | None] = [detect_rational(t, q_max, tol) for t in thetas]
        L = 1
        for q in rats:
            if q is not None:
                L = _lcm(L, q.denominator)
        # basis starts as (1/L); coordinates of 1 and of each rational angle are exact
        basis = [mpf(1) / L]
        coords = [[L]]
        order = []
        for i, q in enumerate(rats):
            if q is not None:
                coords.append([q.numerator * (L // q.denominator)])
                order.append(i)
        bound = height_bound
        for i, q in enumerate(rats):
            if q is None:
                basis, coords, got = _absorb(basis, coords, thetas[i], height_bound, precision)
                bound = min(bound, got)
                order.append(i)
        r = len(basis)
        # move the coordinates of 1 into the last basis slot
        e = [int(x) for x in coords[0]]
        g = 0
        for x in e:
            g = math.gcd(g, x)
        prim = [x // g for x in e]
        c, cinv = _completion_with_inverse(prim)
        taus = [mpmath.fsum(c[i][j] * basis[j] for j in range(r)) for i in range(r)]
        # theta = u . basis = (u C^{-1}) . tau
        rows = {}
        for idx, row in zip(order, coords[1:]):
            rows[idx] = [sum(row[j] * cinv[j][i] for j in range(r)) for i in range(r)]
        # taus[-1] = prim . basis = 1/g; reduce the others mod 1
        m = r - 1
        shifts = []
        for j in range(m):
            k = int(mpmath.floor(taus[j]))
            taus[j] -= k
            shifts.append(k)
        b = []
        for i in range(len(thetas)):
            row = rows[i]
            last = row[m] + g * sum(row[j] * shifts[j] for j in range(m))
            b.append(tuple(row[:m]) + (last,))
        return ModuleBasis(
            taus=tuple(+t for t in taus[:m]),
            g=g,
            b=tuple(b),
            relation_bound=bound if m else height_bound,
            requested_bound=height_bound,
            precision=precision,
            rationals=tuple(rats),
        )


@dataclass(frozen=True)
class TorusForm:
    """``H(t) = sum_i a_i cos(2 pi B_i . t + c_i) + v`` on ``[0,1)^m`` for class ``k`` mod ``g``."""

    k: int
    g: int
    B: tuple[tuple[int, ...], ...]
    c: tuple[mpf, ...]
    a: tuple[mpf, ...]
    v: mpf
    m: int
    taus: tuple[mpf, ...] = field(default=(), repr=False)
    degenerate: bool = False

    @property
    def is_constant(self) -> bool:
        return not self.B

    def __call__(self, t) -> mpf:
        total = mpf(self.v)
        for row, ci, ai in zip(self.B, self.c, self.a):
            x = mpmath.fsum(bij * mpf(tj) for bij, tj in zip(row, t))
            total += ai * mpmath.cos(2 * mpmath.pi * x + ci)
        return total

    def at_index(self, n: int) -> mpf:
        """``H(n tau mod 1)``: the class's normalized top layer at ``n``."""
        prec = max(mp.prec, 64)
        with mp.workprec(2 * prec + int(abs(n)).bit_length()):
            t = []
            for tau in self.taus:
                x = tau * n
                t.append(x - mpmath.floor(x))
            return self(t)

    def numpy_arrays(self):
        """Float64 ``(B, a, c, v)`` for vectorized evaluation."""
        B = np.array(self.B, dtype=np.int64).reshape(len(self.B), self.m)
        a = np.array([float(x) for x in self.a])
        c = np.array([float(x) for x in self.c])
        return B, a, c, float(self.v)

    def common_direction(self):
        """``(u, k)`` when every row is ``k_i u`` for one primitive ``u``, else ``None``.

        Then ``H(t) = sum a_i cos(2 pi k_i (u . t) + c_i) + v`` and
        ``u . t mod 1`` is uniform, so the measure reduces to one dimension.
        """
        if not self.B:
            return None
        first = self.B[0]
        gg = 0
        for x in first:
            gg = math.gcd(gg, x)
        u = tuple(x // gg for x in first)
        piv = next(j for j, x in enumerate(u) if x)
        ks = []
        for row in self.B:
            if row[piv] % u[piv]:
                return None
            kk = row[piv] // u[piv]
            if any(x != kk * y for x, y in zip(row, u)):
                return None
            ks.append(kk)
        return u, tuple(ks)


def _phase(x):
    tau = 2 * mpmath.pi
    x = x - tau * mpmath.floor(x / tau)
    return mpf(0) if x >= tau else x


def _canonical_rows(rows, precision, scale):
    """Fold zero rows into ``v``, sign-normalize and merge equal rows."""
    tol = prune_tolerance(precision) * scale
    v = mpf(0)
    merged: dict[tuple, mpc] = {}
    for row, a, c in rows:
        if not any(row):
            v += a * mpmath.cos(c)
            continue
        lead = next(x for x in row if x)
        if lead < 0:
            # cos(-x + c) = cos(x - c)
            row, c = tuple(-x for x in row), -c
        merged[row] = merged.get(row, mpc(0)) + a * mpmath.expj(c)
    out = []
    for row in sorted(merged):
        z = merged[row]
        amp = abs(z)
        if amp > tol:
            out.append((row, amp, _phase(mpmath.arg(z))))
    if abs(v) <= tol:
        v = mpf(0)
    return out, v


def torus_forms(df: DominantForm, mb: ModuleBasis) -> list[TorusForm]:
    """One torus form per residue class ``k = 0..g-1``."""
    if len(mb.b) != len(df.terms):
        raise DomainError("module basis does not match the dominant form's angles")
    g, m = mb.g, mb.m
    forms = []
    with mp.workprec(df.precision + 32):
        scale = max([t.a for t in df.terms] + [abs(df.v), mpf(0)])
        if scale == 0:
            scale = mpf(1)
        for k in range(g):
            rows = []
            for term, brow in zip(df.terms, mb.b):
                B_i = tuple(g * x for x in brow[:m])
                # exact residue of the rational part keeps k theta accurate mod 1
                frac = mpf((k * brow[m]) % g) / g
                irr = mpmath.fsum(bij * tj for bij, tj in zip(brow[:m], mb.taus)) * k
                irr -= mpmath.floor(irr)
                c_i = _phase(2 * mpmath.pi * (irr + frac) + term.beta)
                rows.append((B_i, term.a, c_i))
            merged, vz = _canonical_rows(rows, df.precision, scale)
            v = df.v + vz
            if abs(v) <= prune_tolerance(df.precision) * scale:
                v = mpf(0)
            degenerate = not merged and v == 0
            forms.append(TorusForm(
                k=k, g=g,
                B=tuple(r for r, _, _ in merged),
                c=tuple(+c for _, _, c in merged),
                a=tuple(+a for _, a, _ in merged),
                v=+v, m=m, taus=mb.taus, degenerate=degenerate,
            ))
    return forms
