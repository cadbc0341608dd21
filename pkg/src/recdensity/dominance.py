"""Normalized dominant layer of a power sum and dominating-root tests."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .config import cluster_tolerance, prune_tolerance
from .errors import DomainError, UndecidableError
from .roots import CharacteristicSpectrum
from .seqcore import PowerSum, PowerSumTerm

__all__ = [
    "DominantTerm",
    "DominantForm",
    "dominant_form",
    "DominanceDecision",
    "has_positive_dominating_root",
]


@dataclass(frozen=True)
class DominantTerm:
    """``a cos(2 pi theta n + beta)`` with ``a > 0``, ``0 < theta <= 1/2``."""

    a: mpf
    theta: mpf
    beta: mpf


@dataclass(frozen=True)
class DominantForm:
    """Top layer ``sum a_i cos(2 pi theta_i n + beta_i) + v`` of ``n^-D rho^-n f_n``.

    ``residual`` holds every power-sum coefficient not in the top layer,
    so ``f_n = n^D rho^n (top layer) + residual(n)`` exactly.
    """

    rho: mpf
    D: int
    terms: tuple[DominantTerm, ...]
    v: mpf
    residual: PowerSum
    precision: int

    @property
    def thetas(self) -> list[mpf]:
        return [t.theta for t in self.terms]

    def value(self, n: int) -> mpf:
        """Top-layer value at index ``n`` with the angle reduced mod 1."""
        with mp.workprec(2 * self.precision + int(abs(n)).bit_length()):
            total = mpf(self.v)
            for t in self.terms:
                x = t.theta * n
                x -= mpmath.floor(x)
                total += t.a * mpmath.cos(2 * mpmath.pi * x + t.beta)
        return +total


def _canonical_phase(x):
    tau = 2 * mpmath.pi
    x = x - tau * mpmath.floor(x / tau)
    return mpf(0) if x >= tau else x


def _dominant_mask(moduli, precision):
    rho = max(moduli)
    tol = cluster_tolerance(precision) * max(mpf(1), rho)
    return rho, [rho - r <= tol for r in moduli]


def dominant_form(ps: PowerSum) -> DominantForm:
    """Split ``ps`` into its normalized top layer and the residual."""
    if ps.is_empty():
        raise DomainError("dominant form of an empty power sum")
    with mp.workprec(ps.precision + 32):
        moduli = [abs(t.root) for t in ps.terms]
        rho, dom = _dominant_mask(moduli, ps.precision)
        D = max(t.degree for t, d in zip(ps.terms, dom) if d)
        terms: list[DominantTerm] = []
        v = mpf(0)
        rest: list[PowerSumTerm] = []
        for t, d in zip(ps.terms, dom):
            if not d or t.degree < D:
                rest.append(t)
                continue
            c = t.coeffs[D]
            # the top coefficient moves into the trigonometric layer
            lower = tuple(t.coeffs[:D])
            while lower and lower[-1] == 0:
                lower = lower[:-1]
            if lower:
                rest.append(PowerSumTerm(t.root, lower))
            # on the circle |gamma| = rho the unit phase is gamma / |gamma|
            unit = t.root / abs(t.root)
            if t.root.imag == 0:
                if t.root.real > 0:
                    v += c.real
                else:
                    terms.append(DominantTerm(abs(c.real), mpf(1) / 2,
                                              mpf(0) if c.real > 0 else +mpmath.pi))
            elif t.root.imag > 0:
                theta = mpmath.arg(unit) / (2 * mpmath.pi)
                terms.append(DominantTerm(2 * abs(c), theta, _canonical_phase(mpmath.arg(c))))
        scale = max([t.a for t in terms] + [abs(v)])
        tol = prune_tolerance(ps.precision) * scale
        terms = [t for t in terms if t.a > tol]
        if abs(v) <= tol:
            v = mpf(0)
        terms.sort(key=lambda t: t.theta)
        residual = PowerSum(tuple(rest), ps.precision, ps.start)
        return DominantForm(+rho, D, tuple(terms), +v, residual, ps.precision)


@dataclass(frozen=True)
class DominanceDecision:
    """Outcome of the positive-dominating-root test.

    ``margin`` is the distance from the nearest ambiguous configuration:
    a non-dominant root reaching the dominant modulus, or a dominant
    non-real root reaching the positive real axis.
    """

    positive: bool
    margin: mpf
    rho: mpf
    dominant: tuple

    def __bool__(self) -> bool:
        return self.positive


def has_positive_dominating_root(spec: CharacteristicSpectrum,
                                 precision: int | None = None) -> DominanceDecision:
    """Decide whether some root of maximal modulus is real and positive."""
    if not spec.roots:
        raise DomainError("empty spectrum")
    precision = precision or spec.precision
    with mp.workprec(precision + 32):
        moduli = [abs(r.value) for r in spec.roots]
        rho, dom = _dominant_mask(moduli, precision)
        tol = cluster_tolerance(precision) * max(mpf(1), rho)
        margin = mpmath.inf
        positive = False
        for r, mod, d in zip(spec.roots, moduli, dom):
            z = mpc(r.value)
            if not d:
                margin = min(margin, rho - mod - r.radius)
            elif z.imag == 0:
                if z.real > 0:
                    positive = True
                # a real root stays on its side of the origin
                margin = min(margin, abs(z.real) - r.radius)
            else:
                margin = min(margin, abs(z.imag) - r.radius)
        if margin <= tol:
            raise UndecidableError(
                f"dominance undecidable at {precision} bits (margin {mpmath.nstr(margin, 5)}); "
                "increase --precision"
            )
        dominant = tuple(r for r, d in zip(spec.roots, dom) if d)
        return DominanceDecision(positive, +margin, +rho, dominant)
