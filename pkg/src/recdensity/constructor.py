"""Recurrences with prescribed positivity and zero densities.

Real scalars are emitted as 40-digit decimals.  The base cosine
``s = 2 cos(2 pi theta)`` is rounded once and defines the angle ``theta'``.
Arcsin and interlaced sequences are derived from ``s`` exactly.  Trig
sequences expand ``prod (z^2 - 2 cos(2 pi j theta') z + 1)`` at high
precision and keep ``TRIG_DIGITS`` digits, which preserves the relations
among the angles ``j theta'`` far below the relation-search tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp, mpf

from .errors import DomainError, PrecisionError
from .lattice import detect_rational
from .measure import certified_measure_1d
from .roots import mp_value, to_fraction
from .seqcore import Recurrence

__all__ = [
    "DIGITS",
    "TrigSpec",
    "round_decimal",
    "sine_sequence",
    "arcsin_sequence",
    "interlace",
    "trig_recurrence",
    "sawtooth_fourier",
    "trig_measure",
    "PrescribedResult",
    "prescribed_density_trig",
]

DIGITS = 40
# significant digits of constructed trig coefficients
TRIG_DIGITS = 200
_WP = 256


def round_decimal(x, digits: int = DIGITS) -> Fraction:
    """``x`` rounded to ``digits`` significant decimal digits, as an exact Fraction."""
    with mp.workprec(max(_WP, 4 * digits + 64)):
        x = mpf(x)
        if x == 0:
            return Fraction(0)
        e = int(mpmath.floor(mpmath.log10(abs(x)))) - digits + 1
        q = int(mpmath.nint(x / mpf(10) ** e))
    return Fraction(q) * Fraction(10) ** e


def _default_angle():
    with mp.workprec(_WP):
        return mpmath.sqrt(2) - 1


def _as_mpf(x) -> mpf:
    return mp_value(x) if isinstance(x, Fraction) else mpf(x)


def _base_cos(theta) -> tuple[Fraction, mpf]:
    """Rounded ``s = 2 cos(2 pi theta)`` and the exact angle ``theta'`` it encodes."""
    with mp.workprec(_WP):
        s = round_decimal(2 * mpmath.cos(2 * mpmath.pi * _as_mpf(theta)))
        theta2 = mpmath.acos(mp_value(s) / 2) / (2 * mpmath.pi)
    return s, theta2


def _poly_mul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return out


def _recurrence_from_poly(poly, init, name):
    # monic poly highest-first: z^h + p_1 z^{h-1} + ... -> c_i = -p_i
    coeffs = [-x for x in poly[1:]]
    return Recurrence.create(coeffs, init, name=name, exact=False)


def sine_sequence(w, theta=None, name=None) -> Recurrence:
    """Order-3 realization of ``sin(2 pi theta n) - w`` (theta defaults to sqrt 2 mod 1)."""
    theta = _default_angle() if theta is None else theta
    s, th = _base_cos(theta)
    w = round_decimal(w)
    # (z - 1)(z^2 - s z + 1)
    poly = _poly_mul([Fraction(1), Fraction(-1)], [Fraction(1), -s, Fraction(1)])
    with mp.workprec(_WP):
        init = [round_decimal(mpmath.sin(2 * mpmath.pi * th * n) - mp_value(w)) for n in range(3)]
    return _recurrence_from_poly(poly, init, name or f"sin(2 pi theta n) - {float(w):g}")


def arcsin_sequence(kappa) -> Recurrence:
    """Sequence with positivity density ``kappa``: ``sin(2 pi sqrt2 n) - cos(pi kappa)``."""
    kappa = mpf(kappa)
    if not 0 <= kappa <= 1:
        raise DomainError(f"kappa must lie in [0, 1], got {kappa}")
    with mp.workprec(_WP):
        w = mpmath.cos(mpmath.pi * kappa)
    return sine_sequence(w, name=f"arcsin kappa={mpmath.nstr(kappa, 10)}")


def interlace(kappa, r, base: Recurrence | None = None) -> Recurrence:
    """Interlace ``base`` with zeros so the zero density is ``r = p/q``.

    The result satisfies ``F_{qn+k} = 0`` for ``k < p`` and ``F_{qn+k} = g_n``
    for ``p <= k < q``; the recurrence puts ``c_i`` at lag ``q i``.
    Without ``base`` the arcsin sequence of density ``kappa / (1 - r)`` is used.
    """
    r = Fraction(r) if not isinstance(r, Fraction) else r
    kf = to_fraction(mpf(kappa)) if not isinstance(kappa, (int, Fraction)) else Fraction(kappa)
    if not (0 <= kf <= 1 and 0 <= r <= 1):
        raise DomainError("kappa and r must lie in [0, 1]")
    if kf + r > 1:
        raise DomainError(f"kappa + r = {float(kf + r):g} exceeds 1")
    if r == 1:
        return Recurrence.create([1], [0], name="zero")
    p, q = r.numerator, r.denominator
    if base is None:
        base = arcsin_sequence(mpf(kf.numerator) / kf.denominator / (1 - mpf(r.numerator) / r.denominator))
    if base.start:
        raise DomainError("base recurrence must not carry a prefix")
    h = base.order
    coeffs = [Fraction(0)] * (q * h)
    for i, c in enumerate(base.coeffs, 1):
        coeffs[q * i - 1] = c
    init = []
    for n in range(h):
        for k in range(q):
            init.append(base.init[n] if k >= p else Fraction(0))
    return Recurrence.create(coeffs, init, name=f"interlace r={p}/{q}", exact=base.exact)


@dataclass(frozen=True)
class TrigSpec:
    """``sum_j A_j cos(2 pi j theta n) - w`` with ``theta = base_angle``."""

    amplitudes: tuple
    base_angle: mpf | None = None
    w: mpf = mpf(0)

    def __post_init__(self):
        if not any(a != 0 for a in self.amplitudes):
            raise DomainError("TrigSpec needs a nonzero amplitude")

    @property
    def m(self) -> int:
        return len(self.amplitudes)

    def __call__(self, t):
        """Evaluate ``sum A_j cos(2 pi j t) - w`` for a float array ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, -float(self.w))
        for j, a in enumerate(self.amplitudes, 1):
            out += float(a) * np.cos(2 * np.pi * j * t)
        return out


def trig_recurrence(spec: TrigSpec, name=None) -> Recurrence:
    """Order ``2m`` (+1 with a constant) recurrence realizing ``spec``.

    The factors ``z^2 - 2 cos(2 pi j theta') z + 1`` are expanded at high
    precision and each coefficient is rounded to ``TRIG_DIGITS`` significant
    digits.  An exact expansion would need about ``20 m^2`` digits per
    coefficient; 40-digit coefficients would perturb the angles ``j theta'``
    enough to hide their integer relations.
    """
    theta = _default_angle() if spec.base_angle is None else spec.base_angle
    if detect_rational(_as_mpf(theta) % 1, 10**6, Fraction(1, 10**30)) is not None:
        raise DomainError("base angle must not be rational")
    wp = 4 * TRIG_DIGITS + 64
    s, _ = _base_cos(theta)
    with mp.workprec(wp):
        th = mpmath.acos(mp_value(s) / 2) / (2 * mpmath.pi)
        poly = [mpf(1)]
        for j in range(1, spec.m + 1):
            sj = 2 * mpmath.cos(2 * mpmath.pi * j * th)
            nxt = poly + [mpf(0), mpf(0)]
            for i, c in enumerate(poly):
                nxt[i + 1] -= sj * c
                nxt[i + 2] += c
            poly = nxt
        w = round_decimal(spec.w) if spec.w else Fraction(0)
        if w:
            poly = [a - b for a, b in zip(poly + [mpf(0)], [mpf(0)] + poly)]
        poly = [round_decimal(c, TRIG_DIGITS) for c in poly]
    amps = [round_decimal(a) for a in spec.amplitudes]
    h = len(poly) - 1
    with mp.workprec(_WP):
        th = mpmath.acos(mp_value(s) / 2) / (2 * mpmath.pi)
        init = []
        for n in range(h):
            val = -mp_value(w)
            for j, a in enumerate(amps, 1):
                x = th * j * n
                x -= mpmath.floor(x)
                val += mp_value(a) * mpmath.cos(2 * mpmath.pi * x)
            init.append(round_decimal(val))
    return _recurrence_from_poly(poly, init, name or f"trig m={spec.m}")


def _segment_integral(alpha, beta, u, w, omega):
    """``int_u^w (alpha + beta t) cos(omega t) dt`` in closed form."""
    def prim(t):
        return (alpha + beta * t) * mpmath.sin(omega * t) / omega + beta * mpmath.cos(omega * t) / omega**2
    return prim(w) - prim(u)


def sawtooth_fourier(epsilon, m: int) -> TrigSpec:
    """Cosine coefficients ``a_1..a_m`` of the even zero-mean tent ``H_epsilon``.

    ``H(t) = (eps - 1)^2 / eps * (1 - 2t/eps)`` on ``[0, eps/2]`` and
    ``eps - 2t`` on ``[eps/2, 1/2]``; ``a_j = 4 int_0^{1/2} H cos(2 pi j t) dt``.
    """
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    if m < 1:
        raise DomainError("m must be positive")
    with mp.workprec(_WP):
        eps = mpf(epsilon)
        amp = (eps - 1) ** 2 / eps
        coeffs = []
        for j in range(1, m + 1):
            om = 2 * mpmath.pi * j
            first = _segment_integral(amp, -2 * amp / eps, 0, eps / 2, om)
            second = _segment_integral(eps, mpf(-2), eps / 2, mpf(1) / 2, om)
            coeffs.append(4 * (first + second))
    return TrigSpec(tuple(coeffs))


def trig_measure(amplitudes, target: float = 1e-6):
    """Certified ``measure{sum A_j cos(2 pi j t) > 0}`` as ``(value, radius)``."""
    a = np.array([float(x) for x in amplitudes])
    ks = np.arange(1, len(a) + 1)
    keep = a != 0
    phases = np.where(a[keep] < 0, np.pi, 0.0)
    est = certified_measure_1d(ks[keep], np.abs(a[keep]), phases, 0.0, 0.0, 1e-3, target)
    return est.above, est.radius


@dataclass(frozen=True)
class PrescribedResult:
    recurrence: Recurrence
    achieved: float
    radius: float
    spec: TrigSpec
    m: int
    epsilon: float
    steps: int


def prescribed_density_trig(kappa, tol: float = 1e-2, m_start: int = 16, m_cap: int = 4096,
                            target: float = 1e-6, base_angle=None) -> PrescribedResult:
    """Recurrence with no positive dominating root and positivity density ``kappa``.

    Bisects ``phi(A) = measure{sum A_j cos(2 pi j t) > 0}`` along the segment
    from ``(1, 0, ..., 0)`` (where ``phi = 1/2``) to the tent coefficients
    (where ``phi <= 2 eps``); ``kappa > 1/2`` uses ``-H``.
    """
    kappa = float(kappa)
    if not 0 < kappa < 1:
        raise DomainError("kappa must lie in (0, 1)")
    if tol <= 2 * target:
        raise PrecisionError(f"tolerance {tol} is below the certified measure radius {target}")
    low = min(kappa, 1 - kappa)
    sign = 1.0 if kappa <= 0.5 else -1.0
    if abs(low - 0.5) <= tol:
        spec = TrigSpec((sign,), base_angle)
        rec = trig_recurrence(spec)
        val, rad = trig_measure(spec.amplitudes, target)
        return PrescribedResult(rec, val, rad, spec, 1, 0.0, 0)
    eps = low / 4
    m = m_start
    while True:
        tent = sawtooth_fourier(eps, m)
        phi_end, _ = trig_measure(tent.amplitudes, target)
        if phi_end <= 2 * eps:
            break
        if m >= m_cap:
            raise DomainError(f"no m <= {m_cap} brings the tent measure below 2 eps")
        m = min(2 * m, m_cap)
    a = np.array([float(x) for x in tent.amplitudes])
    e1 = np.zeros(m)
    e1[0] = 1.0
    if np.all(a[1:] == 0) and a[0] <= 0:
        raise DomainError("bisection segment passes through the zero vector")

    def phi(s):
        return trig_measure((1 - s) * e1 + s * a, target)

    lo, hi = 0.0, 1.0
    f_lo, _ = phi(lo)
    f_hi = phi_end
    if not f_hi <= low <= f_lo:
        raise DomainError("segment endpoints do not bracket kappa; increase m")
    steps = 0
    s, (val, rad) = lo, (f_lo, 0.0)
    while True:
        s = (lo + hi) / 2
        val, rad = phi(s)
        steps += 1
        if abs(val - low) <= tol - rad or steps >= 60:
            break
        if val > low:
            lo = s
        else:
            hi = s
    amps = sign * ((1 - s) * e1 + s * a)
    spec = TrigSpec(tuple(amps), base_angle)
    rec = trig_recurrence(spec, name=f"trig kappa={kappa:g}")
    achieved = val if sign > 0 else 1 - val
    return PrescribedResult(rec, achieved, rad, spec, m, eps, steps)
