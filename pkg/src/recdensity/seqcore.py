"""Recurrences, their evaluation, and generalized power sums.

Every scalar is stored as an exact ``Fraction``; decimal inputs are exact
decimal fractions.  The ``exact`` flag records whether the input was given
as rationals, which selects exact or floating evaluation.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath.libmp import mpf_neg
from mpmath import mp, mpc, mpf

from .config import cluster_tolerance, prune_tolerance
from .errors import DomainError, ParseError, PrecisionError, ResourceError
from .roots import CharacteristicSpectrum, mp_value, to_fraction

try:  # GMP integers make exact iteration several times faster
    from gmpy2 import mpz as _bigint
except ImportError:  # pragma: no cover
    _bigint = int

__all__ = [
    "Recurrence",
    "PowerSum",
    "PowerSumTerm",
    "parse_scalar",
    "load_recurrence",
    "loads_recurrence",
    "dump_recurrence",
    "dumps_recurrence",
    "evaluate",
    "exact_signs",
    "char_poly",
    "power_sum_decompose",
    "power_sum",
    "reconstruct",
    "subsequence_power_sum",
    "sequence_spectrum",
]

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*/\s*(\d+)\s*$")
_INTEGER = re.compile(r"^\s*[+-]?\d+\s*$")


# ---------------------------------------------------------------- recurrences

@dataclass(frozen=True)
class Recurrence:
    """``f_{n+h} = c_1 f_{n+h-1} + ... + c_h f_n`` for indices past ``prefix``.

    ``prefix`` holds the terms split off when trailing zero coefficients
    were trimmed; the recurrence proper starts at index ``len(prefix)``.
    Build instances with :meth:`create`, which normalizes input.
    """

    coeffs: tuple[Fraction, ...]
    init: tuple[Fraction, ...]
    name: str | None = None
    exact: bool = True
    prefix: tuple[Fraction, ...] = ()

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise DomainError("a recurrence needs at least one coefficient")
        if self.coeffs[-1] == 0:
            raise DomainError("trailing coefficient must be nonzero; use Recurrence.create")
        if len(self.init) != len(self.coeffs):
            raise DomainError(
                f"need {len(self.coeffs)} initial values, got {len(self.init)}"
            )

    @classmethod
    def create(cls, coeffs, init, name=None, exact=None) -> "Recurrence":
        coeffs = list(coeffs)
        init = list(init)
        if not coeffs or not init:
            raise DomainError("coeffs and init must be non-empty")
        if len(coeffs) != len(init):
            raise DomainError(f"need {len(coeffs)} initial values, got {len(init)}")
        if exact is None:
            exact = all(_is_exact_input(x) for x in coeffs + init)
        c = [to_fraction(_scalar_value(x)) for x in coeffs]
        f = [to_fraction(_scalar_value(x)) for x in init]
        prefix: list[Fraction] = []
        while c and c[-1] == 0:
            # f_{n+h} no longer depends on f_n: peel f_0 into the prefix
            c.pop()
            prefix.append(f.pop(0))
        if not c:
            c, f = [Fraction(1)], [Fraction(0)]
        return cls(tuple(c), tuple(f), name, bool(exact), tuple(prefix))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @property
    def start(self) -> int:
        return len(self.prefix)

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.init)


def _is_exact_input(x) -> bool:
    if isinstance(x, (int, Fraction)):
        return True
    if isinstance(x, str):
        return bool(_RATIONAL.match(x) or _INTEGER.match(x))
    return False


def _scalar_value(x):
    if isinstance(x, str):
        return parse_scalar(x)[0]
    return x


def parse_scalar(text: str) -> tuple[Fraction, bool]:
    """Parse ``"p/q"`` (exact) or a decimal string; returns (value, exact)."""
    if not isinstance(text, str):
        raise ParseError(f"scalar must be a string, got {type(text).__name__}")
    m = _RATIONAL.match(text)
    if m:
        q = int(m.group(2))
        if q == 0:
            raise ParseError(f"zero denominator in {text!r}")
        return Fraction(int(m.group(1)), q), True
    if "/" in text:
        raise ParseError(f"malformed rational {text!r} (denominator must be a positive integer)")
    if _INTEGER.match(text):
        return Fraction(int(text)), True
    try:
        d = Decimal(text.strip())
    except InvalidOperation:
        raise ParseError(f"not a rational or decimal scalar: {text!r}") from None
    if not d.is_finite():
        raise ParseError(f"non-finite scalar {text!r}")
    return Fraction(d), False


def format_scalar(x: Fraction, exact: bool) -> str:
    """``p/q`` for exact data; decimals otherwise.

    Stored scalars are always exact rationals, so a terminating value is
    printed in full and any other value falls back to ``p/q``; the file
    then reproduces the recurrence bit for bit.
    """
    if exact or x.denominator == 1:
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    q = x.denominator
    twos = fives = 0
    while q % 2 == 0:
        q //= 2
        twos += 1
    while q % 5 == 0:
        q //= 5
        fives += 1
    if q != 1:
        return f"{x.numerator}/{x.denominator}"
    return _exact_decimal(x, max(twos, fives))


def _exact_decimal(x: Fraction, k: int) -> str:
    sign = "-" if x < 0 else ""
    n = (abs(x) * 10**k).numerator
    s = str(n).rjust(k + 1, "0")
    if k == 0:
        return sign + s
    return f"{sign}{s[:-k]}.{s[-k:]}"


def loads_recurrence(text: str) -> Recurrence:
    """Parse the JSON interchange object ``{"coeffs", "init", "name"}``."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError("top level must be an object")
    values = {}
    exact = True
    for key in ("coeffs", "init"):
        arr = obj.get(key)
        if not isinstance(arr, list):
            raise ParseError(f"field {key!r}: expected an array")
        if not arr:
            raise ParseError(f"field {key!r}: array must be non-empty")
        out = []
        for i, item in enumerate(arr):
            if isinstance(item, bool) or not isinstance(item, (str, int)):
                raise ParseError(f"field {key}[{i}]: scalars must be strings")
            try:
                v, ex = parse_scalar(str(item)) if isinstance(item, int) else parse_scalar(item)
            except ParseError as exc:
                raise ParseError(f"field {key}[{i}]: {exc}") from None
            exact = exact and ex
            out.append(v)
        values[key] = out
    if len(values["coeffs"]) != len(values["init"]):
        raise ParseError(
            f"field 'init': expected {len(values['coeffs'])} values, got {len(values['init'])}"
        )
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise ParseError("field 'name': expected a string")
    try:
        return Recurrence.create(values["coeffs"], values["init"], name=name, exact=exact)
    except DomainError as exc:
        raise ParseError(str(exc)) from None


def load_recurrence(path) -> Recurrence:
    with open(path, encoding="utf-8") as fh:
        return loads_recurrence(fh.read())


def dumps_recurrence(rec: Recurrence) -> str:
    # the prefix is re-expressed by restoring the trimmed zero coefficients
    coeffs = list(rec.coeffs) + [Fraction(0)] * rec.start
    init = list(rec.prefix) + list(rec.init)
    obj = {
        "coeffs": [format_scalar(c, rec.exact) for c in coeffs],
        "init": [format_scalar(v, rec.exact) for v in init],
    }
    if rec.name is not None:
        obj["name"] = rec.name
    return json.dumps(obj, indent=2) + "\n"


def dump_recurrence(rec: Recurrence, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_recurrence(rec))


# ---------------------------------------------------------------- evaluation

def _scaled_integer_form(rec: Recurrence):
    """Integers ``(mult, init, den)`` with ``g_n = E D^n f_{start+n}`` integral."""
    d = 1
    for c in rec.coeffs:
        d = math.lcm(d, c.denominator)
    e = 1
    for v in rec.init:
        e = math.lcm(e, v.denominator)
    mult = [_bigint(int(c * d**i)) for i, c in enumerate(rec.coeffs, 1)]
    init = [_bigint(int(v * e * d**n)) for n, v in enumerate(rec.init)]
    return mult, init, d, e


def _iter_scaled(rec: Recurrence, count: int, max_bits: int):
    """Yield the scaled integers g_0, g_1, ... of the core sequence."""
    mult, window, _, _ = _scaled_integer_form(rec)
    h = rec.order
    pairs = [(m, h - 1 - i) for i, m in enumerate(mult) if m != 0]
    for n in range(min(count, h)):
        yield window[n]
    window = list(window)
    for n in range(h, count):
        s = _bigint(0)
        for m, pos in pairs:
            s += m * window[pos]
        if s.bit_length() > max_bits:
            raise ResourceError(
                f"exact term {n + rec.start} exceeds the {max_bits}-bit budget", index=n + rec.start
            )
        window.pop(0)
        window.append(s)
        yield s


def evaluate_exact(rec: Recurrence, n_max: int, max_bits: int = 1 << 24) -> list[Fraction]:
    _, _, d, e = _scaled_integer_form(rec)
    out = list(rec.prefix[: n_max + 1])
    count = n_max + 1 - rec.start
    scale = e
    for g in _iter_scaled(rec, max(count, 0), max_bits):
        out.append(Fraction(int(g), scale))
        scale *= d
    return out


def evaluate(rec: Recurrence, n_max: int, *, precision: int = 128,
             max_bits: int = 1 << 24) -> list:
    """Terms ``f_0 .. f_{n_max}``; Fractions when ``rec.exact`` else mpf."""
    if n_max < 0:
        raise DomainError("n_max must be >= 0")
    if rec.exact:
        return evaluate_exact(rec, n_max, max_bits)
    with mp.workprec(precision):
        c = [mp_value(x) for x in rec.coeffs]
        vals = [mp_value(x) for x in rec.prefix] + [mp_value(x) for x in rec.init]
        h = rec.order
        while len(vals) <= n_max:
            vals.append(mpmath.fsum(c[i] * vals[-1 - i] for i in range(h)))
        return [+v for v in vals[: n_max + 1]]


def exact_signs(rec: Recurrence, count: int, max_bits: int = 1 << 24):
    """Exact signs (-1/0/1) of ``f_0 .. f_{count-1}`` as a bytes-like list."""
    out = [(x > 0) - (x < 0) for x in rec.prefix[:count]]
    for g in _iter_scaled(rec, max(count - rec.start, 0), max_bits):
        out.append((g > 0) - (g < 0))
    return out


def char_poly(rec: Recurrence) -> list[Fraction]:
    """Coefficients of ``z^h - c_1 z^{h-1} - ... - c_h``, highest first."""
    return [Fraction(1)] + [-c for c in rec.coeffs]


# ---------------------------------------------------------------- power sums

@dataclass(frozen=True)
class PowerSumTerm:
    root: mpc
    coeffs: tuple  # p_0 .. p_{mu-1} of P(n) = sum p_j n^j

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class PowerSum:
    """``f_n = sum_k P_k(n) gamma_k^n`` for ``n >= start``."""

    terms: tuple[PowerSumTerm, ...]
    precision: int
    start: int = 0

    def __len__(self):
        return len(self.terms)

    @property
    def size(self) -> int:
        # total coefficient count; strictly drops along the density recursion
        return sum(len(t.coeffs) for t in self.terms)

    def is_empty(self) -> bool:
        return not self.terms


def _wp(precision: int) -> int:
    return precision + 32


def sequence_spectrum(ps: PowerSum) -> CharacteristicSpectrum:
    """Spectrum of the roots actually present in a power sum."""
    from .roots import Root

    zero = mpf(0)
    roots = tuple(Root(t.root, len(t.coeffs), zero) for t in ps.terms)
    return CharacteristicSpectrum(roots, ps.precision)


def _pair_index(roots):
    """Index of the exact conjugate for each root (itself when real)."""
    idx = {}
    for i, r in enumerate(roots):
        if r.imag == 0:
            idx[i] = i
            continue
        for j, s in enumerate(roots):
            # exact comparison: negation must not round to the working precision
            if j != i and s.real == r.real and s.imag._mpf_ == mpf_neg(r.imag._mpf_):
                idx[i] = j
                break
        else:
            raise PrecisionError("non-real root without an exact conjugate partner")
    return idx


def _symmetrize(terms):
    roots = [t[0] for t in terms]
    pairs = _pair_index(roots)
    out = []
    for i, (root, coeffs) in enumerate(terms):
        j = pairs[i]
        if j == i:
            out.append((mpc(root.real, 0), [mpc(c.real, 0) for c in coeffs]))
        else:
            other = terms[j][1]
            n = max(len(coeffs), len(other))
            a = list(coeffs) + [mpc(0)] * (n - len(coeffs))
            b = list(other) + [mpc(0)] * (n - len(other))
            out.append((root, [(x + mpmath.conj(y)) / 2 for x, y in zip(a, b)]))
    return out


def _prune(terms, precision, scale=None):
    """Drop coefficients below the relative pruning tolerance."""
    if scale is None:
        scale = max((abs(c) for _, cs in terms for c in cs), default=mpf(0))
    if scale == 0:
        return []
    tol = prune_tolerance(precision) * scale
    out = []
    for root, coeffs in terms:
        cs = [c if abs(c) >= tol else mpc(0) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if cs:
            out.append((root, cs))
    return out


def _finish(terms, precision, start, scale=None) -> PowerSum:
    terms = _prune(_symmetrize(terms), precision, scale)
    terms.sort(key=lambda t: (-abs(t[0]), _angle(t[0])))
    return PowerSum(tuple(PowerSumTerm(r, tuple(c)) for r, c in terms), precision, start)


def _angle(z):
    a = mpmath.arg(z) if z != 0 else mpf(0)
    return a + 2 * mpmath.pi if a < 0 else a


def power_sum_decompose(rec: Recurrence, spec: CharacteristicSpectrum,
                        precision: int | None = None) -> PowerSum:
    """Solve ``f_n = sum_k P_k(n) gamma_k^n`` for n = 0..h-1.

    Simple spectra use partial fractions of the generating function;
    repeated roots fall back to the confluent Vandermonde system.
    """
    precision = precision or spec.precision
    h = rec.order
    if spec.degree != h:
        raise DomainError(f"spectrum has degree {spec.degree}, recurrence has order {h}")
    with mp.workprec(_wp(precision)):
        roots = [r.value for r in spec.roots]
        mults = [r.multiplicity for r in spec.roots]
        f = [mp_value(v) for v in rec.init]
        if all(m == 1 for m in mults):
            coeffs = _partial_fractions(rec, roots, f)
            terms = [(r, [c]) for r, c in zip(roots, coeffs)]
        else:
            terms = _confluent_solve(roots, mults, f)
        terms = _symmetrize(terms)
        _check_reconstruction(terms, f, precision)
        if rec.start:
            terms = [_shift_term(r, cs, rec.start) for r, cs in terms]
        return _finish(terms, precision, rec.start)


def _partial_fractions(rec, roots, f):
    # F(z) = N(z)/Q(z), Q(z) = 1 - sum c_i z^i = prod (1 - gamma_k z)
    h = rec.order
    c = [mp_value(x) for x in rec.coeffs]
    q = [mpf(1)] + [-x for x in c]
    num = []
    for j in range(h):
        num.append(mpmath.fsum(q[i] * f[j - i] for i in range(j + 1)))
    out = []
    for k, g in enumerate(roots):
        w = 1 / g
        n_val = mpc(0)
        for a in reversed(num):
            n_val = n_val * w + a
        den = mpc(1)
        for j, other in enumerate(roots):
            if j != k:
                den *= 1 - other * w
        out.append(n_val / den)
    return out


def _confluent_solve(roots, mults, f):
    h = len(f)
    cols = [(k, j) for k, m in enumerate(mults) for j in range(m)]
    a = mpmath.matrix(h, h)
    for n in range(h):
        for col, (k, j) in enumerate(cols):
            a[n, col] = mpf(n) ** j * roots[k] ** n if (n or j == 0) else mpc(0)
    try:
        sol = mpmath.lu_solve(a, mpmath.matrix([mpc(v) for v in f]))
    except ZeroDivisionError:
        raise PrecisionError("confluent system is singular at this precision") from None
    terms = []
    pos = 0
    for k, m in enumerate(mults):
        terms.append((roots[k], [sol[pos + j] for j in range(m)]))
        pos += m
    return terms


def _eval_terms(terms, n):
    total = mpc(0)
    for root, coeffs in terms:
        p = mpc(0)
        for c in reversed(coeffs):
            p = p * n + c
        total += p * _power(root, n)
    return total


def _check_reconstruction(terms, f, precision):
    tol = prune_tolerance(precision)
    for n, v in enumerate(f):
        got = _eval_terms(terms, n)
        if abs(got - v) > tol * max(mpf(1), abs(v)):
            raise PrecisionError(
                f"power sum does not reproduce f_{n} at {precision} bits; retry with more bits"
            )


def _poly_shift(coeffs, shift):
    """Coefficients of P(n + shift) given those of P(n)."""
    out = [mpc(0)] * len(coeffs)
    for j, c in enumerate(coeffs):
        for i in range(j + 1):
            out[i] += c * math.comb(j, i) * mpf(shift) ** (j - i)
    return out


def _shift_term(root, coeffs, start):
    # f_n = P(n - s) gamma^(n - s) for n >= s
    scale = _power(root, -start)
    return root, [c * scale for c in _poly_shift(coeffs, -start)]


def _power(z, n):
    """``z**n`` with the angle reduced mod 1 at doubled precision."""
    if n == 0:
        return mpc(1)
    if z.imag == 0:
        return mpc(z.real ** n, 0)
    prec = mp.prec
    with mp.workprec(2 * prec + max(int(abs(n)).bit_length(), 1)):
        r = abs(z)
        turns = mpmath.arg(z) / (2 * mpmath.pi) * n
        turns -= mpmath.floor(turns)
        val = r ** n * mpmath.expjpi(2 * turns)
    return +val


def power_sum(rec: Recurrence, precision: int = 128) -> PowerSum:
    """Convenience: spectrum plus decomposition at one precision."""
    from .roots import find_roots

    spec = find_roots(char_poly(rec), precision)
    return power_sum_decompose(rec, spec, precision)


def reconstruct(ps: PowerSum, n: int):
    """Real value of the power sum at ``n``; checks the imaginary residue."""
    with mp.workprec(_wp(ps.precision)):
        total = mpc(0)
        scale = mpf(0)
        for t in ps.terms:
            p = mpc(0)
            for c in reversed(t.coeffs):
                p = p * n + c
            term = p * _power(t.root, n)
            total += term
            scale += abs(term)
        if abs(total.imag) > prune_tolerance(ps.precision) * max(scale, mpf(1)) * 16:
            raise PrecisionError(f"imaginary residue {mpmath.nstr(total.imag, 5)} at n={n}")
        return +total.real


def subsequence_power_sum(ps: PowerSum, g: int, k: int) -> PowerSum:
    """Power sum of ``n -> f_{g n + k}``; equal powers are merged."""
    if g < 1 or not 0 <= k < g:
        raise DomainError("need g >= 1 and 0 <= k < g")
    with mp.workprec(_wp(ps.precision)):
        raw = []
        for t in ps.terms:
            root = _power(t.root, g)
            lift = _power(t.root, k)
            # P(g n + k) expanded in powers of n
            q = [mpc(0)] * len(t.coeffs)
            for j, c in enumerate(t.coeffs):
                for i in range(j + 1):
                    q[i] += c * math.comb(j, i) * mpf(g) ** i * mpf(k) ** (j - i)
            raw.append((root, [x * lift for x in q]))
        scale = max((abs(c) for _, cs in raw for c in cs), default=mpf(0))
        merged = _merge_roots(raw, ps.precision)
        start = max(0, -(-(ps.start - k) // g))
        return _finish(merged, ps.precision, start, scale)


def _merge_roots(raw, precision):
    tol = cluster_tolerance(precision)
    groups: list[list[int]] = []
    for i, (r, _) in enumerate(raw):
        for grp in groups:
            if abs(raw[grp[0]][0] - r) <= tol * max(mpf(1), abs(r)):
                grp.append(i)
                break
        else:
            groups.append([i])
    out = []
    for grp in groups:
        rs = [raw[i][0] for i in grp]
        centre = sum(rs, mpc(0)) / len(rs)
        n = max(len(raw[i][1]) for i in grp)
        acc = [mpc(0)] * n
        for i in grp:
            for j, c in enumerate(raw[i][1]):
                acc[j] += c
        out.append([centre, acc])
    # restore exact realness/conjugacy that averaging may have blurred
    for item in out:
        if abs(item[0].imag) <= tol * max(mpf(1), abs(item[0])):
            item[0] = mpc(item[0].real, 0)
    for i, item in enumerate(out):
        if item[0].imag > 0:
            for other in out:
                if other is not item and abs(other[0] - mpmath.conj(item[0])) <= tol * max(mpf(1), abs(item[0])):
                    other[0] = mpmath.conj(item[0])
    return [(r, c) for r, c in out]
