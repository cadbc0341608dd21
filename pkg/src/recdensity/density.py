"""Positivity, negativity and zero densities of recurrence sequences.

The pipeline is: power sum -> dominant layer -> module basis -> one torus
form per residue class.  A class whose torus form vanishes identically is
re-analysed on the residual power sum of that subsequence; the recursion
strictly shrinks the power sum, so it terminates.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from mpmath import mp, mpf

from .config import RunConfig
from .dominance import dominant_form, has_positive_dominating_root
from .errors import DomainError, PrecisionError, ResourceError
from .measure import torus_measure
from .seqcore import (
    PowerSum,
    Recurrence,
    evaluate_exact,
    exact_signs,
    power_sum,
    sequence_spectrum,
    subsequence_power_sum,
)
from .torus import module_basis, torus_forms

__all__ = [
    "ClassDensity",
    "DensityReport",
    "positivity_density",
    "power_sum_density",
    "EmpiricalCounts",
    "empirical_density",
    "write_convergence_csv",
    "ZeroDensity",
    "zero_density",
    "OscillationReport",
    "oscillation_certificate",
]

CAVEAT_INDEPENDENCE = "independence-assumed-up-to-bound"
CAVEAT_ALL_N = "all-n-positivity-not-claimed"
CAVEAT_QMC = "statistical-radius-99pct"
CAVEAT_ZERO_UNCERTIFIED = "zero-classes-uncertified"


@dataclass(frozen=True)
class ClassDensity:
    """Densities inside the residue class ``n = offset (mod period)``."""

    period: int
    offset: int
    pos: Fraction | float
    neg: Fraction | float
    zero: Fraction | float
    radius: float
    method: str  # exact-constant, torus-measure, zero-class
    depth: int = 0
    dim: int = 0

    def as_dict(self) -> dict:
        return {
            "period": self.period,
            "offset": self.offset,
            "pos": _num(self.pos),
            "neg": _num(self.neg),
            "zero": _num(self.zero),
            "radius": self.radius,
            "method": self.method,
            "depth": self.depth,
            "dim": self.dim,
        }


def _num(x):
    if isinstance(x, Fraction):
        return {"value": float(x), "exact": f"{x.numerator}/{x.denominator}"}
    return {"value": float(x), "exact": None}


@dataclass(frozen=True)
class DensityReport:
    """Total densities with error radii; exact values are ``Fraction``."""

    pos: Fraction | float
    neg: Fraction | float
    zero: Fraction
    radius: float
    classes: tuple[ClassDensity, ...]
    caveats: tuple[str, ...]
    relation_bound: int | None
    samples_used: int
    seed: int
    precision: int
    zero_certified: bool | None = None

    @property
    def exact(self) -> bool:
        return isinstance(self.pos, Fraction) and isinstance(self.neg, Fraction)

    @property
    def partition_error(self) -> float:
        return abs(float(self.pos) + float(self.neg) + float(self.zero) - 1.0)

    def as_dict(self) -> dict:
        return {
            "pos": _num(self.pos),
            "neg": _num(self.neg),
            "zero": _num(self.zero),
            "radius": self.radius,
            "zero_certified": self.zero_certified,
            "classes": [c.as_dict() for c in self.classes],
            "caveats": list(self.caveats),
            "relation_bound": None if self.relation_bound is None else str(self.relation_bound),
            "samples_used": self.samples_used,
            "seed": self.seed,
            "precision": self.precision,
        }


@dataclass
class _State:
    config: RunConfig
    leaves: list = field(default_factory=list)
    relation_bound: int | None = None
    samples: int = 0
    qmc: bool = False


def _analyse(ps: PowerSum, period: int, offset: int, depth: int, st: _State, budget: int):
    if ps.is_empty():
        st.leaves.append(ClassDensity(period, offset, Fraction(0), Fraction(0), Fraction(1),
                                      0.0, "zero-class", depth))
        return
    if budget < 0:
        raise PrecisionError("class recursion failed to terminate; increase --precision")
    cfg = st.config
    df = dominant_form(ps)
    mb = module_basis(df.thetas, ps.precision, cfg.q_max, cfg.height_bound)
    if mb.m:
        st.relation_bound = mb.relation_bound if st.relation_bound is None else min(
            st.relation_bound, mb.relation_bound)
    for tf in torus_forms(df, mb):
        p2 = period * tf.g
        o2 = offset + period * tf.k
        try:
            if tf.degenerate:
                sub = subsequence_power_sum(df.residual, tf.g, tf.k)
                if sub.size >= ps.size:
                    raise PrecisionError("degenerate class did not shrink the power sum")
                _analyse(sub, p2, o2, depth + 1, st, budget - 1)
            elif tf.is_constant:
                one, nil = Fraction(1), Fraction(0)
                pos, neg = (one, nil) if tf.v > 0 else (nil, one)
                st.leaves.append(ClassDensity(p2, o2, pos, neg, nil, 0.0, "exact-constant", depth))
            else:
                est = torus_measure(
                    tf, 0.0, cfg.samples, cfg.seed, cfg.epsilon_band, cfg.shifts,
                    cfg.certified_radius, cfg.worker_count, key=(p2, o2),
                )
                st.samples += est.samples
                st.qmc |= est.method == "qmc"
                st.leaves.append(ClassDensity(p2, o2, est.above, est.below, Fraction(0),
                                              est.radius, "torus-measure", depth, tf.m))
        except PrecisionError as exc:
            if "residue class" in str(exc):
                raise
            raise type(exc)(f"residue class {o2} mod {p2}: {exc}") from exc


def power_sum_density(ps: PowerSum, config: RunConfig | None = None) -> DensityReport:
    """Density report for the sequence represented by ``ps``."""
    config = config or RunConfig()
    st = _State(config)
    _analyse(ps, 1, 0, 0, st, ps.size + 1)
    leaves = sorted(st.leaves, key=lambda c: (c.period, c.offset))
    exact = all(isinstance(c.pos, Fraction) for c in leaves)
    if exact:
        pos = sum((c.pos / c.period for c in leaves), Fraction(0))
        neg = sum((c.neg / c.period for c in leaves), Fraction(0))
    else:
        pos = math.fsum(float(c.pos) / c.period for c in leaves)
        neg = math.fsum(float(c.neg) / c.period for c in leaves)
    zero = sum((c.zero / c.period for c in leaves), Fraction(0))
    radius = math.fsum(c.radius / c.period for c in leaves)
    caveats = []
    if st.relation_bound is not None:
        caveats.append(f"{CAVEAT_INDEPENDENCE}:{st.relation_bound}")
    if st.qmc:
        caveats.append(CAVEAT_QMC)
    if float(pos) + radius >= 1.0 and float(pos) > 0.5:
        caveats.append(CAVEAT_ALL_N)
    return DensityReport(pos, neg, zero, radius, tuple(leaves), tuple(caveats),
                         st.relation_bound, st.samples, config.seed, ps.precision)


def positivity_density(rec: Recurrence, config: RunConfig | None = None) -> DensityReport:
    """Densities of ``{f_n > 0}``, ``{f_n < 0}``, ``{f_n = 0}``.

    The zero density is certified by exact evaluation: every zero class
    must show ``h`` consecutive exact zeros.
    """
    config = config or RunConfig()
    if rec.is_zero():
        leaf = ClassDensity(1, 0, Fraction(0), Fraction(0), Fraction(1), 0.0, "zero-class")
        return DensityReport(Fraction(0), Fraction(0), Fraction(1), 0.0, (leaf,), (),
                             None, 0, config.seed, config.analysis_precision, True)
    ps = power_sum(rec, config.analysis_precision)
    report = power_sum_density(ps, config)
    certified = _certify_zero_classes(rec, report.classes, config)
    caveats = report.caveats if certified else report.caveats + (CAVEAT_ZERO_UNCERTIFIED,)
    return DensityReport(report.pos, report.neg, report.zero, report.radius, report.classes,
                         caveats, report.relation_bound, report.samples_used, report.seed,
                         report.precision, certified)


def _certify_zero_classes(rec: Recurrence, classes, config: RunConfig) -> bool:
    """Each zero class needs ``h`` consecutive exact zeros past the prefix.

    The subsequence ``f_{Pn+K}`` satisfies a recurrence of order ``h`` whose
    roots are the ``P``-th powers of the original ones, with nonzero
    trailing coefficient, so ``h`` consecutive zeros force it to vanish.
    """
    zero_leaves = [c for c in classes if c.method == "zero-class"]
    if not zero_leaves:
        return True
    h = rec.order
    needs = []
    for c in zero_leaves:
        n0 = max(0, -(-(rec.start - c.offset) // c.period))
        needs.append([c.period * (n0 + j) + c.offset for j in range(h)])
    top = max(max(ix) for ix in needs)
    try:
        vals = evaluate_exact(rec, top, config.max_exact_bits)
    except ResourceError:
        return False
    return all(vals[i] == 0 for ix in needs for i in ix)


# ---------------------------------------------------------------- zero density

@dataclass(frozen=True)
class ZeroDensity:
    """Rational zero density with its certificate status."""

    value: Fraction
    certified: bool
    period: int
    zero_classes: tuple[tuple[int, int], ...]  # (period, offset)

    def __float__(self):
        return float(self.value)


def zero_density(rec: Recurrence, config: RunConfig | None = None) -> ZeroDensity:
    """``#(zero classes) / period`` over the leaves of the class recursion."""
    report = positivity_density(rec, config)
    period = 1
    for c in report.classes:
        period = math.lcm(period, c.period)
    zeros = tuple((c.period, c.offset) for c in report.classes if c.method == "zero-class")
    return ZeroDensity(report.zero, bool(report.zero_certified), period, zeros)


# ---------------------------------------------------------------- empirical

@dataclass(frozen=True)
class EmpiricalCounts:
    """Sign counts over ``0 <= n < N``.

    ``method`` is "exact" (big-integer iteration) or "float" (closed form
    normalized by ``n^D rho^n``); in float mode terms inside the zero band
    are counted as zero and also reported in ``band``.
    """

    pos: int
    neg: int
    zero: int
    N: int
    method: str
    band: int = 0
    band_width: float = 0.0
    checkpoints: tuple[tuple[int, int, int, int], ...] = ()

    def fractions(self):
        return self.pos / self.N, self.neg / self.N, self.zero / self.N

    def as_dict(self) -> dict:
        return {
            "pos": self.pos, "neg": self.neg, "zero": self.zero, "N": self.N,
            "method": self.method, "band": self.band, "band_width": self.band_width,
        }


def _checkpoints(N: int) -> list[int]:
    out = []
    n = 100
    while n < N:
        out.append(n)
        n *= 10
    out.append(N)
    return out


def _tally(signs: np.ndarray, N: int, method: str, band: int = 0, width: float = 0.0):
    pos_c = np.cumsum(signs > 0)
    neg_c = np.cumsum(signs < 0)
    cps = []
    for n in _checkpoints(N):
        p, q = int(pos_c[n - 1]), int(neg_c[n - 1])
        cps.append((n, p, q, n - p - q))
    p, q = int(pos_c[-1]), int(neg_c[-1])
    return EmpiricalCounts(p, q, N - p - q, N, method, band, width, tuple(cps))


def _split(x: mpf):
    # hi has 26 significant bits so hi * n is exact in float64 for n < 2**27
    hi = float(mpmath.ldexp(mpmath.nint(mpmath.ldexp(x, 26)), -26))
    lo = float(x - hi)
    return hi, lo


def normalized_values(ps: PowerSum, ns: np.ndarray) -> tuple[np.ndarray, float]:
    """Float values of ``f_n / (n^D rho^n)`` for an index array, plus the scale.

    Angles are reduced mod 1 with a split representation so large ``n``
    keep full double accuracy.
    """
    if ps.is_empty():
        return np.zeros(len(ns)), 1.0
    with mp.workprec(ps.precision + 32):
        df = dominant_form(ps)
        rho, D = df.rho, df.D
        scale = float(max([t.a for t in df.terms] + [abs(df.v)]))
        nf = ns.astype(float)
        norm_n = np.maximum(nf, 1.0)
        total = np.zeros(len(ns))
        for t in ps.terms:
            if t.root.imag < 0:
                continue
            weight = 1.0 if t.root.imag == 0 else 2.0
            r = abs(t.root) / rho
            theta = mpmath.arg(t.root) / (2 * mpmath.pi)
            hi, lo = _split(theta)
            frac = np.mod(hi * nf, 1.0) + lo * nf
            # P(n) / n^D, evaluated as sum p_j n^(j - D)
            poly = np.zeros(len(ns), dtype=complex)
            for j, cj in enumerate(t.coeffs):
                poly += complex(cj) * norm_n ** (j - D)
            lr = float(mpmath.log(r)) if r < 1 else 0.0
            mag = np.exp(lr * nf)
            total += weight * mag * np.real(poly * np.exp(2j * np.pi * frac))
    return total, scale


def empirical_density(rec: Recurrence, N: int, config: RunConfig | None = None,
                      method: str = "auto") -> EmpiricalCounts:
    """Count signs of ``f_0 .. f_{N-1}``.

    Exact big-integer iteration is used for exact input; otherwise the
    closed form is evaluated in double precision after normalization.
    """
    config = config or RunConfig()
    if N < 1:
        raise DomainError("N must be >= 1")
    if method == "auto":
        method = "exact" if rec.exact else "float"
    if method == "exact":
        signs = np.array(exact_signs(rec, N, config.max_exact_bits), dtype=np.int8)
        return _tally(signs, N, "exact")
    if method != "float":
        raise DomainError(f"unknown method {method!r}")
    signs = np.zeros(N, dtype=np.int8)
    pre = min(rec.start, N)
    for i in range(pre):
        signs[i] = (rec.prefix[i] > 0) - (rec.prefix[i] < 0)
    width = max(2.0 ** (-config.precision / 3), 2.0**-43)
    band = 0
    if not rec.is_zero() and N > pre:
        ps = power_sum(rec, config.precision)
        step = 1 << 18
        for lo in range(pre, N, step):
            ns = np.arange(lo, min(N, lo + step), dtype=np.int64)
            vals, scale = normalized_values(ps, ns)
            s = np.sign(vals).astype(np.int8)
            inband = np.abs(vals) < width * scale
            s[inband] = 0
            band += int(np.count_nonzero(inband))
            signs[lo:lo + len(ns)] = s
    else:
        band = N - pre
    return _tally(signs, N, "float", band, width)


def write_convergence_csv(counts: EmpiricalCounts, path) -> None:
    """Header ``n,pos_frac,neg_frac,zero_frac``; one row per checkpoint."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "pos_frac", "neg_frac", "zero_frac"])
        for n, p, q, z in counts.checkpoints:
            w.writerow([n, repr(p / n), repr(q / n), repr(z / n)])


# ---------------------------------------------------------------- oscillation

@dataclass(frozen=True)
class OscillationReport:
    """Lower bounds on both sign densities when no dominating root is positive."""

    applicable: bool
    margin: float
    delta_pos: float | None = None
    delta_neg: float | None = None
    first_pos: int | None = None
    first_neg: int | None = None
    density: DensityReport | None = None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "margin": self.margin,
            "delta_pos": self.delta_pos,
            "delta_neg": self.delta_neg,
            "first_pos": self.first_pos,
            "first_neg": self.first_neg,
            "message": self.message,
        }


def _first_signs(rec: Recurrence, config: RunConfig):
    limit = config.scan_limit
    if rec.exact:
        signs = np.array(exact_signs(rec, limit, config.max_exact_bits), dtype=np.int8)
    else:
        signs = _float_signs(rec, limit, config)
    pos = np.flatnonzero(signs > 0)
    neg = np.flatnonzero(signs < 0)
    return (int(pos[0]) if len(pos) else None), (int(neg[0]) if len(neg) else None)


def _float_signs(rec, limit, config):
    ps = power_sum(rec, config.precision)
    ns = np.arange(min(rec.start, limit), limit, dtype=np.int64)
    vals, scale = normalized_values(ps, ns)
    width = max(2.0 ** (-config.precision / 3), 2.0**-43)
    s = np.sign(vals).astype(np.int8)
    s[np.abs(vals) < width * scale] = 0
    pre = np.array([(x > 0) - (x < 0) for x in rec.prefix[:limit]], dtype=np.int8)
    return np.concatenate([pre, s])


def oscillation_certificate(rec: Recurrence, config: RunConfig | None = None) -> OscillationReport:
    """Positive lower bounds on both densities, or why the criterion does not apply."""
    config = config or RunConfig()
    if rec.is_zero():
        raise DomainError("the zero sequence has no sign changes")
    ps = power_sum(rec, config.analysis_precision)
    decision = has_positive_dominating_root(sequence_spectrum(ps))
    margin = float(decision.margin)
    if decision.positive:
        return OscillationReport(False, margin,
                                 message="positive dominating root: sign oscillation criterion inapplicable")
    report = power_sum_density(ps, config)
    dp = float(report.pos) - report.radius
    dn = float(report.neg) - report.radius
    first_pos, first_neg = _first_signs(rec, config)
    return OscillationReport(True, margin, dp, dn, first_pos, first_neg, report,
                             "no positive dominating root: both signs have positive density")
