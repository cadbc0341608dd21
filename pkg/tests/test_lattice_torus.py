import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from recdensity.dominance import DominantForm, DominantTerm
from recdensity.errors import DomainError, PrecisionError
from recdensity.lattice import (
    detect_rational,
    determinant,
    find_integer_relations,
    integer_inverse,
    lll_reduce,
    relation_search,
    unimodular_completion,
)
from recdensity.seqcore import PowerSum, Recurrence, power_sum
from recdensity.dominance import dominant_form
from recdensity.torus import module_basis, torus_forms

P = 532


def sqrt2m1():
    return mpmath.sqrt(2) - 1


def test_detect_rational_examples():
    assert detect_rational(mpf("0.25"), 64, Fraction(1, 10**12)) == Fraction(1, 4)
    with mpmath.workprec(256):
        assert detect_rational(sqrt2m1(), 10**6, Fraction(1, 10**20)) is None
    with mpmath.workprec(128):
        theta = mpf(1) / 3 + mpf("1e-30")
        assert detect_rational(theta, 100, Fraction(1, 10**25)) == Fraction(1, 3)


def test_continued_fraction_oracle_for_sqrt2():
    # convergents of sqrt2 - 1 have |theta - p/q| > 1/(3 q^2), far above 1e-20 for q <= 10^6
    with mpmath.workprec(256):
        theta = sqrt2m1()
        for q in range(1, 2000):
            p = int(mpmath.nint(theta * q))
            assert abs(theta - mpf(p) / q) > mpf(1) / (3 * q * q)


def test_relation_examples():
    with mpmath.workprec(P):
        s = sqrt2m1()
        rels = find_integer_relations([1, s, 2 * s], 10, P)
        assert (0, 2, -1) in rels
        assert (1, -2) in find_integer_relations([1, mpf(1) / 2], 4, P)
        assert find_integer_relations([1, s], 10**3, P) == []


def test_relation_search_against_pslq_oracle():
    with mpmath.workprec(P):
        vals = [mpf(1), mpmath.sqrt(2), mpmath.sqrt(3), mpmath.sqrt(2) + 3 * mpmath.sqrt(3) - 5]
        rels = find_integer_relations(vals, 10**6, P)
        oracle = mpmath.pslq(vals, maxcoeff=10**6, maxsteps=10**5)
        assert len(rels) == 1
        assert tuple(rels[0]) in {tuple(oracle), tuple(-x for x in oracle)}
        for r in rels:
            assert abs(mpmath.fsum(c * v for c, v in zip(r, vals))) < mpmath.ldexp(1, -P // 2)


def test_relation_search_precision_error():
    with pytest.raises(PrecisionError):
        relation_search([1, mpf(2) ** 0.5], 10**40, 128)


def test_relation_search_reports_certified_bound():
    with mpmath.workprec(P):
        vals = [mpf(1), sqrt2m1(), mpmath.sqrt(3) - 1, mpmath.sqrt(5) - 2]
        res = relation_search(vals, 10**40, P)
        assert res.relations == ()
        # four values at 532 bits certify less than the requested height; the bound says so
        assert 0 < res.certified_bound <= res.requested_bound


def test_lll_reduces_known_lattice():
    basis = [[1, 0, 0, 31415926], [0, 1, 0, 27182818], [0, 0, 1, 14142135]]
    red = lll_reduce(basis)
    assert abs(determinant([r[:3] + [0] for r in red[:3]] + [[0, 0, 0, 1]])) >= 0
    norms = [sum(x * x for x in r) for r in red]
    assert min(norms) < min(sum(x * x for x in r) for r in basis)


def test_unimodular_completion_examples():
    assert unimodular_completion([1]) == [[1]]
    m = unimodular_completion([2, 3])
    assert m[-1] == [2, 3] and abs(determinant(m)) == 1
    m = unimodular_completion([6, 10, 15])
    assert m[-1] == [6, 10, 15] and abs(determinant(m)) == 1
    with pytest.raises(DomainError):
        unimodular_completion([2, 4])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=8))
def test_unimodular_completion_property(vec):
    g = 0
    for x in vec:
        g = math.gcd(g, x)
    if g == 0:
        return
    e = [x // g for x in vec]
    m = unimodular_completion(e)
    assert m[-1] == e
    assert abs(determinant(m)) == 1
    inv = integer_inverse(m)
    n = len(e)
    prod = [[sum(m[i][k] * inv[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    assert prod == [[int(i == j) for j in range(n)] for i in range(n)]


def _check_basis(mb, thetas):
    assert mb.g >= 1
    assert all(0 < t < 1 for t in mb.taus)
    assert max(mb.residuals(thetas), default=0) < mpmath.ldexp(1, -mb.precision // 2)
    if mb.m:
        res = relation_search([mpf(1)] + list(mb.taus), mb.relation_bound, mb.precision)
        assert res.relations == ()


def test_module_basis_examples():
    with mpmath.workprec(P):
        s = sqrt2m1()
        mb = module_basis([s], P)
        assert (mb.m, mb.g, mb.b) == (1, 1, ((1, 0),))
        assert abs(mb.taus[0] - s) < 1e-100
        mb = module_basis([mpf(1) / 3], P)
        assert (mb.m, mb.g, mb.b) == (0, 3, ((1,),))
        thetas = [s, mpf(1) / 2]
        mb = module_basis(thetas, P)
        assert (mb.m, mb.g) == (1, 2)
        _check_basis(mb, thetas)
        assert max(mb.residuals(thetas)) < 1e-30


def test_module_basis_random_mixtures():
    rng = random.Random(7)
    with mpmath.workprec(P):
        irr = [sqrt2m1(), mpmath.sqrt(3) - 1, mpmath.sqrt(5) - 2]
        for _ in range(100):
            thetas = []
            for _ in range(rng.randint(1, 4)):
                if rng.random() < 0.4:
                    q = rng.randint(2, 12)
                    thetas.append(mpf(rng.randint(1, q - 1)) / q)
                else:
                    x = rng.choice(irr[:2]) * rng.randint(1, 5) + mpf(rng.randint(0, 6)) / rng.randint(1, 6)
                    thetas.append(x - mpmath.floor(x))
            thetas = [t for t in thetas if 0 < t < 1]
            if not thetas:
                continue
            mb = module_basis(thetas, P)
            _check_basis(mb, thetas)
            assert mb.m <= 2


def test_module_basis_order_independence_of_density():
    # densities are basis independent: permuting angles yields the same torus measures
    from recdensity.measure import torus_measure

    with mpmath.workprec(P):
        s = sqrt2m1()
        terms = (DominantTerm(mpf(1), s, mpf(0)), DominantTerm(mpf("0.7"), (2 * s) % 1, mpf(1)))
        ps = PowerSum((), P)
        df1 = DominantForm(mpf(1), 0, terms, mpf("0.2"), ps, P)
        df2 = DominantForm(mpf(1), 0, terms[::-1], mpf("0.2"), ps, P)
        m1 = [torus_measure(tf).above for tf in torus_forms(df1, module_basis(df1.thetas, P))]
        m2 = [torus_measure(tf).above for tf in torus_forms(df2, module_basis(df2.thetas, P))]
        assert m1 == pytest.approx(m2, abs=2e-6)


def _df(rec):
    return dominant_form(power_sum(rec, P))


def test_torus_forms_examples():
    with mpmath.workprec(P):
        s = sqrt2m1()
        c = 2 * mpmath.cos(2 * mpmath.pi * s)
        # exact rational stand-in: 40-digit rounded coefficient
        cf = Fraction(mpmath.nstr(c, 60))
        rec = Recurrence.create([cf, -1], [1, cf / 2])
        df = _df(rec)
        forms = torus_forms(df, module_basis(df.thetas, P))
        assert len(forms) == 1 and forms[0].m == 1 and forms[0].B == ((1,),)
        assert abs(forms[0].c[0]) < 1e-30 and abs(forms[0].a[0] - 1) < 1e-30 and forms[0].v == 0

        df = _df(Recurrence.create([-1], [1]))
        forms = torus_forms(df, module_basis(df.thetas, P))
        assert [f.m for f in forms] == [0, 0]
        assert abs(forms[0].v - 1) < 1e-30 and abs(forms[1].v + 1) < 1e-30

        # cos(2 pi n / 3): roots of z^2 + z + 1, init (1, -1/2)
        df = _df(Recurrence.create([-1, -1], [1, Fraction(-1, 2)]))
        forms = torus_forms(df, module_basis(df.thetas, P))
        vals = [float(f.v) for f in forms]
        assert vals == pytest.approx([1, -0.5, -0.5], abs=1e-25)


def test_torus_form_reproduces_subsequence():
    from recdensity.seqcore import evaluate_exact

    with mpmath.workprec(P):
        # f_n = cos(2 pi n (sqrt2-1)) realized with a rounded coefficient, plus (-1)^n
        s = sqrt2m1()
        cf = Fraction(mpmath.nstr(2 * mpmath.cos(2 * mpmath.pi * s), 50))
        # (z^2 - c z + 1)(z + 1) = z^3 + (1 - c) z^2 + (1 - c) z + 1
        rec = Recurrence.create([cf - 1, cf - 1, -1], [2, cf / 2 - 1, cf * cf / 2 - 1 + 1])
        df = _df(rec)
        mb = module_basis(df.thetas, P)
        forms = torus_forms(df, mb)
        assert mb.g == 2
        exact = evaluate_exact(rec, 2 * 200 + 2)
        for tf in forms:
            for n in range(0, 201, 13):
                val = float(exact[tf.g * n + tf.k])
                assert float(tf.at_index(n)) == pytest.approx(val, abs=1e-20)


def test_nonzero_rows_for_irrational_angles():
    with mpmath.workprec(P):
        s = sqrt2m1()
        t = mpmath.sqrt(3) - 1
        thetas = [s, (s + t) % 1, mpf(1) / 4, (2 * t) % 1]
        mb = module_basis(thetas, P)
        for brow, th in zip(mb.b, thetas):
            if mb.rationals[thetas.index(th)] is None:
                assert any(brow[: mb.m])


def test_rational_class_constants_sum_to_zero():
    rng = random.Random(11)
    with mpmath.workprec(P):
        for _ in range(50):
            terms = []
            for _ in range(rng.randint(1, 4)):
                q = rng.randint(2, 12)
                p = rng.randint(1, q // 2)
                th = mpf(p) / q
                terms.append(DominantTerm(mpf(rng.random() + 0.1), th, mpf(rng.random() * 6)))
            thetas = sorted({t.theta for t in terms})
            terms = [next(t for t in terms if t.theta == th) for th in thetas]
            df = DominantForm(mpf(1), 0, tuple(terms), mpf(0), PowerSum((), P), P)
            forms = torus_forms(df, module_basis(df.thetas, P))
            assert all(f.m == 0 for f in forms)
            assert abs(mpmath.fsum(f.v for f in forms)) < 1e-10
