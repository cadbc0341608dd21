"""Command-line front end: ``recdensity analyze | density | construct``."""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import mpmath
from mpmath import mpf

from .config import RunConfig
from .constructor import arcsin_sequence, interlace, prescribed_density_trig
from .density import empirical_density, positivity_density, write_convergence_csv
from .dominance import dominant_form, has_positive_dominating_root
from .errors import (
    DomainError,
    ParseError,
    PrecisionError,
    RecDensityError,
    ResourceError,
    UndecidableError,
)
from .roots import find_roots, mp_value
from .seqcore import (
    char_poly,
    dump_recurrence,
    dumps_recurrence,
    load_recurrence,
    power_sum_decompose,
)
from .torus import module_basis

__all__ = ["main", "build_parser"]


def _s(x, digits=10) -> str:
    if isinstance(x, Fraction):
        x = mp_value(x)
    return mpmath.nstr(mpf(x), digits)


def _frac(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    return f"{float(x):.10f}"


def _poly_text(poly) -> str:
    h = len(poly) - 1
    parts = []
    for i, c in enumerate(poly):
        if c == 0:
            continue
        deg = h - i
        mag = abs(c)
        coef = "" if (mag == 1 and deg) else _frac(mag) if mag.denominator < 10**6 else _s(mag)
        var = "" if deg == 0 else "z" if deg == 1 else f"z^{deg}"
        term = f"{coef} {var}".strip() if coef and var else coef or var
        sign = "-" if c < 0 else "+"
        parts.append((sign, term))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, term in parts[1:]:
        out += f" {sign} {term}"
    return out


def _config(args) -> RunConfig:
    try:
        return RunConfig(
            precision=args.precision,
            samples=args.samples,
            seed=args.seed,
            q_max=args.qmax,
            height_bound=args.height_bound,
            epsilon_band=args.epsilon_band,
            output=args.output,
            threads=args.threads,
        )
    except DomainError as exc:
        raise ParseError(str(exc)) from exc


def _int_expr(text: str) -> int:
    """Integers like ``10**40`` or ``1e40`` for bound flags."""
    t = text.strip()
    try:
        if "**" in t:
            base, exp = t.split("**", 1)
            return int(base) ** int(exp)
        if "e" in t.lower():
            mant, exp = t.lower().split("e", 1)
            return int(mant) * 10 ** int(exp)
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _emit(args, payload: dict, lines: list[str]) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n" if args.json else "\n".join(lines) + "\n"
    sys.stdout.write(text)


# ---------------------------------------------------------------- analyze

def cmd_analyze(args) -> int:
    cfg = _config(args)
    rec = load_recurrence(args.file)
    prec = cfg.analysis_precision
    poly = char_poly(rec)
    spec = find_roots(poly, prec)
    lines = [
        f"name:        {rec.name or '-'}",
        f"order:       {rec.order}" + (f" (plus {rec.start}-term prefix)" if rec.start else ""),
        f"char poly:   {_poly_text(poly)}",
        "roots:",
    ]
    roots = []
    for r in spec.roots:
        z = r.value
        lines.append(f"  {_s(z.real, 12):>16} {'+' if z.imag >= 0 else '-'} {_s(abs(z.imag), 12):<16}i"
                     f"  |z|={_s(r.modulus, 12)}  mult={r.multiplicity}  radius<={_s(r.radius, 3)}")
        roots.append({"re": _s(z.real, 20), "im": _s(z.imag, 20), "modulus": _s(r.modulus, 20),
                      "multiplicity": r.multiplicity, "radius": _s(r.radius, 5)})
    payload: dict = {"name": rec.name, "order": rec.order, "prefix": rec.start,
                     "char_poly": [str(c) for c in poly], "roots": roots}
    try:
        dec = has_positive_dominating_root(spec)
        pos_roots = [r for r in dec.dominant if r.value.imag == 0 and r.value.real > 0]
        if dec.positive:
            status = f"positive dominating root {_s(pos_roots[0].value.real, 12)}"
        else:
            status = "no positive dominating root"
        payload["dominance"] = {"positive": dec.positive, "margin": _s(dec.margin, 6), "rho": _s(dec.rho, 20)}
        lines.append(f"dominance:   {status} (margin {_s(dec.margin, 4)})")
    except UndecidableError as exc:
        payload["dominance"] = {"positive": None, "undecided": str(exc)}
        lines.append(f"dominance:   undecided ({exc})")
    if rec.is_zero():
        payload["zero_sequence"] = True
        lines.append("sequence:    identically zero")
        _emit(args, payload, lines)
        return 0
    ps = power_sum_decompose(rec, spec, prec)
    if ps.is_empty():
        payload["zero_sequence"] = True
        lines.append("sequence:    eventually zero")
        _emit(args, payload, lines)
        return 0
    df = dominant_form(ps)
    lines.append(f"dominant:    rho={_s(df.rho, 12)}  D={df.D}  v={_s(df.v, 12)}")
    for t in df.terms:
        lines.append(f"  a={_s(t.a, 12)}  theta={_s(t.theta, 12)}  beta={_s(t.beta, 12)}")
    payload["dominant_form"] = {
        "rho": _s(df.rho, 20), "D": df.D, "v": _s(df.v, 20),
        "terms": [{"a": _s(t.a, 20), "theta": _s(t.theta, 20), "beta": _s(t.beta, 20)} for t in df.terms],
    }
    mb = module_basis(df.thetas, prec, cfg.q_max, cfg.height_bound)
    lines.append(f"module:      m={mb.m}  g={mb.g}  relation bound={mb.relation_bound}")
    for j, tau in enumerate(mb.taus, 1):
        lines.append(f"  tau_{j}={_s(tau, 12)}")
    payload["module_basis"] = {"m": mb.m, "g": mb.g, "relation_bound": str(mb.relation_bound),
                               "taus": [_s(t, 20) for t in mb.taus], "b": [list(r) for r in mb.b]}
    _emit(args, payload, lines)
    return 0


# ---------------------------------------------------------------- density

def _report_lines(rep) -> list[str]:
    lines = [
        f"pos:   {_frac(rep.pos):>16}  +- {rep.radius:.2e}",
        f"neg:   {_frac(rep.neg):>16}  +- {rep.radius:.2e}",
        f"zero:  {_frac(rep.zero):>16}  ({'certified rational' if rep.zero_certified else 'uncertified'})",
        "classes:",
        f"  {'class':>12}  {'pos':>14}  {'neg':>14}  {'zero':>6}  {'radius':>9}  method",
    ]
    for c in rep.classes:
        cls = f"{c.offset} mod {c.period}"
        lines.append(f"  {cls:>12}  {_frac(c.pos):>14}  {_frac(c.neg):>14}  {_frac(c.zero):>6}  "
                     f"{c.radius:9.2e}  {c.method}" + (f" (m={c.dim})" if c.dim else ""))
    for cav in rep.caveats:
        lines.append(f"caveat: {cav}")
    return lines


def cmd_density(args) -> int:
    cfg = _config(args)
    rec = load_recurrence(args.file)
    rep = positivity_density(rec, cfg)
    payload = {"name": rec.name, "report": rep.as_dict()}
    lines = [f"name: {rec.name or '-'}"] + _report_lines(rep)
    if args.empirical:
        counts = empirical_density(rec, args.empirical, cfg)
        fp, fn, fz = counts.fractions()
        dev = max(abs(fp - float(rep.pos)), abs(fn - float(rep.neg)), abs(fz - float(rep.zero)))
        payload["empirical"] = counts.as_dict() | {"deviation": dev}
        lines += [
            f"empirical N={counts.N} ({counts.method}): pos={counts.pos} neg={counts.neg} zero={counts.zero}"
            + (f" (zero band {counts.band_width:.1e}: {counts.band} hits)" if counts.method == "float" else ""),
            f"  fractions {fp:.6f} {fn:.6f} {fz:.6f}; max deviation {dev:.2e}",
        ]
        if args.csv:
            write_convergence_csv(counts, args.csv)
            lines.append(f"  convergence CSV written to {args.csv}")
    elif args.csv:
        raise ParseError("--csv requires --empirical N")
    _emit(args, payload, lines)
    return 0


# ---------------------------------------------------------------- construct

def _write_rec(args, rec) -> str | None:
    if args.output:
        dump_recurrence(rec, args.output)
        return args.output
    return None


def _construct_summary(args, rec, extra: dict, lines: list[str]) -> int:
    cfg = _config(args)
    path = _write_rec(args, rec)
    rep = positivity_density(rec, cfg)
    payload = {"construction": extra, "report": rep.as_dict(), "output": path}
    if path is None:
        payload["recurrence"] = json.loads(dumps_recurrence(rec))
    lines = list(lines)
    lines.append(f"order {rec.order}; written to {path}" if path else f"order {rec.order}")
    lines.append("verification:")
    lines += ["  " + x for x in _report_lines(rep)]
    if path is None and not args.json:
        lines.append(dumps_recurrence(rec).rstrip())
    _emit(args, payload, lines)
    return 0


def cmd_construct_arcsin(args) -> int:
    rec = arcsin_sequence(args.kappa)
    w = mpmath.cos(mpmath.pi * mpf(args.kappa))
    return _construct_summary(args, rec, {"kind": "arcsin", "kappa": args.kappa, "w": _s(w, 20)},
                              [f"arcsin construction: kappa={args.kappa} w=cos(pi kappa)={_s(w, 12)}"])


def cmd_construct_interlace(args) -> int:
    base = load_recurrence(args.base) if args.base else None
    rec = interlace(args.kappa, args.zero, base)
    return _construct_summary(args, rec, {"kind": "interlace", "kappa": str(args.kappa), "zero": str(args.zero)},
                              [f"interlace construction: kappa={args.kappa} r={args.zero}"])


def cmd_construct_trig(args) -> int:
    cfg = _config(args)
    res = prescribed_density_trig(args.kappa, args.tol, target=cfg.certified_radius)
    extra = {"kind": "trig", "kappa": args.kappa, "tol": args.tol, "achieved": res.achieved,
             "radius": res.radius, "m": res.m, "epsilon": res.epsilon}
    lines = [f"trig construction: kappa={args.kappa} achieved={res.achieved:.6f} +- {res.radius:.1e} "
             f"(m={res.m}, eps={res.epsilon:g}, {res.steps} bisection steps)"]
    spec = find_roots(char_poly(res.recurrence), cfg.analysis_precision)
    dec = has_positive_dominating_root(spec)
    extra["positive_dominating_root"] = dec.positive
    extra["margin"] = _s(dec.margin, 6)
    lines.append(f"positive dominating root: {'yes' if dec.positive else 'no'} (margin {_s(dec.margin, 4)})")
    return _construct_summary(args, res.recurrence, extra, lines)


# ---------------------------------------------------------------- parser

def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--json", action="store_true", help="machine-readable output")
    g.add_argument("--precision", type=int, default=128, help="working precision in bits (default 128)")
    g.add_argument("--samples", type=int, default=2**20, help="QMC samples per class (default 2^20)")
    g.add_argument("--seed", type=int, default=0, help="random seed for QMC shifts")
    g.add_argument("--qmax", type=int, default=10**6, help="max denominator for rational angles")
    g.add_argument("--height-bound", type=_int_expr, default=10**40,
                   help="integer-relation height bound (default 10**40)")
    g.add_argument("--epsilon-band", type=float, default=1e-3, help="width of the |H| < eps band")
    g.add_argument("--threads", type=int, default=None,
                   help="worker threads (fallback: RECUR_DENSITY_THREADS)")
    g.add_argument("-o", "--output", default=None, help="output file for constructions")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="recdensity",
        description="Natural densities of sign sets of real linear recurrence sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", parents=[common], help="roots, dominance and module basis")
    pa.add_argument("file")
    pa.set_defaults(func=cmd_analyze)

    pd = sub.add_parser("density", parents=[common], help="positivity / negativity / zero densities")
    pd.add_argument("file")
    pd.add_argument("--empirical", type=int, metavar="N", help="also count signs of f_0..f_{N-1}")
    pd.add_argument("--csv", metavar="PATH", help="write the empirical convergence CSV")
    pd.set_defaults(func=cmd_density)

    pc = sub.add_parser("construct", help="build sequences with prescribed densities")
    csub = pc.add_subparsers(dest="kind", required=True)
    c1 = csub.add_parser("arcsin", parents=[common], help="sin(2 pi sqrt2 n) - cos(pi kappa)")
    c1.add_argument("--kappa", type=float, required=True)
    c1.set_defaults(func=cmd_construct_arcsin)
    c2 = csub.add_parser("interlace", parents=[common], help="zero density r, positivity kappa")
    c2.add_argument("--kappa", type=_fraction, required=True)
    c2.add_argument("--zero", type=_fraction, required=True, help="zero density r = p/q")
    c2.add_argument("--base", help="base recurrence file (default: arcsin of kappa/(1-r))")
    c2.set_defaults(func=cmd_construct_interlace)
    c3 = csub.add_parser("trig", parents=[common], help="no positive dominating root, density kappa")
    c3.add_argument("--kappa", type=float, required=True)
    c3.add_argument("--tol", type=float, default=1e-2)
    c3.set_defaults(func=cmd_construct_trig)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RecDensityError as exc:
        kind = {ParseError: "parse error", PrecisionError: "precision error",
                UndecidableError: "precision error", DomainError: "domain error",
                ResourceError: "resource error"}.get(type(exc), "error")
        print(f"recdensity: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"recdensity: parse error: {exc}", file=sys.stderr)
        return ParseError.exit_code


if __name__ == "__main__":
    sys.exit(main())
