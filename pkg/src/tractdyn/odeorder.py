"""Order lower bounds for meromorphic solutions of algebraic ODEs.

An equation is a sum of terms ``c_t(z) f^t0 (f')^t1 ... (f^(n))^tn``.  The
degree of a term is ``t0 + ... + tn`` and its weight ``t1 + 2 t2 + ... + n tn``.
Among the terms of maximal degree, the coefficient sums ``u_lam`` over equal
weight ``lam`` decide both the order bound ``1 / max(lam)`` and, through an
upper envelope of lines, the candidate exponents kappa in ``a(r) ~ c r^kappa``.

All arithmetic is exact over the Gaussian rationals.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (EmptyEquation, InsufficientTerms, NoKappaCandidates, ParseError,
                     PreconditionViolation)

MAX_PRIMES = 6


# ---------------------------------------------------------------------------
# exact coefficients


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        return cls(Fraction(value), Fraction(0))

    def __add__(self, other):
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussianRational.of(other))

    def __mul__(self, other):
        o = GaussianRational.of(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def inverse(self) -> "GaussianRational":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("division by zero")
        return GaussianRational(self.re / n, -self.im / n)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"


ZERO = GaussianRational()
ONE = GaussianRational(Fraction(1))


@dataclass(frozen=True)
class Poly:
    """Polynomial in z; ``terms`` maps power -> nonzero coefficient."""
    terms: tuple = ()

    @classmethod
    def from_dict(cls, d: dict) -> "Poly":
        return cls(tuple(sorted((k, v) for k, v in d.items() if v)))

    @classmethod
    def const(cls, c) -> "Poly":
        return cls.from_dict({0: GaussianRational.of(c)})

    def as_dict(self) -> dict:
        return dict(self.terms)

    def __add__(self, other: "Poly") -> "Poly":
        d = self.as_dict()
        for k, v in other.terms:
            d[k] = d.get(k, ZERO) + v
        return Poly.from_dict(d)

    def __mul__(self, other: "Poly") -> "Poly":
        d = {}
        for k1, v1 in self.terms:
            for k2, v2 in other.terms:
                d[k1 + k2] = d.get(k1 + k2, ZERO) + v1 * v2
        return Poly.from_dict(d)

    def __neg__(self) -> "Poly":
        return Poly(tuple((k, -v) for k, v in self.terms))

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def degree(self) -> int:
        return self.terms[-1][0] if self.terms else -1

    @property
    def leading(self) -> GaussianRational:
        return self.terms[-1][1] if self.terms else ZERO

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, v in reversed(self.terms):
            zpart = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            if not zpart:
                parts.append(str(v))
            elif v == ONE:
                parts.append(zpart)
            elif v == -ONE:
                parts.append(f"-{zpart}")
            else:
                parts.append(f"{v}*{zpart}")
        return " + ".join(parts).replace("+ -", "- ")


@dataclass(frozen=True)
class DiffMonomial:
    t: tuple
    coeff: Poly

    def __post_init__(self):
        if not self.coeff:
            raise ValueError("zero coefficient")
        if any(k < 0 for k in self.t):
            raise ValueError("exponents must be nonnegative")

    @property
    def degree(self) -> int:
        return sum(self.t)

    @property
    def weight(self) -> int:
        return sum(j * k for j, k in enumerate(self.t))

    def to_json(self) -> dict:
        return {"t": list(self.t), "coeff": str(self.coeff), "degree": self.degree,
                "weight": self.weight}


# ---------------------------------------------------------------------------
# parser: polynomials in z and f, f', f'', ... over Gaussian rationals

# A general polynomial maps (z power, exponent tuple of f-derivatives) -> coeff.


def _gp_const(c) -> dict:
    c = GaussianRational.of(c)
    return {(0, (0,) * (MAX_PRIMES + 1)): c} if c else {}


def _gp_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, ZERO) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _gp_mul(a: dict, b: dict) -> dict:
    out = {}
    for (p1, t1), v1 in a.items():
        for (p2, t2), v2 in b.items():
            key = (p1 + p2, tuple(x + y for x, y in zip(t1, t2)))
            s = out.get(key, ZERO) + v1 * v2
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def _gp_neg(a: dict) -> dict:
    return {k: -v for k, v in a.items()}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise ParseError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def equation(self) -> dict:
        lhs = self.expr()
        if self.peek() == "=":
            self.pos += 1
            rhs = self.expr()
            lhs = _gp_add(lhs, _gp_neg(rhs))
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos)
        return lhs

    def expr(self) -> dict:
        if self.peek() in "+-" and self.peek():
            sign = self.text[self.pos]
            self.pos += 1
            acc = self.term()
            if sign == "-":
                acc = _gp_neg(acc)
        else:
            acc = self.term()
        while self.peek() in ("+", "-") and self.peek():
            sign = self.text[self.pos]
            self.pos += 1
            t = self.term()
            acc = _gp_add(acc, t if sign == "+" else _gp_neg(t))
        return acc

    def term(self) -> dict:
        acc = self.power()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                acc = _gp_mul(acc, self.power())
            elif c == "/":
                self.pos += 1
                at = self.pos
                d = self.power()
                if len(d) != 1 or next(iter(d)) != (0, (0,) * (MAX_PRIMES + 1)):
                    raise ParseError("can only divide by a nonzero constant", at)
                acc = _gp_mul(acc, _gp_const(next(iter(d.values())).inverse()))
            elif c and (c.isdigit() or c in "zif("):
                acc = _gp_mul(acc, self.power())
            else:
                return acc

    def power(self) -> dict:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self._skip()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                raise ParseError("exponent must be a nonnegative integer", start)
            k = int(self.text[start:self.pos])
            out = _gp_const(1)
            for _ in range(k):
                out = _gp_mul(out, base)
            return out
        return base

    def atom(self) -> dict:
        c = self.peek()
        start = self.pos
        if not c:
            raise ParseError("unexpected end of input", self.pos)
        if c.isdigit():
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return _gp_const(int(self.text[start:self.pos]))
        if c == "(":
            self.pos += 1
            inner = self.expr()
            self.expect(")")
            return inner
        if c == "z":
            self.pos += 1
            return {(1, (0,) * (MAX_PRIMES + 1)): ONE}
        if c == "i":
            self.pos += 1
            return _gp_const(GaussianRational(Fraction(0), Fraction(1)))
        if c == "f":
            self.pos += 1
            k = 0
            while self.pos < len(self.text) and self.text[self.pos] == "'":
                self.pos += 1
                k += 1
            if k > MAX_PRIMES:
                raise ParseError(f"at most {MAX_PRIMES} primes are supported", start)
            # allow an explicit argument, as in f'(z)
            rest = self.text[self.pos:].replace(" ", "")
            if rest.startswith("(z)"):
                self.expect("(")
                self.expect("z")
                self.expect(")")
            t = [0] * (MAX_PRIMES + 1)
            t[k] = 1
            return {(0, tuple(t)): ONE}
        raise ParseError(f"unexpected {c!r}", self.pos)


def _group(gp: dict) -> list:
    by_t = {}
    for (p, t), v in gp.items():
        by_t.setdefault(t, {})[p] = v
    if not by_t:
        raise EmptyEquation("all terms cancel")
    order = max((max((j for j, k in enumerate(t) if k), default=0) for t in by_t), default=0)
    out = []
    for t, coeffs in sorted(by_t.items(), key=lambda kv: kv[0][::-1], reverse=True):
        out.append(DiffMonomial(t[:order + 1], Poly.from_dict(coeffs)))
    return out


def parse_equation(text: str) -> list:
    """Monomials of an equation like ``f'' - z*f`` or ``f'^2 = 4*f^3 + 1``."""
    if not text or not text.strip():
        raise ParseError("empty input", 0)
    return _group(_Parser(text).equation())


def parse_poly(text: str) -> Poly:
    """A polynomial in z (no f) from text, e.g. ``-z^2 + 3``."""
    gp = _Parser(text).equation()
    d = {}
    for (p, t), v in gp.items():
        if any(t):
            raise ParseError("coefficient may not contain f", 0)
        d[p] = v
    return Poly.from_dict(d)


def monomials_from_json(data) -> list:
    """Monomials from ``[{"t": [0, 0, 1], "coeff": "1"}, ...]``."""
    if isinstance(data, str):
        data = json.loads(data)
    gp = {}
    width = max(len(m["t"]) for m in data) if data else 1
    if width > MAX_PRIMES + 1:
        raise ParseError(f"at most {MAX_PRIMES} derivatives are supported", 0)
    for m in data:
        t = tuple(int(k) for k in m["t"]) + (0,) * (MAX_PRIMES + 1 - len(m["t"]))
        if any(k < 0 for k in t):
            raise ParseError("exponents must be nonnegative", 0)
        coeff = parse_poly(str(m.get("coeff", "1")))
        for p, v in coeff.terms:
            gp = _gp_add(gp, {(p, t): v})
    mons = _group(gp)
    return [DiffMonomial(m.t + (0,) * (width - len(m.t)), m.coeff) if len(m.t) < width else m
            for m in mons]


# ---------------------------------------------------------------------------
# order bound


@dataclass
class LeadingSum:
    weight: int
    poly: Poly

    @property
    def zero(self) -> bool:
        return not self.poly

    @property
    def b(self) -> GaussianRational:
        return self.poly.leading

    @property
    def d(self) -> int:
        return self.poly.degree

    def to_json(self) -> dict:
        out = {"lambda": self.weight, "u": str(self.poly), "zero": self.zero}
        if not self.zero:
            out.update({"b": str(self.b), "d": self.d})
        return out


@dataclass
class OrderBoundResult:
    monomials: list
    S: list
    Lambda: list
    leading_sums: dict
    verdict: str
    bound: Fraction | None = None
    failing: list = field(default_factory=list)
    kappa_candidates: list = field(default_factory=list)
    zero_weight_policy: str = ""
    message: str = ""

    def to_json(self) -> dict:
        return {
            "monomials": [m.to_json() for m in self.monomials],
            "S": self.S,
            "Lambda": self.Lambda,
            "leadingSums": [self.leading_sums[k].to_json() for k in sorted(self.leading_sums)],
            "verdict": self.verdict,
            "bound": None if self.bound is None else str(self.bound),
            "failingLambda": self.failing,
            "kappaCandidates": [str(k) for k in self.kappa_candidates],
            "zeroWeightPolicy": self.zero_weight_policy,
            "message": self.message,
        }


def order_bound(monomials: list) -> OrderBoundResult:
    if not monomials:
        raise ValueError("need at least one monomial")
    dmax = max(m.degree for m in monomials)
    S = [i for i, m in enumerate(monomials) if m.degree == dmax]
    sums = {}
    for i in S:
        m = monomials[i]
        sums[m.weight] = sums.get(m.weight, Poly()) + m.coeff
    leading = {lam: LeadingSum(lam, p) for lam, p in sums.items()}
    positive = sorted(lam for lam in leading if lam > 0)
    has_zero = 0 in leading
    policy = ("weight 0 excluded from max(Lambda); u_0 still checked" if has_zero
              else "no weight-0 member")

    if len(S) < 2:
        return OrderBoundResult(monomials, S, positive, leading, "SingletonS",
                                zero_weight_policy=policy,
                                message="no transcendental meromorphic solution with a direct "
                                        "singularity over infinity")
    failing = sorted(lam for lam, ls in leading.items() if ls.zero)
    pairs = [(lam, ls.b, ls.d) for lam, ls in sorted(leading.items()) if not ls.zero]
    kappas = newton_puiseux(pairs) if len({p[0] for p in pairs}) >= 2 else []
    if failing:
        return OrderBoundResult(monomials, S, positive, leading, "HypothesisFails",
                                failing=failing, kappa_candidates=kappas,
                                zero_weight_policy=policy,
                                message="a leading coefficient sum vanishes")
    if not positive:
        return OrderBoundResult(monomials, S, positive, leading, "HypothesisFails",
                                failing=[0], kappa_candidates=kappas, zero_weight_policy=policy,
                                message="all maximal-degree terms have weight 0")
    return OrderBoundResult(monomials, S, positive, leading, "Bound",
                            bound=Fraction(1, max(positive)), kappa_candidates=kappas,
                            zero_weight_policy=policy)


def newton_puiseux(pairs) -> list:
    """Breakpoints kappa > 0 of the upper envelope of the lines
    ``lam * kappa + d - lam``, as sorted exact fractions.

    ``pairs`` holds ``(lam, b, d)`` triples; ``b`` only needs to be nonzero.
    """
    pairs = list(pairs)
    lams = [p[0] for p in pairs]
    if len(set(lams)) < 2:
        raise InsufficientTerms("need at least two distinct weights")
    if len(set(lams)) != len(lams):
        raise ValueError("weights must be distinct")
    for lam, b, d in pairs:
        if not GaussianRational.of(b):
            raise ValueError(f"b for weight {lam} is zero")
        if lam < 0 or d < 0:
            raise ValueError("weights and degrees must be nonnegative")
    lines = [(Fraction(lam), Fraction(d - lam)) for lam, _, d in pairs]
    out = set()
    for a in range(len(lines)):
        for c in range(a + 1, len(lines)):
            (s1, i1), (s2, i2) = lines[a], lines[c]
            k = (i2 - i1) / (s1 - s2)
            if k <= 0:
                continue
            top = max(s * k + i for s, i in lines)
            if s1 * k + i1 == top:
                out.add(k)
    return sorted(out)


# ---------------------------------------------------------------------------
# comparison with a numerical growth profile

_SOLVED_BY = {
    "f' - f": ("exp",),
    "f'' - f": ("exp",),
    "f*f'' - f'^2 - f*f'": ("expexp",),
}


def _canonical(monomials: list) -> tuple:
    mons = sorted(monomials, key=lambda m: (m.t, m.coeff.terms))
    scale = mons[0].coeff.leading.inverse()
    width = max(len(m.t) for m in mons)
    return tuple((m.t + (0,) * (width - len(m.t)),
                  tuple((k, v * scale) for k, v in m.coeff.terms)) for m in mons)


def solving_models(monomials: list) -> tuple:
    """Registered model ids known to solve the equation."""
    key = _canonical(monomials)
    for text, models in _SOLVED_BY.items():
        if _canonical(parse_equation(text)) == key:
            return models
    return ()


@dataclass
class GrowthFit:
    slope: float
    kappa: Fraction
    deviation: float
    r_range: tuple

    def to_json(self) -> dict:
        return {"slope": self.slope, "kappa": str(self.kappa), "deviation": self.deviation,
                "rRange": list(self.r_range)}


def verify_against_growth(result: OrderBoundResult, profile) -> GrowthFit:
    """Least-squares slope of log a against log r over the profile's top
    decade, compared with the nearest kappa candidate."""
    models = solving_models(result.monomials)
    if profile.tract.model.id not in models:
        raise PreconditionViolation(
            f"model {profile.tract.model.id} is not registered as a solution of this equation")
    if not result.kappa_candidates:
        raise NoKappaCandidates("the envelope has no positive breakpoint")
    r = profile.radii
    a = profile.a
    sel = (r >= r[-1] / 10) & np.isfinite(a) & (a > 0)
    if sel.sum() < 2:
        raise ValueError("profile has too few samples in its top decade")
    slope = float(np.polyfit(np.log(r[sel]), np.log(a[sel]), 1)[0])
    kappa = min(result.kappa_candidates, key=lambda k: abs(float(k) - slope))
    return GrowthFit(slope, kappa, abs(slope - float(kappa)), (float(r[sel][0]), float(r[sel][-1])))
