"""Exact bivariate polynomials and rational functions in the probe parameters.

A polynomial in the two probe parameters x and y is stored sparsely as a map
from exponent pairs (i, j) to exact rational coefficients:

    ParamExpr  ~  { (i, j): Fraction }        # x**i * y**j terms

The zero polynomial is the empty map; canonical form never stores a zero
coefficient, so two values are equal iff their term maps are equal.  All
arithmetic is exact over the rationals; binary floating point enters only at
evaluation time.

The module also owns the expression grammar used by probe files:

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := atom ('^' INT)? | '-' factor
    atom   := RATIONAL | DECIMAL | 'x' | 'y' | '(' expr ')'

Whitespace is insignificant.  Implicit multiplication is not allowed; the
division slash only appears inside rational literals such as ``1/2``.
Decimal literals are exact rationals (``0.25`` means 25/100).
"""

from __future__ import annotations

import random
import warnings
from fractions import Fraction
from math import gcd
from typing import Iterator, Mapping

from .errors import ExactDivisionError, ExprSyntaxError, SingularPointError

Exponents = tuple[int, int]

# Graded lexicographic order with x before y: compare total degree first,
# then the power of x.
def _grlex(key: Exponents) -> tuple[int, int]:
    return (key[0] + key[1], key[0])


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    """gcd over the rationals: gcd(p1/q1, p2/q2) = gcd(p1,p2)/lcm(q1,q2)."""
    num = gcd(a.numerator, b.numerator)
    den = a.denominator * b.denominator // gcd(a.denominator, b.denominator)
    return Fraction(num, den)


class ParamExpr:
    """Immutable exact polynomial in the two probe parameters."""

    __slots__ = ("_terms", "_eval_cache")

    def __init__(self, terms: Mapping[Exponents, Fraction] | None = None):
        canonical: dict[Exponents, Fraction] = {}
        if terms:
            for key, coeff in terms.items():
                i, j = key
                if i < 0 or j < 0:
                    raise ValueError(f"negative exponent in term {key}")
                coeff = Fraction(coeff)
                if coeff != 0:
                    canonical[(int(i), int(j))] = coeff
        self._terms = canonical
        self._eval_cache: list[tuple[float, int, int]] | None = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "ParamExpr":
        return cls()

    @classmethod
    def one(cls) -> "ParamExpr":
        return cls({(0, 0): Fraction(1)})

    @classmethod
    def const(cls, value) -> "ParamExpr":
        return cls({(0, 0): Fraction(value)})

    @classmethod
    def var_x(cls) -> "ParamExpr":
        return cls({(1, 0): Fraction(1)})

    @classmethod
    def var_y(cls) -> "ParamExpr":
        return cls({(0, 1): Fraction(1)})

    # -- inspection --------------------------------------------------------

    @property
    def terms(self) -> dict[Exponents, Fraction]:
        """A copy of the canonical term map."""
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def term_count(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        if not self._terms:
            return 0
        return max(i + j for i, j in self._terms)

    def max_abs_coeff(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        return max(abs(c) for c in self._terms.values())

    def content(self) -> Fraction:
        """gcd of all coefficients (nonnegative); 0 for the zero polynomial."""
        acc = Fraction(0)
        for coeff in self._terms.values():
            acc = _frac_gcd(acc, abs(coeff))
        return acc

    def leading_coefficient(self) -> Fraction:
        """Coefficient of the graded-lex leading term; 0 for the zero polynomial."""
        if not self._terms:
            return Fraction(0)
        return self._terms[max(self._terms, key=_grlex)]

    def is_affine(self) -> bool:
        return self.degree() <= 1

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "ParamExpr") -> "ParamExpr":
        if not isinstance(other, ParamExpr):
            return NotImplemented
        out = dict(self._terms)
        for key, coeff in other._terms.items():
            new = out.get(key, Fraction(0)) + coeff
            if new:
                out[key] = new
            else:
                out.pop(key, None)
        return _wrap(out)

    def __sub__(self, other: "ParamExpr") -> "ParamExpr":
        if not isinstance(other, ParamExpr):
            return NotImplemented
        out = dict(self._terms)
        for key, coeff in other._terms.items():
            new = out.get(key, Fraction(0)) - coeff
            if new:
                out[key] = new
            else:
                out.pop(key, None)
        return _wrap(out)

    def __neg__(self) -> "ParamExpr":
        return _wrap({k: -c for k, c in self._terms.items()})

    def __mul__(self, other: "ParamExpr") -> "ParamExpr":
        if not isinstance(other, ParamExpr):
            return NotImplemented
        if not self._terms or not other._terms:
            return ParamExpr()
        out: dict[Exponents, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                new = out.get(key, Fraction(0)) + c1 * c2
                if new:
                    out[key] = new
                else:
                    out.pop(key, None)
        return _wrap(out)

    def __pow__(self, exponent: int) -> "ParamExpr":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = ParamExpr.one()
        base = self
        n = exponent
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def scale(self, factor) -> "ParamExpr":
        factor = Fraction(factor)
        if factor == 0:
            return ParamExpr()
        return _wrap({k: c * factor for k, c in self._terms.items()})

    # -- evaluation --------------------------------------------------------

    def evaluate(self, x: float, y: float) -> float:
        """Evaluate in binary floating point; the zero polynomial gives 0.0.

        Terms are summed in descending graded-lex order so results are
        bit-reproducible across runs.
        """
        if self._eval_cache is None:
            ordered = sorted(self._terms, key=_grlex, reverse=True)
            self._eval_cache = [(float(self._terms[k]), k[0], k[1]) for k in ordered]
        total = 0.0
        for coeff, i, j in self._eval_cache:
            total += coeff * x**i * y**j
        return total

    def evaluate_exact(self, x: Fraction, y: Fraction) -> Fraction:
        x = Fraction(x)
        y = Fraction(y)
        total = Fraction(0)
        for (i, j), coeff in self._terms.items():
            total += coeff * x**i * y**j
        return total

    # -- comparison / rendering --------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def sorted_terms(self) -> Iterator[tuple[Exponents, Fraction]]:
        """Terms in descending graded-lex order (deterministic)."""
        for key in sorted(self._terms, key=_grlex, reverse=True):
            yield key, self._terms[key]

    def render(self) -> str:
        """Deterministic serialization; re-parses to an equal polynomial."""
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for idx, (key, coeff) in enumerate(self.sorted_terms()):
            body = _render_term(abs(coeff), key)
            if idx == 0:
                pieces.append(body if coeff > 0 else "-" + body)
            else:
                pieces.append((" + " if coeff > 0 else " - ") + body)
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"ParamExpr({self.render()!r})"


def _wrap(terms: dict[Exponents, Fraction]) -> ParamExpr:
    """Internal constructor for maps already in canonical form."""
    out = ParamExpr.__new__(ParamExpr)
    out._terms = terms
    out._eval_cache = None
    return out


def _render_term(coeff: Fraction, key: Exponents) -> str:
    i, j = key
    mono: list[str] = []
    if i == 1:
        mono.append("x")
    elif i > 1:
        mono.append(f"x^{i}")
    if j == 1:
        mono.append("y")
    elif j > 1:
        mono.append(f"y^{j}")
    if not mono:
        return str(coeff)
    body = "*".join(mono)
    if coeff == 1:
        return body
    return f"{coeff}*{body}"


# ---------------------------------------------------------------------------
# Expression parsing
# ---------------------------------------------------------------------------

_TOKEN_INT = "INT"
_TOKEN_DECIMAL = "DECIMAL"
_TOKEN_VAR = "VAR"
_TOKEN_OP = "OP"
_TOKEN_END = "END"


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind: str, text: str, offset: int):
        self.kind = kind
        self.text = text
        self.offset = offset


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            pos += 1
            continue
        if ch.isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                pos += 1
            if pos < n and text[pos] == "." and pos + 1 < n and text[pos + 1].isdigit():
                pos += 1
                while pos < n and text[pos].isdigit():
                    pos += 1
                tokens.append(_Token(_TOKEN_DECIMAL, text[start:pos], start))
            else:
                tokens.append(_Token(_TOKEN_INT, text[start:pos], start))
            continue
        if ch in "xy":
            tokens.append(_Token(_TOKEN_VAR, ch, pos))
            pos += 1
            continue
        if ch in "+-*^()/":
            tokens.append(_Token(_TOKEN_OP, ch, pos))
            pos += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", pos)
    tokens.append(_Token(_TOKEN_END, "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self) -> ParamExpr:
        value = self.parse_expr()
        tok = self.peek()
        if tok.kind != _TOKEN_END:
            if tok.text == "/":
                raise ExprSyntaxError(
                    "division is only allowed inside rational literals", tok.offset
                )
            raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.offset)
        return value

    def parse_expr(self) -> ParamExpr:
        value = self.parse_term()
        while True:
            tok = self.peek()
            if tok.kind == _TOKEN_OP and tok.text in "+-":
                self.advance()
                rhs = self.parse_term()
                value = value + rhs if tok.text == "+" else value - rhs
            else:
                return value

    def parse_term(self) -> ParamExpr:
        value = self.parse_factor()
        while True:
            tok = self.peek()
            if tok.kind == _TOKEN_OP and tok.text == "*":
                self.advance()
                value = value * self.parse_factor()
            else:
                return value

    def parse_factor(self) -> ParamExpr:
        tok = self.peek()
        if tok.kind == _TOKEN_OP and tok.text == "-":
            self.advance()
            return -self.parse_factor()
        value = self.parse_atom()
        tok = self.peek()
        if tok.kind == _TOKEN_OP and tok.text == "^":
            self.advance()
            exp = self.peek()
            if exp.kind != _TOKEN_INT:
                raise ExprSyntaxError(
                    "exponent must be a nonnegative integer literal", exp.offset
                )
            self.advance()
            value = value ** int(exp.text)
        return value

    def parse_atom(self) -> ParamExpr:
        tok = self.advance()
        if tok.kind == _TOKEN_INT:
            numerator = int(tok.text)
            nxt = self.peek()
            if nxt.kind == _TOKEN_OP and nxt.text == "/":
                after = self.tokens[self.pos + 1]
                if after.kind != _TOKEN_INT:
                    raise ExprSyntaxError(
                        "division is only allowed inside rational literals", nxt.offset
                    )
                self.advance()
                self.advance()
                if int(after.text) == 0:
                    raise ExprSyntaxError("zero denominator in rational literal", after.offset)
                return ParamExpr.const(Fraction(numerator, int(after.text)))
            return ParamExpr.const(numerator)
        if tok.kind == _TOKEN_DECIMAL:
            whole, frac = tok.text.split(".")
            value = Fraction(int(whole + frac), 10 ** len(frac))
            return ParamExpr.const(value)
        if tok.kind == _TOKEN_VAR:
            return ParamExpr.var_x() if tok.text == "x" else ParamExpr.var_y()
        if tok.kind == _TOKEN_OP and tok.text == "(":
            value = self.parse_expr()
            closing = self.advance()
            if not (closing.kind == _TOKEN_OP and closing.text == ")"):
                raise ExprSyntaxError("expected ')'", closing.offset)
            return value
        if tok.kind == _TOKEN_END:
            raise ExprSyntaxError("unexpected end of expression", tok.offset)
        raise ExprSyntaxError(f"unexpected token {tok.text!r}", tok.offset)


def expr_parse(text: str) -> ParamExpr:
    """Parse expression text into a canonical polynomial."""
    return _Parser(text).parse()


def expr_eval(e: ParamExpr, x: float, y: float) -> float:
    return e.evaluate(x, y)


def expr_add(a: ParamExpr, b: ParamExpr) -> ParamExpr:
    return a + b


def expr_sub(a: ParamExpr, b: ParamExpr) -> ParamExpr:
    return a - b


def expr_mul(a: ParamExpr, b: ParamExpr) -> ParamExpr:
    return a * b


def render(e: ParamExpr) -> str:
    return e.render()


def exact_div(a: ParamExpr, b: ParamExpr) -> ParamExpr:
    """Divide a by b, raising ExactDivisionError unless the division is exact.

    Leading-term reduction in graded-lex order; used by the fraction-free
    elimination, where divisions are exact by construction.
    """
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero():
        return ParamExpr()
    lead_b = max(b._terms, key=_grlex)
    coeff_b = b._terms[lead_b]
    remainder = dict(a._terms)
    quotient: dict[Exponents, Fraction] = {}
    while remainder:
        lead_r = max(remainder, key=_grlex)
        qi = lead_r[0] - lead_b[0]
        qj = lead_r[1] - lead_b[1]
        if qi < 0 or qj < 0:
            raise ExactDivisionError(
                f"{render(_wrap(dict(remainder)))!r} is not divisible by {render(b)!r}"
            )
        qc = remainder[lead_r] / coeff_b
        key = (qi, qj)
        quotient[key] = quotient.get(key, Fraction(0)) + qc
        for (bi, bj), bc in b._terms.items():
            tkey = (bi + qi, bj + qj)
            new = remainder.get(tkey, Fraction(0)) - qc * bc
            if new:
                remainder[tkey] = new
            else:
                remainder.pop(tkey, None)
    return _wrap({k: c for k, c in quotient.items() if c})


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

# Scale-aware threshold below which an evaluated denominator counts as zero.
DEN_ZERO_RTOL = 1e-12


class RationalFn:
    """Quotient of two ParamExpr values, normalized on construction.

    Normalization removes the common rational content of numerator and
    denominator and makes the denominator's graded-lex leading coefficient
    positive.  Polynomial (multivariate) common factors are not cancelled;
    equivalence testing uses exact cross-multiplication instead.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: ParamExpr, den: ParamExpr | None = None):
        if den is None:
            den = ParamExpr.one()
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        num_content = num.content()
        den_content = den.content()
        common = _frac_gcd(num_content, den_content)
        if common not in (0, 1):
            num = num.scale(Fraction(1) / common)
            den = den.scale(Fraction(1) / common)
        if den.leading_coefficient() < 0:
            num = -num
            den = -den
        self.num = num
        self.den = den

    @classmethod
    def from_expr(cls, e: ParamExpr) -> "RationalFn":
        return cls(e, ParamExpr.one())

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalFn):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RationalFn({self.num.render()!r}, {self.den.render()!r})"

    # Field arithmetic, used by the symbolic back substitution.

    def __add__(self, other: "RationalFn") -> "RationalFn":
        if not isinstance(other, RationalFn):
            return NotImplemented
        return RationalFn(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other: "RationalFn") -> "RationalFn":
        if not isinstance(other, RationalFn):
            return NotImplemented
        return RationalFn(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __mul__(self, other: "RationalFn") -> "RationalFn":
        if not isinstance(other, RationalFn):
            return NotImplemented
        return RationalFn(self.num * other.num, self.den * other.den)

    def mul_expr(self, e: ParamExpr) -> "RationalFn":
        return RationalFn(self.num * e, self.den)

    def div_expr(self, e: ParamExpr) -> "RationalFn":
        return RationalFn(self.num, self.den * e)

    def scale(self, factor) -> "RationalFn":
        return RationalFn(self.num.scale(factor), self.den)


def ratfn_eval(f: RationalFn, x: float, y: float) -> float:
    """Evaluate f at (x, y), raising SingularPointError when the denominator
    is zero to within a scale-aware tolerance."""
    den_value = f.den.evaluate(x, y)
    threshold = DEN_ZERO_RTOL * (1.0 + float(f.den.max_abs_coeff()))
    if abs(den_value) < threshold:
        raise SingularPointError(x, y)
    return f.num.evaluate(x, y) / den_value


def ratfn_equiv(f: RationalFn, g: RationalFn, samples: int = 8) -> bool:
    """Exact equivalence test via cross-multiplication.

    The verdict is purely symbolic: f == g iff f.num*g.den - g.num*f.den is
    the zero polynomial.  `samples` random interior points are additionally
    evaluated as a sanity check; a disagreement emits a warning but never
    changes the verdict.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    cross = f.num * g.den - g.num * f.den
    verdict = cross.is_zero()

    rng = random.Random(0x5EED)
    for _ in range(samples):
        px = rng.uniform(0.0, 1.0)
        py = rng.uniform(0.0, 1.0 - px)
        lhs = f.num.evaluate(px, py) * g.den.evaluate(px, py)
        rhs = g.num.evaluate(px, py) * f.den.evaluate(px, py)
        scale = max(1.0, abs(lhs), abs(rhs))
        numerically_equal = abs(lhs - rhs) <= 1e-9 * scale
        if verdict and not numerically_equal:
            warnings.warn(
                "ratfn_equiv: exact test says equal but numeric samples disagree",
                RuntimeWarning,
                stacklevel=2,
            )
            break
    return verdict
