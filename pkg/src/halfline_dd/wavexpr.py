"""Mini-language for initial bath wavefunctions.

Expressions are finite sums of terms ``c * x^a * exp(-b * x^p)`` with real
coefficient ``c``, integer power ``a >= 0``, decay rate ``b > 0`` and decay
power ``p in {1, 2}``.  This deliberately closed family covers every initial
state used in the studies (``x^2*exp(-x)``, ``x^2*exp(-x^2/5)``, ...); anything
else has to enter through raw-sample CSV import.

Grammar (eased slightly so that the idiomatic forms ``exp(-x^2/5)`` and
``exp(-x/5)`` parse; a leading coefficient inside ``exp`` is also accepted)::

    expr    := term (('+'|'-') term)*
    term    := [coef '*'] factor ('*' factor)*
    factor  := var ['^' int]
             | 'exp' '(' '-' [coef '*'] var ['^' int] ['/' decimal] ')'
    var     := 'x' | 'abs(x)'
    coef    := decimal ['/' decimal]

``abs(x)`` is synonymous with ``x``: expressions are always evaluated for
x >= 0, and full-line sampling applies the odd-extension rule itself.
Expressions whose terms carry no decay (``b = 0``) are rejected since they are
not square integrable on the half-line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExprSyntaxError",
    "NonNormalizableError",
    "Term",
    "WaveExpr",
    "parse_wave_expr",
]


class ExprSyntaxError(ValueError):
    """Syntax error in a wavefunction expression, with character position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NonNormalizableError(ValueError):
    """Expression is not square integrable on the half-line."""


@dataclass(frozen=True, order=True)
class Term:
    """One ``c * x^a * exp(-b * x^p)`` contribution."""

    xpow: int
    decay: float
    decay_pow: int
    coef: complex = 1.0

    def __post_init__(self):
        if self.xpow < 0:
            raise ValueError("x power must be non-negative")
        if self.decay_pow not in (1, 2):
            raise ValueError("decay power must be 1 or 2")
        if not self.decay > 0:
            raise NonNormalizableError(
                "term has no exponential decay (b > 0 required)")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.coef * x**self.xpow * np.exp(-self.decay * x**self.decay_pow)


@dataclass(frozen=True)
class WaveExpr:
    """Canonical sum of :class:`Term`; like terms merged, sorted by shape."""

    terms: tuple[Term, ...]

    @staticmethod
    def from_terms(terms) -> "WaveExpr":
        merged: dict[tuple[int, float, int], complex] = {}
        for t in terms:
            key = (t.xpow, t.decay, t.decay_pow)
            merged[key] = merged.get(key, 0.0) + t.coef
        kept = tuple(
            Term(xpow=a, decay=b, decay_pow=p, coef=c)
            for (a, b, p), c in sorted(merged.items())
            if c != 0
        )
        if not kept:
            raise NonNormalizableError("expression is identically zero")
        return WaveExpr(kept)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for t in self.terms:
            out += t(x)
        if all(t.coef.imag == 0 for t in self.terms):
            return out.real.astype(complex)
        return out

    def pretty(self) -> str:
        """Canonical text form; reparses to an equal :class:`WaveExpr`."""
        pieces = []
        for i, t in enumerate(self.terms):
            if t.coef.imag != 0:
                raise ValueError("complex coefficients have no text form")
            c = t.coef.real
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            factors = []
            if mag != 1.0 or t.xpow == 0:
                factors.append(repr(mag))
            if t.xpow == 1:
                factors.append("x")
            elif t.xpow > 1:
                factors.append(f"x^{t.xpow}")
            arg = "x" if t.decay_pow == 1 else f"x^{t.decay_pow}"
            factors.append(f"exp(-{t.decay!r}*{arg})")
            text = "*".join(factors)
            if i == 0:
                pieces.append(f"-{text}" if c < 0 else text)
            else:
                pieces.append(f" {sign} {text}")
        return "".join(pieces)


_NUMBER = re.compile(r"\d+(?:\.\d*)?|\.\d+")


class _Parser:
    """Recursive-descent parser for the grammar above."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ExprSyntaxError:
        return ExprSyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def accept(self, token: str) -> bool:
        self.skip_ws()
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str):
        if not self.accept(token):
            raise self.error(f"expected {token!r}")

    def number(self) -> float:
        self.skip_ws()
        m = _NUMBER.match(self.text, self.pos)
        if not m:
            raise self.error("expected a number")
        self.pos = m.end()
        return float(m.group())

    def coef(self) -> float:
        value = self.number()
        if self.accept("/"):
            den = self.number()
            if den == 0:
                raise self.error("division by zero in coefficient")
            value /= den
        return value

    def int_power(self) -> int:
        self.skip_ws()
        start = self.pos
        m = re.match(r"\d+", self.text[self.pos:])
        if not m:
            raise self.error("expected an integer power")
        self.pos += m.end()
        val = int(m.group())
        if val < 0:  # unreachable with \d+, kept for clarity
            self.pos = start
            raise self.error("negative power")
        return val

    def var(self) -> None:
        # 'abs(x)' or 'x'; both mean x on the evaluation domain x >= 0.
        if self.accept("abs(x)") or self.accept("abs (x)"):
            return
        if self.accept("x"):
            return
        raise self.error("expected 'x' or 'abs(x)'")

    def factor(self) -> tuple[int, float, int]:
        """Returns (added x power, added decay b, decay power p or 0)."""
        if self.accept("exp"):
            self.expect("(")
            self.expect("-")
            b = 1.0
            save = self.pos
            if self.peek().isdigit() or self.peek() == ".":
                b = self.coef()
                self.expect("*")
            else:
                self.pos = save
            self.var()
            p = 1
            if self.accept("^"):
                p = self.int_power()
            if self.accept("/"):
                den = self.number()
                if den == 0:
                    raise self.error("division by zero in exponent")
                b /= den
            self.expect(")")
            if p not in (1, 2):
                raise self.error("exponential decay power must be 1 or 2")
            return 0, b, p
        self.var()
        a = 1
        if self.accept("^"):
            a = self.int_power()
        return a, 0.0, 0

    def term(self) -> Term:
        coef = 1.0
        save = self.pos
        if self.peek().isdigit() or self.peek() == ".":
            coef = self.coef()
            if not self.accept("*"):
                self.pos = save
                raise self.error("expected '*' after coefficient")
        xpow, decay, decay_pow = 0, 0.0, 0
        while True:
            a, b, p = self.factor()
            xpow += a
            if p:
                if decay_pow and p != decay_pow:
                    raise self.error(
                        "mixed exponential decay powers in one term")
                decay_pow = p
                decay += b
            if not self.accept("*"):
                break
        if decay_pow == 0 or decay <= 0:
            raise NonNormalizableError(
                f"term without exponential decay is not square integrable: "
                f"{self.text!r}")
        return Term(xpow=xpow, decay=decay, decay_pow=decay_pow, coef=coef)

    def expr(self) -> WaveExpr:
        terms = []
        sign = -1.0 if self.accept("-") else 1.0
        self.accept("+")
        t = self.term()
        terms.append(Term(t.xpow, t.decay, t.decay_pow, sign * t.coef))
        while True:
            if self.accept("+"):
                sign = 1.0
            elif self.accept("-"):
                sign = -1.0
            else:
                break
            t = self.term()
            terms.append(Term(t.xpow, t.decay, t.decay_pow, sign * t.coef))
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("unexpected trailing input")
        return WaveExpr.from_terms(terms)


def parse_wave_expr(text: str) -> WaveExpr:
    """Parse an initial-state expression such as ``"x^2*exp(-x^2/5)"``.

    Raises :class:`ExprSyntaxError` (with position) on malformed input and
    :class:`NonNormalizableError` when a term lacks exponential decay.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).expr()
