"""Exact operator algebra over one canonical pair ``x, p`` with ``[x, p] = i``.

Operators are kept as normal-ordered polynomials ``sum c_ab x^a p^b`` whose
coefficients are polynomials in named real time functions and their first
time derivatives (``alpha``, ``ad(alpha)``, ...), with Gaussian-rational
numeric coefficients. Everything is exact; equality is structural.

Example
-------
>>> alpha = SymbolicFactor.exponential("alpha", X)
>>> str(composite_coriolis_symbolic([alpha])[-1])
'i*ad(alpha)*x'
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

from .errors import NonTerminatingSeries

DEFAULT_MAX_DEPTH = 32


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    return Fraction(float(value))


@dataclass(frozen=True)
class GaussRational:
    """Exact complex number ``re + i*im`` with rational parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def of(cls, value) -> "GaussRational":
        if isinstance(value, GaussRational):
            return value
        if isinstance(value, complex):
            return cls(_frac(value.real), _frac(value.imag))
        return cls(_frac(value), Fraction(0))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __add__(self, other):
        if not isinstance(other, _NUMERIC):
            return NotImplemented
        other = GaussRational.of(other)
        return GaussRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussRational.of(other))

    def __mul__(self, other):
        if not isinstance(other, _NUMERIC):
            return NotImplemented
        other = GaussRational.of(other)
        return GaussRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussRational.of(other)
        den = other.re**2 + other.im**2
        if not den:
            raise ZeroDivisionError("division by zero")
        num = self * GaussRational(other.re, -other.im)
        return GaussRational(num.re / den, num.im / den)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def is_negative(self) -> bool:
        """Sign convention for printing: leading nonzero part is negative."""
        return self.re < 0 if self.re else self.im < 0

    def __str__(self):
        def rat(q: Fraction) -> str:
            return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

        if not self.im:
            return rat(self.re)
        if not self.re:
            if self.im == 1:
                return "i"
            if self.im == -1:
                return "-i"
            return f"{rat(self.im)}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({rat(self.re)}{sign}{rat(abs(self.im))}*i)"


_NUMERIC = (GaussRational, int, float, complex, Rational)
ONE = GaussRational(Fraction(1))
I = GaussRational(Fraction(0), Fraction(1))

# (name, derivative order); order is 0 or 1
Symbol = tuple
Monomial = tuple  # sorted tuple of ((name, order), power)


def _symbol_text(sym) -> str:
    name, order = sym
    return f"ad({name})" if order else name


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    powers = dict(m1)
    for sym, k in m2:
        powers[sym] = powers.get(sym, 0) + k
    return tuple(sorted(powers.items()))


class ScalarExpr:
    """Polynomial in named real time functions with Gaussian-rational coefficients.

    Stored canonically as a sorted tuple of ``(monomial, coefficient)`` pairs
    with zero coefficients removed, so ``==`` is exact equality.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, GaussRational] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for mono, coeff in items:
            acc[mono] = acc.get(mono, GaussRational()) + GaussRational.of(coeff)
        self._terms = tuple(sorted((m, c) for m, c in acc.items() if c))
        self._hash = None

    @classmethod
    def const(cls, value) -> "ScalarExpr":
        return cls({(): GaussRational.of(value)})

    @classmethod
    def symbol(cls, name: str, dot: bool = False) -> "ScalarExpr":
        return cls({(((name, int(dot)), 1),): ONE})

    @property
    def terms(self):
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, ScalarExpr):
            try:
                other = ScalarExpr.const(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def __add__(self, other):
        other = _as_scalar(other)
        return ScalarExpr(self._terms + other._terms)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr((m, -c) for m, c in self._terms)

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __rsub__(self, other):
        return _as_scalar(other) - self

    def __mul__(self, other):
        if isinstance(other, WeylPolynomial):
            return NotImplemented
        other = _as_scalar(other)
        return ScalarExpr(
            (_mono_mul(m1, m2), c1 * c2) for m1, c1 in self._terms for m2, c2 in other._terms
        )

    __rmul__ = __mul__

    def __truediv__(self, value):
        value = GaussRational.of(value)
        return ScalarExpr((m, c / value) for m, c in self._terms)

    def symbols(self) -> set:
        return {sym for m, _ in self._terms for sym, _ in m}

    def evaluate(self, values: Mapping[str, float]) -> complex:
        """Numeric value; ``values`` maps ``name`` and ``ad(name)`` to floats."""
        total = 0j
        for mono, coeff in self._terms:
            term = complex(coeff)
            for sym, k in mono:
                term *= values[_symbol_text(sym)] ** k
            total += term
        return total

    def leading_negative(self) -> bool:
        return bool(self._terms) and self._terms[0][1].is_negative()

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for mono, coeff in self._terms:
            factors = [_symbol_text(s) if k == 1 else f"{_symbol_text(s)}^{k}" for s, k in mono]
            neg = coeff.is_negative()
            mag = -coeff if neg else coeff
            if not factors:
                body = str(mag)
            elif mag == ONE:
                body = "*".join(factors)
            else:
                body = "*".join([str(mag)] + factors)
            if parts:
                parts.append(("-" if neg else "+") + body)
            else:
                parts.append(("-" if neg else "") + body)
        return "".join(parts)

    def __repr__(self):
        return f"ScalarExpr({self})"


def _as_scalar(value) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        return value
    return ScalarExpr.const(value)


class WeylPolynomial:
    """Normal-ordered polynomial ``sum_{a,b} c_ab x^a p^b`` (all x left of all p)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple, ScalarExpr] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for (a, b), coeff in items:
            if a < 0 or b < 0:
                raise ValueError("exponents must be non-negative")
            acc[(a, b)] = acc.get((a, b), ScalarExpr()) + _as_scalar(coeff)
        self._terms = {k: v for k, v in sorted(acc.items()) if v}

    @classmethod
    def monomial(cls, a: int, b: int, coeff=1) -> "WeylPolynomial":
        return cls({(a, b): _as_scalar(coeff)})

    @classmethod
    def const(cls, coeff) -> "WeylPolynomial":
        return cls.monomial(0, 0, coeff)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def coefficient(self, a: int, b: int) -> ScalarExpr:
        return self._terms.get((a, b), ScalarExpr())

    def degree(self) -> int:
        return max((a + b for a, b in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if not isinstance(other, WeylPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __add__(self, other):
        if not isinstance(other, WeylPolynomial):
            other = WeylPolynomial.const(other)
        return WeylPolynomial(list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return WeylPolynomial({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor) -> "WeylPolynomial":
        factor = _as_scalar(factor)
        return WeylPolynomial({k: v * factor for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, WeylPolynomial):
            return normal_order(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def symbols(self) -> set:
        return set().union(*(v.symbols() for v in self._terms.values()))

    def to_matrix(self, X: np.ndarray, P: np.ndarray, values: Mapping[str, float] = {}) -> np.ndarray:
        """Represent on a truncated basis, keeping the x^a p^b ordering."""
        d = X.shape[0]
        out = np.zeros((d, d), dtype=complex)
        for (a, b), coeff in self._terms.items():
            out += coeff.evaluate(values) * (
                np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(P, b)
            )
        return out

    def __str__(self):
        return format_operator(self)

    def __repr__(self):
        return f"WeylPolynomial({self})"


X = WeylPolynomial.monomial(1, 0)
P = WeylPolynomial.monomial(0, 1)


def _monomial_product(a: int, b: int, c: int, d: int) -> dict:
    # x^a p^b x^c p^d = sum_k C(b,k) C(c,k) k! (-i)^k x^(a+c-k) p^(b+d-k)
    out = {}
    minus_i_pow = ONE
    for k in range(min(b, c) + 1):
        weight = comb(b, k) * comb(c, k) * factorial(k)
        out[(a + c - k, b + d - k)] = minus_i_pow * weight
        minus_i_pow = minus_i_pow * GaussRational(Fraction(0), Fraction(-1))
    return out


def normal_order(left: WeylPolynomial, right: WeylPolynomial) -> WeylPolynomial:
    """Product ``left * right`` rewritten into normal order with ``p x = x p - i``."""
    acc = []
    for (a, b), c1 in left._terms.items():
        for (c, d), c2 in right._terms.items():
            coeff = c1 * c2
            for key, w in _monomial_product(a, b, c, d).items():
                acc.append((key, coeff * ScalarExpr.const(w)))
    return WeylPolynomial(acc)


def commutator(A: WeylPolynomial, B: WeylPolynomial) -> WeylPolynomial:
    return normal_order(A, B) - normal_order(B, A)


def adjoint_conjugate(
    A: WeylPolynomial, B: WeylPolynomial, max_depth: int = DEFAULT_MAX_DEPTH
) -> WeylPolynomial:
    """Exact ``e^A B e^-A = sum_k ad_A^k(B) / k!``.

    Raises NonTerminatingSeries unless some ``ad_A^k(B)`` with ``k < max_depth``
    vanishes.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    total = B
    term = B
    for k in range(1, max_depth + 1):
        term = commutator(A, term).scale(Fraction(1, k))
        if term.is_zero():
            return total
        if k == max_depth:
            break
        total = total + term
    raise NonTerminatingSeries(f"ad_A^{max_depth}(B) != 0 for A={A}, B={B}")


@dataclass(frozen=True)
class SymbolicFactor:
    """Dyson factor ``exp(f(t) * K)`` with a named real coefficient ``f``."""

    coefficient: str
    generator: WeylPolynomial

    def __post_init__(self):
        terms = self.generator.terms
        if len(terms) != 1:
            raise ValueError("generator must be a single monomial")
        ((a, b), coeff), = terms.items()
        if a and b:
            raise ValueError("generator must be a pure power of x or of p")
        if coeff.symbols():
            raise ValueError("generator coefficient must be numeric")

    @classmethod
    def exponential(cls, coefficient: str, generator: WeylPolynomial) -> "SymbolicFactor":
        return cls(coefficient, generator)

    @property
    def value(self) -> ScalarExpr:
        return ScalarExpr.symbol(self.coefficient)

    @property
    def rate(self) -> ScalarExpr:
        return ScalarExpr.symbol(self.coefficient, dot=True)

    def exponent(self) -> WeylPolynomial:
        return self.generator.scale(self.value)

    def sigma_tilde(self) -> WeylPolynomial:
        # i * Omega^-1 dOmega/dt; exact because Omega and dOmega share K
        return self.generator.scale(self.rate * I)


def composite_coriolis_symbolic(
    factors: list[SymbolicFactor], max_depth: int = DEFAULT_MAX_DEPTH
) -> list[WeylPolynomial]:
    """Composite Coriolis operators ``[Sigma_N, ..., Sigma_1]``.

    ``factors`` is ordered with the factor acting first on kets (``Omega_1``)
    at index 0. ``Sigma_1`` is the full ``i Omega^-1 dOmega/dt`` of the product
    ``Omega_N ... Omega_1``.
    """
    if not factors:
        raise ValueError("at least one factor is required")
    sigmas = [factors[-1].sigma_tilde()]
    for factor in reversed(factors[:-1]):
        conjugated = adjoint_conjugate(-factor.exponent(), sigmas[-1], max_depth)
        sigmas.append(factor.sigma_tilde() + conjugated)
    return sigmas


def coriolis_direct_symbolic(
    factors: list[SymbolicFactor], max_depth: int = DEFAULT_MAX_DEPTH
) -> WeylPolynomial:
    """``i Omega^-1 dOmega/dt`` by the product rule, one term per factor.

    Term n is ``i * rate_n * Omega_1^-1 ... Omega_n^-1 K_n Omega_n ... Omega_1``;
    this avoids the nested recursion and serves as its cross-check.
    """
    total = WeylPolynomial()
    for n, factor in enumerate(factors):
        term = factor.sigma_tilde()
        for inner in reversed(factors[:n]):
            term = adjoint_conjugate(-inner.exponent(), term, max_depth)
        total = total + term
    return total


def _operator_text(a: int, b: int) -> str:
    parts = []
    if a:
        parts.append("x" if a == 1 else f"x^{a}")
    if b:
        parts.append("p" if b == 1 else f"p^{b}")
    return "*".join(parts)


def format_operator(poly: WeylPolynomial) -> str:
    """Render with the highest monomials first, e.g. ``-(3*ad(alpha)*beta+ad(gamma))*p^2``."""
    if poly.is_zero():
        return "0"
    chunks = []
    for (a, b), coeff in sorted(poly.terms.items(), reverse=True):
        neg = coeff.leading_negative()
        mag = -coeff if neg else coeff
        text = str(mag)
        op = _operator_text(a, b)
        if op:
            if len(mag.terms) > 1:
                text = f"({text})"
            text = op if text == "1" else f"{text}*{op}"
        if chunks:
            chunks.append((" - " if neg else " + ") + text)
        else:
            chunks.append(("-" if neg else "") + text)
    return "".join(chunks)
