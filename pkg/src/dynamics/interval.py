"""
Natural interval extension of sympy expressions over numpy arrays.

An expression is compiled once into a closure taking per-variable lower and
upper bound arrays of shape (N, k) and returning the (N,) bounds of the
expression. Supported nodes: numbers, symbols, sums, products, integer and
real powers, exp and log. Anything else raises UnsupportedExpressionError so
an enclosure is never silently lost.

With rounding, every node's result is pushed outward: one ulp after each
correctly rounded operation (+, *, /), more after powers and the libm
functions. The enclosure then holds in floating point, not only over the reals.
"""

import logging
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from src.errors import DomainError, IntervalDivisionError, UnsupportedExpressionError

logger = logging.getLogger(__name__)

Bounds = tuple[np.ndarray, np.ndarray]
IntervalFn = Callable[[np.ndarray, np.ndarray], Bounds]
Widen = Callable[..., Bounds]

# libm exp/log/pow are faithful, not correctly rounded
TRANSCENDENTAL_ULPS = 4


def outward(lo, hi, ulps: int = 1) -> Bounds:
    """Widen bounds by `ulps` units in the last place."""
    return lo - ulps * np.spacing(np.abs(lo)), hi + ulps * np.spacing(np.abs(hi))


def _exact(lo, hi, ulps: int = 1) -> Bounds:
    return lo, hi


def compile_interval(expr: sp.Expr, variables: Sequence[sp.Symbol], rounding: bool = False) -> IntervalFn:
    """Compile expr into an interval function over the given variable order."""
    position = {sym: k for k, sym in enumerate(variables)}
    node = _compile(sp.sympify(expr), position, outward if rounding else _exact)

    def evaluate(lo: np.ndarray, hi: np.ndarray) -> Bounds:
        n_rows = lo.shape[0]
        a, b = node(lo, hi)
        return (
            np.broadcast_to(np.asarray(a, dtype=float), (n_rows,)).copy(),
            np.broadcast_to(np.asarray(b, dtype=float), (n_rows,)).copy(),
        )

    return evaluate


def _compile(expr: sp.Expr, position: dict, widen: Widen) -> IntervalFn:
    if expr.is_number:
        value = float(expr)
        if expr.is_Integer and abs(value) < 2**53:
            return lambda lo, hi: (value, value)
        bounds = widen(value, value)
        return lambda lo, hi: bounds

    if isinstance(expr, sp.Symbol):
        if expr not in position:
            raise UnsupportedExpressionError(f"Unknown variable {expr} in expression")
        k = position[expr]
        return lambda lo, hi: (lo[:, k], hi[:, k])

    if isinstance(expr, sp.Add):
        terms = [_compile(arg, position, widen) for arg in expr.args]

        def add(lo, hi):
            a, b = terms[0](lo, hi)
            for term in terms[1:]:
                c, d = term(lo, hi)
                a, b = widen(a + c, b + d)
            return a, b

        return add

    if isinstance(expr, sp.Mul):
        coeff, rest = expr.as_coeff_Mul()
        factors = [_compile(arg, position, widen) for arg in sp.Mul.make_args(rest)]
        scale = widen(float(coeff), float(coeff)) if not coeff.is_Integer else (float(coeff), float(coeff))

        def mul(lo, hi):
            a, b = factors[0](lo, hi)
            for factor in factors[1:]:
                a, b = widen(*_mul(a, b, *factor(lo, hi)))
            if scale == (1.0, 1.0):
                return a, b
            return widen(*_mul(scale[0], scale[1], a, b))

        return mul

    if isinstance(expr, sp.Pow):
        return _compile_pow(expr, position, widen)

    if isinstance(expr, sp.exp):
        inner = _compile(expr.args[0], position, widen)

        def exp(lo, hi):
            a, b = inner(lo, hi)
            return widen(np.exp(a), np.exp(b), TRANSCENDENTAL_ULPS)

        return exp

    if isinstance(expr, sp.log):
        inner = _compile(expr.args[0], position, widen)

        def log(lo, hi):
            a, b = inner(lo, hi)
            if np.any(np.asarray(a) <= 0):
                raise DomainError(f"log argument interval reaches {np.min(a)} <= 0 in {expr}")
            return widen(np.log(a), np.log(b), TRANSCENDENTAL_ULPS)

        return log

    raise UnsupportedExpressionError(f"No interval extension for {type(expr).__name__} in {expr}")


def _mul(a, b, c, d) -> Bounds:
    p1, p2, p3, p4 = a * c, a * d, b * c, b * d
    return np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)), np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))


def _compile_pow(expr: sp.Pow, position: dict, widen: Widen) -> IntervalFn:
    base_expr, exponent = expr.args
    if not exponent.is_number:
        raise UnsupportedExpressionError(f"Non-constant exponent in {expr}")
    base = _compile(base_expr, position, widen)

    if exponent.is_Integer:
        k = int(exponent)
        if k >= 0:
            return lambda lo, hi: widen(*_int_pow(*base(lo, hi), k), max(1, k))

        def reciprocal_pow(lo, hi):
            a, b = base(lo, hi)
            if np.any((np.asarray(a) <= 0) & (np.asarray(b) >= 0)):
                raise IntervalDivisionError(f"Division by an interval containing zero in {expr}")
            c, d = widen(*_int_pow(a, b, -k), max(1, -k))
            return widen(1.0 / d, 1.0 / c)

        return reciprocal_pow

    e = float(exponent)

    def real_pow(lo, hi):
        a, b = base(lo, hi)
        if e > 0:
            if np.any(np.asarray(a) < 0):
                raise DomainError(f"Real power of an interval reaching {np.min(a)} < 0 in {expr}")
            return widen(np.power(a, e), np.power(b, e), TRANSCENDENTAL_ULPS)
        if np.any(np.asarray(a) <= 0):
            raise IntervalDivisionError(f"Negative real power of an interval reaching {np.min(a)} <= 0 in {expr}")
        return widen(np.power(b, e), np.power(a, e), TRANSCENDENTAL_ULPS)

    return real_pow


def _int_pow(a, b, k: int) -> Bounds:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if k == 0:
        return np.ones_like(a), np.ones_like(b)
    pa, pb = a**k, b**k
    if k % 2:
        return pa, pb
    # Even powers: interval containing zero has minimum 0
    low = np.where(a >= 0, pa, np.where(b <= 0, pb, 0.0))
    high = np.where(a >= 0, pb, np.where(b <= 0, pa, np.maximum(pa, pb)))
    return low, high
