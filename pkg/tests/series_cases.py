"""Composition cases for the series engine.

Each case names the package operation, the symbolic inputs it receives and
the symbolic function whose Taylor table it must reproduce.  The expected
tables are generated once by ``make_series_oracle.py`` and frozen into
``data/series_oracle.json`` so the check runs without a computer algebra
system in the loop.
"""

import sympy as sp

from imdtm.series import (
    Series2,
    s2_add,
    s2_div,
    s2_exp,
    s2_ln,
    s2_mul,
    s2_pow,
    s2_scale,
    s2_shift_deriv,
    s2_sin_cos,
    s2_sqrt,
)

t, x = sp.symbols("t x")

U = 1 + x / 2 - x**2 / 3 + x**5 / 7
V = sp.cos(x)
B = sp.Rational(3, 2) + t / 3 - x / 2 + t * x / 5 + x**2 / 4 - t**2 / 6
C = sp.exp(t - x / 3)

# name -> (operation on Series2 inputs, symbolic inputs, expected expression, bounds (k, h))
CASES = {
    "add_x": (lambda a, b: s2_add(a, b), (U, V), U + V, (0, 10)),
    "scale_x": (lambda a: s2_scale(a, -2.5), (U,), -sp.Rational(5, 2) * U, (0, 10)),
    "mul_x": (lambda a, b: s2_mul(a, b), (U, V), U * V, (0, 10)),
    "div_x": (lambda a, b: s2_div(a, b), (V, U), V / U, (0, 10)),
    "sqrt_x": (lambda a: s2_sqrt(a), (U,), sp.sqrt(U), (0, 10)),
    "exp_x": (lambda a: s2_exp(a), (U,), sp.exp(U), (0, 10)),
    "ln_x": (lambda a: s2_ln(a), (U,), sp.log(U), (0, 10)),
    "pow_x": (lambda a: s2_pow(a, -1.5), (U,), U ** sp.Rational(-3, 2), (0, 10)),
    "sin_x": (lambda a: s2_sin_cos(a)[0], (U,), sp.sin(U), (0, 10)),
    "cos_x": (lambda a: s2_sin_cos(a)[1], (U,), sp.cos(U), (0, 10)),
    "deriv_x": (lambda a: s2_shift_deriv(a, 0, 2), (V * U,), sp.diff(V * U, x, 2), (0, 10)),
    "add_tx": (lambda a, b: s2_add(a, b), (B, C), B + C, (5, 5)),
    "scale_tx": (lambda a: s2_scale(a, 0.75), (C,), sp.Rational(3, 4) * C, (5, 5)),
    "mul_tx": (lambda a, b: s2_mul(a, b), (B, C), B * C, (5, 5)),
    "div_tx": (lambda a, b: s2_div(a, b), (C, B), C / B, (5, 5)),
    "sqrt_tx": (lambda a: s2_sqrt(a), (B,), sp.sqrt(B), (5, 5)),
    "exp_tx": (lambda a: s2_exp(a), (B,), sp.exp(B), (5, 5)),
    "ln_tx": (lambda a: s2_ln(a), (B,), sp.log(B), (5, 5)),
    "pow_tx": (lambda a: s2_pow(a, 0.75), (B,), B ** sp.Rational(3, 4), (5, 5)),
    "sin_tx": (lambda a: s2_sin_cos(a)[0], (B,), sp.sin(B), (5, 5)),
    "cos_tx": (lambda a: s2_sin_cos(a)[1], (B,), sp.cos(B), (5, 5)),
    "deriv_tx": (lambda a: s2_shift_deriv(a, 1, 2), (B * C,), sp.diff(B * C, t, 1, x, 2), (5, 5)),
}


def input_bounds(name):
    """Deriv cases need wider inputs than the expected table."""
    k, h = CASES[name][3]
    if name == "deriv_x":
        return 0, h + 2
    if name == "deriv_tx":
        return k + 1, h + 2
    return k, h


def apply_case(name, tables):
    op = CASES[name][0]
    return op(*(Series2(tab) for tab in tables)).coeffs
