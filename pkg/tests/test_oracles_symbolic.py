"""Closed-form oracles derived symbolically; the numeric suites rely on these values."""

import sympy as sp

r = sp.symbols("r", positive=True)
P = (1 + r**2) ** -2


def radial_neg_laplacian(u, N=3):
    return sp.simplify(-sp.diff(r ** (N - 1) * sp.diff(u, r), r) / r ** (N - 1))


def test_principal_eigenpair():
    phi = (1 + r**2) ** sp.Rational(-1, 2)
    assert sp.simplify(radial_neg_laplacian(phi) - 3 * P * phi) == 0


def test_second_radial_eigenpair():
    phi = (1 - r**2) * (1 + r**2) ** sp.Rational(-3, 2)
    assert sp.simplify(radial_neg_laplacian(phi) - 15 * P * phi) == 0


def test_masses():
    phi = (1 + r**2) ** sp.Rational(-1, 2)
    shell = 4 * sp.pi * r**2
    assert sp.integrate(shell * P, (r, 0, sp.oo)) == sp.pi**2
    assert sp.integrate(shell * P * phi, (r, 0, sp.oo)) == 4 * sp.pi / 3
    assert sp.integrate(shell * sp.exp(-r), (r, 0, sp.oo)) == 8 * sp.pi
    assert sp.simplify(sp.integrate(shell * sp.exp(-2 * r**2), (r, 0, sp.oo)) - (sp.pi / 2) ** sp.Rational(3, 2)) == 0


def test_compact_source_potential():
    # -Delta u = (1 - r^2)_+ in R^3
    inner = sp.Rational(1, 4) - r**2 / 6 + r**4 / 20
    outer = sp.Rational(2, 15) / r
    assert sp.simplify(radial_neg_laplacian(inner) - (1 - r**2)) == 0
    assert sp.simplify(radial_neg_laplacian(outer)) == 0
    assert inner.subs(r, 1) == outer.subs(r, 1)
    assert sp.diff(inner, r).subs(r, 1) == sp.diff(outer, r).subs(r, 1)
