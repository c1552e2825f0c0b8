from math import gamma as gamma_fn

import numpy as np
import pytest
from scipy.integrate import quad

from nonlocal_logistic.grid import build_grid
from nonlocal_logistic.model import (
    GrowthRate,
    InvalidInstanceError,
    ProblemSpec,
    RadialProfile,
    Separable,
    Tabulated,
    WeightP,
    ball_sphere_fraction,
    make_analytic_instance,
    make_gaussian_instance,
    make_rank_one_instance,
    sphere_average,
    validate_hypotheses,
)


def _gbar_exact(r, s):
    # sphere average of exp(-|x - y|^2) in R^3
    return (np.exp(-(r - s) ** 2) - np.exp(-(r + s) ** 2)) / (4 * r * s)


def test_sphere_average_closed_form():
    g = build_grid(3, 10.0, 60, 4.0)
    tab = sphere_average(RadialProfile(lambda z: np.exp(-z * z)), g, order=32)
    r, s = np.meshgrid(g.nodes[1:], g.nodes[1:], indexing="ij")
    assert np.allclose(tab[1:, 1:], _gbar_exact(r, s), rtol=1e-9, atol=1e-14)
    assert np.allclose(tab[0], np.exp(-g.nodes**2), rtol=1e-13)
    assert np.allclose(tab, tab.T, rtol=1e-12, atol=1e-300)


@pytest.mark.parametrize("N", [4, 5])
def test_sphere_average_higher_dimensions(N):
    g = build_grid(N, 20.0, 40, 4.0)
    tab = sphere_average(RadialProfile(lambda z: np.exp(-z)), g)
    c = gamma_fn(N / 2) / (np.sqrt(np.pi) * gamma_fn((N - 1) / 2))
    for i in (1, 5, 20, 39):
        for j in (2, 5, 21, 40):
            r, s = g.nodes[i], g.nodes[j]
            ref = quad(lambda t: c * (1 - t * t) ** ((N - 3) / 2)
                       * np.exp(-np.sqrt(max(r * r + s * s - 2 * r * s * t, 0.0))),
                       -1, 1, epsabs=0, epsrel=1e-13, limit=500)[0]
            assert tab[i, j] == pytest.approx(ref, rel=1e-11)


def test_sphere_average_large_radii():
    # the angular integrand is concentrated near theta = 0 when r s >> 1
    g = build_grid(3, 200.0, 2000, 20.0)
    tab = sphere_average(RadialProfile(lambda z: np.exp(-z * z)), g)
    assert tab[-1, -1] == pytest.approx(_gbar_exact(200.0, 200.0), rel=1e-10)


def test_ball_sphere_fraction():
    s = np.array([0.0, 0.5, 2.0, 5.0])
    assert np.array_equal(ball_sphere_fraction(s, 0.0, 1.0, 3), [1, 1, 0, 0])
    far = ball_sphere_fraction(np.array([1.0]), 10.0, 1.0, 3)
    assert far[0] == 0.0
    # sphere |y| = 1 through a ball of radius sqrt(2) centred on it covers half of it
    half = ball_sphere_fraction(np.array([1.0]), 1.0, np.sqrt(2.0), 3)
    assert half[0] == pytest.approx(0.5, rel=1e-12)


def test_gaussian_m_bound():
    spec = make_gaussian_instance()
    g = build_grid(3, 50.0, 800, 20.0)
    assert spec.kernel.m_bound(spec, g) == pytest.approx((np.pi / 2) ** 0.75, rel=1e-4)


def test_rank_one_factors():
    spec = make_rank_one_instance(1.5)
    g = build_grid(3, 50.0, 100, 5.0)
    left, right = spec.kernel.factors(spec, g)
    assert np.allclose(left, spec.f.on(g), rtol=1e-15)
    assert np.allclose(right, spec.P.on(g), rtol=1e-14)


def test_tabulated_reproduces_source_kernel():
    spec = make_analytic_instance()
    g = build_grid(3, 50.0, 100, 5.0)
    tab = Tabulated.from_kernel(spec.kernel, spec, g)
    assert np.array_equal(tab.table(spec, g), spec.kernel.table(spec, g))
    coarse = build_grid(3, 50.0, 50, 5.0)
    assert np.all(tab.table(spec, coarse) >= 0)


def test_tabulated_rejects_negative_entries():
    spec = make_analytic_instance()
    g = build_grid(3, 10.0, 20)
    T = np.ones((21, 21))
    T[3, 4] = -1.0
    with pytest.raises(InvalidInstanceError):
        Tabulated(T, g.nodes).table(spec, g)


@pytest.mark.parametrize("dim, gamma", [(2, 1.0), (3, 2.0), (3, 0.5), (3.5, 1.0)])
def test_problem_spec_rejects(dim, gamma):
    base = make_analytic_instance()
    with pytest.raises(InvalidInstanceError):
        ProblemSpec(dim, gamma, base.f, base.P, base.kernel)


def test_hypotheses_rank_one_is_relaxed():
    rep = validate_hypotheses(make_analytic_instance())
    assert rep.ok and rep.relaxed
    assert rep["Q2"].status == "relaxed"
    for key in ("f1", "P_L1", "f2", "K0", "Q1", "K1"):
        assert rep[key].status == "pass", key
    assert rep["P_L1"].value == pytest.approx(np.pi**2, rel=1e-3)


def test_hypotheses_gaussian_pass():
    spec = make_gaussian_instance()
    rep = validate_hypotheses(spec, build_grid(3, 100.0, 800, 20.0))
    assert rep.ok and not rep.relaxed
    assert rep["Q1"].value == pytest.approx((np.pi / 2) ** 0.75, rel=1e-3)
    assert rep.to_dict()["results"]["Q2"]["status"] == "pass"


def test_hypotheses_flag_nonintegrable_weight():
    base = make_gaussian_instance()
    slow = WeightP(lambda r: (1 + r * r) ** -1.0, "inv_quad")
    spec = ProblemSpec(3, 1.0, GrowthRate(lambda r: (1 + r * r) ** -2.0, q=3.0), slow, base.kernel)
    rep = validate_hypotheses(spec, build_grid(3, 100.0, 200, 20.0))
    assert rep["P_L1"].status == "fail"
    assert not rep.ok


def test_hypotheses_flag_f_above_P():
    base = make_analytic_instance()
    spec = ProblemSpec(3, 1.0, GrowthRate(lambda r: 2 * (1 + r * r) ** -2.0, q=3.0), base.P,
                       Separable(RadialProfile(lambda r: np.ones_like(r))))
    assert validate_hypotheses(spec)["f1"].status == "fail"


def test_hypotheses_reject_nonpositive_f():
    base = make_analytic_instance()
    spec = ProblemSpec(3, 1.0, GrowthRate(lambda r: np.cos(r)), base.P, base.kernel)
    with pytest.raises(InvalidInstanceError):
        validate_hypotheses(spec)
