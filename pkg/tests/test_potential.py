import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_logistic.grid import build_grid
from nonlocal_logistic.potential import (
    TailTruncationWarning,
    check_decay_bound,
    check_gradient_bound,
    check_monotone_positive,
    radial_potential,
)

GRID = build_grid(3, 200.0, 2000, 20.0)


def _compact_exact(r):
    # -Delta u = (1 - r^2)_+ in R^3
    return np.where(r <= 1, 0.25 - r**2 / 6 + r**4 / 20, 2.0 / (15.0 * np.maximum(r, 1.0)))


def test_compact_source_closed_form():
    g = build_grid(3, 20.0, 4000, 1.0)
    F = np.clip(1 - g.nodes**2, 0, None)
    res = radial_potential(F, g)
    assert np.abs(res.u - _compact_exact(g.nodes)).max() < 1e-5
    assert res.decay_constant == pytest.approx(2.0 / 15.0, rel=1e-4)


def test_exponential_decay_constant():
    P = np.exp(-GRID.nodes)
    res = radial_potential(P, GRID, P=P, plateau_start=20.0)
    # |P|_1 / (omega_3 (3 - 2)) = 8 pi / 4 pi
    assert res.decay_constant == pytest.approx(2.0, rel=1e-4)
    assert check_monotone_positive(res, P)
    ratio, ok = check_decay_bound(res, GRID)
    assert ok and ratio <= 1.0


@pytest.mark.filterwarnings("ignore::nonlocal_logistic.potential.TailTruncationWarning")
def test_matches_grid_solver():
    r = GRID.nodes
    F = 3 * (1 + r**2) ** -2.5
    res = radial_potential(F, GRID)
    assert np.abs(res.u - (1 + r**2) ** -0.5).max() < 1e-4


@pytest.mark.filterwarnings("ignore::nonlocal_logistic.potential.TailTruncationWarning")
@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
def test_decay_bound_holds(coeffs):
    r = GRID.nodes
    P = (1 + r**2) ** -2
    F = P * (coeffs[0] + coeffs[1] * np.cos(r) + coeffs[2] * np.exp(-r))
    if not np.any(F):
        return
    res = radial_potential(F, GRID, P=P)
    ratio, ok = check_decay_bound(res, GRID)
    assert ok


def test_sign_changing_source_skips_monotonicity():
    F = np.exp(-GRID.nodes) * np.cos(GRID.nodes)
    assert check_monotone_positive(radial_potential(F, GRID), F) is None


def test_tail_warning():
    F = (1 + GRID.nodes**2) ** -1
    with pytest.warns(TailTruncationWarning):
        radial_potential(F, GRID)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        radial_potential(np.exp(-GRID.nodes), GRID)


@pytest.mark.filterwarnings("ignore::nonlocal_logistic.potential.TailTruncationWarning")
def test_gradient_bound():
    r = GRID.nodes
    F = 3 * (1 + r**2) ** -2.5
    u = radial_potential(F, GRID).u
    for R in (0.5, 2.0, 50.0):
        gb = check_gradient_bound(u, F, R, GRID)
        assert gb.holds and gb.lhs <= gb.rhs
    with pytest.raises(ValueError):
        check_gradient_bound(u, F, 150.0, GRID)
