import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonlocal_logistic.grid import (
    GridError,
    build_grid,
    lebesgue_norm,
    norms,
    read_field_csv,
    solve_laplacian,
    sphere_area,
    write_field_csv,
)

GRID = build_grid(3, 200.0, 2000, 20.0)


def test_sphere_area():
    assert sphere_area(3) == pytest.approx(4 * np.pi, rel=1e-15)
    assert sphere_area(4) == pytest.approx(2 * np.pi**2, rel=1e-15)
    assert sphere_area(5) == pytest.approx(8 * np.pi**2 / 3, rel=1e-15)


def test_geometric_grid_shape():
    g = build_grid(3, 200.0, 100, 20.0)
    h = np.diff(g.nodes)
    assert g.M == 100 and g.R_max == 200.0
    assert h[-1] / h[0] == pytest.approx(20.0, rel=1e-12)
    assert np.allclose(np.diff(build_grid(3, 10.0, 20).nodes), 0.5)


@pytest.mark.parametrize("kw", [dict(R_max=0.0, M=100), dict(R_max=10.0, M=8), dict(R_max=10.0, M=100, stretch=0.5)])
def test_build_grid_rejects(kw):
    with pytest.raises(GridError):
        build_grid(3, **kw)


def test_build_grid_rejects_low_dimension():
    with pytest.raises(GridError):
        build_grid(2, 10.0, 100)


def test_weights_are_exact_ball_volume():
    g = build_grid(4, 7.0, 50, 3.0)
    assert g.weights.sum() == pytest.approx(np.pi**2 / 2 * 7.0**4, rel=1e-13)


def test_quadrature_of_exponential():
    # int_{R^3} e^{-r} dx = 8 pi
    assert GRID.integrate(np.exp(-GRID.nodes)) == pytest.approx(8 * np.pi, rel=1e-4)


def test_norms_of_eigenfunction():
    u = (1 + GRID.nodes**2) ** -0.5
    P = (1 + GRID.nodes**2) ** -2
    n = norms(u, P, GRID)
    assert n.sup == 1.0
    # int 4 pi r^2 (1 + r^2)^{-3} dr = pi^2 / 4
    assert n.L2P == pytest.approx(np.sqrt(np.pi**2 / 4), rel=1e-4)
    # int |grad u|^2 = int 4 pi r^4 (1 + r^2)^{-3} dr = 3 pi^2 / 4
    assert n.D12seminorm == pytest.approx(np.sqrt(3 * np.pi**2 / 4), rel=1e-4)
    assert n.decayNorm == pytest.approx(1.0, abs=2e-5)
    assert norms(u, lambda r: (1 + r**2) ** -2, GRID) == n


def test_lebesgue_norm():
    assert lebesgue_norm(np.exp(-GRID.nodes), 1.0, GRID) == pytest.approx(8 * np.pi, rel=1e-4)


def test_stiffness_symmetric_positive_definite():
    lap = build_grid(3, 50.0, 60, 5.0).laplacian
    K = lap.stiffness.toarray()
    assert np.array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() > 0


def test_exterior_harmonic_is_exact_at_boundary():
    g = build_grid(3, 50.0, 200, 5.0)
    lap = g.laplacian
    # u = 1/r is harmonic away from 0; the Robin row only sees the midpoint-flux error
    u = np.where(g.nodes > 1.0, 1.0 / np.maximum(g.nodes, 1e-300), 1.0)
    scale = lap.diag[-1] * u[-1] / g.weights[-1]
    assert abs(lap.apply(u)[-1]) < 1e-4 * scale


def test_energy_identity():
    g = build_grid(3, 30.0, 100, 4.0)
    u = np.exp(-g.nodes)
    v = np.cos(g.nodes) / (1 + g.nodes**2)
    lap = g.laplacian
    assert lap.energy(u, v) == pytest.approx(g.integrate(lap.apply(u) * v), rel=1e-12)
    assert lap.energy(u, v) == pytest.approx(lap.energy(v, u), rel=1e-12)


def _solve_error(M):
    g = build_grid(3, 200.0, M, 20.0)
    r = g.nodes
    # -Delta (1 + r^2)^{-1/2} = 3 (1 + r^2)^{-5/2} in R^3
    u = solve_laplacian(3 * (1 + r**2) ** -2.5, g)
    return np.abs(u - (1 + r**2) ** -0.5).max()


def test_poisson_second_order():
    e1, e2 = _solve_error(500), _solve_error(1000)
    assert e2 < 1e-3
    assert e1 / e2 == pytest.approx(4.0, abs=0.5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=4, max_size=4))
def test_maximum_principle(coeffs):
    g = build_grid(3, 40.0, 80, 5.0)
    r = g.nodes
    rhs = sum(c * np.exp(-(k + 1) * r / 3) for k, c in enumerate(coeffs))
    u = solve_laplacian(rhs, g)
    assert np.all(u >= -1e-14 * max(1.0, np.abs(u).max()))


def test_field_csv_roundtrip(tmp_path):
    r = GRID.nodes[:50]
    v = np.sin(r) / 3.0
    p = tmp_path / "f.csv"
    write_field_csv(p, r, v, "u")
    text = p.read_text()
    assert text.startswith("r,u\n") and text.endswith("\n")
    r2, v2 = read_field_csv(p)
    assert np.array_equal(r, r2) and np.array_equal(v, v2)
