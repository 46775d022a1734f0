import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_xy.couplings import CouplingTable
from cavity_xy.dispersion import (
    TARGET_J1,
    dense_grid,
    finite_difference_velocity,
    group_velocity,
    ideal_linear_couplings,
    linearity_error,
    magnon_dispersion,
    nearest_neighbour_couplings,
    normalize_table,
    ring_grid,
)
from cavity_xy.dynamics import single_magnon_hamiltonian
from cavity_xy.errors import EmptyRange


def test_ideal_values():
    t = ideal_linear_couplings(5)
    np.testing.assert_allclose(t.j_of_l, [-np.pi / 2, 2 / np.pi, 0, 2 / (9 * np.pi), 0, 2 / (25 * np.pi)])


def test_ideal_converges_to_abs_k():
    t = ideal_linear_couplings(4000)
    k = np.linspace(-np.pi, np.pi, 41)
    np.testing.assert_allclose(magnon_dispersion(t, k).e_of_k, np.abs(k), atol=2e-4)


def test_nn_band():
    curve = magnon_dispersion(nearest_neighbour_couplings(1.0, 12))
    np.testing.assert_allclose(curve.e_of_k, -2 * np.cos(ring_grid(12)), atol=1e-14)


@pytest.mark.parametrize("table", [ideal_linear_couplings(20, 40), nearest_neighbour_couplings(0.3, 40)])
def test_matches_eigensolve(table):
    """Direct cosine sum against dense eigenvalues, antipode counted once."""
    evals = np.linalg.eigvalsh(single_magnon_hamiltonian(table))
    curve = magnon_dispersion(table)
    np.testing.assert_allclose(np.sort(curve.e_of_k), evals, atol=1e-10)


def test_ideal_eigenvalue_at_half_pi():
    # cos(l pi/2) kills every odd l, so E(pi/2) = -J(0) exactly
    curve = magnon_dispersion(ideal_linear_couplings(20, 40))
    assert curve.e_of_k[10] == pytest.approx(np.pi / 2, abs=1e-12)


def test_velocity_analytic_vs_fd():
    t = ideal_linear_couplings(11)
    k = np.linspace(-3, 3, 25)
    v = group_velocity(magnon_dispersion(t, k))
    np.testing.assert_allclose(v, finite_difference_velocity(t, k, 1e-4), atol=1e-6)


def test_normalize():
    t = normalize_table(CouplingTable(None, np.array([0.0, 3.0, 0.0, 1.0])))
    assert t.j_of_l[1] == TARGET_J1 and t.j_of_l[3] == pytest.approx(TARGET_J1 / 3)


def test_line_is_linear():
    t = CouplingTable(None, np.array([0.0]))
    k = np.linspace(0, np.pi, 50)
    report = linearity_error(magnon_dispersion(t, k))
    assert report.max_abs_dev < 1e-15


def test_empty_range():
    curve = magnon_dispersion(ideal_linear_couplings(3), dense_grid(9))
    with pytest.raises(EmptyRange):
        linearity_error(curve, (0.5, 0.5))
    with pytest.raises(EmptyRange):
        linearity_error(curve, (0.5, 0.51))


def test_nn_linearity_continuous_oracle():
    """Least-squares slope of -2J cos k on (a, pi - a) in closed form."""
    a = 0.1 * np.pi
    curve = magnon_dispersion(nearest_neighbour_couplings(1.0), np.linspace(a, np.pi - a, 200001))
    u = np.pi / 2 - a
    expected = 6 * (np.sin(u) - u * np.cos(u)) / u**3
    assert linearity_error(curve, (a - 1e-9, np.pi - a + 1e-9)).best_fit_slope == pytest.approx(expected, rel=1e-4)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=12))
def test_dispersion_even_in_k(j):
    t = CouplingTable(None, np.array(j))
    k = np.linspace(0, np.pi, 17)
    np.testing.assert_allclose(magnon_dispersion(t, k).e_of_k, magnon_dispersion(t, -k).e_of_k, atol=1e-12)
