"""Single-magnon dispersion of an XY ring and how linear it is.

Energies here are in the dimensionless units of the linear target
``eps_k = |k|``; engineered tables are brought onto that scale with
:func:`normalize_table`, which fixes ``J(1)`` to the target's ``2/pi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import CouplingTable
from .errors import EmptyRange

TARGET_J1 = 2.0 / np.pi


@dataclass(frozen=True, eq=False)
class DispersionCurve:
    n_sites: int | None
    k: np.ndarray
    e_of_k: np.ndarray
    couplings: CouplingTable


@dataclass(frozen=True)
class LinearityReport:
    max_abs_dev: float
    rms_dev: float
    best_fit_slope: float
    intercept: float


def ring_grid(n_sites: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_sites) / n_sites


def dense_grid(points: int) -> np.ndarray:
    """Uniform grid on ``[-pi, pi]``, both ends included."""
    return np.linspace(-np.pi, np.pi, int(points))


def _weights(table: CouplingTable) -> np.ndarray:
    # each l > 0 appears twice (+l and -l) except the antipode of a ring
    w = np.full(table.j_of_l.size, 2.0)
    w[0] = 1.0
    if table.n_sites is not None and table.l_max == table.n_sites // 2:
        w[-1] = 1.0
    return w


def magnon_dispersion(couplings: CouplingTable, k_grid=None) -> DispersionCurve:
    """``E_k = -J(0) - sum_{l>0} 2 J(l) cos(kl)``, antipode counted once on a ring."""
    if k_grid is None:
        if couplings.n_sites is None:
            raise ValueError("a k grid is required for a table without a ring size")
        k_grid = ring_grid(couplings.n_sites)
    k = np.asarray(k_grid, dtype=float)
    l = couplings.distances
    e = -(np.cos(np.outer(k, l)) @ (_weights(couplings) * couplings.j_of_l))
    return DispersionCurve(couplings.n_sites, k, e, couplings)


def ideal_linear_couplings(l_max: int, n_sites: int | None = None) -> CouplingTable:
    """Fourier couplings of ``eps_k = |k|``: ``J(0) = -pi/2``, ``J(l) = (1-(-1)^l)/(pi l^2)``.

    With ``n_sites`` the table is embedded in that ring (zeros beyond ``l_max``).
    """
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    l = np.arange(1, l_max + 1)
    j = np.concatenate([[-np.pi / 2.0], (1.0 - (-1.0) ** l) / (np.pi * l**2)])
    table = CouplingTable(None, j)
    return table.on_ring(n_sites) if n_sites is not None else table


def nearest_neighbour_couplings(j1: float = TARGET_J1, n_sites: int | None = None) -> CouplingTable:
    table = CouplingTable(None, np.array([0.0, j1]))
    return table.on_ring(n_sites) if n_sites is not None else table


def normalize_table(couplings: CouplingTable, j1: float = TARGET_J1) -> CouplingTable:
    """Rescale so that ``J(1) = j1``."""
    return couplings.scaled(j1 / couplings.j_of_l[1])


def group_velocity(curve: DispersionCurve) -> np.ndarray:
    """Analytic ``dE/dk = sum_{l>0} w_l l J(l) sin(kl)`` on the curve's grid."""
    table = curve.couplings
    l = table.distances
    return np.sin(np.outer(curve.k, l)) @ (_weights(table) * l * table.j_of_l)


def finite_difference_velocity(couplings: CouplingTable, k, h: float = 1e-4) -> np.ndarray:
    """Centred difference of the dispersion; error is O(h^2)."""
    k = np.asarray(k, dtype=float)
    up = magnon_dispersion(couplings, k + h).e_of_k
    down = magnon_dispersion(couplings, k - h).e_of_k
    return (up - down) / (2.0 * h)


def linearity_error(curve: DispersionCurve, fit_range=(0.1 * np.pi, 0.9 * np.pi)) -> LinearityReport:
    """Least-squares line through ``(k, E_k)`` for ``k`` strictly inside ``fit_range``."""
    lo, hi = fit_range
    if not (0.0 <= lo < hi <= np.pi):
        raise EmptyRange(f"fit range {fit_range} must lie within (0, pi)")
    sel = (curve.k > lo) & (curve.k < hi)
    if sel.sum() < 2:
        raise EmptyRange(f"fewer than two grid points inside {fit_range}")
    k = curve.k[sel]
    e = curve.e_of_k[sel]
    design = np.column_stack([k, np.ones_like(k)])
    (slope, intercept), *_ = np.linalg.lstsq(design, e, rcond=None)
    resid = e - design @ np.array([slope, intercept])
    return LinearityReport(
        float(np.abs(resid).max()), float(np.sqrt(np.mean(resid**2))), float(slope), float(intercept)
    )
