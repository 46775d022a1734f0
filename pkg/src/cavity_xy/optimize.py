"""Fit mirrored laser pairs to a target coupling-ratio table.

Parameters per pair are the photon detuning ``d`` (in units of ``t_hop``) and
``log G``. The objective compares log-ratios ``J(l)/J(1)`` over odd
distances, so the overall ``G`` scale is a gauge freedom: the first pair's
``log G`` is pinned to zero and results are reported with ``max G`` rescaled to
:data:`~cavity_xy.couplings.PRESET_G_MAX`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .couplings import PRESET_G_MAX, CavityArray, CouplingTable, LaserPair, pair_coupling_profile
from .dispersion import ideal_linear_couplings
from .errors import NoFeasibleStart

LOG_G_SPAN = 12.0


@dataclass(frozen=True, eq=False)
class FitProblem:
    n_pairs: int
    target: CouplingTable
    l_fit: tuple = (3, 5, 7, 9, 11)
    bounds: tuple = (2.001, 50.0)
    weights: tuple | None = None
    n_sites: int = 40
    kernel_mode: str = "finite"

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        l_fit = tuple(int(l) for l in self.l_fit)
        if not l_fit or any(l % 2 == 0 or l < 1 for l in l_fit):
            raise ValueError("l_fit must be a non-empty list of odd distances")
        if max(l_fit) > self.n_sites // 2:
            raise ValueError("l_fit exceeds the ring's antipodal distance")
        object.__setattr__(self, "l_fit", l_fit)
        w = np.ones(len(l_fit)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (len(l_fit),):
            raise ValueError("one weight per fitted distance is required")
        object.__setattr__(self, "weights", tuple(w.tolist()))

    @property
    def array(self) -> CavityArray:
        return CavityArray(self.n_sites, 1.0, 0.0)

    def target_log_ratios(self) -> np.ndarray:
        ratios = self.target.ratios()
        return np.log(ratios[list(self.l_fit)])


@dataclass(frozen=True, eq=False)
class FitResult:
    pairs: list
    residual: float
    achieved: CouplingTable
    iterations: int
    converged: bool
    history: list = field(default_factory=list)
    start_residuals: list = field(default_factory=list)

    def as_dict(self) -> dict:
        l = np.arange(1, self.achieved.l_max + 1, 2)
        ratios = self.achieved.ratios()
        return {
            "pairs": [{"d": p.d, "G": p.G} for p in self.pairs],
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "achieved_ratios": {str(int(k)): float(ratios[k]) for k in l},
        }


def ideal_problem(n_pairs: int, l_fit=(3, 5, 7, 9, 11), n_sites: int = 40, **kwargs) -> FitProblem:
    return FitProblem(n_pairs, ideal_linear_couplings(n_sites // 2, n_sites), tuple(l_fit), n_sites=n_sites, **kwargs)


def evaluate_objective(params, problem: FitProblem) -> float:
    """``sum_l w_l (log[J(l)/J(1)] - log[J*(l)/J*(1)])^2`` for pairs ``params``."""
    table = pair_coupling_profile(problem.array, params, 1.0, problem.kernel_mode)
    j = table.j_of_l
    l = list(problem.l_fit)
    with np.errstate(divide="ignore"):
        diff = np.log(j[l] / j[1]) - problem.target_log_ratios()
    return float(np.dot(problem.weights, diff**2))


def _unpack(x, problem: FitProblem) -> list[LaserPair]:
    lo, hi = problem.bounds
    p = problem.n_pairs
    d = lo + np.asarray(x[:p]) * (hi - lo)
    log_g = np.concatenate([[0.0], (np.asarray(x[p:]) - 0.5) * 2.0 * LOG_G_SPAN])
    return [LaserPair(float(di), float(np.exp(gi))) for di, gi in zip(d, log_g)]


def canonical_pairs(pairs) -> list[LaserPair]:
    """Positive detunings, sorted descending, ``max G`` fixed to the preset scale."""
    pairs = [LaserPair(abs(p.d), abs(p.G)) for p in pairs]
    g_max = max(p.G for p in pairs)
    pairs = [LaserPair(p.d, p.G * PRESET_G_MAX / g_max) for p in pairs]
    return sorted(pairs, key=lambda p: (-p.d, -p.G))


def fit_drives(problem: FitProblem, starts: int = 32, seed: int = 0, maxiter: int | None = None) -> FitResult:
    """Multi-start Nelder-Mead in scaled coordinates from Halton-sequence starts.

    Every coordinate is mapped to ``[0, 1]``; a run counts as converged once
    the simplex diameter drops below ``1e-10`` there.
    """
    lo, hi = problem.bounds
    if not (hi > lo > 2.0):
        raise NoFeasibleStart(f"detuning bounds {problem.bounds} leave no point outside the band")
    dim = 2 * problem.n_pairs - 1
    sampler = qmc.Halton(dim, scramble=True, seed=seed)
    points = sampler.random(starts)
    maxiter = maxiter or 4000 * dim

    def objective(x):
        return evaluate_objective(_unpack(x, problem), problem)

    best = None
    for x0 in points:
        history = [objective(x0)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                objective,
                x0,
                method="Nelder-Mead",
                bounds=[(0.0, 1.0)] * dim,
                callback=lambda xk: history.append(objective(xk)),
                options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": maxiter, "maxfev": 2 * maxiter},
            )
        key = (float(res.fun), tuple(np.round(res.x, 12)))
        if best is None or key < best[0]:
            best = (key, res, history)
    (_, res, history) = best
    pairs = canonical_pairs(_unpack(res.x, problem))
    achieved = pair_coupling_profile(problem.array, pairs, 1.0, problem.kernel_mode)
    start_res = [objective(x0) for x0 in points]
    return FitResult(
        pairs=pairs,
        residual=float(res.fun),
        achieved=achieved,
        iterations=int(res.nit),
        converged=bool(res.success),
        history=history,
        start_residuals=start_res,
    )
