"""Single-magnon dynamics on an engineered XY ring.

In the one-flip sector the XY Hamiltonian is the real symmetric circulant
``H[j, j'] = -J(d(j, j'))``. Its eigenvectors are plane waves, so evolution is
done exactly with two FFTs and a phase; the uniform Zeeman term only adds a
global phase in this sector and is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .couplings import CouplingTable, ring_distance
from .dispersion import dense_grid, group_velocity, magnon_dispersion
from .errors import EmptyWindow

NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MagnonState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1:
            raise ValueError("amplitudes must be 1-d")
        if abs(np.vdot(a, a).real - 1.0) > NORM_TOL:
            raise ValueError("magnon state is not normalised")
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_sites(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def site(cls, n_sites: int, j: int) -> MagnonState:
        a = np.zeros(n_sites, dtype=complex)
        a[j % n_sites] = 1.0
        return cls(a)

    @classmethod
    def gaussian(cls, n_sites: int, center: float, width: float, k0: float = 0.0) -> MagnonState:
        """Wave packet ``exp(-d^2 / (2 width^2) + i k0 d)`` with ``d`` the signed ring offset from ``center``."""
        j = np.arange(n_sites)
        d = (j - center + n_sites / 2.0) % n_sites - n_sites / 2.0
        a = np.exp(-(d**2) / (2.0 * width**2) + 1j * k0 * d)
        return cls(a / np.linalg.norm(a))


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    times: np.ndarray
    probabilities: np.ndarray  # (len(times), N)
    fidelity: np.ndarray       # |<target|psi(t)>|^2
    source: int
    target: int


@dataclass(frozen=True)
class RevivalResult:
    t_star: float
    fidelity: float
    target: int
    peak_site: int


def _ring_table(couplings: CouplingTable) -> CouplingTable:
    if couplings.n_sites is None:
        raise ValueError("dynamics needs a table attached to a ring (use CouplingTable.on_ring)")
    return couplings


def first_column(couplings: CouplingTable) -> np.ndarray:
    table = _ring_table(couplings)
    n = table.n_sites
    return -table.j_of_l[[ring_distance(0, d, n) for d in range(n)]]


def single_magnon_hamiltonian(couplings: CouplingTable) -> np.ndarray:
    """Dense ``N x N`` circulant ``H[j, j'] = -J(d(j, j'))``."""
    col = first_column(couplings)
    n = col.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def spectrum(couplings: CouplingTable) -> np.ndarray:
    """Eigenvalues indexed by ring momentum ``k_m = 2 pi m / N``."""
    return np.fft.fft(first_column(couplings)).real


def _amplitudes(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, MagnonState) else np.asarray(state, dtype=complex)


def evolve_many(state, couplings: CouplingTable, times) -> np.ndarray:
    """Amplitudes at every time, shape ``(len(times), N)``."""
    psi0 = _amplitudes(state)
    energies = spectrum(couplings)
    if psi0.size != energies.size:
        raise ValueError("state and couplings describe different ring sizes")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-1j * np.outer(t, energies))
    return np.fft.ifft(phases * np.fft.fft(psi0)[None, :], axis=1)


def evolve(state, couplings: CouplingTable, t: float) -> MagnonState:
    """Exact ``exp(-iHt) psi`` through the plane-wave basis."""
    return MagnonState(evolve_many(state, couplings, [t])[0])


def evolve_dense(state, couplings: CouplingTable, t: float) -> np.ndarray:
    """Reference evolution through a dense eigendecomposition."""
    w, v = np.linalg.eigh(single_magnon_hamiltonian(couplings))
    return v @ (np.exp(-1j * w * t) * (v.conj().T @ _amplitudes(state)))


def transfer_fidelity(couplings: CouplingTable, source: int, target: int, t: float) -> float:
    n = _ring_table(couplings).n_sites
    amp = evolve_many(MagnonState.site(n, source), couplings, [t])[0, target % n]
    return float(abs(amp) ** 2)


def propagation_profile(couplings: CouplingTable, source: int, t_grid, target: int | None = None) -> EvolutionRecord:
    n = _ring_table(couplings).n_sites
    t = np.asarray(t_grid, dtype=float)
    if t.size > 2 and not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=1e-12):
        raise ValueError("t_grid must be uniform")
    if target is None:
        target = (source + n // 2) % n
    amps = evolve_many(MagnonState.site(n, source), couplings, t)
    probs = np.abs(amps) ** 2
    return EvolutionRecord(t, probs, probs[:, target % n], source % n, target % n)


def default_window(couplings: CouplingTable) -> tuple[float, float]:
    """Bracket around the antipodal arrival ``(N/2) / v_max``."""
    n = _ring_table(couplings).n_sites
    curve = magnon_dispersion(couplings, dense_grid(4001))
    v_max = np.abs(group_velocity(curve)).max()
    if v_max <= 0:
        raise EmptyWindow("couplings vanish; nothing propagates")
    t_est = 0.5 * n / v_max
    return 0.5 * t_est, 1.5 * t_est


def revival_search(couplings: CouplingTable, source: int, window=None, n_coarse: int = 400, xtol: float = 1e-10) -> RevivalResult:
    """Time of maximal antipodal fidelity: coarse scan, then golden-section refinement."""
    n = _ring_table(couplings).n_sites
    target = (source + n // 2) % n
    lo, hi = default_window(couplings) if window is None else window
    if not hi > lo or n_coarse < 3:
        raise EmptyWindow(f"empty search window ({lo}, {hi})")
    coarse = np.linspace(lo, hi, n_coarse)
    fid = np.abs(evolve_many(MagnonState.site(n, source), couplings, coarse)[:, target]) ** 2
    i = int(np.argmax(fid))

    def neg(t):
        return -transfer_fidelity(couplings, source, target, t)

    if 0 < i < n_coarse - 1:
        res = minimize_scalar(neg, bracket=(coarse[i - 1], coarse[i], coarse[i + 1]), method="golden", tol=xtol)
    else:
        a, b = coarse[max(i - 1, 0)], coarse[min(i + 1, n_coarse - 1)]
        res = minimize_scalar(neg, bounds=(a, b), method="bounded", options={"xatol": xtol})
    t_star = float(res.x)
    probs = np.abs(evolve_many(MagnonState.site(n, source), couplings, [t_star])[0]) ** 2
    return RevivalResult(t_star, float(-res.fun), target, int(np.argmax(probs)))
