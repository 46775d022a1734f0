"""Brute-force single-excitation dynamics of the driven cavity-array model.

The basis is ``[b_0 .. b_{N-1}, e_0 .. e_{N-1}, photon k_0 .. k_{N-1}]`` with
``k_m = 2 pi m / N``: ``b_j``/``e_j`` put atom ``j`` in that level with every
other atom in ``a`` and the cavities empty, photon ``k`` leaves all atoms in
``a``.

:func:`full_hamiltonian_at` gives the interaction-picture Hamiltonian. Its
phases run at the large detunings, so :func:`integrate_full` works in a
co-rotating frame attached to one reference laser:

    f_b = c_b,  f_e = exp(-i Delta_r t) c_e,  f_k = exp(-i (Delta_r - delta_k) t) c_k

In that frame the cavity coupling and the reference laser are static and every
other laser ``n`` contributes a tone at ``nu_n = Delta_n - Delta_r``. When the
tones are commensurate the frame Hamiltonian is periodic, the one-period
propagator is built once with RK4 and repeated by matrix powers. The change of
variables is exact; results are returned as interaction-picture amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import curve_fit

from ._kernels import rk4_evolve
from .couplings import AtomSpec, CavityArray, EffectiveModel, check_validity, detunings, effective_model
from .dynamics import evolve_many
from .errors import GridMismatch, StepTooLarge

STEP_LIMIT = 0.1
DEFAULT_STEP = 0.01
HERMITICITY_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class FullState:
    b_amp: np.ndarray
    e_amp: np.ndarray
    p_amp: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=complex) for a in (self.b_amp, self.e_amp, self.p_amp)]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise ValueError("b, e and photon amplitudes must be 1-d arrays of one length")
        for name, a in zip(("b_amp", "e_amp", "p_amp"), arrays):
            object.__setattr__(self, name, a)

    @property
    def n_sites(self) -> int:
        return self.b_amp.size

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.vector, self.vector).real))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.b_amp, self.e_amp, self.p_amp])

    @classmethod
    def from_vector(cls, v) -> FullState:
        v = np.asarray(v, dtype=complex)
        if v.ndim != 1 or v.size % 3:
            raise ValueError("state vector length must be 3N")
        n = v.size // 3
        return cls(v[:n], v[n : 2 * n], v[2 * n :])

    @classmethod
    def site(cls, n_sites: int, j: int) -> FullState:
        v = np.zeros(3 * n_sites, dtype=complex)
        v[j % n_sites] = 1.0
        return cls.from_vector(v)


@dataclass(frozen=True)
class IntegrationParams:
    t_end: float
    dt: float | None = None  # None: DEFAULT_STEP / fastest frequency
    tolerance: float = 1e-8
    method: str = "rk4"
    max_halvings: int = 6
    n_samples: int = 201

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")


@dataclass(frozen=True, eq=False)
class OracleSystem:
    array: CavityArray
    atom: AtomSpec
    lasers: list

    def __post_init__(self):
        object.__setattr__(self, "lasers", list(self.lasers))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), 3N) interaction-picture amplitudes
    dt_final: float
    converged: bool
    halvings: int
    norm_drift: float
    gate_change: float
    stroboscopic: bool

    @property
    def n_sites(self) -> int:
        return self.states.shape[1] // 3

    def state(self, i: int) -> FullState:
        return FullState.from_vector(self.states[i])

    @property
    def final(self) -> FullState:
        return self.state(-1)


@dataclass(frozen=True, eq=False)
class Comparison:
    times: np.ndarray
    infidelity: np.ndarray
    max_infidelity: float


@dataclass(frozen=True, eq=False)
class _Frame:
    h0: np.ndarray
    drives: np.ndarray  # (n_tones, 3N, 3N)
    nus: np.ndarray
    delta_ref: float
    delta_k: np.ndarray
    fastest: float


# ---------------------------------------------------------------------------
# Hamiltonian


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.abs(h).max()))
    if np.abs(h - h.conj().T).max() > HERMITICITY_TOL * scale:
        raise AssertionError("Hamiltonian is not Hermitian")
    return h


def _photon_coupling(array: CavityArray, g: complex) -> np.ndarray:
    """``C[j, k] = (g / sqrt(N)) exp(i k j)``."""
    j = np.arange(array.n_sites)
    return g / np.sqrt(array.n_sites) * np.exp(1j * np.outer(j, array.momenta))


def full_hamiltonian_at(t: float, array: CavityArray, atom: AtomSpec, lasers) -> np.ndarray:
    """Interaction-picture Hamiltonian at time ``t`` (3N x 3N, Hermitian)."""
    n = array.n_sites
    lasers = list(lasers)
    h = np.zeros((3 * n, 3 * n), dtype=complex)
    delta_k = atom.omega_e - array.omega_c + 2.0 * array.t_hop * np.cos(array.momenta)
    c = _photon_coupling(array, atom.g) * np.exp(1j * delta_k * t)[None, :]
    h[n : 2 * n, 2 * n :] = c
    h[2 * n :, n : 2 * n] = c.conj().T
    drive = 0j
    for las in lasers:
        big_delta = atom.omega_e - atom.omega_ab - las.omega_l
        drive += 0.5 * las.rabi * np.exp(1j * big_delta * t)
    idx = np.arange(n)
    h[n + idx, idx] = drive
    h[idx, n + idx] = np.conj(drive)
    return _check_hermitian(h)


def _frame(system: OracleSystem) -> _Frame:
    array, atom = system.array, system.atom
    n = array.n_sites
    active = [las for las in system.lasers if las.active]
    delta_k = atom.omega_e - array.omega_c + 2.0 * array.t_hop * np.cos(array.momenta)
    big = [atom.omega_e - atom.omega_ab - las.omega_l for las in active]
    delta_ref = big[0] if big else 0.0

    h0 = np.zeros((3 * n, 3 * n), dtype=complex)
    idx = np.arange(n)
    h0[n + idx, n + idx] = delta_ref
    h0[2 * n + idx, 2 * n + idx] = delta_ref - delta_k
    c = _photon_coupling(array, atom.g)
    h0[n : 2 * n, 2 * n :] = c
    h0[2 * n :, n : 2 * n] = c.conj().T

    tones: dict[float, complex] = {}
    for las, d in zip(active, big):
        nu = d - delta_ref
        if nu == 0.0:
            h0[n + idx, idx] += 0.5 * las.rabi
            h0[idx, n + idx] += 0.5 * np.conj(las.rabi)
        else:
            tones[nu] = tones.get(nu, 0j) + 0.5 * las.rabi
    nus = np.array(sorted(tones), dtype=float)
    drives = np.zeros((nus.size, 3 * n, 3 * n), dtype=complex)
    for p, nu in enumerate(nus):
        drives[p, n + idx, idx] = tones[nu]
    scales = [np.abs(delta_k).max(), np.abs(np.diag(h0)).max()]
    scales += [abs(b) for b in big] + [abs(v) for v in nus]
    return _Frame(_check_hermitian(h0), drives, nus, float(delta_ref), delta_k, float(max(scales)))


def frame_period(nus, max_denominator: int = 64, rtol: float = 1e-9) -> float | None:
    """Common period of the tones, ``None`` when static or incommensurate."""
    nus = np.abs(np.asarray(nus, dtype=float))
    nus = nus[nus > 0]
    if nus.size == 0:
        return None
    base = nus.min()
    fracs = []
    for nu in nus:
        r = nu / base
        f = Fraction(r).limit_denominator(max_denominator)
        if abs(float(f) - r) > rtol * r:
            return None
        fracs.append(f)
    num = 0
    den = 1
    for f in fracs:
        num = math.gcd(num, f.numerator)
        den = den * f.denominator // math.gcd(den, f.denominator)
    omega = base * num / den
    return 2.0 * math.pi / omega


def _to_interaction(frame: _Frame, f: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Frame amplitudes ``(n_t, 3N)`` back to interaction-picture ones."""
    n = frame.delta_k.size
    phase = np.ones((t.size, 3 * n), dtype=complex)
    phase[:, n : 2 * n] = np.exp(1j * frame.delta_ref * t)[:, None]
    phase[:, 2 * n :] = np.exp(1j * np.outer(t, frame.delta_ref - frame.delta_k))
    return f * phase


def _from_interaction(frame: _Frame, c: np.ndarray, t: float) -> np.ndarray:
    return c / _to_interaction(frame, np.ones((1, c.size), dtype=complex), np.array([t]))[0]


# ---------------------------------------------------------------------------
# integration


def _run(frame: _Frame, y0: np.ndarray, t_end: float, n_samples: int, dt: float):
    """One fixed-step pass; returns ``(times, frame amplitudes, dt used, stroboscopic)``."""
    period = frame_period(frame.nus)
    n = y0.size
    if period is None and frame.nus.size == 0:
        period = t_end / (n_samples - 1)
    if period is not None and period <= t_end:
        steps = max(1, math.ceil(period / dt - 1e-12))
        h = period / steps
        u = rk4_evolve(frame.h0, frame.drives, frame.nus, np.eye(n, dtype=complex), 0.0, h, steps)
        n_periods = max(1, math.ceil(t_end / period - 1e-9))
        marks = np.unique(np.round(np.linspace(0, n_periods, n_samples)).astype(int))
        out = np.empty((marks.size, n), dtype=complex)
        y = y0.copy()
        powers: dict[int, np.ndarray] = {}
        last = 0
        for i, m in enumerate(marks):
            gap = int(m - last)
            if gap:
                if gap not in powers:
                    powers[gap] = np.linalg.matrix_power(u, gap)
                y = powers[gap] @ y
            out[i] = y
            last = m
        return marks * period, out, h, True
    times = np.linspace(0.0, t_end, n_samples)
    gap = times[1] - times[0]
    steps = max(1, math.ceil(gap / dt - 1e-12))
    h = gap / steps
    out = np.empty((times.size, n), dtype=complex)
    y = y0.copy()
    out[0] = y
    for i in range(1, times.size):
        y = rk4_evolve(frame.h0, frame.drives, frame.nus, y, times[i - 1], h, steps)
        out[i] = y
    return times, out, h, False


def integrate_full(initial: FullState, params: IntegrationParams, system: OracleSystem) -> Trajectory:
    """Fixed-step RK4 with step halving until the convergence gate passes.

    The gate requires the final-state infidelity between successive halvings
    and the norm drift to both stay below ``params.tolerance``. The state is
    never renormalised.
    """
    if initial.n_sites != system.array.n_sites:
        raise ValueError("initial state and array differ in size")
    if np.abs(initial.e_amp).max() > 0 or np.abs(initial.p_amp).max() > 0:
        raise ValueError("initial state must lie in the b sector")
    if abs(initial.norm - 1.0) > 1e-12:
        raise ValueError("initial state is not normalised")
    frame = _frame(system)
    det_scale = float(np.abs(frame.delta_k).max())
    active = [las for las in system.lasers if las.active]
    if active:
        det = detunings(system.array, system.atom, active)
        det_scale = max(det_scale, float(np.abs(det.delta_n).max()))
    fastest = max(frame.fastest, det_scale)
    dt = params.dt if params.dt is not None else DEFAULT_STEP / fastest if fastest > 0 else params.t_end
    if dt * fastest > STEP_LIMIT:
        raise StepTooLarge(f"dt * max detuning = {dt * fastest:.3g} exceeds {STEP_LIMIT}")

    y0 = initial.vector
    prev = _run(frame, y0, params.t_end, params.n_samples, dt)
    halvings = 0
    converged = False
    change = np.inf
    drift = np.inf
    while halvings < params.max_halvings:
        dt *= 0.5
        halvings += 1
        cur = _run(frame, y0, params.t_end, params.n_samples, dt)
        a, b = prev[1][-1], cur[1][-1]
        change = abs(1.0 - abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))
        drift = float(np.abs(np.einsum("ij,ij->i", cur[1].conj(), cur[1]).real - 1.0).max())
        prev = cur
        if change < params.tolerance and drift < params.tolerance:
            converged = True
            break
    times, f, h, strobe = prev
    states = _to_interaction(frame, f, times)
    return Trajectory(times, states, h, converged, halvings, drift, float(change), strobe)


def leakage(state: FullState) -> float:
    """Population outside the b sector, ``1 - sum_j |b_j|^2``."""
    return float(1.0 - np.vdot(state.b_amp, state.b_amp).real)


def leakage_series(trajectory: Trajectory) -> np.ndarray:
    n = trajectory.n_sites
    b = trajectory.states[:, :n]
    return 1.0 - np.einsum("ij,ij->i", b.conj(), b).real


def compare_with_effective(trajectory: Trajectory, effective: EffectiveModel) -> Comparison:
    """Infidelity of the renormalised b-sector against the effective magnon evolution.

    Global phases (the Zeeman constant among them) drop out of the overlap.
    """
    n = trajectory.n_sites
    table = effective.couplings
    if table.n_sites != n:
        raise GridMismatch(f"effective model has {table.n_sites} sites, trajectory has {n}")
    t = np.asarray(trajectory.times, dtype=float)
    if t.ndim != 1 or t.size != trajectory.states.shape[0] or np.any(np.diff(t) <= 0):
        raise GridMismatch("trajectory times must be strictly increasing, one per state")
    b = trajectory.states[:, :n]
    psi_eff = evolve_many(b[0] / np.linalg.norm(b[0]), table, t)
    overlap = np.abs(np.einsum("ij,ij->i", psi_eff.conj(), b)) ** 2
    weight = np.einsum("ij,ij->i", b.conj(), b).real
    infid = np.clip(1.0 - overlap / weight, 0.0, None)
    return Comparison(t, infid, float(infid.max()))


def _sin2(t, j):
    return np.sin(j * t) ** 2


def extract_two_site_coupling(trajectory: Trajectory, source: int = 0) -> float:
    """Fit ``sin^2(J t)`` to the renormalised transfer probability on a two-site ring."""
    if trajectory.n_sites != 2:
        raise ValueError("two-site extraction needs N = 2")
    b = np.abs(trajectory.states[:, :2]) ** 2
    t = trajectory.times
    ratio = b[:, 1 - source] / b.sum(axis=1)
    above = np.nonzero(ratio >= 0.5)[0]
    if above.size == 0:
        raise ValueError("transfer probability never reaches 1/2; extend t_end")
    guess = np.pi / (4.0 * t[above[0]])
    (j,), _ = curve_fit(_sin2, t, ratio, p0=[guess])
    return float(abs(j))


def oracle_run(system: OracleSystem, t_end: float | None = None, source: int = 0, **params) -> dict:
    """Integrate from a single b excitation and summarise the comparison."""
    eff = effective_model(system.array, system.atom, system.lasers, force=True)
    j1 = abs(eff.couplings.j_of_l[1])
    if t_end is None:
        t_end = 2.0 / j1
    traj = integrate_full(FullState.site(system.array.n_sites, source), IntegrationParams(t_end, **params), system)
    cmp = compare_with_effective(traj, eff)
    return {"trajectory": traj, "comparison": cmp, "effective": eff, "leakage": leakage_series(traj)}


def verify_report(system: OracleSystem, t_end: float | None = None, source: int = 0, **params) -> dict:
    run = oracle_run(system, t_end, source, **params)
    traj = run["trajectory"]
    report = check_validity(system.array, system.atom, system.lasers)
    return {
        "params": {
            "n_sites": system.array.n_sites,
            "t_hop": system.array.t_hop,
            "omega_c": system.array.omega_c,
            "omega_e": system.atom.omega_e,
            "omega_ab": system.atom.omega_ab,
            "g": abs(system.atom.g),
            "lasers": [{"rabi": abs(las.rabi), "omega_l": las.omega_l} for las in system.lasers],
            "t_end": float(traj.times[-1]),
            "source": source,
        },
        "margins": report.as_dict(),
        "leakage_max": float(run["leakage"].max()),
        "infidelity_max": run["comparison"].max_infidelity,
        "dt_final": traj.dt_final,
        "converged": traj.converged,
    }
