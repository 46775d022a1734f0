"""Photon-mediated XY couplings on a ring of coupled cavities.

Each cavity holds one Lambda atom (levels a, b, e). The cavity mode couples
a <-> e with strength ``g`` and ``n_L`` lasers drive b <-> e. Eliminating the
excited level and then the photons leaves an XY model on the b/a pseudo-spins
whose coupling between sites at ring distance ``l`` is

    J(l) = sum_n |g Omega_n / (2 Delta_n)|**2 * S_n(l)

with the photon-exchange kernel ``S_n`` of laser ``n``. All frequencies are
expressed in units of the photon hopping ``t_hop`` by convention (``t_hop = 1``).

Only the moduli of ``g`` and ``Omega_n`` enter the couplings; their phases are
accepted and ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BandResonance,
    DegenerateLasers,
    PairingViolation,
    UnknownPreset,
    ValidityFailure,
    ZeroDetuning,
)

RESONANCE_GUARD = 1e-6
MARGIN_CAP = 1e12
DEFAULT_THRESHOLD = 10.0


@dataclass(frozen=True)
class CavityArray:
    """Periodic ring of ``n_sites`` cavities with photon hopping ``t_hop``."""

    n_sites: int
    t_hop: float = 1.0
    omega_c: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2 or self.n_sites % 2:
            raise ValueError(f"n_sites must be an even integer >= 2, got {self.n_sites!r}")
        if not np.isfinite(self.t_hop) or not np.isfinite(self.omega_c):
            raise ValueError("t_hop and omega_c must be finite")

    @property
    def momenta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_sites) / self.n_sites

    def distance(self, i: int, j: int) -> int:
        return ring_distance(i, j, self.n_sites)


@dataclass(frozen=True)
class AtomSpec:
    omega_e: float
    omega_ab: float
    g: complex

    def __post_init__(self):
        if not (self.omega_e > self.omega_ab >= 0):
            raise ValueError("atom levels must satisfy omega_e > omega_ab >= 0")


@dataclass(frozen=True)
class DriveLaser:
    rabi: complex
    omega_l: float

    @property
    def active(self) -> bool:
        return abs(self.rabi) > 0


@dataclass(frozen=True)
class LaserPair:
    """One mirrored laser pair: photon detunings ``-d`` and ``+d``, both with ``|Omega/Delta| = G``."""

    d: float
    G: float


@dataclass(frozen=True, eq=False)
class DetuningSet:
    delta_k: np.ndarray   # (N,)
    delta_n: np.ndarray   # (n_L,)
    gamma_nk: np.ndarray  # (N, n_L), gamma_nk[k, n] = delta_k - Delta_n
    omega_nm: np.ndarray  # (n_L, n_L), omega_n - omega_m
    d_n: np.ndarray       # (n_L,)


@dataclass(frozen=True)
class ExchangeKernel:
    d_n: float
    xi: float
    sigma: float
    prefactor: float
    decay: float  # exp(-1/xi)


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """Couplings ``J(l)`` for ring distances ``l = 0 .. n_sites/2``.

    ``n_sites`` may be ``None`` for a table that is not attached to a ring
    (e.g. a truncated Fourier target); then ``l`` runs over ``0 .. l_max`` and
    no antipodal term exists.
    """

    n_sites: int | None
    j_of_l: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j_of_l, dtype=float)
        if j.ndim != 1 or j.size < 1:
            raise ValueError("j_of_l must be a non-empty 1-d array")
        if not np.all(np.isfinite(j)):
            raise ValueError("couplings must be finite")
        if self.n_sites is not None and j.size != self.n_sites // 2 + 1:
            raise ValueError(f"a ring of {self.n_sites} sites needs {self.n_sites // 2 + 1} entries")
        object.__setattr__(self, "j_of_l", j)

    @property
    def l_max(self) -> int:
        return self.j_of_l.size - 1

    @property
    def distances(self) -> np.ndarray:
        return np.arange(self.j_of_l.size)

    def coupling(self, i: int, j: int) -> float:
        if self.n_sites is None:
            d = abs(i - j)
            return float(self.j_of_l[d]) if d <= self.l_max else 0.0
        return float(self.j_of_l[ring_distance(i, j, self.n_sites)])

    def ratios(self) -> np.ndarray:
        """``J(l)/J(1)``."""
        if self.l_max < 1 or self.j_of_l[1] == 0:
            raise ZeroDivisionError("J(1) vanishes")
        return self.j_of_l / self.j_of_l[1]

    def scaled(self, factor: float) -> CouplingTable:
        return CouplingTable(self.n_sites, self.j_of_l * factor)

    def on_ring(self, n_sites: int) -> CouplingTable:
        """Embed a free table in a ring, zero-padding distances beyond ``l_max``."""
        if self.n_sites == n_sites:
            return self
        if self.l_max > n_sites // 2:
            raise ValueError(f"table reaches l={self.l_max}, beyond the antipode of a {n_sites}-ring")
        j = np.zeros(n_sites // 2 + 1)
        j[: self.j_of_l.size] = self.j_of_l
        return CouplingTable(n_sites, j)


@dataclass(frozen=True)
class EffectiveModel:
    couplings: CouplingTable
    zeeman: float
    b_shift: float


@dataclass(frozen=True)
class ValidityReport:
    margins: dict
    worst_margin: float
    tightest: str
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "margins": dict(self.margins),
            "worst_margin": self.worst_margin,
            "tightest": self.tightest,
            "threshold": self.threshold,
            "pass": self.passed,
        }


def ring_distance(i: int, j: int, n_sites: int) -> int:
    d = abs(int(i) - int(j)) % n_sites
    return min(d, n_sites - d)


def photon_band(array: CavityArray) -> list[tuple[float, float]]:
    """Cavity modes ``(k, omega_k)`` with ``omega_k = omega_c - 2 t_hop cos k``."""
    k = array.momenta
    w = array.omega_c - 2.0 * array.t_hop * np.cos(k)
    return list(zip(k.tolist(), w.tolist()))


def photon_detuning(array: CavityArray, atom: AtomSpec, laser: DriveLaser) -> float:
    """``D_n = omega_c - omega_ab - omega_n``."""
    return array.omega_c - atom.omega_ab - laser.omega_l


def detunings(array: CavityArray, atom: AtomSpec, lasers) -> DetuningSet:
    lasers = list(lasers)
    if not lasers:
        raise ValueError("at least one laser is required")
    k = array.momenta
    w = np.array([las.omega_l for las in lasers], dtype=float)
    delta_k = atom.omega_e - array.omega_c + 2.0 * array.t_hop * np.cos(k)
    delta_n = atom.omega_e - atom.omega_ab - w
    return DetuningSet(
        delta_k=delta_k,
        delta_n=delta_n,
        gamma_nk=delta_k[:, None] - delta_n[None, :],
        omega_nm=w[:, None] - w[None, :],
        d_n=array.omega_c - atom.omega_ab - w,
    )


def _margin(lhs: float, rhs: float) -> float:
    if rhs == 0:
        return MARGIN_CAP
    if not np.isfinite(rhs):
        return 0.0
    return float(min(lhs / rhs, MARGIN_CAP))


def check_validity(array: CavityArray, atom: AtomSpec, lasers, threshold: float = DEFAULT_THRESHOLD) -> ValidityReport:
    """Margins of the two families of strong inequalities behind the elimination.

    Each margin is ``min|LHS| / max|RHS|`` for one (left family, right family)
    combination, evaluated over every ring momentum and laser index.
    """
    lasers = list(lasers)
    det = detunings(array, atom, lasers)
    n_l = len(lasers)
    off = ~np.eye(n_l, dtype=bool)
    if n_l > 1 and np.any(det.omega_nm[off] == 0):
        raise DegenerateLasers("two lasers share the same frequency (omega_nm = 0)")

    g = abs(atom.g)
    rabi = np.abs(np.array([las.rabi for las in lasers], dtype=complex))
    big_delta = np.abs(det.delta_n)
    gamma = det.gamma_nk
    omega = det.omega_nm
    with np.errstate(divide="ignore", invalid="ignore"):
        raman = np.where(rabi > 0, g * rabi / big_delta, 0.0)
        stark = np.where(rabi > 0, rabi**2 / big_delta, 0.0)

    lhs9 = {
        "|delta_k|": np.abs(det.delta_k).min(),
        "|Delta_n|": big_delta.min(),
    }
    rhs9 = {
        "|g|": g,
        "|Omega_m|": rabi.max(),
        "|Gamma_m^q|": np.abs(gamma).max(),
        "|omega_lm|": np.abs(omega).max(),
    }
    # gamma[k, n] - omega[l, m] over all k, n, l, m
    cross = np.abs(gamma[:, :, None, None] - omega[None, None, :, :]).min()
    lhs10 = {
        "|Gamma_n^k|": np.abs(gamma).min(),
        "|Gamma_n^k - omega_lm|": cross,
    }
    if n_l > 1:
        lhs10["|omega_nm|"] = np.abs(omega[off]).min()
    rhs10 = {
        "|g Omega_p/Delta_p|": raman.max(),
        "|Omega_p^2/Delta_p|": stark.max(),
    }

    margins = {}
    for tag, lhs, rhs in (("(9)", lhs9, rhs9), ("(10)", lhs10, rhs10)):
        for lname, lval in lhs.items():
            for rname, rval in rhs.items():
                margins[f"{tag} {lname} >> {rname}"] = _margin(float(lval), float(rval))
    tightest = min(margins, key=margins.get)
    worst = margins[tightest]
    return ValidityReport(margins, worst, tightest, float(threshold), worst >= threshold)


def _check_band(t_hop: float, d_n: float):
    if abs(d_n) <= 2.0 * abs(t_hop) * (1.0 + RESONANCE_GUARD):
        raise BandResonance(
            f"BandResonance: photon detuning D={d_n:.6g} lies within the band |D| <= 2|T| = {2 * abs(t_hop):.6g}"
        )


def s_kernel_finite(array: CavityArray, d_n: float, i: int, j: int) -> float:
    """Exact ring sum ``(1/N) sum_k exp(ik(i-j)) / (D - 2T cos k)``."""
    _check_band(array.t_hop, d_n)
    k = array.momenta
    terms = np.exp(1j * k * (i - j)) / (d_n - 2.0 * array.t_hop * np.cos(k))
    val = terms.sum() / array.n_sites
    if abs(val.imag) >= 1e-12:
        raise ArithmeticError(f"kernel sum has imaginary part {val.imag:.3e}")
    return float(val.real)


def s_profile_finite(array: CavityArray, d_n: float, distances=None) -> np.ndarray:
    """Vectorised finite-ring kernel for all ring distances ``0 .. N/2``."""
    _check_band(array.t_hop, d_n)
    if distances is None:
        distances = np.arange(array.n_sites // 2 + 1)
    k = array.momenta
    inv = 1.0 / (d_n - 2.0 * array.t_hop * np.cos(k))
    return np.cos(np.outer(distances, k)) @ inv / array.n_sites


def exchange_kernel(t_hop: float, d_n: float) -> ExchangeKernel:
    _check_band(t_hop, d_n)
    x = abs(d_n / (2.0 * t_hop)) if t_hop != 0 else np.inf
    # |x| - sqrt(x^2 - 1) written without cancellation
    decay = 0.0 if np.isinf(x) else 1.0 / (x + np.sqrt(x * x - 1.0))
    xi = -1.0 / np.log(decay) if decay > 0 else 0.0
    sigma = float(np.sign(d_n) * (np.sign(t_hop) if t_hop != 0 else 1.0))
    prefactor = 1.0 / np.sqrt(d_n * d_n - 4.0 * t_hop * t_hop)
    return ExchangeKernel(float(d_n), float(xi), sigma, float(prefactor), float(decay))


def s_kernel_closed(t_hop: float, d_n: float, distance) -> np.ndarray | float:
    """Infinite-ring kernel ``sign * exp(-l/xi) / sqrt(D^2 - 4T^2)``.

    For ``t_hop > 0`` the sign is ``sign(D)**(l+1)``. In general it is
    ``sign(D) * sign(D*T)**l``, which is what the ring sum converges to.
    """
    kern = exchange_kernel(t_hop, d_n)
    l = np.abs(np.asarray(distance))
    out = np.sign(d_n) * kern.sigma**l * kern.decay**l * kern.prefactor
    return float(out) if np.ndim(out) == 0 else out


def s_kernel_nn(d_n: float, t_hop: float, distance: int) -> float:
    """Narrow-band truncation: ``1/D`` on site, ``T/D^2`` at distance one, zero beyond."""
    l = abs(int(distance))
    if l == 0:
        return 1.0 / d_n
    if l == 1:
        return t_hop / d_n**2
    return 0.0


def _kernel_profile(array: CavityArray, d_n: float, kernel_mode: str) -> np.ndarray:
    if kernel_mode == "finite":
        return s_profile_finite(array, d_n)
    if kernel_mode == "closed":
        return np.asarray(s_kernel_closed(array.t_hop, d_n, np.arange(array.n_sites // 2 + 1)), dtype=float)
    raise ValueError(f"unknown kernel_mode {kernel_mode!r}")


def _screen_lasers(array, atom, lasers):
    for las in lasers:
        if not las.active:
            continue
        _check_band(array.t_hop, photon_detuning(array, atom, las))
        if atom.omega_e - atom.omega_ab - las.omega_l == 0:
            raise ZeroDetuning(f"laser at omega={las.omega_l} is resonant with b <-> e")


def _require_valid(array, atom, lasers, threshold):
    report = check_validity(array, atom, lasers, threshold)
    if not report.passed:
        raise ValidityFailure(
            f"ValidityFailure: worst margin {report.worst_margin:.4g} < {threshold:g} ({report.tightest})",
            report,
        )
    return report


def coupling_table(
    array: CavityArray,
    atom: AtomSpec,
    lasers,
    kernel_mode: str = "finite",
    threshold: float = DEFAULT_THRESHOLD,
    force: bool = False,
) -> CouplingTable:
    """``J(l) = sum_n |g Omega_n/(2 Delta_n)|^2 S_n(l)`` for ``l = 0 .. N/2``."""
    lasers = list(lasers)
    j = np.zeros(array.n_sites // 2 + 1)
    if not lasers:
        return CouplingTable(array.n_sites, j)
    _screen_lasers(array, atom, lasers)
    if not force:
        _require_valid(array, atom, lasers, threshold)
    g = abs(atom.g)
    for las in lasers:
        if not las.active:
            continue
        big_delta = atom.omega_e - atom.omega_ab - las.omega_l
        weight = abs(g * las.rabi / (2.0 * big_delta)) ** 2
        j += weight * _kernel_profile(array, photon_detuning(array, atom, las), kernel_mode)
    return CouplingTable(array.n_sites, j)


def pair_coupling_profile(array: CavityArray, pairs, g: complex = 1.0, kernel_mode: str = "finite") -> CouplingTable:
    """Couplings of mirrored pairs: ``|g|^2/4 sum_m G_m^2 |S_m(l)| (1 - (-1)^l)``."""
    l = np.arange(array.n_sites // 2 + 1)
    parity = 1.0 - (-1.0) ** l
    j = np.zeros(l.size)
    for pair in pairs:
        j += pair.G**2 * np.abs(_kernel_profile(array, pair.d, kernel_mode))
    return CouplingTable(array.n_sites, abs(g) ** 2 / 4.0 * j * parity)


def pairs_from_lasers(array: CavityArray, atom: AtomSpec, lasers, rtol: float = 1e-9) -> list[LaserPair]:
    lasers = list(lasers)
    if len(lasers) % 2:
        raise PairingViolation("an even number of lasers is required")
    pairs = []
    for a, b in zip(lasers[0::2], lasers[1::2]):
        d_a = photon_detuning(array, atom, a)
        d_b = photon_detuning(array, atom, b)
        delta_a = atom.omega_e - atom.omega_ab - a.omega_l
        delta_b = atom.omega_e - atom.omega_ab - b.omega_l
        if delta_a == 0 or delta_b == 0:
            raise ZeroDetuning("paired laser resonant with b <-> e")
        g_a, g_b = abs(a.rabi / delta_a), abs(b.rabi / delta_b)
        if abs(d_a + d_b) > rtol * max(abs(d_a), abs(d_b)):
            raise PairingViolation(f"photon detunings {d_a:.6g}, {d_b:.6g} are not mirrored")
        if abs(g_a - g_b) > rtol * max(g_a, g_b):
            raise PairingViolation(f"|Omega/Delta| differs within a pair: {g_a:.6g} vs {g_b:.6g}")
        pairs.append(LaserPair(d_b, g_b))
    return pairs


def paired_coupling_table(
    array: CavityArray,
    atom: AtomSpec,
    lasers,
    kernel_mode: str = "finite",
    threshold: float = DEFAULT_THRESHOLD,
    force: bool = False,
) -> CouplingTable:
    """Couplings for lasers given as consecutive mirrored pairs.

    Even distances vanish identically. The result is cross-checked against
    :func:`coupling_table` on the same (flattened) laser list.
    """
    lasers = list(lasers)
    pairs = pairs_from_lasers(array, atom, lasers)
    _screen_lasers(array, atom, lasers)
    if not force:
        _require_valid(array, atom, lasers, threshold)
    table = pair_coupling_profile(array, pairs, atom.g, kernel_mode)
    direct = coupling_table(array, atom, lasers, kernel_mode, force=True)
    scale = np.abs(table.j_of_l).max()
    if scale > 0 and np.abs(direct.j_of_l - table.j_of_l).max() > 1e-10 * scale:
        raise RuntimeError("paired and direct coupling tables disagree")
    return table


def zeeman_shift(atom: AtomSpec, lasers) -> float:
    """Uniform light shift ``B = sum_n |Omega_n|^2 / (8 Delta_n)``."""
    total = 0.0
    for las in lasers:
        big_delta = atom.omega_e - atom.omega_ab - las.omega_l
        if big_delta == 0:
            raise ZeroDetuning(f"laser at omega={las.omega_l} is resonant with b <-> e")
        total += abs(las.rabi) ** 2 / (8.0 * big_delta)
    return float(total)


def effective_model(array: CavityArray, atom: AtomSpec, lasers, **kwargs) -> EffectiveModel:
    lasers = list(lasers)
    table = coupling_table(array, atom, lasers, **kwargs)
    b = zeeman_shift(atom, lasers)
    return EffectiveModel(table, atom.omega_ab / 2.0 - b, b)


# ---------------------------------------------------------------------------
# laser presets

PRESET_G_MAX = 0.05
PRESET_NAMES = ("nL2", "nL4")

# Default ring/atom used to realise presets as concrete lasers. Frequencies in
# units of t_hop; omega_e - omega_c = 1000 keeps Delta_n far above the band.
DEFAULT_OMEGA_C = 5000.0
DEFAULT_OMEGA_AB = 500.0
DEFAULT_OMEGA_E = 6000.0
DEFAULT_G = 1.0
# |Omega/Delta| realised by preset_system; 0.05 violates the (10) inequalities
# at Delta ~ 1e3 (Omega^2/Delta = 2.5 against a smallest gap of 4/15).
DEFAULT_SYSTEM_G_MAX = 0.002


def tabulated_presets(name: str) -> list[LaserPair]:
    """Optimal pair parameters for two- and four-laser drives.

    ``nL2``: one pair at ``D = +-10/3``. ``nL4``: pairs at ``D = +-20`` and
    ``D = +-34/15`` with ``G_20 / G_34/15 = 6 sqrt(14)``. The overall G scale is
    fixed by ``max G = 0.05``.
    """
    if name == "nL2":
        return [LaserPair(10.0 / 3.0, PRESET_G_MAX)]
    if name == "nL4":
        ratio = 6.0 * np.sqrt(14.0)
        return [LaserPair(20.0, PRESET_G_MAX), LaserPair(34.0 / 15.0, PRESET_G_MAX / ratio)]
    raise UnknownPreset(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


def lasers_from_pairs(array: CavityArray, atom: AtomSpec, pairs, g_max: float | None = None) -> list[DriveLaser]:
    """Concrete lasers ``[-d_1, +d_1, -d_2, +d_2, ...]`` realising mirrored pairs.

    ``g_max`` rescales all ``G`` so the largest equals ``g_max``.
    """
    pairs = list(pairs)
    scale = 1.0
    if g_max is not None:
        scale = g_max / max(p.G for p in pairs)
    lasers = []
    for p in pairs:
        for d in (-p.d, p.d):
            omega_l = array.omega_c - atom.omega_ab - d
            big_delta = atom.omega_e - atom.omega_ab - omega_l
            lasers.append(DriveLaser(complex(p.G * scale * abs(big_delta)), float(omega_l)))
    return lasers


def preset_system(name: str, n_sites: int = 40, g_max: float = DEFAULT_SYSTEM_G_MAX):
    """``(array, atom, lasers)`` realising a preset with comfortable validity margins."""
    array = CavityArray(n_sites, 1.0, DEFAULT_OMEGA_C)
    atom = AtomSpec(DEFAULT_OMEGA_E, DEFAULT_OMEGA_AB, DEFAULT_G)
    return array, atom, lasers_from_pairs(array, atom, tabulated_presets(name), g_max=g_max)


def margin_scaled_system(
    n_sites: int,
    margin: float,
    preset: str = "nL2",
    g_over_rabi: float = 0.5,
    omega_c: float = 100.0,
    omega_ab: float = 10.0,
):
    """Preset drive rescaled so that the worst validity margin equals ``margin``.

    ``Delta`` is set by the (9) inequalities against the band and the laser
    spread; the common coupling scale (``g`` and every ``Omega``) is then fixed
    by the tightest (10) inequality. ``g_over_rabi`` is ``g / max|Omega|``.
    """
    pairs = tabulated_presets(preset)
    d_all = np.array([s * p.d for p in pairs for s in (-1, 1)])
    spread = max(np.abs(d_all).max() + 2.0, np.ptp(d_all))
    headroom = 1.0 + 1e-9
    delta_min = margin * spread * headroom
    detuning = delta_min - d_all.min()  # omega_e - omega_c
    array = CavityArray(n_sites, 1.0, omega_c)
    atom = AtomSpec(omega_c + detuning, omega_ab, 1.0)
    lasers = lasers_from_pairs(array, atom, pairs, g_max=1.0)
    rabi_max = max(abs(las.rabi) for las in lasers)
    atom = AtomSpec(atom.omega_e, omega_ab, g_over_rabi * rabi_max)
    report = check_validity(array, atom, lasers, margin)
    ten = min(v for k, v in report.margins.items() if k.startswith("(10)"))
    s = np.sqrt(ten / (margin * headroom))
    atom = AtomSpec(atom.omega_e, omega_ab, atom.g * s)
    lasers = [DriveLaser(las.rabi * s, las.omega_l) for las in lasers]
    return array, atom, lasers


def scale_couplings(atom: AtomSpec, lasers, factor: float):
    """Multiply ``g`` and every Rabi frequency by ``factor``."""
    return (
        AtomSpec(atom.omega_e, atom.omega_ab, atom.g * factor),
        [DriveLaser(las.rabi * factor, las.omega_l) for las in lasers],
    )
