"""End-to-end acceptance checks, one PASS/FAIL line per criterion."""

import time

import numpy as np
import pytest
from scipy.special import jv

from cavity_xy.couplings import (
    CavityArray,
    margin_scaled_system,
    pair_coupling_profile,
    paired_coupling_table,
    tabulated_presets,
    preset_system,
    s_kernel_closed,
    s_kernel_nn,
    s_profile_finite,
    scale_couplings,
)
from cavity_xy.dispersion import (
    ideal_linear_couplings,
    linearity_error,
    magnon_dispersion,
    nearest_neighbour_couplings,
    normalize_table,
)
from cavity_xy.dynamics import MagnonState, evolve_dense, evolve_many, revival_search, single_magnon_hamiltonian
from cavity_xy.oracle import OracleSystem, extract_two_site_coupling, oracle_run

ODD = [3, 5, 7, 9, 11]

# max |E_k - line| over ring momenta in (0.1 pi, 0.9 pi), N = 40, J(1) = 2/pi;
# pinned after checking the cosine sum against dense eigenvalues (1e-14).
LIN_NL4 = 0.005422559049384157
LIN_NN = 0.0823870031930165
LIN_IDEAL11 = 0.006967480313175067


def test_criterion_1_two_laser_ratios(verdict):
    t0 = time.perf_counter()
    ratios = paired_coupling_table(*preset_system("nL2", 40)).ratios()[ODD]
    elapsed = time.perf_counter() - t0
    printed = np.array([1 / 9, 1 / 81, 1 / 729, 1 / 6561, 1 / 59049])
    err = np.abs(ratios / printed - 1).max()
    ok = verdict("CRITERION 1", err < 5e-3 and elapsed < 1.0, f"max rel err {err:.2e}, {elapsed:.3f} s")
    assert ok


def test_criterion_2_four_laser_ratios(verdict):
    t0 = time.perf_counter()
    ratios = paired_coupling_table(*preset_system("nL4", 40)).ratios()[ODD]
    elapsed = time.perf_counter() - t0
    printed = np.array([3.0, 5.0, 8.4, 14.0, 23.2]) ** -2.0
    err = np.abs(ratios / printed - 1).max()
    ok = verdict("CRITERION 2", err < 0.015 and elapsed < 1.0, f"max rel err {err:.4f}, {elapsed:.3f} s")
    assert ok


def test_criterion_3_linearity(verdict):
    nl4 = normalize_table(paired_coupling_table(*preset_system("nL4", 40)))
    tables = {"nL4": nl4, "nn": nearest_neighbour_couplings(n_sites=40), "ideal11": ideal_linear_couplings(11, 40)}
    dev = {}
    for name, table in tables.items():
        curve = magnon_dispersion(table)
        evals = np.linalg.eigvalsh(single_magnon_hamiltonian(table))
        assert np.abs(np.sort(curve.e_of_k) - evals).max() < 1e-10
        dev[name] = linearity_error(curve).max_abs_dev
    np.testing.assert_allclose([dev["nL4"], dev["nn"], dev["ideal11"]], [LIN_NL4, LIN_NN, LIN_IDEAL11], rtol=1e-9)
    rel = abs(dev["nL4"] - dev["ideal11"]) / dev["ideal11"]
    ok = dev["nL4"] < dev["nn"] and rel <= 0.10
    detail = (
        f"nL4 {dev['nL4']:.5f}, NN {dev['nn']:.5f}, ideal l<=11 {dev['ideal11']:.5f}; "
        f"|nL4 - ideal|/ideal = {rel:.3f}, nL4 is the more linear of the two"
    )
    assert verdict("CRITERION 3", ok, detail)


def test_criterion_4_refocus(verdict):
    sizes = np.array([20, 40, 80])
    t_star = []
    peak40 = None
    for n in sizes:
        table = normalize_table(paired_coupling_table(*preset_system("nL4", int(n))))
        r = revival_search(table, 10)
        t_star.append(r.t_star)
        if n == 40:
            peak40 = r.peak_site
    t_star = np.array(t_star)
    slope, intercept = np.polyfit(sizes, t_star, 1)
    fit = slope * sizes + intercept
    r2 = 1 - np.sum((t_star - fit) ** 2) / np.sum((t_star - t_star.mean()) ** 2)
    ok = peak40 == 30 and r2 > 0.999
    detail = f"peak site {peak40}, t* = {np.round(t_star, 3).tolist()}, slope {slope:.4f}, R^2 {r2:.7f}"
    assert verdict("CRITERION 4", ok, detail)


def test_criterion_5_elimination(verdict):
    t0 = time.perf_counter()
    ladder = {}
    for m in (5, 10, 20, 40):
        run = oracle_run(OracleSystem(*margin_scaled_system(4, m)))
        assert run["trajectory"].converged and run["trajectory"].norm_drift < 1e-8
        ladder[m] = run
    infid = [ladder[m]["comparison"].max_infidelity for m in (5, 10, 20, 40)]
    monotone = all(b < a for a, b in zip(infid, infid[1:]))

    array, atom, lasers = margin_scaled_system(4, 20)
    half_atom, half_lasers = scale_couplings(atom, lasers, 0.5)
    t_end = ladder[20]["trajectory"].times[-1]
    half = oracle_run(OracleSystem(array, half_atom, half_lasers), t_end=t_end)
    ratio = ladder[20]["leakage"].mean() / half["leakage"].mean()
    quad = abs(ratio / 4 - 1) <= 0.25

    two = oracle_run(OracleSystem(*margin_scaled_system(2, 20)))
    j_fit = extract_two_site_coupling(two["trajectory"])
    j_eff = two["effective"].couplings.j_of_l[1]
    j_err = abs(j_fit / j_eff - 1)
    elapsed = time.perf_counter() - t0

    ok = quad and monotone and j_err < 0.10 and elapsed < 30
    detail = (
        f"(a) leakage ratio {ratio:.3f}; (b) max infidelity {[f'{x:.2e}' for x in infid]}; "
        f"(c) J(1) rel err {j_err:.2e}; {elapsed:.1f} s"
    )
    assert verdict("CRITERION 5", ok, detail)


def test_criterion_6_kernels(verdict):
    array = CavityArray(40)
    l = np.arange(21)
    worst = {}
    for name in ("nL2", "nL4"):
        for pair in tabulated_presets(name):
            for d in (pair.d, -pair.d):
                fin = s_profile_finite(array, d)
                closed = s_kernel_closed(1.0, d, l)
                worst[d] = np.abs(fin - closed).max() / np.abs(closed).max()
    d_bad = max(worst, key=worst.get)
    kernels_ok = worst[d_bad] <= 1e-6

    nb = s_profile_finite(array, 100.0)[:2]
    nb_err = max(abs(nb[0] * 100.0 - 1), abs(nb[1] / s_kernel_nn(100.0, 1.0, 1) - 1))
    nb_ok = nb_err < 1e-3

    even_ok = all(
        not paired_coupling_table(*preset_system(name, 40)).j_of_l[0::2].any() for name in ("nL2", "nL4")
    )
    detail = (
        f"finite vs closed worst {worst[d_bad]:.2e} at D={d_bad:.4g} (antipodal image term); "
        f"narrow band err {nb_err:.1e}; J(even)=0 {even_ok}"
    )
    assert verdict("CRITERION 6", kernels_ok and nb_ok and even_ok, detail)


def test_criterion_7_hygiene(verdict):
    rng = np.random.default_rng(2024)
    table = normalize_table(paired_coupling_table(*preset_system("nL4", 40)))
    times = rng.uniform(0, 100, 100)
    unit_err = 0.0
    dense_err = 0.0
    for t in times:
        a = rng.normal(size=40) + 1j * rng.normal(size=40)
        s = MagnonState(a / np.linalg.norm(a))
        psi = evolve_many(s, table, [t])[0]
        unit_err = max(unit_err, abs(np.vdot(psi, psi).real - 1))
        dense_err = max(dense_err, np.abs(psi - evolve_dense(s, table, t)).max())

    j1 = 2 / np.pi
    nn = nearest_neighbour_couplings(j1, 400)
    amp = evolve_many(MagnonState.site(400, 200), nn, [2 / j1])[0]
    bessel_err = max(abs(abs(amp[200 + d]) - abs(jv(d, 4.0))) for d in range(6))
    ok = unit_err < 1e-10 and dense_err < 1e-10 and bessel_err < 1e-6
    detail = f"unitarity {unit_err:.1e}, FFT vs dense {dense_err:.1e}, Bessel {bessel_err:.1e}"
    assert verdict("CRITERION 7", ok, detail)


@pytest.mark.parametrize("name", ["nL2", "nL4"])
def test_tabulated_ratios_from_bare_pairs(name):
    """Same ratios straight from the pair parameters, without realising lasers."""
    bare = pair_coupling_profile(CavityArray(40), tabulated_presets(name)).ratios()
    full = paired_coupling_table(*preset_system(name, 40)).ratios()
    np.testing.assert_allclose(bare, full, rtol=1e-10, atol=1e-14)
