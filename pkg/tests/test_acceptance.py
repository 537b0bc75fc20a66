"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the whole suite is also part of the default pytest run.
"""

import math
import time

import numpy as np
import pytest

from conftest import CENTER2, disc_field, random_indicator
from mboflow import (
    C0,
    Disc,
    ScalarField,
    Stripe,
    brute_force_step,
    constant_field,
    continuum_comparators,
    default_r_grid,
    degiorgi_step_check,
    delta_energy,
    delta_metric_sq,
    dilationlike_field,
    dissipation_density,
    energy,
    gaussian_identity_suite,
    inequality_suite,
    interpolation_budget,
    make_grid,
    make_small_grid,
    make_trig_basis,
    metric_sq,
    pair_measure,
    run,
    sample_shape,
    slope_lower,
    time_modulus,
    transport,
)
from mboflow.interpolate import solve_nodes
from mboflow.kernel import convolve_array
from mboflow.reference import disc_dissipation_rate

QP_TOL = 1e-8

_all_trajectories = []


def _record(traj):
    _all_trajectories.append(traj)
    return traj


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def disc512():
    return _record(run(disc_field(512, 0.3), 1e-3, 0.04))


@pytest.fixture(scope="module")
def midrun256():
    h = 1e-3
    traj = _record(run(disc_field(256, 0.3), h, 0.02))
    return traj.fields[-2], traj.fields[-1], h


@pytest.fixture(scope="module")
def step_records(midrun256):
    chi_prev, _, h = midrun256
    return solve_nodes(chi_prev, h, default_r_grid(h, 16, 256.0), tol=QP_TOL)


def test_criterion_01_gaussian_identities():
    t0 = time.monotonic()
    report = gaussian_identity_suite(8.0, 400)
    elapsed = time.monotonic() - t0
    ok = report.max_abs_residual < 1e-6 and elapsed < 10.0
    _report(
        "criterion 1 (Gaussian identities)",
        ok,
        f"max |residual| = {report.max_abs_residual:.2e}, runtime {elapsed:.2f}s",
    )


def test_criterion_02_exhaustive_minimizer_equivalence():
    t0 = time.monotonic()
    shapes = [(2,), (4,), (8,), (16,), (2, 2), (2, 4), (2, 8), (4, 4), (2, 2, 2), (2, 2, 4)]
    total = matches = 0
    for shape in shapes:
        grid = make_small_grid(shape)
        rng = np.random.default_rng(sum(shape))
        for h in (0.02, 0.05, 0.1):
            for _ in range(20):
                chi = ScalarField(grid, (rng.random(grid.shape) < rng.uniform(0.15, 0.85)).astype(float))
                total += 1
                matches += brute_force_step(chi, h).matches_threshold
    elapsed = time.monotonic() - t0
    ok = matches == total and elapsed < 300.0
    _report(
        "criterion 2 (exhaustive minimizer equivalence)",
        ok,
        f"{matches}/{total} cases on {len(shapes)} grids, runtime {elapsed:.1f}s",
    )


def test_criterion_03_flat_interface_energy():
    g = make_grid(2, 256)
    val = energy(sample_shape(Stripe(0.5), g), 1e-3)
    rel = abs(val - 2 * C0) / (2 * C0)
    _report(
        "criterion 3 (flat-interface energy)",
        rel <= 0.01,
        f"E = {val:.6f} vs {2 * C0:.10f}, rel err {rel:.2e}",
    )


def test_criterion_04_shrinking_disc(disc512):
    r_ref = math.sqrt(0.05)
    r_est = math.sqrt(disc512.ledger[-1].volume / math.pi)
    rel_main = abs(r_est - r_ref) / r_ref
    errs = []
    per_run_ok = True
    for n, h in ((256, 4e-3), (512, 2e-3), (1024, 1e-3)):
        t0 = time.monotonic()
        traj = _record(run(disc_field(n, 0.3), h, 0.04, keep_fields=False))
        per_run_ok &= (time.monotonic() - t0) < 120.0
        r = math.sqrt(traj.ledger[-1].volume / math.pi)
        errs.append(abs(r - r_ref) / r_ref)
    monotone = all(a > b for a, b in zip(errs, errs[1:]))
    ok = rel_main <= 0.05 and monotone and per_run_ok
    _report(
        "criterion 4 (shrinking disc)",
        ok,
        f"radius rel err {rel_main:.4f} (<= 5%), sweep errs "
        + " > ".join(f"{e:.4f}" for e in errs)
        + f" monotone={monotone}",
    )


def test_criterion_05_trajectory_ledger(disc512):
    worst_mono = math.inf
    worst_apriori = math.inf
    for traj in _all_trajectories:
        energies = [e.energy for e in traj.ledger]
        worst_mono = min(
            worst_mono, min(a - b for a, b in zip(energies, energies[1:])) if len(energies) > 1 else 0.0
        )
        worst_apriori = min(worst_apriori, energies[0] - energies[-1] - traj.dissipation_sum())
    ok = worst_mono >= -1e-12 and worst_apriori >= -1e-10
    _report(
        "criterion 5 (trajectory ledger)",
        ok,
        f"{len(_all_trajectories)} runs, worst monotonicity slack {worst_mono:.2e}, "
        f"worst a-priori slack {worst_apriori:.2e}",
    )


def test_criterion_06_descent_suite(midrun256, step_records):
    t0 = time.monotonic()
    chi_prev, chi_next, h = midrun256
    report = degiorgi_step_check(chi_prev, chi_next, h, default_r_grid(h, 16, 256.0), tol=QP_TOL)
    budget_traj = _record(run(disc_field(128, 0.3), h, 0.04))
    budget = interpolation_budget(budget_traj, default_r_grid(h, 16, 256.0), tol=QP_TOL)
    elapsed = time.monotonic() - t0
    checks = {
        "dist monotone": report.dist_monotone_worst >= -1e-12,
        "difference quotients": report.difference_quotient_worst >= -1e-9,
        "descent certificate": report.descent_slack >= -1e-6 * report.energy_prev,
        "energy bound": report.energy_bound_worst >= -1e-8,
        "budget": budget.budget_upper <= budget.initial_energy,
        "runtime": elapsed < 600.0,
    }
    _report(
        "criterion 6 (per-step descent suite)",
        all(checks.values()),
        f"descent slack {report.descent_slack:.3e} (quad gap {report.quadrature_gap:.1e}), "
        f"worst quotient slack {report.difference_quotient_worst:.3e}, "
        f"budget {budget.budget_upper:.4f} <= {budget.initial_energy:.4f}, "
        f"runtime {elapsed:.0f}s, failed={['%s' % k for k, v in checks.items() if not v]}",
    )


def test_criterion_07_first_variation_fidelity():
    h = 1e-3
    chi128 = disc_field(128, 0.3)
    u_moll = ScalarField(chi128.grid, convolve_array(chi128.values, h / 4.0))
    xi_dil = dilationlike_field(CENTER2)

    def fd_energy(s):
        up = ScalarField(u_moll.grid, np.clip(transport(u_moll, xi_dil, s).values, 0, 1))
        dn = ScalarField(u_moll.grid, np.clip(transport(u_moll, xi_dil, -s).values, 0, 1))
        return (energy(up, h) - energy(dn, h)) / (2 * s)

    de = delta_energy(u_moll, h, xi_dil)
    de_fd = (4 * fd_energy(5e-4) - fd_energy(1e-3)) / 3.0
    gap_e = abs(de - de_fd) / abs(de_fd)

    dm = delta_metric_sq(u_moll, h, xi_dil)
    s = 1e-3
    m_fd = 0.25 * (
        metric_sq(u_moll, transport(u_moll, xi_dil, s), h)
        + metric_sq(u_moll, transport(u_moll, xi_dil, -s), h)
    ) / (s * s)
    gap_m = abs(dm - m_fd) / m_fd

    chi512 = disc_field(512, 0.3)
    const = constant_field((1.0, 0.0))
    a_dil, b_dil = continuum_comparators(Disc(0.3, CENTER2), xi_dil)
    b_const = C0 * math.pi * 0.3
    trends = {"const_dm": [], "dil_de": [], "dil_dm": []}
    for hh in (4e-3, 2e-3, 1e-3):
        trends["const_dm"].append(abs(delta_metric_sq(chi512, hh, const) - b_const) / b_const)
        trends["dil_de"].append(abs(delta_energy(chi512, hh, xi_dil) - a_dil) / abs(a_dil))
        trends["dil_dm"].append(abs(delta_metric_sq(chi512, hh, xi_dil) - b_dil) / b_dil)
    monotone = all(t[0] > t[1] > t[2] for t in trends.values())
    final_ok = all(t[2] < 0.05 for t in trends.values())
    ok = gap_e < 1e-3 and gap_m < 1e-2 and monotone and final_ok
    _report(
        "criterion 7 (first-variation fidelity)",
        ok,
        f"FD gaps: energy {gap_e:.2e}, metric {gap_m:.2e}; comparator trends "
        + "; ".join(f"{k}={['%.4f' % x for x in v]}" for k, v in trends.items()),
    )


def test_criterion_08_slope_sandwich(midrun256, step_records):
    _, _, h = midrun256
    basis = make_trig_basis(2, 4)
    worst_gap = math.inf
    worst_ratio = math.inf
    for rec in step_records:
        lower = slope_lower(rec.u, h, basis).value
        worst_gap = min(worst_gap, rec.slope_upper + 1e-8 - lower)
        if rec.r < h:
            worst_ratio = min(worst_ratio, lower / rec.slope_upper)
    ok = worst_gap >= 0.0 and worst_ratio >= 0.5
    _report(
        "criterion 8 (slope sandwich)",
        ok,
        f"worst upper+tol-lower = {worst_gap:.3e}, worst lower/upper ratio {worst_ratio:.3f} (K=4)",
    )


def test_criterion_09_inequality_suite_and_modulus():
    worst = math.inf
    for n, h in ((32, 0.01), (64, 0.004)):
        grid = make_grid(2, n)
        for seed in range(100):
            u = random_indicator(grid, 1000 + seed)
            w = random_indicator(grid, 2000 + seed)
            worst = min(worst, inequality_suite(u, w, h, 4 * h).worst)
    suite_ok = worst >= -1e-10

    h = 1e-3
    horizon = 16.5 * math.sqrt(h)
    traj = _record(run(disc_field(128, 0.3), h, horizon))
    shifts = np.geomspace(h / 4, 16 * math.sqrt(h), 12)
    bound_ok = True
    worst_margin = math.inf
    for s in shifts:
        res = time_modulus(traj, float(s))
        bound_ok &= res.value <= res.bound
        worst_margin = min(worst_margin, res.bound - res.value)
    ok = suite_ok and bound_ok
    _report(
        "criterion 9 (comparison inequalities and time modulus)",
        ok,
        f"worst suite slack {worst:.2e} over 200 pairs; modulus margin {worst_margin:.3e} "
        f"over 12 shifts in [{shifts[0]:.2e}, {shifts[-1]:.2e}]",
    )


def test_criterion_10_interfacial_measures(disc512):
    chi64 = disc_field(64, 0.3)
    h64 = 4e-3
    p_plus = pair_measure(chi64, h64, lambda z: 1.0)
    p_minus = pair_measure(chi64, h64, lambda z: 1.0, swap=True)
    two_e = 2.0 * energy(chi64, h64)
    rel_sum = abs(p_plus + p_minus - two_e) / two_e

    g1 = make_grid(1, 256)
    x = (np.arange(256) + 0.5) / 256
    stripe = ScalarField(g1, (x < 0.5).astype(float))
    p_stripe = pair_measure(stripe, 1e-3, lambda z: 1.0)
    rel_stripe = abs(p_stripe - 2 * C0) / (2 * C0)

    h = 1e-3
    step = next(
        n for n, e in enumerate(disc512.ledger) if math.sqrt(e.volume / math.pi) <= 0.25
    )
    _, integral = dissipation_density(disc512.fields[step], disc512.fields[step - 1], h)
    R = math.sqrt(disc512.ledger[step].volume / math.pi)
    comparator = disc_dissipation_rate(R)
    rel_diss = abs(integral - comparator) / comparator

    ok = rel_sum < 1e-6 and rel_stripe < 0.02 and rel_diss < 0.15
    _report(
        "criterion 10 (interfacial measures)",
        ok,
        f"pair-sum rel {rel_sum:.2e}, stripe rel {rel_stripe:.4f}, "
        f"dissipation rel {rel_diss:.4f} at R={R:.3f}",
    )
