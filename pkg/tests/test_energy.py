import math

import numpy as np
import pytest

from conftest import disc_field, random_field, random_indicator
from mboflow import (
    C0,
    Disc,
    ScalarField,
    Stripe,
    dissipation_step,
    energy,
    inequality_suite,
    make_grid,
    metric,
    metric_sq,
    perimeter_estimate,
    run,
    sample_shape,
    time_modulus,
)
from mboflow.kernel import convolve_array, _multiplier_array


class TestEnergy:
    def test_trivial_configurations(self):
        g = make_grid(2, 32)
        assert energy(ScalarField(g, np.zeros(g.shape)), 0.01) == 0.0
        assert abs(energy(ScalarField(g, np.ones(g.shape)), 0.01)) < 1e-14

    def test_half_constant(self):
        g = make_grid(2, 64)
        val = energy(ScalarField(g, np.full(g.shape, 0.5)), 1e-2)
        assert abs(val - 0.25 / math.sqrt(1e-2)) < 1e-13

    def test_flat_interface_value(self):
        g = make_grid(2, 256)
        stripe = sample_shape(Stripe(0.5), g)
        val = energy(stripe, 1e-3)
        assert abs(val - 2 * C0) / (2 * C0) < 0.01

    def test_symmetric_under_complement(self):
        g = make_grid(2, 32)
        u = random_field(g, 1)
        flipped = ScalarField(g, 1.0 - u.values)
        assert abs(energy(u, 0.004) - energy(flipped, 0.004)) < 1e-13

    def test_rejects_out_of_range(self):
        g = make_grid(1, 16)
        with pytest.raises(ValueError):
            energy(ScalarField(g, np.full(16, 1.5)), 0.01)

    def test_bounded_by_raster_variation(self):
        # E_h(chi) <= c0 * total variation of the raster, within 2%
        g = make_grid(2, 256)
        h = 1e-3
        for chi in (sample_shape(Stripe(0.5), g), disc_field(256, 0.3)):
            v = chi.values
            # jump count per axis, times the face area dx^(d-1)
            tv = sum(float(np.abs(v - np.roll(v, 1, axis=ax)).sum()) for ax in range(2)) / 256
            assert energy(chi, h) <= C0 * tv * 1.02


class TestMetric:
    def test_zero_iff_equal(self):
        g = make_grid(2, 32)
        u = random_field(g, 2)
        assert metric(u, u, 0.01) == 0.0
        w = ScalarField(g, u.values + 1e-3)
        assert metric(u, w, 0.01) > 0.0

    def test_symmetry(self):
        g = make_grid(2, 32)
        u, w = random_field(g, 3), random_field(g, 4)
        assert abs(metric(u, w, 0.02) - metric(w, u, 0.02)) < 1e-15

    def test_spectral_matches_real_space(self):
        # oracle: convolve with G_{h/2} in real space, then integrate the square
        g = make_grid(2, 64)
        h = 3e-3
        for seed in range(5):
            u, w = random_field(g, 10 + seed), random_field(g, 20 + seed)
            delta = u.values - w.values
            smooth = convolve_array(delta, h / 2.0)
            oracle = 2.0 * math.sqrt(h) * float((smooth * smooth).mean())
            spectral = metric_sq(u, w, h)
            assert abs(spectral - oracle) / oracle < 1e-10

    def test_triangle_inequality(self):
        g = make_grid(2, 32)
        for seed in range(10):
            u = random_field(g, 3 * seed)
            v = random_field(g, 3 * seed + 1)
            w = random_field(g, 3 * seed + 2)
            assert metric(u, w, 0.01) <= metric(u, v, 0.01) + metric(v, w, 0.01) + 1e-12

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            metric(random_field(make_grid(1, 16), 0), random_field(make_grid(1, 32), 0), 0.01)


class TestDissipation:
    def test_identical_steps(self):
        chi = disc_field(64, 0.3)
        assert dissipation_step(chi, chi, 0.01) == 0.0

    def test_single_cell_closed_form(self):
        # a one-cell flip has |F|^2 = dV^2 at every frequency
        g = make_grid(2, 64)
        h = 1e-2
        a = np.zeros(g.shape)
        b = a.copy()
        b[13, 27] = 1.0
        expected = (
            (1.0 / (2 * h * h))
            * 2.0
            * math.sqrt(h)
            * float(_multiplier_array(g.shape, h).sum())
            / g.cell_count**2
        )
        got = dissipation_step(ScalarField(g, b), ScalarField(g, a), h)
        assert abs(got - expected) / expected < 1e-12

    def test_matches_real_space_path(self):
        g = make_grid(2, 64)
        h = 2e-3
        chi = random_indicator(g, 5)
        chi2 = random_indicator(g, 6)
        delta = chi.values - chi2.values
        smooth = convolve_array(delta, h / 2.0)
        oracle = float((smooth * smooth).mean()) / (h * math.sqrt(h))
        assert abs(dissipation_step(chi, chi2, h) - oracle) / oracle < 1e-10


class TestInequalitySuite:
    def test_pointwise_overlap_arithmetic(self):
        g = make_grid(1, 16)
        u = ScalarField(g, np.full(16, 0.3))
        w = ScalarField(g, np.full(16, 0.8))
        report = inequality_suite(u, w, 0.01, 0.04)
        assert abs(report.slack("pointwise_overlap") - 0.12) < 1e-14
        assert report.skipped == ("l1_vs_metric",)

    def test_coarser_energy_on_random_indicator(self):
        g = make_grid(2, 32)
        chi = random_indicator(g, 7)
        report = inequality_suite(chi, random_indicator(g, 8), 0.01, 0.04)
        assert report.slack("coarser_energy") >= -1e-10

    def test_two_discs(self):
        g = make_grid(2, 64)
        a = sample_shape(Disc(0.2), g)
        b = sample_shape(Disc(0.25), g)
        report = inequality_suite(a, b, 4e-3, 1.6e-2)
        assert report.slack("l1_vs_metric") >= -1e-10
        assert report.all_ok()

    def test_all_slacks_on_random_pairs(self):
        for n, h in ((32, 0.01), (64, 0.004)):
            g = make_grid(2, n)
            for seed in range(20):
                u = random_indicator(g, 100 + seed)
                w = random_indicator(g, 200 + seed)
                report = inequality_suite(u, w, h, 4 * h)
                assert report.all_ok(-1e-10), (n, seed, report.worst)

    def test_named_precondition_errors(self):
        g = make_grid(2, 32)
        chi = random_indicator(g, 1)
        with pytest.raises(ValueError, match="perfect square"):
            inequality_suite(chi, chi, 0.01, 0.03)
        with pytest.raises(ValueError, match="h0 >= h"):
            inequality_suite(chi, chi, 0.01, 0.005)


class TestTimeModulus:
    def test_zero_shift(self):
        traj = run(disc_field(64, 0.3), 4e-3, 0.02)
        res = time_modulus(traj, 0.0)
        assert res.value == 0.0

    def test_stationary_stripe(self):
        g = make_grid(2, 64)
        traj = run(sample_shape(Stripe(0.5), g), 4e-3, 0.02)
        for s in (0.004, 0.01, 0.02):
            assert time_modulus(traj, s).value == 0.0

    def test_shrinking_disc_bound(self):
        h = 1e-3
        traj = run(disc_field(128, 0.3), h, 0.04)
        for s in np.geomspace(h / 4, 0.04, 8):
            res = time_modulus(traj, float(s))
            assert res.value <= res.bound

    def test_single_step_shift_scale(self):
        h = 1e-3
        traj = run(disc_field(128, 0.3), h, 0.04)
        res = time_modulus(traj, h)
        assert res.value <= res.c0_const * math.sqrt(h)

    def test_out_of_range(self):
        traj = run(disc_field(64, 0.3), 4e-3, 0.02)
        with pytest.raises(ValueError):
            time_modulus(traj, 0.03)


def test_perimeter_estimate_symmetry():
    g = make_grid(2, 128)
    chi = disc_field(128, 0.3)
    flipped = ScalarField(g, 1.0 - chi.values)
    h = 2e-3
    assert abs(perimeter_estimate(chi, h) - perimeter_estimate(flipped, h)) < 1e-12
    assert perimeter_estimate(ScalarField(g, np.zeros(g.shape)), h) == 0.0
