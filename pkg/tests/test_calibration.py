import numpy as np
import pytest

from proxref.calibration import (
    SweepSample,
    SweepSeries,
    fit_alpha,
    fit_full,
    simulate_sweep,
)
from proxref.errors import ConvergenceError, DataError
from proxref.sensor import SensorIntrinsics, forward_current


def make_sweep(intrinsics, alpha, distances, object_id="obj"):
    samples = tuple(
        SweepSample(d, forward_current(intrinsics, alpha, d).i_all) for d in distances
    )
    return SweepSeries(object_id=object_id, samples=samples)


class TestSweepTypes:
    def test_needs_two_samples(self):
        with pytest.raises(DataError):
            SweepSeries("x", (SweepSample(5.0, 1.0),))

    def test_strictly_increasing(self):
        with pytest.raises(DataError):
            SweepSeries("x", (SweepSample(5.0, 1.0), SweepSample(5.0, 0.9)))
        with pytest.raises(DataError):
            SweepSeries("x", (SweepSample(6.0, 1.0), SweepSample(5.0, 0.9)))

    def test_sample_validation(self):
        with pytest.raises(DataError):
            SweepSample(-1.0, 1.0)
        with pytest.raises(DataError):
            SweepSample(5.0, 0.0)
        with pytest.raises(DataError):
            SweepSample(5.0, 1.0, repeat_count=0)


class TestFitAlpha:
    def test_exact_recovery_six_points(self, intrinsics):
        sweep = make_sweep(intrinsics, 0.403, [5, 10, 15, 20, 25, 30])
        result = fit_alpha(intrinsics, sweep)
        assert result.alpha == pytest.approx(0.403, abs=1e-12)
        assert result.rms_residual <= 1e-12
        assert result.sample_count == 6
        assert not result.out_of_bounds

    def test_two_point_reconstruction(self, intrinsics):
        sweep = make_sweep(intrinsics, 0.61, [7.0, 13.0])
        g1 = (7.0 + intrinsics.d0_mm) ** (-intrinsics.n)
        expected = sweep.samples[0].current_mean / g1
        assert fit_alpha(intrinsics, sweep).alpha == pytest.approx(expected, rel=1e-12)

    def test_noisy_concentration_monte_carlo(self, intrinsics):
        # Monte-Carlo oracle: 1% multiplicative noise averaged over 200 repeats
        errors = []
        for seed in range(100):
            sweep = simulate_sweep(
                intrinsics, 0.403, noise_rel=0.01, repeats=200, seed=seed
            )
            errors.append(abs(fit_alpha(intrinsics, sweep).alpha - 0.403) / 0.403)
        assert float(np.mean(errors)) < 0.005

    def test_out_of_bounds_flagged_not_clamped(self, intrinsics):
        sweep = make_sweep(intrinsics, 1.0, [5, 10, 15])
        inflated = SweepSeries(
            "x",
            tuple(
                SweepSample(s.distance_mm, s.current_mean * 2.0)
                for s in sweep.samples
            ),
        )
        result = fit_alpha(intrinsics, inflated)
        assert result.out_of_bounds
        assert result.alpha == pytest.approx(2.0, rel=1e-12)
        with pytest.raises(DataError):
            result.reflectance()
        assert result.reflectance(clamp=True).alpha == 1.0

    def test_exact_recovery_randomized(self, rng):
        for _ in range(100):
            intr = SensorIntrinsics(rng.uniform(0, 3), rng.uniform(0.8, 3))
            alpha = rng.uniform(0.05, 1.0)
            lo = rng.uniform(1, 10)
            hi = lo + rng.uniform(5, 40)
            distances = np.linspace(lo, hi, rng.integers(3, 9))
            sweep = make_sweep(intr, alpha, distances)
            assert fit_alpha(intr, sweep).alpha == pytest.approx(alpha, rel=1e-12)

    def test_scale_equivariance(self, intrinsics):
        sweep = make_sweep(intrinsics, 0.3, [5, 10, 15, 20])
        base = fit_alpha(intrinsics, sweep).alpha
        for c in (2.0, 0.5, 4.0):
            scaled = SweepSeries(
                "x",
                tuple(
                    SweepSample(s.distance_mm, s.current_mean * c, s.repeat_count)
                    for s in sweep.samples
                ),
            )
            assert fit_alpha(intrinsics, scaled).alpha == c * base
        scaled3 = SweepSeries(
            "x",
            tuple(
                SweepSample(s.distance_mm, s.current_mean * 3.0, s.repeat_count)
                for s in sweep.samples
            ),
        )
        assert fit_alpha(intrinsics, scaled3).alpha == pytest.approx(3 * base, rel=1e-15)


class TestFitFull:
    def test_recovers_from_perturbed_initials(self, rng):
        for _ in range(25):
            truth = (
                rng.uniform(0.1, 1.0),
                rng.uniform(0.5, 3.0),
                rng.uniform(1.0, 3.0),
            )
            intr = SensorIntrinsics(truth[1], truth[2])
            sweep = make_sweep(intr, truth[0], np.linspace(5, 30, 12))
            initial = tuple(t * rng.uniform(0.8, 1.2) for t in truth)
            result = fit_full(sweep, initial)
            assert result.converged
            assert result.alpha == pytest.approx(truth[0], rel=1e-6)
            assert result.d0_mm == pytest.approx(truth[1], rel=1e-6)
            assert result.n == pytest.approx(truth[2], rel=1e-6)

    def test_initial_at_truth_converges_immediately(self, intrinsics):
        sweep = make_sweep(intrinsics, 0.5, np.linspace(5, 30, 6))
        result = fit_full(sweep, (0.5, intrinsics.d0_mm, intrinsics.n))
        assert result.converged
        assert result.iterations <= 1
        assert result.rms_residual <= 1e-12

    def test_needs_four_samples(self, intrinsics):
        sweep = make_sweep(intrinsics, 0.5, [5, 10, 15])
        with pytest.raises(DataError):
            fit_full(sweep, (0.5, 1.0, 2.0))

    def test_contradictory_monotonicity_flagged(self):
        # currents increasing with distance: no valid power law fits
        samples = tuple(SweepSample(d, 0.01 * d) for d in [5, 10, 15, 20, 25, 30])
        sweep = SweepSeries("bad", samples)
        try:
            result = fit_full(sweep, (0.5, 1.0, 2.0))
        except ConvergenceError as exc:
            assert exc.last_result is not None
            return
        fitted = np.array(
            [result.alpha * (d + result.d0_mm) ** (-result.n) for d in sweep.distances]
        )
        rel = result.rms_residual / float(np.mean(sweep.currents))
        assert rel > 0.1 or np.any(fitted <= 0)

    def test_monotone_cost_over_accepted_steps(self, intrinsics, rng):
        for seed in range(5):
            sweep = simulate_sweep(
                intrinsics, 0.6, steps=12, noise_rel=0.05, repeats=5, seed=seed
            )
            result = fit_full(sweep, (0.4, 1.5, 1.5))
            costs = np.array(result.cost_history)
            assert np.all(np.diff(costs) <= 0)


class TestSimulateSweep:
    def test_noiseless_equals_forward_exactly(self, intrinsics):
        sweep = simulate_sweep(intrinsics, 0.42, noise_rel=0.0, seed=0)
        for sample in sweep.samples:
            expected = forward_current(intrinsics, 0.42, sample.distance_mm).i_all
            assert sample.current_mean == expected

    def test_default_grid(self, intrinsics):
        sweep = simulate_sweep(intrinsics, 0.5, seed=0)
        assert list(sweep.distances) == [5, 10, 15, 20, 25, 30]

    def test_deterministic_for_fixed_seed(self, intrinsics):
        a = simulate_sweep(intrinsics, 0.5, noise_rel=0.02, repeats=200, seed=99)
        b = simulate_sweep(intrinsics, 0.5, noise_rel=0.02, repeats=200, seed=99)
        assert a == b

    def test_parameter_validation(self, intrinsics):
        with pytest.raises(DataError):
            simulate_sweep(intrinsics, 0.5, steps=1)
        with pytest.raises(DataError):
            simulate_sweep(intrinsics, 0.5, noise_rel=-0.1)
        with pytest.raises(DataError):
            simulate_sweep(intrinsics, 0.5, repeats=0)
        with pytest.raises(DataError):
            simulate_sweep(intrinsics, 0.5, d_min_mm=30, d_max_mm=5)

    def test_variance_shrinks_with_repeats(self, intrinsics):
        spreads = []
        for repeats in (1, 10, 200):
            alphas = [
                fit_alpha(
                    intrinsics,
                    simulate_sweep(
                        intrinsics, 0.5, noise_rel=0.05, repeats=repeats, seed=seed
                    ),
                ).alpha
                for seed in range(40)
            ]
            spreads.append(float(np.var(alphas)))
        assert spreads[0] > spreads[1] > spreads[2]
