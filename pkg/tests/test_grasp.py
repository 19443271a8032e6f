import numpy as np
import pytest
from scipy.optimize import brentq

from proxref.data import Category, Manifest, ObjectRecord, Split
from proxref.errors import DataError
from proxref.estimators import FixedEstimator, GroundTruthEstimator
from proxref.grasp import (
    GraspOutcome,
    GraspScene,
    GraspTrialResult,
    SceneConfig,
    load_grasp_results,
    plan_advance,
    run_protocol,
    save_grasp_results,
    simulate_grasp,
)
from proxref.sensor import Reflectance, SensorIntrinsics


def scene(alpha=0.5, d=10.0, stiffness=1.0, max_force=20.0, intr=None):
    return GraspScene(
        true_alpha=Reflectance(alpha),
        true_distance_mm=d,
        intrinsics=intr or SensorIntrinsics(1.0, 2.0),
        stiffness_n_per_mm=stiffness,
        max_force_n=max_force,
    )


def overshoot_oracle(intr, alpha, alpha_hat, d):
    """Brute-force root search on the forward model (independent route)."""
    i_all = alpha * (d + intr.d0_mm) ** (-intr.n)

    def f(dd):
        return alpha_hat * (dd + intr.d0_mm) ** (-intr.n) - i_all

    return brentq(f, -intr.d0_mm * 0.999999, 1e5, xtol=1e-12)


class TestPlanAdvance:
    def test_true_alpha_gives_true_distance(self):
        s = scene(alpha=0.42, d=13.0)
        assert plan_advance(s, 0.42) == pytest.approx(13.0, abs=1e-9)

    def test_overestimate_closed_form(self):
        s = scene(alpha=0.5, d=10.0)
        advance = plan_advance(s, 1.0)
        assert advance == pytest.approx(14.556349186104045, rel=1e-12)
        assert advance == pytest.approx(
            overshoot_oracle(s.intrinsics, 0.5, 1.0, 10.0), abs=1e-9
        )

    def test_underestimate_closed_form(self):
        s = scene(alpha=1.0, d=10.0)
        assert plan_advance(s, 0.25) == pytest.approx(4.5, rel=1e-12)

    def test_noiseless_delta_matches_identity(self, rng):
        for _ in range(1000):
            intr = SensorIntrinsics(rng.uniform(0, 5), rng.uniform(0.5, 4))
            alpha = rng.uniform(0.05, 1.0)
            alpha_hat = rng.uniform(0.05, 1.0)
            d = rng.uniform(0.5, 50)
            s = scene(alpha=alpha, d=d, intr=intr)
            delta = plan_advance(s, alpha_hat) - d
            expected = ((alpha_hat / alpha) ** (1.0 / intr.n) - 1.0) * (d + intr.d0_mm)
            assert delta == pytest.approx(expected, rel=1e-9, abs=1e-12)
            if alpha_hat != alpha:
                assert np.sign(delta) == np.sign(alpha_hat - alpha)


class TestSimulateGrasp:
    def test_exact_alpha_is_clean(self):
        result = simulate_grasp(scene(alpha=0.6), 0.6)
        assert result.outcome is GraspOutcome.CLEAN_GRASP
        assert result.distance_error_mm is None and result.force_n is None

    def test_overestimate_presses_into_object(self):
        result = simulate_grasp(scene(alpha=0.5), 1.0)
        assert result.outcome is GraspOutcome.OVERREACH
        assert result.force_n > 0

    def test_linear_contact_force(self):
        s = scene(alpha=0.5, d=10.0, stiffness=1.0, max_force=20.0)
        result = simulate_grasp(s, 1.0)
        delta = 14.556349186104045 - 10.0
        assert result.force_n == pytest.approx(delta, rel=1e-9)

    def test_force_capped(self):
        s = scene(alpha=0.5, d=10.0, stiffness=10.0, max_force=5.2)
        result = simulate_grasp(s, 1.0)
        assert result.force_n == 5.2

    def test_underreach_distance_error(self):
        s = scene(alpha=1.0, d=10.0)
        result = simulate_grasp(s, 0.25)
        assert result.outcome is GraspOutcome.UNDERREACH
        assert result.distance_error_mm == pytest.approx(5.5, rel=1e-9)

    def test_force_monotone_in_alpha_hat(self):
        s = scene(alpha=0.3, d=10.0, stiffness=0.8, max_force=50.0)
        forces = []
        for alpha_hat in np.linspace(0.35, 1.0, 12):
            result = simulate_grasp(s, float(alpha_hat))
            assert result.outcome is GraspOutcome.OVERREACH
            forces.append(result.force_n)
        assert all(a <= b for a, b in zip(forces, forces[1:]))

    def test_mutual_exclusion_enforced(self):
        with pytest.raises(DataError):
            GraspTrialResult(
                object_id="o",
                method_id="m",
                trial_index=0,
                outcome=GraspOutcome.UNDERREACH,
                commanded_advance_mm=5.0,
                distance_error_mm=1.0,
                force_n=1.0,
            )
        with pytest.raises(DataError):
            GraspTrialResult(
                object_id="o",
                method_id="m",
                trial_index=0,
                outcome=GraspOutcome.CLEAN_GRASP,
                commanded_advance_mm=5.0,
                force_n=1.0,
            )


def manifest_with(n_objects, alpha_fn, split=Split.TEST):
    objects = [
        ObjectRecord(
            object_id=f"obj{i:02d}",
            name=f"thing {i}",
            category=Category.REGULAR,
            split=split,
            true_alpha=alpha_fn(i),
            stiffness_n_per_mm=1.0,
        )
        for i in range(n_objects)
    ]
    return Manifest(objects=objects)


class TestRunProtocol:
    def test_ground_truth_zero_noise_all_clean(self):
        manifest = manifest_with(5, lambda i: 0.2 + 0.1 * i)
        run = run_protocol(manifest, [GroundTruthEstimator()], repetitions=5, seed=1)
        assert len(run.results) == 25
        assert all(r.outcome is GraspOutcome.CLEAN_GRASP for r in run.results)

    def test_fixed_one_over_lower_alphas_all_overreach(self):
        manifest = manifest_with(6, lambda i: 0.15 + 0.1 * i)  # all < 1
        run = run_protocol(manifest, [FixedEstimator(1.0)], repetitions=5, seed=2)
        assert len(run.results) == 30
        assert all(r.outcome is GraspOutcome.OVERREACH for r in run.results)
        assert all(r.force_n > 0 for r in run.results)

    def test_result_count_eleven_objects_six_methods(self):
        manifest = manifest_with(11, lambda i: 0.2 + 0.05 * i)
        methods = [
            FixedEstimator(0.5),
            FixedEstimator(1.0),
            FixedEstimator(0.3, method_id="fixed_low"),
            FixedEstimator(0.7, method_id="fixed_high"),
            FixedEstimator(0.9, method_id="fixed_higher"),
            GroundTruthEstimator(),
        ]
        run = run_protocol(manifest, methods, repetitions=5, seed=3)
        assert len(run.results) == 330

    def test_estimator_failure_recorded_and_skipped(self):
        manifest = manifest_with(3, lambda i: 0.5)
        manifest.objects[1].true_alpha = None  # ground truth missing for one object
        run = run_protocol(
            manifest,
            [FixedEstimator(0.5), GroundTruthEstimator()],
            repetitions=2,
            seed=0,
        )
        # fixed still needs a valid scene; the object without alpha fails for both
        assert len(run.failures) == 2
        assert {f.object_id for f in run.failures} == {"obj01"}
        assert len(run.results) == 2 * 2 * 2

    def test_noise_deterministic_and_order_independent(self):
        manifest = manifest_with(4, lambda i: 0.3 + 0.1 * i)
        config = SceneConfig(noise_rel=0.05)
        methods = [FixedEstimator(0.5), GroundTruthEstimator()]
        a = run_protocol(manifest, methods, repetitions=3, seed=11, config=config)
        b = run_protocol(manifest, methods, repetitions=3, seed=11, config=config)
        assert a.results == b.results
        # reversing method order leaves each (method, object, trial) result intact
        c = run_protocol(manifest, list(reversed(methods)), repetitions=3, seed=11, config=config)
        assert sorted(
            (r.method_id, r.object_id, r.trial_index, r.commanded_advance_mm)
            for r in a.results
        ) != []  # non-empty sanity
        key_a = {
            (r.method_id, r.object_id, r.trial_index): r.commanded_advance_mm
            for r in a.results
        }
        key_c = {
            (r.method_id, r.object_id, r.trial_index): r.commanded_advance_mm
            for r in c.results
        }
        assert set(key_a) == set(key_c)

    def test_partition_no_result_contributes_to_both(self):
        manifest = manifest_with(5, lambda i: 0.2 + 0.15 * i)
        run = run_protocol(
            manifest,
            [FixedEstimator(0.5), FixedEstimator(1.0), GroundTruthEstimator()],
            repetitions=5,
            seed=5,
            config=SceneConfig(noise_rel=0.02),
        )
        for r in run.results:
            assert (r.distance_error_mm is None) or (r.force_n is None)


class TestResultsCsv:
    def test_round_trip(self, tmp_path):
        manifest = manifest_with(4, lambda i: 0.2 + 0.2 * i)
        run = run_protocol(
            manifest,
            [FixedEstimator(0.5), GroundTruthEstimator()],
            repetitions=3,
            seed=7,
            config=SceneConfig(noise_rel=0.03),
        )
        path = tmp_path / "results.csv"
        save_grasp_results(run.results, path)
        loaded = load_grasp_results(path)
        assert sorted(loaded, key=lambda r: (r.method_id, r.object_id, r.trial_index)) == sorted(
            run.results, key=lambda r: (r.method_id, r.object_id, r.trial_index)
        )

    def test_clean_rows_have_empty_value(self, tmp_path):
        manifest = manifest_with(2, lambda i: 0.5)
        run = run_protocol(manifest, [GroundTruthEstimator()], repetitions=1, seed=0)
        path = tmp_path / "results.csv"
        save_grasp_results(run.results, path)
        lines = path.read_text().splitlines()
        assert all(",clean_grasp,," in line for line in lines[1:])
