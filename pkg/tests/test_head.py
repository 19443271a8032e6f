import numpy as np
import pytest

from proxref.data import Split
from proxref.demo import make_planted_dataset, planted_matrices
from proxref.errors import DataError
from proxref.head import (
    FusionMode,
    HeadParams,
    TrainConfig,
    categorical_expectation,
    cosine_lr,
    fuse,
    gradient_check,
    head_forward,
    load_head_params,
    mse_loss,
    predict_alpha,
    save_head_params,
    train_head,
)


def reference_forward(params, x):
    """Straightforward per-element re-implementation (dual-route oracle)."""
    hidden = []
    for j in range(params.hidden_units):
        z = params.b_hidden[j]
        for k in range(params.input_dim):
            z += params.w_hidden[j, k] * x[k]
        hidden.append(max(z, 0.0))
    out = params.b_out
    for j in range(params.hidden_units):
        out += params.w_out[j] * hidden[j]
    return out


class TestForward:
    def test_zero_params_give_zero(self, rng):
        params = HeadParams(
            w_hidden=np.zeros((4, 3)), b_hidden=np.zeros(4), w_out=np.zeros(4), b_out=0.0
        )
        assert head_forward(params, rng.normal(size=3)) == 0.0

    def test_identity_like_single_unit(self):
        params = HeadParams(
            w_hidden=np.array([[1.0]]), b_hidden=np.zeros(1), w_out=np.array([1.0]), b_out=0.0
        )
        assert head_forward(params, np.array([0.37])) == pytest.approx(0.37, abs=0)

    def test_matches_reference_implementation(self, rng):
        params = HeadParams.initialize(16, hidden_units=8, seed=3)
        for _ in range(20):
            x = rng.normal(size=16)
            assert head_forward(params, x) == pytest.approx(
                reference_forward(params, x), rel=1e-12, abs=1e-15
            )

    def test_dimension_mismatch(self):
        params = HeadParams.initialize(8, seed=0)
        with pytest.raises(DataError):
            head_forward(params, np.zeros(9))

    def test_estimator_mode_clamps(self):
        params = HeadParams(
            w_hidden=np.array([[2.0]]), b_hidden=np.zeros(1), w_out=np.array([5.0]), b_out=-0.5
        )
        assert predict_alpha(params, np.array([10.0])) == 1.0
        assert predict_alpha(params, np.array([0.0])) == 0.0
        raw = head_forward(params, np.array([10.0]))
        assert raw > 1.0  # training-path output stays unclamped


class TestMseLoss:
    def test_identical_is_zero(self):
        assert mse_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0

    def test_swapped_unit_vectors(self):
        assert mse_loss(np.array([0.0, 1.0]), np.array([1.0, 0.0])) == 1.0

    def test_against_direct_recomputation(self, rng):
        p, t = rng.normal(size=50), rng.normal(size=50)
        direct = sum((a - b) ** 2 for a, b in zip(p, t)) / 50
        assert mse_loss(p, t) == pytest.approx(direct, rel=1e-15)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            mse_loss(np.array([]), np.array([]))


class TestFuse:
    def test_add(self):
        np.testing.assert_array_equal(
            fuse(np.array([1.0, 2.0]), np.array([3.0, 4.0]), FusionMode.ADD),
            np.array([4.0, 6.0]),
        )

    def test_concat(self):
        np.testing.assert_array_equal(
            fuse(np.array([1.0]), np.array([2.0]), FusionMode.CONCAT),
            np.array([1.0, 2.0]),
        )

    def test_concat_dims_sum(self, rng):
        img, txt = rng.normal(size=512), rng.normal(size=512)
        assert fuse(img, txt, FusionMode.CONCAT).shape == (1024,)

    def test_add_requires_equal_dims(self, rng):
        with pytest.raises(DataError):
            fuse(rng.normal(size=4), rng.normal(size=5), FusionMode.ADD)

    def test_passthrough_modes(self, rng):
        img = rng.normal(size=4)
        np.testing.assert_array_equal(fuse(img, None, FusionMode.IMAGE_ONLY), img)
        np.testing.assert_array_equal(fuse(None, img, FusionMode.TEXT_ONLY), img)
        with pytest.raises(DataError):
            fuse(None, None, FusionMode.IMAGE_ONLY)


class TestGradientCheck:
    @pytest.mark.parametrize("dim", [8, 512, 1024])
    def test_analytic_matches_finite_differences(self, dim, rng):
        params = HeadParams.initialize(dim, seed=1)
        x = rng.normal(size=(4, dim))
        y = rng.uniform(0.1, 0.9, size=4)
        assert gradient_check(params, x, y) < 1e-4

    def test_zero_input_batch_bias_terms(self, rng):
        # nonzero biases keep pre-activations off the ReLU kink; with x = 0
        # only the bias gradients are live and they must match exactly
        base = HeadParams.initialize(6, seed=2)
        params = HeadParams(
            w_hidden=base.w_hidden,
            b_hidden=rng.uniform(0.1, 0.5, size=base.hidden_units),
            w_out=base.w_out,
            b_out=0.2,
        )
        x = np.zeros((3, 6))
        y = np.full(3, 0.4)
        assert gradient_check(params, x, y) < 1e-6

    def test_corrupted_gradient_detected(self, rng):
        from proxref.head import _loss_and_grads

        params = HeadParams.initialize(8, seed=3)
        x = rng.normal(size=(4, 8))
        y = rng.uniform(size=4)

        def corrupted(p, xs, ys):
            _, grads = _loss_and_grads(p, xs, ys)
            grads["b_out"] = grads["b_out"] * 2.0
            return grads

        assert gradient_check(params, x, y, grad_fn=corrupted) > 1e-4


class TestSchedule:
    def test_endpoints(self):
        cfg = TrainConfig(learning_rate=1e-3, epochs=200, lr_floor=1e-5)
        assert cosine_lr(cfg, 0) == pytest.approx(1e-3, abs=1e-12)
        assert cosine_lr(cfg, 199) == pytest.approx(1e-5, abs=1e-12)

    def test_monotone_decreasing(self):
        cfg = TrainConfig(epochs=50)
        lrs = [cosine_lr(cfg, e) for e in range(50)]
        assert all(a >= b for a, b in zip(lrs, lrs[1:]))

    def test_single_epoch_uses_peak(self):
        cfg = TrainConfig(epochs=1)
        assert cosine_lr(cfg, 0) == cfg.learning_rate


class TestTraining:
    def test_planted_teacher_recovery(self):
        data = make_planted_dataset(seed=7)
        images, texts, targets = planted_matrices(data, Split.TRAIN)
        result = train_head(images, targets, TrainConfig(seed=0), FusionMode.IMAGE_ONLY)
        assert result.loss_history[-1] < 1e-3
        assert len(result.loss_history) == 200

    def test_zero_epochs_returns_initial(self, rng):
        x = rng.normal(size=(5, 4))
        y = rng.uniform(size=5)
        cfg = TrainConfig(epochs=0, seed=9)
        result = train_head(x, y, cfg)
        assert result.loss_history == []
        expected = HeadParams.initialize(4, cfg.hidden_units, seed=9)
        np.testing.assert_array_equal(result.params.w_hidden, expected.w_hidden)

    def test_deterministic_per_seed(self):
        data = make_planted_dataset(seed=3, n_objects=12, n_train=8)
        images, texts, targets = planted_matrices(data, Split.TRAIN)
        cfg = TrainConfig(seed=5, epochs=40)
        a = train_head(images, targets, cfg, FusionMode.CONCAT, texts)
        b = train_head(images, targets, cfg, FusionMode.CONCAT, texts)
        assert a.loss_history == b.loss_history
        np.testing.assert_array_equal(a.params.w_hidden, b.params.w_hidden)
        np.testing.assert_array_equal(a.params.w_out, b.params.w_out)

    def test_smoothed_loss_nonincreasing_on_planted_task(self):
        # full-batch run: mini-batch shuffling adds order noise early on
        data = make_planted_dataset(seed=7, n_objects=20, n_train=14)
        images, _, targets = planted_matrices(data, Split.TRAIN)
        result = train_head(images, targets, TrainConfig(seed=0, batch_size=None))
        h = np.array(result.loss_history)
        window = 10
        smoothed = np.convolve(h, np.ones(window) / window, mode="valid")
        assert np.all(np.diff(smoothed) <= 1e-6)

    def test_keep_best_snapshot(self):
        data = make_planted_dataset(seed=1, n_objects=10, n_train=7)
        images, _, targets = planted_matrices(data, Split.TRAIN)
        result = train_head(
            images, targets, TrainConfig(seed=0, epochs=30, keep_best=True)
        )
        assert result.best_params is not None
        assert result.best_epoch == int(np.argmin(result.loss_history))

    def test_needs_samples(self):
        with pytest.raises(DataError):
            train_head(np.zeros((0, 4)), np.zeros(0), TrainConfig())


class TestCategoricalExpectation:
    def test_one_hot_selects_category(self):
        assert categorical_expectation(
            np.array([0.0, 1.0, 0.0]), np.array([0.2, 0.5, 0.8])
        ) == 0.5

    def test_uniform_average(self):
        assert categorical_expectation(
            np.array([0.5, 0.5]), np.array([0.2, 0.8])
        ) == pytest.approx(0.5, abs=0)

    def test_against_direct_summation(self, rng):
        for _ in range(50):
            raw = rng.uniform(size=5)
            p = raw / raw.sum()
            a = rng.uniform(0.1, 1.0, size=5)
            direct = sum(pi * ai for pi, ai in zip(p, a))
            assert categorical_expectation(p, a) == pytest.approx(direct, rel=1e-15)

    def test_normalization_enforced(self):
        with pytest.raises(DataError):
            categorical_expectation(np.array([0.5, 0.6]), np.array([0.1, 0.2]))
        with pytest.raises(DataError):
            categorical_expectation(np.array([-0.1, 1.1]), np.array([0.1, 0.2]))

    def test_permutation_invariant(self, rng):
        raw = rng.uniform(size=4)
        p = raw / raw.sum()
        a = rng.uniform(0.1, 1.0, size=4)
        base = categorical_expectation(p, a)
        perm = rng.permutation(4)
        assert categorical_expectation(p[perm], a[perm]) == pytest.approx(base, rel=1e-15)

    def test_within_alpha_range(self, rng):
        for _ in range(50):
            raw = rng.uniform(size=6)
            p = raw / raw.sum()
            a = rng.uniform(0.1, 1.0, size=6)
            value = categorical_expectation(p, a)
            assert a.min() - 1e-12 <= value <= a.max() + 1e-12


class TestPersistence:
    def test_params_round_trip(self, tmp_path):
        params = HeadParams.initialize(12, hidden_units=5, seed=8)
        path = tmp_path / "head.txt"
        save_head_params(params, path)
        loaded = load_head_params(path)
        np.testing.assert_array_equal(loaded.w_hidden, params.w_hidden)
        np.testing.assert_array_equal(loaded.b_hidden, params.b_hidden)
        np.testing.assert_array_equal(loaded.w_out, params.w_out)
        assert loaded.b_out == params.b_out

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "head.txt"
        path.write_text("not a head file\n")
        with pytest.raises(DataError):
            load_head_params(path)
