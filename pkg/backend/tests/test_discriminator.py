import numpy as np
import pytest

from app.ai.discriminator import (
    Adam,
    DiscriminatorConfig,
    DiscriminatorModel,
    featurize,
    make_labels,
    sigmoid,
    stratified_batches,
    train_generation,
)
from app.chem.smiles import parse_smiles
from app.errors import DiscriminatorError


def _relative_error(a, b):
    return abs(a - b) / max(1e-5, abs(a) + abs(b))


class TestNumerics:
    def test_sigmoid_is_stable(self):
        with np.errstate(over="raise"):
            out = sigmoid(np.array([1000.0, -1000.0, 0.0]))
        assert out.tolist() == [1.0, 0.0, 0.5]

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(0)
        eps = 1e-6
        for trial in range(20):
            config = DiscriminatorConfig(hidden=[int(rng.integers(2, 6)), int(rng.integers(2, 4))])
            model = DiscriminatorModel.initialize(8, config, rng)
            x = rng.integers(0, 2, size=(6, 8)).astype(float)
            y = rng.integers(0, 2, size=6).astype(float)
            _, grad_w, grad_b = model.gradients(x, y)
            for params, grads in ((model.weights, grad_w), (model.biases, grad_b)):
                for p, g in zip(params, grads):
                    for index in np.ndindex(p.shape):
                        saved = p[index]
                        p[index] = saved + eps
                        up = model.loss(x, y)
                        p[index] = saved - eps
                        down = model.loss(x, y)
                        p[index] = saved
                        numeric = (up - down) / (2 * eps)
                        assert _relative_error(g[index], numeric) < 1e-4, (trial, index)

    def test_first_adam_step(self):
        param = np.array([1.0])
        optimizer = Adam([param.shape], lr=0.01)
        optimizer.step([param], [np.array([0.5])])
        assert param[0] == pytest.approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8), abs=1e-9)

    @pytest.mark.parametrize("architecture,hidden", [("logistic", []), ("mlp", [8])])
    def test_separable_toy_problem(self, architecture, hidden):
        rng = np.random.default_rng(5)
        config = DiscriminatorConfig(
            architecture=architecture, hidden=hidden or [1], learning_rate=0.05, weight_decay=0.0
        )
        model = DiscriminatorModel.initialize(4, config, rng)
        x = np.array([[1, 1, 0, 0]] * 10 + [[0, 0, 1, 1]] * 10, dtype=float)
        y = np.array([1.0] * 10 + [0.0] * 10)
        for _ in range(500):
            model.train_step(x, y)
        assert model.loss(x, y) < 0.05


class TestModel:
    def test_forward_single_and_batch(self):
        model = DiscriminatorModel.initialize(16, DiscriminatorConfig(hidden=[4]), np.random.default_rng(1))
        x = np.zeros((3, 16))
        batch = model.forward(x)
        assert batch.shape == (3,)
        single = model.forward(x[0])
        assert isinstance(single, float) and 0.0 < single < 1.0

    def test_width_mismatch(self):
        model = DiscriminatorModel.initialize(16, DiscriminatorConfig(hidden=[4]), np.random.default_rng(1))
        with pytest.raises(DiscriminatorError):
            model.forward(np.zeros(8))

    def test_none_architecture_has_no_model(self):
        with pytest.raises(DiscriminatorError):
            DiscriminatorModel.initialize(16, DiscriminatorConfig(architecture="none"), np.random.default_rng(0))

    def test_logistic_has_one_layer(self):
        model = DiscriminatorModel.initialize(16, DiscriminatorConfig(architecture="logistic"), np.random.default_rng(0))
        assert len(model.weights) == 1

    def test_checkpoint(self, tmp_path):
        rng = np.random.default_rng(2)
        model = DiscriminatorModel.initialize(16, DiscriminatorConfig(hidden=[6, 3]), rng)
        x = rng.integers(0, 2, size=(10, 16)).astype(float)
        y = np.array([1.0, 0.0] * 5)
        model.train_step(x, y)
        path = tmp_path / "disc.npz"
        model.save(path)
        loaded = DiscriminatorModel.load(path)
        assert np.allclose(loaded.forward(x), model.forward(x))
        assert loaded.optimizer.t == 1
        assert loaded.config == model.config
        # training continues identically from the restored moments
        assert loaded.train_step(x, y) == pytest.approx(model.train_step(x, y))

    def test_unreadable_checkpoint(self, tmp_path):
        path = tmp_path / "broken.npz"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(DiscriminatorError):
            DiscriminatorModel.load(path)


class TestTraining:
    def test_labels(self):
        assert make_labels(2, 1, "original").tolist() == [1.0, 1.0, 0.0]
        assert make_labels(2, 1, "flipped").tolist() == [0.0, 0.0, 1.0]
        with pytest.raises(DiscriminatorError):
            make_labels(1, 1, "sideways")

    def test_featurize_width(self):
        assert featurize(parse_smiles("CCO"), width=128).shape == (128,)

    def test_reference_scores_higher_after_training(self, dataset):
        config = DiscriminatorConfig(hidden=[16], fp_width=256, epochs=200, learning_rate=0.01)
        rng = np.random.default_rng(3)
        model = DiscriminatorModel.initialize(256, config, rng)
        reference = list(dataset.molecules[:40])
        population = [parse_smiles("C" * n) for n in range(1, 11)]
        train_generation(model, reference, population, rng)
        ref_d = model.forward(np.stack([featurize(m, width=256) for m in reference])).mean()
        pop_d = model.forward(np.stack([featurize(m, width=256) for m in population])).mean()
        assert ref_d > pop_d

    def test_empty_training_set(self):
        model = DiscriminatorModel.initialize(16, DiscriminatorConfig(fp_width=16), np.random.default_rng(0))
        with pytest.raises(DiscriminatorError):
            train_generation(model, [], [parse_smiles("C")], np.random.default_rng(0))

    def test_stratified_batches_keep_class_shares(self):
        labels = make_labels(500, 100, "original")
        batches = stratified_batches(labels, 60, np.random.default_rng(0))
        assert len(batches) == 10
        for batch in batches:
            assert labels[batch].sum() == 50
            assert len(batch) == 60
        assert sorted(np.concatenate(batches).tolist()) == list(range(600))

    def test_stratified_batches_with_a_short_tail(self):
        labels = make_labels(7, 3, "original")
        batches = stratified_batches(labels, 4, np.random.default_rng(1))
        assert [len(b) for b in batches] == [4, 3, 3]
        assert all(0 < labels[b].sum() < len(b) for b in batches)
