import numpy as np
import pytest

from foldcap.cnn import (
    PRODUCTION_LAYERS, Adam, TrainConfig, backward_check, build_model, forward, load_model, loss_and_grad, predict,
    save_model, train,
)
from foldcap.errors import CorruptFile, Diverged, ShapeMismatch, VersionMismatch

TINY = (("conv", 4, 3), ("relu",), ("maxpool", 2), ("conv", 5, 3), ("relu",), ("gap",), ("dense", 6), ("relu",),
        ("dense", 3))


def hand_count(n_channels):
    c1 = 5 * n_channels * 32 + 32
    c2 = 5 * 32 * 48 + 48
    c3 = 3 * 48 * 64 + 64
    d1 = 64 * 64 + 64
    d2 = 64 * 3 + 3
    return c1 + c2 + c3 + d1 + d2


@pytest.mark.parametrize("n", [4, 8])
def test_parameter_count(n):
    m = build_model(n)
    assert m.n_params == hand_count(n)
    assert 20_000 <= m.n_params <= 35_000
    assert m.output_dim == 3


def test_zero_input_gives_finite_output():
    m = build_model(4, seed=1)
    out = forward(m, np.zeros((2, 30, 4)))
    assert out.shape == (2, 3) and np.all(np.isfinite(out))


def test_batch_permutation_equivariance(rng):
    m = build_model(4, seed=2)
    x = rng.normal(size=(16, 30, 4))
    perm = rng.permutation(16)
    np.testing.assert_allclose(forward(m, x)[perm], forward(m, x[perm]), rtol=1e-12, atol=1e-12)


def test_build_is_deterministic():
    np.testing.assert_array_equal(build_model(4, seed=3).params, build_model(4, seed=3).params)
    assert not np.array_equal(build_model(4, seed=3).params, build_model(4, seed=4).params)


def test_shape_checks(rng):
    m = build_model(4)
    with pytest.raises(ShapeMismatch):
        forward(m, rng.normal(size=(2, 30, 5)))
    with pytest.raises(ShapeMismatch):
        predict(m, rng.normal(size=(30, 4)))


def randomized(model, rng, scale=0.1):
    """Same architecture with nonzero biases so no unit sits exactly on a ReLU kink."""
    p = model.params.copy()
    p += rng.normal(0.0, scale, p.size)
    return type(model)(model.layers, model.input_shape, p, model.target_lo, model.target_hi)


def test_gradient_check_tiny_model(rng):
    m = randomized(build_model(3, seed=5, layers=TINY, timesteps=12), rng)
    x = rng.normal(size=(6, 12, 3))
    y = rng.normal(size=(6, 3))
    assert backward_check(m, x, y, n_checks=m.n_params) < 1e-4


def test_gradient_check_production_model(rng):
    m = randomized(build_model(4, seed=6), rng, 0.01)
    x = rng.uniform(0, 1, size=(8, 30, 4))
    y = rng.uniform(0, 1, size=(8, 3))
    assert backward_check(m, x, y, n_checks=200) < 1e-4


def test_zero_input_bias_gradients(rng):
    m = randomized(build_model(4, seed=7), rng, 0.05)
    x = np.zeros((4, 30, 4))
    y = rng.uniform(0, 1, size=(4, 3))
    assert backward_check(m, x, y, n_checks=300, seed=1) < 1e-4


def test_taylor_remainder_is_second_order(rng):
    m = randomized(build_model(2, seed=8, layers=TINY, timesteps=12), rng)
    x = rng.normal(size=(5, 12, 2))
    y = rng.normal(size=(5, 3))
    loss0, grad = loss_and_grad(m, x, y)
    d = rng.normal(size=m.n_params)
    rems = []
    for h in (1e-2, 5e-3, 2.5e-3):
        lh, _ = loss_and_grad(m, x, y, m.params + h * d)
        rems.append(abs(lh - loss0 - h * grad @ d))
    ratios = np.array(rems[:-1]) / np.array(rems[1:])
    assert np.all(ratios > 3.0)


def test_eps_range():
    m = build_model(2, layers=TINY, timesteps=12)
    with pytest.raises(ValueError):
        backward_check(m, np.zeros((1, 12, 2)), np.zeros((1, 3)), eps=1e-2)


def test_adam_matches_hand_update():
    opt = Adam(2)
    p = np.array([1.0, -1.0])
    g = np.array([0.5, -2.0])
    opt.step(p, g, 0.1)
    # bias-corrected first step moves every coordinate by lr * sign(g)
    np.testing.assert_allclose(p, [0.9, -0.9], rtol=1e-7)


def test_learning_rate_schedule():
    cfg = TrainConfig()
    assert cfg.learning_rate(0) == 0.01
    assert cfg.learning_rate(19) == 0.01
    assert cfg.learning_rate(20) == 0.005
    assert cfg.learning_rate(45) == pytest.approx(0.0025)
    assert (cfg.batch_size, cfg.early_stop_patience, cfg.max_epochs) == (4096, 100, 1000)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def toy_data(rng, n=64, t=12, c=2):
    x = rng.uniform(0, 1, size=(n, t, c))
    y = np.stack([x[:, :, 0].mean(1), x[:, :, 1].max(1), x[:, 6, 0]], axis=1) * 10 + 5
    return x, y


def test_overfits_small_set(rng):
    x = rng.uniform(0, 1, size=(64, 30, 4))
    y = rng.uniform(5, 25, size=(64, 3))
    m = build_model(4, seed=1, target_lo=(5, 5, 5), target_hi=(25, 25, 25))
    # the production schedule halves every 20 epochs and would freeze long before epoch 500
    cfg = TrainConfig(batch_size=64, max_epochs=500, decay_every=100, seed=1)
    best, report = train(m, x, y, x, y, cfg)
    assert report.epochs_run == 500
    assert report.train_loss[-1] < 1e-3
    err = best.normalize_targets(predict(best, x)) - best.normalize_targets(y)
    assert np.mean(err ** 2) < 1e-3


def test_early_stopping_rule(rng):
    x, y = toy_data(rng, n=32)
    vx, _ = toy_data(rng, n=16)
    vy = rng.uniform(5, 15, size=(16, 3))  # unrelated validation targets
    m = build_model(2, seed=2, layers=TINY, timesteps=12, target_lo=(5, 5, 5), target_hi=(15, 15, 15))
    cfg = TrainConfig(batch_size=8, max_epochs=200, early_stop_patience=3, seed=2)
    _, report = train(m, x, y, vx, vy, cfg)
    assert report.stopped_early
    assert report.epochs_run == report.best_epoch + 3 + 1
    assert report.val_loss[report.best_epoch] == min(report.val_loss)
    assert len(report.train_loss) == len(report.learning_rate) == report.epochs_run


def test_training_is_deterministic(rng):
    x, y = toy_data(rng, n=48)
    m = build_model(2, seed=3, layers=TINY, timesteps=12, target_lo=y.min(0), target_hi=y.max(0))
    cfg = TrainConfig(batch_size=16, max_epochs=5, seed=3)
    a = train(m, x[:40], y[:40], x[40:], y[40:], cfg)[1]
    b = train(m, x[:40], y[:40], x[40:], y[40:], cfg)[1]
    assert a.train_loss == b.train_loss and a.val_loss == b.val_loss
    assert a.param_checksum == b.param_checksum


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported(rng):
    x, y = toy_data(rng, n=16)
    m = build_model(2, seed=4, layers=TINY, timesteps=12, target_lo=y.min(0), target_hi=y.max(0))
    with pytest.raises(Diverged) as exc:
        train(m, x, y * 1e30, x, y, TrainConfig(batch_size=16, max_epochs=5, lr0=1e6))
    assert exc.value.report is not None


def test_report_json(tmp_path, rng):
    x, y = toy_data(rng, n=24)
    m = build_model(2, seed=5, layers=TINY, timesteps=12, target_lo=y.min(0), target_hi=y.max(0))
    _, report = train(m, x[:20], y[:20], x[20:], y[20:], TrainConfig(batch_size=8, max_epochs=2))
    report.to_json(tmp_path / "r.json")
    import json
    data = json.loads((tmp_path / "r.json").read_text())
    assert data["epochs_run"] == 2 and data["config"]["batch_size"] == 8


def test_save_load_roundtrip(tmp_path, rng):
    m = randomized(build_model(4, seed=9, target_lo=(1, 2, 3), target_hi=(4, 5, 6)), rng)
    path = tmp_path / "model.fcnn"
    save_model(m, path)
    back = load_model(path, expected_channels=4)
    np.testing.assert_array_equal(back.params, m.params)
    assert back.layers == m.layers and back.input_shape == m.input_shape
    np.testing.assert_array_equal(back.target_hi, m.target_hi)
    x = rng.uniform(size=(3, 30, 4))
    np.testing.assert_array_equal(predict(back, x), predict(m, x))
    assert back.layers == PRODUCTION_LAYERS


def test_corrupt_and_mismatched_model_files(tmp_path):
    m = build_model(4, seed=1)
    path = tmp_path / "model.fcnn"
    save_model(m, path)
    data = path.read_bytes()
    (tmp_path / "short.fcnn").write_bytes(data[:-100])
    with pytest.raises(CorruptFile):
        load_model(tmp_path / "short.fcnn")
    flipped = bytearray(data)
    flipped[-50] ^= 0xFF
    (tmp_path / "flip.fcnn").write_bytes(bytes(flipped))
    with pytest.raises(CorruptFile):
        load_model(tmp_path / "flip.fcnn")
    (tmp_path / "junk.fcnn").write_bytes(b"hello world")
    with pytest.raises(CorruptFile):
        load_model(tmp_path / "junk.fcnn")
    with pytest.raises(VersionMismatch):
        load_model(path, expected_channels=8)
    bumped = bytearray(data)
    bumped[4:6] = (99).to_bytes(2, "little")
    (tmp_path / "v99.fcnn").write_bytes(bytes(bumped))
    with pytest.raises(VersionMismatch):
        load_model(tmp_path / "v99.fcnn")
