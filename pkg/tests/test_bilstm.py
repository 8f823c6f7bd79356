import math

import numpy as np
import pytest

from digitpad import bilstm
from digitpad.bilstm import (
    AdamState,
    BiLstmClassifier,
    ConfusionMatrix,
    Prediction,
    TrainConfig,
    adam_step,
    backward,
    evaluate,
    forward,
    gradient_check,
    init_model,
    predict_batch,
    readout_batch,
    train,
)
from digitpad.dataset import Dataset
from digitpad.errors import DatasetError, ModelFormatError
from digitpad.signals import TouchSequence


def zero_model(hidden=4, input_dim=6, classes=10):
    m = init_model(hidden=hidden, input_dim=input_dim, classes=classes, seed=0)
    for p in m.params().values():
        p[:] = 0.0
    return m


# --- forward ---------------------------------------------------------------------

def test_zero_weights_give_uniform_probabilities(rng):
    m = zero_model()
    pred = forward(m, rng.normal(size=(100, 6)))
    assert np.allclose(pred.probabilities, 0.1, atol=1e-12)
    assert pred.label == 0  # ties break to the lowest digit


def test_probabilities_sum_to_one(rng):
    for seed in range(5):
        m = init_model(hidden=6, seed=seed)
        pred = forward(m, rng.normal(size=(100, 6)) * 3.0)
        assert abs(pred.probabilities.sum() - 1.0) < 1e-9


def naive_lstm_final_state(w_in, w_rec, bias, x):
    """Textbook per-timestep recurrence for one sequence, scalar-slow on purpose."""
    h_dim = w_rec.shape[1]

    def sig(v):
        return 1.0 / (1.0 + np.exp(-v))

    h = np.zeros(h_dim)
    c = np.zeros(h_dim)
    for x_t in x:
        z = w_in @ x_t + w_rec @ h + bias
        i = sig(z[0:h_dim])
        f = sig(z[h_dim:2 * h_dim])
        g = np.tanh(z[2 * h_dim:3 * h_dim])
        o = sig(z[3 * h_dim:4 * h_dim])
        c = f * c + i * g
        h = o * np.tanh(c)
    return h


def test_forward_matches_naive_recurrence_oracle(rng):
    m = init_model(hidden=3, input_dim=6, seed=5)
    x = rng.normal(size=(5, 6))
    x_norm = m.normalize(x)

    h_f = naive_lstm_final_state(m.fwd.w_in, m.fwd.w_rec, m.fwd.bias, x_norm)
    h_b = naive_lstm_final_state(m.bwd.w_in, m.bwd.w_rec, m.bwd.bias, x_norm[::-1])
    logits = m.head_w @ np.concatenate([h_f, h_b]) + m.head_b
    expected = np.exp(logits - logits.max())
    expected /= expected.sum()

    pred = forward(m, x)
    assert np.max(np.abs(pred.probabilities - expected)) < 1e-12


def test_forward_uses_stored_normalization(rng):
    m = init_model(hidden=4, seed=2)
    m.norm_mean = rng.normal(size=6)
    m.norm_std = np.abs(rng.normal(size=6)) + 0.5
    x = rng.normal(size=(30, 6))
    direct = predict_batch(m, m.normalize(x)[None], normalized=True)[0]
    assert np.allclose(forward(m, x).probabilities, direct, atol=1e-12)


def test_non_finite_input_raises_with_timestep():
    m = init_model(hidden=4, seed=0)
    x = np.zeros((10, 6))
    x[7, 2] = np.inf
    with pytest.raises(bilstm.NumericalFailureError) as exc:
        forward(m, x)
    assert exc.value.timestep == 7

    x = np.zeros((10, 6))
    x[4, 1] = np.nan
    with pytest.raises(bilstm.NumericalFailureError) as exc:
        forward(m, x)
    assert exc.value.timestep == 4


def test_time_reversal_coupling(rng):
    # swapping direction parameters and reversing the input swaps the two
    # halves of the readout: the recurrence itself is direction-agnostic
    m = init_model(hidden=5, seed=9)
    x = rng.normal(size=(2, 20, 6))
    swapped = BiLstmClassifier(fwd=m.bwd, bwd=m.fwd, head_w=m.head_w, head_b=m.head_b,
                               norm_mean=m.norm_mean, norm_std=m.norm_std)
    original = readout_batch(m, x)
    mirrored = readout_batch(swapped, x[:, ::-1])
    h = m.hidden
    assert np.max(np.abs(original[:, :h] - mirrored[:, h:])) < 1e-12
    assert np.max(np.abs(original[:, h:] - mirrored[:, :h])) < 1e-12


# --- loss ---------------------------------------------------------------------------

def test_loss_reference_values():
    uniform = Prediction.uniform()
    assert bilstm.loss(uniform, 3) == pytest.approx(math.log(10.0), abs=1e-12)
    sure = np.zeros(10)
    sure[4] = 1.0
    assert bilstm.loss(sure, 4) == pytest.approx(0.0, abs=1e-12)
    half = np.full(10, 0.5 / 9)
    half[2] = 0.5
    assert bilstm.loss(half, 2) == pytest.approx(math.log(2.0), abs=1e-12)


def test_loss_label_validation():
    with pytest.raises(ValueError):
        bilstm.loss(Prediction.uniform(), 10)


def test_loss_clamps_zero_probability():
    p = np.zeros(10)
    p[0] = 1.0
    assert bilstm.loss(p, 5) == pytest.approx(-math.log(1e-12))


# --- backward --------------------------------------------------------------------------

def test_zero_input_zero_recurrent_matches_softmax_regression(rng):
    # with zero inputs and zero recurrent weights the readout is a constant,
    # so the head-bias gradient is exactly the softmax-regression gradient
    m = init_model(hidden=4, seed=1)
    m.fwd.w_rec[:] = 0.0
    m.bwd.w_rec[:] = 0.0
    x = np.zeros((8, 12, 6))
    y = rng.integers(0, 10, size=8)
    _, grads, probs = backward(m, x, y)
    onehot = np.zeros((8, 10))
    onehot[np.arange(8), y] = 1.0
    expected = (probs - onehot).mean(axis=0)
    assert np.max(np.abs(grads["head.b"] - expected)) < 1e-12


def test_gradient_check_small_models(rng):
    for hidden, length in [(2, 3), (3, 7), (5, 11)]:
        m = init_model(hidden=hidden, seed=hidden)
        x = rng.normal(size=(3, length, 6))
        y = rng.integers(0, 10, size=3)
        err = gradient_check(m, x, y, coords=220, seed=0)
        assert err < 1e-4, f"H={hidden} L={length}: {err}"


def test_gradient_check_reproducible(rng):
    m = init_model(hidden=3, seed=4)
    x = rng.normal(size=(2, 5, 6))
    y = np.array([1, 8])
    assert gradient_check(m, x, y, seed=11) == gradient_check(m, x, y, seed=11)


def test_gradients_near_zero_at_zero_loss():
    m = init_model(hidden=3, seed=4)
    m.head_b[7] = 50.0  # saturate the softmax at the true label
    x = np.zeros((2, 5, 6))
    y = np.array([7, 7])
    loss_value, grads, _ = backward(m, x, y)
    assert loss_value < 1e-9
    for g in grads.values():
        assert np.max(np.abs(g)) < 1e-8


def test_loss_scaling_scales_gradients(rng):
    m = init_model(hidden=3, seed=2)
    x = rng.normal(size=(4, 9, 6))
    y = rng.integers(0, 10, size=4)
    _, g1, _ = backward(m, x, y)
    _, g2, _ = backward(m, x, y, loss_scale=2.0)
    for k in g1:
        assert np.allclose(2.0 * g1[k], g2[k], atol=1e-12)


def test_batch_order_leaves_mean_gradient_invariant(rng):
    m = init_model(hidden=4, seed=3)
    x = rng.normal(size=(16, 10, 6))
    y = rng.integers(0, 10, size=16)
    perm = rng.permutation(16)
    _, g1, _ = backward(m, x, y)
    _, g2, _ = backward(m, x[perm], y[perm])
    for k in g1:
        assert np.max(np.abs(g1[k] - g2[k])) < 1e-9


# --- adam ------------------------------------------------------------------------------

def test_adam_zero_gradient_keeps_params():
    m = init_model(hidden=3, seed=0)
    params = m.params()
    before = {k: p.copy() for k, p in params.items()}
    state = AdamState.for_params(params)
    grads = {k: np.zeros_like(p) for k, p in params.items()}
    adam_step(params, grads, state, TrainConfig())
    for k in params:
        assert np.array_equal(params[k], before[k])


def test_adam_first_step_is_learning_rate():
    # with g = 1 everywhere, bias correction makes the first step exactly
    # -lr / (1 + eps)
    m = init_model(hidden=3, seed=0)
    params = m.params()
    before = {k: p.copy() for k, p in params.items()}
    state = AdamState.for_params(params)
    grads = {k: np.ones_like(p) for k, p in params.items()}
    cfg = TrainConfig(learning_rate=0.002)
    adam_step(params, grads, state, cfg)
    for k in params:
        assert np.max(np.abs((before[k] - params[k]) - cfg.learning_rate)) < 1e-9


def test_adam_deterministic():
    def run():
        m = init_model(hidden=3, seed=0)
        params = m.params()
        state = AdamState.for_params(params)
        rng = np.random.default_rng(0)
        for _ in range(5):
            grads = {k: rng.normal(size=p.shape) for k, p in params.items()}
            adam_step(params, grads, state, TrainConfig())
        return {k: p.copy() for k, p in params.items()}

    a, b = run(), run()
    for k in a:
        assert np.array_equal(a[k], b[k])


# --- train -------------------------------------------------------------------------------

def separable_toy_dataset(n_per_class=12, seed=0):
    rng = np.random.default_rng(seed)
    seqs = []
    for label, level in ((0, 1.0), (1, -1.0)):
        for _ in range(n_per_class):
            w = rng.normal(0.0, 0.1, size=(100, 6))
            w[:, 2] += level
            seqs.append(TouchSequence(w, label=label))
    return Dataset(seqs)


def test_train_linearly_separable_toy():
    ds = separable_toy_dataset()
    model, history = train(ds, None, TrainConfig(epochs=50, hidden=4, seed=0))
    x = bilstm.features_of(ds)
    predicted = np.argmax(predict_batch(model, x), axis=1)
    assert np.mean(predicted == ds.labels()) == 1.0
    assert any(h["train_acc"] == 1.0 for h in history[:50])


def test_train_deterministic(small_synth_dataset):
    from digitpad.dataset import SplitConfig, split

    tr, te = split(small_synth_dataset, SplitConfig(seed=1))
    cfg = TrainConfig(epochs=3, hidden=6, seed=21)
    _, h1 = train(tr, te, cfg)
    _, h2 = train(tr, te, cfg)
    assert h1[-1]["loss"] == h2[-1]["loss"]
    assert h1[-1]["val_acc"] == h2[-1]["val_acc"]


def test_train_empty_dataset():
    with pytest.raises(DatasetError):
        train(Dataset([]), None, TrainConfig(epochs=1))


def test_train_normalization_from_train_only(small_synth_dataset):
    from digitpad.dataset import SplitConfig, split

    tr, te = split(small_synth_dataset, SplitConfig(seed=1))
    model, _ = train(tr, te, TrainConfig(epochs=1, hidden=4, seed=0))
    flat = bilstm.features_of(tr).reshape(-1, 6)
    assert np.allclose(model.norm_mean, flat.mean(axis=0), atol=1e-12)
    assert np.allclose(model.norm_std, np.maximum(flat.std(axis=0), 1e-8), atol=1e-12)


# --- evaluate -----------------------------------------------------------------------------

def test_evaluate_perfect_on_own_argmax(tiny_model, small_synth_dataset):
    x = bilstm.features_of(small_synth_dataset)
    predicted = np.argmax(predict_batch(tiny_model, x), axis=1)
    relabeled = Dataset([
        TouchSequence(s.wrench, label=int(p))
        for s, p in zip(small_synth_dataset.sequences, predicted)
    ])
    accuracy, cm = evaluate(tiny_model, relabeled)
    assert accuracy == 1.0
    assert np.trace(cm.counts) == cm.total() == len(relabeled)


def test_evaluate_random_model_near_chance(rng):
    seqs = [TouchSequence(rng.normal(size=(100, 6)), label=i % 10) for i in range(450)]
    ds = Dataset(seqs)
    m = init_model(hidden=8, seed=123)
    accuracy, cm = evaluate(m, ds)
    assert abs(accuracy - 0.1) <= 0.03
    assert cm.row_sums().tolist() == [45] * 10


def test_evaluate_empty():
    with pytest.raises(DatasetError):
        evaluate(init_model(hidden=2), Dataset([]))


def test_confusion_matrix_counts():
    cm = ConfusionMatrix()
    cm.add(3, 3)
    cm.add(3, 5)
    cm.add(0, 0)
    assert cm.total() == 3
    assert cm.accuracy() == pytest.approx(2 / 3)
    assert cm.row_sums()[3] == 2


# --- persistence ----------------------------------------------------------------------------

def test_save_load_round_trip(tmp_path, rng):
    m = init_model(hidden=7, seed=6)
    m.norm_mean = rng.normal(size=6)
    m.norm_std = np.abs(rng.normal(size=6)) + 0.1
    path = tmp_path / "model.bin"
    bilstm.save(m, path)
    loaded = bilstm.load(path)
    for _ in range(10):
        x = rng.normal(size=(100, 6))
        a = forward(m, x).probabilities
        b = forward(loaded, x).probabilities
        assert np.array_equal(a, b)


def test_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "model.bin"
    bilstm.save(init_model(hidden=3), path)
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(ModelFormatError, match="magic"):
        bilstm.load(path)


def test_load_rejects_truncated(tmp_path):
    path = tmp_path / "model.bin"
    bilstm.save(init_model(hidden=3), path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(ModelFormatError, match="truncated"):
        bilstm.load(path)


def test_load_rejects_bad_version(tmp_path):
    path = tmp_path / "model.bin"
    bilstm.save(init_model(hidden=3), path)
    blob = bytearray(path.read_bytes())
    blob[8] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(ModelFormatError, match="version"):
        bilstm.load(path)


def test_parameter_count_reported():
    m = init_model(hidden=23, input_dim=6, classes=10)
    per_direction = 4 * 23 * 6 + 4 * 23 * 23 + 4 * 23
    assert m.parameter_count() == 2 * per_direction + 10 * 46 + 10


def test_golden_file_reproduces_probabilities_exactly():
    # a model file written once must keep producing bit-identical predictions
    import json
    from pathlib import Path

    data_dir = Path(__file__).parent / "data"
    model = bilstm.load(data_dir / "golden-model.bin")
    golden = json.loads((data_dir / "golden.json").read_text())
    x = np.array([[float(v) for v in row] for row in golden["input"]])
    expected = np.array([float(p) for p in golden["probabilities"]])
    pred = forward(model, x)
    assert np.array_equal(pred.probabilities, expected)
    assert pred.label == golden["label"]


def test_torque_feature_switch(small_synth_dataset):
    # the 13-channel experiment: wrench plus the 7 joint torques
    seqs = []
    for s in small_synth_dataset.sequences[:20]:
        seqs.append(TouchSequence(s.wrench, label=s.label,
                                  torque=np.tile(np.arange(7.0) * 0.01, (len(s), 1))))
    ds = Dataset(seqs)
    model, _ = train(ds, None, TrainConfig(epochs=2, hidden=4, seed=0,
                                           features="wrench+torque"))
    assert model.input_dim == 13
    accuracy, cm = evaluate(model, ds)
    assert cm.total() == len(ds)

    bare = Dataset([TouchSequence(s.wrench, label=s.label) for s in seqs])
    with pytest.raises(DatasetError):
        train(bare, None, TrainConfig(epochs=1, features="wrench+torque"))


def test_training_parameters_fully_deterministic(small_synth_dataset):
    from digitpad.dataset import SplitConfig, split

    tr, te = split(small_synth_dataset, SplitConfig(seed=1))
    cfg = TrainConfig(epochs=3, hidden=5, seed=33)
    m1, _ = train(tr, te, cfg)
    m2, _ = train(tr, te, cfg)
    for k, p in m1.params().items():
        assert np.array_equal(p, m2.params()[k]), k
