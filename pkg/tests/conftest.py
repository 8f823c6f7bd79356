import numpy as np
import pytest

from digitpad import bilstm, dataset


@pytest.fixture(scope="session")
def small_synth_dataset():
    """60 sequences, one simulated user; enough for fast pipeline tests."""
    return dataset.make_synthetic_dataset(per_class=6, users=1, rng=1234)


@pytest.fixture(scope="session")
def tiny_model(small_synth_dataset):
    """A quickly trained model that classifies the small synthetic set well."""
    train_ds, val_ds = dataset.split(small_synth_dataset, dataset.SplitConfig(seed=3))
    cfg = bilstm.TrainConfig(epochs=40, hidden=12, seed=7)
    model, history = bilstm.train(train_ds, val_ds, cfg)
    assert history[-1]["val_acc"] >= 0.8, "fixture model failed to train"
    return model


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
