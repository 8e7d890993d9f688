import numpy as np
import pytest

from henn.engine import EngineConfig, SlotEngine


@pytest.fixture
def exact8():
    return SlotEngine(EngineConfig(slots=8, backend="exact"))


@pytest.fixture
def exact64():
    return SlotEngine(EngineConfig(slots=64, backend="exact"))


@pytest.fixture
def exact256():
    return SlotEngine(EngineConfig(slots=256, backend="exact"))


@pytest.fixture
def leveled64():
    return SlotEngine(EngineConfig(slots=64, logQ=990, logp=30, backend="leveled"))


def make_classification_batch(rng, n, d, c):
    from henn.data import Batch, one_hot

    X = np.hstack([np.ones((n, 1)), rng.uniform(0.0, 1.0, (n, d))])
    labels = rng.integers(0, c, n)
    # make sure every class appears at least once when it fits
    if n >= c:
        labels[:c] = np.arange(c)
    return Batch(X, one_hot(labels, c), "classification", class_count=c, labels=labels)


def make_regression_batch(rng, n, d):
    from henn.data import Batch

    X = np.hstack([np.ones((n, 1)), rng.uniform(0.0, 1.0, (n, d))])
    t = rng.uniform(0.0, 1.0, (n, 1))
    return Batch(X, t, "regression")
