import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fcdsae import dataset, trainer
from fcdsae.sparsity import SparsityConfig

REFERENCE_N = 36363
REFERENCE_SEED = 42


@pytest.fixture(scope="session")
def reference_data():
    records = dataset.generate_synthetic(REFERENCE_N, REFERENCE_SEED)
    examples = [dataset.label(r) for r in records]
    return dataset.split(examples, seed=REFERENCE_SEED)


@pytest.fixture(scope="session")
def reference_run(reference_data):
    """Frozen reference training run: defaults, seed 42, psi=1e-3."""
    cfg = trainer.TrainConfig(seed=REFERENCE_SEED)
    return trainer.train(cfg, reference_data)


@pytest.fixture(scope="session")
def reference_run_no_sparsity(reference_data):
    cfg = trainer.TrainConfig(seed=REFERENCE_SEED,
                              sparsity=SparsityConfig(psi=0.0))
    return trainer.train(cfg, reference_data)


@pytest.fixture(scope="session")
def small_data():
    """Quick 600-record dataset for trainer unit tests."""
    records = dataset.generate_synthetic(600, 7)
    examples = [dataset.label(r) for r in records]
    return dataset.split(examples, seed=7)
