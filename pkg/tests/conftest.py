import logging

import pytest

from salbench.datagen import GenConfig, generate_dataset
from salbench.scene import DatasetKind


@pytest.fixture(scope="session")
def shape_dataset(tmp_path_factory):
    """Small generated AIXI-Shape-style dataset shared across test modules."""
    root = tmp_path_factory.mktemp("shape_ds")
    config = GenConfig(dataset_kind=DatasetKind.SHAPE, n_train=0, n_val=10, master_seed=11)
    generate_dataset(config, root)
    return root


@pytest.fixture(autouse=True)
def _quiet_fallback_warnings():
    # The uniform-fallback warning is expected noise in degenerate-class tests;
    # tests that assert on it re-enable capture with caplog.at_level.
    logger = logging.getLogger("salbench.metrics")
    previous = logger.level
    logger.setLevel(logging.ERROR)
    yield
    logger.setLevel(previous)
