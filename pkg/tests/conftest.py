import numpy as np
import pytest

from c3pu.ann import AnnModel, default_weights_path, load_iris, stratified_split
from c3pu.netmap import compile_network


@pytest.fixture(scope="session")
def iris():
    return load_iris()


@pytest.fixture(scope="session")
def pretrained():
    return AnnModel.load(default_weights_path())


@pytest.fixture(scope="session")
def split(iris, pretrained):
    return stratified_split(iris.labels, pretrained.meta["split_seed"])


@pytest.fixture(scope="session")
def mapped(iris, pretrained, split):
    train, _ = split
    return compile_network(pretrained, calibration_inputs=pretrained.normalize(iris.features[train]))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
