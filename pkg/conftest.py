"""Shared pytest fixtures."""
import os

import numpy as np
import pytest

from dataset import Dataset, load_idx


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: end-to-end acceptance runs (deselect with -m "not slow")')


def make_blobs(per_class=30, centers=((0.0, 0.0), (4.0, 4.0)), spread=0.5, dims=2, seed=0):
    """Gaussian blobs, one per center, padded with noise dimensions up to `dims`."""
    generator = np.random.default_rng(seed)
    rows, labels = [], []
    for j, center in enumerate(centers):
        center = np.concatenate([center, np.zeros(dims - len(center))])
        rows.append(center + spread * generator.standard_normal((per_class, dims)))
        labels.extend([j] * per_class)
    return Dataset(np.vstack(rows), np.array(labels))


@pytest.fixture
def blobs():
    return make_blobs()


@pytest.fixture
def iris_csv(tmp_path):
    """Iris written as a headerless CSV with the species name in the last column."""
    datasets = pytest.importorskip('sklearn.datasets')
    iris = datasets.load_iris()
    path = tmp_path / 'iris.csv'
    with open(path, 'w') as f:
        for row, target in zip(iris.data, iris.target):
            f.write(','.join(f'{v:g}' for v in row) + f',{iris.target_names[target]}\n')
    return str(path)


@pytest.fixture(scope='session')
def mnist():
    """(train, test) MNIST datasets from CE_MNIST_DIR, or skip."""
    root = os.getenv('CE_MNIST_DIR', '')
    names = ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte',
             't10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte')
    paths = [os.path.join(root, name) for name in names]
    if not root or not all(os.path.exists(p) for p in paths):
        pytest.skip('set CE_MNIST_DIR to a directory with the four uncompressed MNIST IDX files')
    return load_idx(paths[0], paths[1]), load_idx(paths[2], paths[3])


@pytest.fixture
def sonar_csv():
    path = os.getenv('CE_SONAR_CSV', '')
    if not path or not os.path.exists(path):
        pytest.skip('set CE_SONAR_CSV to the UCI sonar.all-data file')
    return path
