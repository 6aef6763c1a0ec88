import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, 'src'))

DATA_DIR = os.path.join(ROOT, 'data')


@pytest.fixture
def rng():
    return np.random.default_rng(20110324)


@pytest.fixture
def sample_path():
    return os.path.join(DATA_DIR, 'sample_series.csv')


@pytest.fixture
def weights_path():
    return os.path.join(DATA_DIR, 'sample_weights.csv')
