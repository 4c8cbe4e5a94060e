import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from unidet import BBox, DatasetLabelSpace, build_unified


def random_box(rng, lo=0.0, hi=100.0, min_size=1.0, max_size=40.0) -> BBox:
    x1 = rng.uniform(lo, hi - min_size)
    y1 = rng.uniform(lo, hi - min_size)
    w = rng.uniform(min_size, max_size)
    h = rng.uniform(min_size, max_size)
    return BBox(x1, y1, min(x1 + w, hi), min(y1 + h, hi))


def random_boxes(rng, n, **kw) -> list[BBox]:
    return [random_box(rng, **kw) for _ in range(n)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def two_dataset_space():
    """Datasets 'alpha' and 'beta', two classes each, no overlap.

    Unified names sorted: bird(0), car(1), cat(2), dog(3); background 4.
    alpha annotates car+dog, beta annotates bird+cat.
    """
    alpha = DatasetLabelSpace("alpha", ((0, "car"), (1, "dog")))
    beta = DatasetLabelSpace("beta", ((0, "bird"), (1, "cat")))
    return build_unified([alpha, beta])
