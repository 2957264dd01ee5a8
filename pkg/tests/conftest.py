import math
import os

# Tests log to the console only
os.environ.setdefault("LOG_TO_FILE", "false")

import numpy as np
import pytest

from core.datagen import UnionSpec, sample_union


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def orthogonal_union():
    """Two orthogonal 4-dimensional subspaces of R^16, 40 points each"""
    spec = UnionSpec(
        ambient_dim=16,
        subspace_dim=4,
        num_subspaces=2,
        points_per_subspace=40,
        min_principal_angle=math.pi / 2,
        seed=7,
    )
    return sample_union(spec)


@pytest.fixture
def general_union():
    """Three 4-dimensional subspaces of R^30 at least 30 degrees apart"""
    spec = UnionSpec(
        ambient_dim=30,
        subspace_dim=4,
        num_subspaces=3,
        points_per_subspace=40,
        min_principal_angle=math.radians(30),
        seed=11,
    )
    return sample_union(spec)
