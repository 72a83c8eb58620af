from __future__ import annotations

import numpy as np
import pytest

from ecskit import chartcalc, d2family


@pytest.fixture(scope="session")
def nonflat4():
    return d2family.nonflat_fixture(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def sphere_metric(n):
    """Round unit sphere in stereographic coordinates, g = 4 delta / (1 + |x|^2)^2."""

    def metric(X):
        r2 = np.sum(X * X, axis=1)
        return (4.0 / (1.0 + r2) ** 2)[:, None, None] * np.eye(n)

    return chartcalc.MetricField(n, (n, 0), metric, name="sphere")


def warped_metric():
    """g_11 = 1 + (x^2)^2, otherwise Euclidean: W != 0 and nabla W != 0."""

    def metric(X):
        g = np.broadcast_to(np.eye(4), (len(X), 4, 4)).copy()
        g[:, 0, 0] = 1.0 + X[:, 1] ** 2
        return g

    return chartcalc.MetricField(4, (4, 0), metric, name="warped")
