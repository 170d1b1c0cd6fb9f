import warnings

import numpy as np
import pytest

from navgeom import fields as fl
from navgeom.metric import ChartDomain, NormField, Riemannian, zermelo


def euclid(dim=2, radius=1.0, inner=0.0):
    eye = np.eye(dim)
    dom = ChartDomain.ball(dim, radius, inner_radius=inner)
    return Riemannian(lambda p: np.broadcast_to(eye, np.shape(p) + (dim,)), dom, "euclidean")


def funk(dim=2, radius=0.9):
    return zermelo(euclid(dim, radius), fl.radial_field(dim, -1.0))


def randers(w=(0.5, 0.0), radius=2.0):
    return zermelo(euclid(len(w), radius), fl.constant_field(w))


def l4_norm(dim=2, radius=1.0):
    def F(p, v):
        return np.sum(v**4, axis=-1) ** 0.25

    return NormField(F, ChartDomain.ball(dim, radius), "l4")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
