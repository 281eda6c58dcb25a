import math

import numpy as np
import pytest

from zsk import ModulusOfContinuity, PeriodicFunction


def make_smooth_test_set():
    """The standard smooth periodic test functions with known integrals."""
    return [
        (PeriodicFunction(fn=lambda x: np.ones_like(x), label="1"), 1.0),
        (PeriodicFunction(fn=lambda x: np.sin(2 * np.pi * x) ** 2, label="sin^2"), 0.5),
        (PeriodicFunction(fn=lambda x: np.cos(2 * np.pi * x), label="cos"), 0.0),
        (PeriodicFunction(fn=lambda x: 1.0 / (2.0 + np.cos(2 * np.pi * x)),
                          label="1/(2+cos)"), 1.0 / math.sqrt(3.0)),
    ]


@pytest.fixture
def smooth_test_set():
    return make_smooth_test_set()


@pytest.fixture
def abs_sin():
    """|sin(pi x)|: Lipschitz with constant pi, integral 2/pi."""
    return PeriodicFunction(
        fn=lambda x: np.abs(np.sin(np.pi * x)),
        modulus=ModulusOfContinuity(kind="lipschitz", exponent=1.0, constant=math.pi),
        smoothness="rough",
        label="|sin(pi x)|",
    )


def contour_trapezoid_mean(F, points=2 ** 16):
    """Independent oracle: equispaced mean of F over the unit circle."""
    theta = np.arange(points) / points
    z = np.exp(2j * np.pi * theta)
    return complex(np.sum(np.asarray(F(z))) / points)


def central_difference(fn, x, order=1, h=1e-5):
    """Central finite-difference derivative of given order (order <= 4)."""
    if order == 0:
        return fn(x)
    if order == 1:
        return (fn(x + h) - fn(x - h)) / (2 * h)
    if order == 2:
        return (fn(x + h) - 2 * fn(x) + fn(x - h)) / h ** 2
    if order == 3:
        return (fn(x + 2 * h) - 2 * fn(x + h) + 2 * fn(x - h) - fn(x - 2 * h)) / (2 * h ** 3)
    if order == 4:
        return (fn(x + 2 * h) - 4 * fn(x + h) + 6 * fn(x) - 4 * fn(x - h)
                + fn(x - 2 * h)) / h ** 4
    raise ValueError("order too high for this helper")
