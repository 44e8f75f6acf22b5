import numpy as np
import pytest

from renewalsim import ConstantTail, KernelSchedule, PeriodicTail, StateSpace


def two_state(p00: float, p10: float) -> KernelSchedule:
    """Homogeneous chain on {0, 1} with target {0}.

    p00 is the stay probability at 0 and p10 the probability of moving
    from 1 back to 0.
    """
    matrix = [[p00, 1.0 - p00], [p10, 1.0 - p10]]
    return KernelSchedule(StateSpace(2, frozenset({0})), (), ConstantTail(matrix))


def periodic_two_state(mats) -> KernelSchedule:
    return KernelSchedule(StateSpace(2, frozenset({0})), (), PeriodicTail(tuple(mats)))


def delta(size: int, state: int) -> np.ndarray:
    out = np.zeros(size)
    out[state] = 1.0
    return out


@pytest.fixture
def identity_2() -> KernelSchedule:
    return two_state(1.0, 0.0)


@pytest.fixture
def flip_flop() -> KernelSchedule:
    """Deterministic period-2 chain 0 -> 1 -> 0."""
    return two_state(0.0, 1.0)
