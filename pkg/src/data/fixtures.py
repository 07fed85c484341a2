"""
Reference scenarios with known closed-form answers.
"""

import numpy as np

from src.data.scenario import Scenario
from src.measure import MeasureSpace, Partition
from src.wct_operator import OpMatrix


def scenario_a() -> Scenario:
    """Two atoms of mass 1/2, trivial partition, u = (1, 2), w = (2, 1).

    T = [[1, 2], [1/2, 1]], ||T|| = 5/2, spectrum {2, 0}.
    """
    space = MeasureSpace(('x1', 'x2'), np.array([0.5, 0.5]))
    return Scenario(space, Partition.trivial(2), [1, 2], [2, 1], label='scenario-a')


def scenario_b() -> Scenario:
    """u = w = 1: T = E is an orthogonal projection and belongs to every class."""
    space = MeasureSpace(('x1', 'x2'), np.array([0.5, 0.5]))
    return Scenario(space, Partition.trivial(2), [1, 1], [1, 1], label='scenario-b')


def scenario_c() -> Scenario:
    """Discrete partition: T is the multiplication operator by uw, a normal operator."""
    space = MeasureSpace(('x1', 'x2', 'x3'), np.array([0.2, 0.3, 0.5]))
    u = np.array([1.0, 2.0j, -0.5])
    w = np.array([3.0, 1.0 - 1.0j, 2.0])
    return Scenario(space, Partition.discrete(3), u, w, label='scenario-c')


def orthogonal_pair() -> Scenario:
    """u = (1, 0), w = (0, 1): E(uw) = 0, T is nilpotent with T^2 = 0 and T != 0."""
    space = MeasureSpace(('x1', 'x2'), np.array([0.5, 0.5]))
    return Scenario(space, Partition.trivial(2), [1, 0], [0, 1], label='orthogonal-pair')


def recognizer_space() -> MeasureSpace:
    return MeasureSpace.uniform(3)


def recognizer_partition() -> Partition:
    return Partition(((0, 1), (2,)), 3)


def recognizer_weight() -> np.ndarray:
    return np.array([0.5, 1.5, 1.0])


def jordan_control() -> OpMatrix:
    """[[1, 1], [0, 1]]: not idempotent, so not a conditional type operator."""
    return OpMatrix(np.array([[1.0, 1.0], [0.0, 1.0]], dtype=complex), MeasureSpace.uniform(2))
