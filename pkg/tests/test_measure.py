"""
Test Suite for the measure core
Tests measure spaces, partitions and the conditional expectation.
"""

import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.data.fixtures import scenario_a, scenario_b
from src.exceptions import DimensionMismatchError, ScenarioFormatError
from src.measure import (
    MeasureSpace, Partition, block_measures, cond_data, cond_exp, inner, is_measurable,
    norm, partition_from_atom_blocks, support, support_atoms
)


def random_setup(seed: int):
    """A random space, partition and two random functions on it."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    space = MeasureSpace(tuple(f"x{i + 1}" for i in range(n)), rng.uniform(0.1, 2.0, n))
    partition = Partition.from_labels(rng.integers(0, max(1, n // 2) + 1, n))
    f = rng.normal(size=n) + 1j * rng.normal(size=n)
    g = rng.normal(size=n) + 1j * rng.normal(size=n)
    return space, partition, f, g


class TestMeasureSpace(unittest.TestCase):
    def test_uniform(self):
        """Test uniform spaces name atoms x1..xn."""
        space = MeasureSpace.uniform(4)
        self.assertEqual(space.atoms, ('x1', 'x2', 'x3', 'x4'))
        self.assertAlmostEqual(float(space.mu.sum()), 1.0)

    def test_rejects_bad_weights(self):
        """Test non-positive and mismatched weights are rejected."""
        with self.assertRaises(ScenarioFormatError):
            MeasureSpace(('a', 'b'), np.array([1.0, 0.0]))
        with self.assertRaises(ScenarioFormatError):
            MeasureSpace(('a', 'b'), np.array([1.0]))
        with self.assertRaises(ScenarioFormatError):
            MeasureSpace(('a', 'a'), np.array([1.0, 1.0]))

    def test_index_unknown_atom(self):
        """Test looking up an unknown atom raises."""
        with self.assertRaises(ScenarioFormatError):
            MeasureSpace.uniform(2).index('x9')


class TestPartition(unittest.TestCase):
    def test_canonical_blocks(self):
        """Test blocks are sorted and ordered by their smallest atom."""
        partition = Partition(((3, 1), (0, 2)), 4)
        self.assertEqual(partition.blocks, ((0, 2), (1, 3)))
        self.assertEqual(partition.labels.tolist(), [0, 1, 0, 1])
        self.assertEqual(partition.block_of(3), (1, 3))

    def test_from_labels(self):
        """Test building a partition from block labels."""
        partition = Partition.from_labels([5, 5, 2])
        self.assertEqual(partition, Partition(((0, 1), (2,)), 3))

    def test_invalid_partitions(self):
        """Test overlapping or incomplete blocks are rejected."""
        with self.assertRaises(ScenarioFormatError):
            Partition(((0, 1), (1,)), 2)
        with self.assertRaises(ScenarioFormatError):
            Partition(((0,),), 2)

    def test_from_atom_blocks(self):
        """Test partitions given by atom identifiers."""
        space = MeasureSpace.uniform(3)
        partition = partition_from_atom_blocks([['x3'], ['x1', 'x2']], space)
        self.assertEqual(partition.blocks, ((0, 1), (2,)))
        self.assertEqual(block_measures(partition, space).tolist(), [2 / 3, 1 / 3])


class TestConditionalExpectation(unittest.TestCase):
    def setUp(self):
        self.a = scenario_a()

    def test_scenario_a_average(self):
        """Test E(u) on the trivial partition is the weighted average."""
        np.testing.assert_allclose(cond_exp(self.a.u, self.a.partition, self.a.space),
                                   [1.5, 1.5])

    def test_discrete_partition_is_identity(self):
        """Test E is the identity on singleton blocks."""
        space = MeasureSpace.uniform(3)
        f = np.array([1.0, -2.0j, 3.5])
        np.testing.assert_array_equal(cond_exp(f, Partition.discrete(3), space), f)

    def test_dimension_mismatch(self):
        """Test functions of the wrong length are rejected."""
        with self.assertRaises(DimensionMismatchError):
            cond_exp([1.0, 2.0, 3.0], self.a.partition, self.a.space)

    def test_inner_and_norm(self):
        """Test <u, u> = 5/2 on Scenario A."""
        self.assertAlmostEqual(inner(self.a.u, self.a.u, self.a.space), 2.5)
        self.assertAlmostEqual(norm(self.a.u, self.a.space), np.sqrt(2.5))

    def test_measurability(self):
        """Test block-constant functions are measurable and others are not."""
        partition = Partition(((0, 1), (2,)), 3)
        space = MeasureSpace.uniform(3)
        self.assertTrue(is_measurable([2, 2, 5], partition, space))
        self.assertFalse(is_measurable([2, 3, 5], partition, space))

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1))
    def test_expectation_laws(self, seed):
        """Test idempotence, self-adjointness, averaging and integral preservation."""
        space, partition, f, g = random_setup(seed)
        Ef = cond_exp(f, partition, space)
        Eg = cond_exp(g, partition, space)
        tol = 1e-12 * max(1.0, np.max(np.abs(f)), np.max(np.abs(g))) ** 2

        np.testing.assert_allclose(cond_exp(Ef, partition, space), Ef, rtol=0, atol=tol)
        self.assertLessEqual(abs(inner(Ef, g, space) - inner(f, Eg, space)), tol * space.size)
        np.testing.assert_allclose(cond_exp(f * Eg, partition, space), Ef * Eg, rtol=0,
                                   atol=tol * 10)
        self.assertLessEqual(abs(np.sum(Ef * space.mu) - np.sum(f * space.mu)),
                             tol * space.size)


class TestConditionalData(unittest.TestCase):
    def test_scenario_a(self):
        """Test the conditional moments of Scenario A."""
        a = scenario_a()
        c = cond_data(a.u, a.w, a.partition, a.space)
        np.testing.assert_allclose(c.Eu2, [2.5, 2.5])
        np.testing.assert_allclose(c.Ew2, [2.5, 2.5])
        np.testing.assert_allclose(c.Euw, [2.0, 2.0])
        self.assertTrue(np.all(c.S) and np.all(c.G) and np.all(c.S0))
        np.testing.assert_allclose(c.q, [4.0, 4.0])
        self.assertEqual(c.cs_defect, 0.0)

    def test_scenario_b(self):
        """Test the conditional moments of Scenario B are all 1."""
        b = scenario_b()
        c = cond_data(b.u, b.w, b.partition, b.space)
        np.testing.assert_allclose(np.concatenate([c.Eu2, c.Ew2, c.Euw.real]), np.ones(6))

    def test_orthogonal_pair_support(self):
        """Test E(uw) = 0 leaves S0 empty while S and G are full."""
        space = MeasureSpace.uniform(2)
        c = cond_data([1, 0], [0, 1], Partition.trivial(2), space)
        self.assertTrue(np.all(c.S) and np.all(c.G))
        self.assertFalse(np.any(c.S0))
        self.assertEqual(support_atoms(c.S, space), frozenset({'x1', 'x2'}))

    def test_support_tolerance(self):
        """Test support is relative to the largest value and rejects negative tolerances."""
        self.assertEqual(support([1.0, 1e-14, 0.0]).tolist(), [True, False, False])
        with self.assertRaises(ValueError):
            support([1.0], tol=-1.0)


if __name__ == '__main__':
    unittest.main()
