"""
Test Suite for the class oracles
Tests the literal inequalities, the randomized search, block witnesses and the matrix class checks.
"""

import unittest

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.criteria import ClassParams, Status, evaluate_class
from src.data.fixtures import orthogonal_pair, scenario_a, scenario_b
from src.data.generators import CampaignConfig, generate
from src.exceptions import DimensionMismatchError, PreconditionError
from src.measure import MeasureSpace, Partition
from src.oracles import (
    OracleConfig, block_witness, check_a_class, check_quasi_star_a_class, literal_sides,
    oracle_nk_quasi_star, oracle_paranormal, oracle_quasi_star_paranormal,
    oracle_star_paranormal, run_oracle, verify_witness
)
from src.wct_operator import WctOperator

QUICK = OracleConfig(samples=300, ascent_steps=10)
CONFIG = CampaignConfig(count=1000, seed=3)
EXACT = (('q*p', ClassParams()), ('(n,k)', ClassParams(n=1, k=1)),
         ('(n,k)', ClassParams(n=2, k=2)))


class TestLiteralSides(unittest.TestCase):
    def setUp(self):
        self.Mx = scenario_a().operator().to_matrix()

    def test_star_paranormal_at_first_atom(self):
        """Test ||T*x||^2 against ||T^2 x|| ||x|| at x = (1, 0)."""
        sides = literal_sides(self.Mx, [1, 0], '*p', ClassParams())
        self.assertAlmostEqual(sides.lhs, 2.5)
        self.assertAlmostEqual(sides.rhs, np.sqrt(1.25))
        self.assertAlmostEqual(sides.violation, (2.5 - np.sqrt(1.25)) / (6.25 * 0.5))

    def test_quasi_star_paranormal_at_first_atom(self):
        """Test the q*p inequality is violated at x = (1, 0)."""
        sides = literal_sides(self.Mx, [1, 0], 'q*p', ClassParams())
        self.assertAlmostEqual(sides.lhs, 3.90625)
        self.assertAlmostEqual(sides.rhs, 2.5)
        self.assertTrue(verify_witness(self.Mx, [1, 0], 'q*p', ClassParams()))

    def test_bad_input(self):
        """Test wrong vector sizes and unknown classes are rejected."""
        with self.assertRaises(DimensionMismatchError):
            literal_sides(self.Mx, [1, 0, 0], 'q*p', ClassParams())
        with self.assertRaises(PreconditionError):
            literal_sides(self.Mx, [1, 0], 'nope', ClassParams())


class TestOracleSearch(unittest.TestCase):
    def test_scenario_a_counterexample(self):
        """Test the oracle finds a verified q*p counterexample in Scenario A."""
        Mx = scenario_a().operator().to_matrix()
        verdict = oracle_quasi_star_paranormal(Mx, QUICK)
        self.assertTrue(verdict.fails)
        self.assertEqual(verdict.source, 'oracle')
        self.assertLess(verdict.margin, 0.0)
        self.assertTrue(verify_witness(Mx, verdict.witness_vector, 'q*p', ClassParams()))
        self.assertTrue(oracle_star_paranormal(Mx, QUICK).fails)

    def test_projection_is_in_every_class(self):
        """Test no counterexample exists for T = E."""
        Mx = scenario_b().operator().to_matrix()
        verdict = oracle_paranormal(Mx, QUICK)
        self.assertTrue(verdict.holds)
        self.assertTrue(verdict.details['empirical'])
        for class_id, params in (('*p', ClassParams()), ('abs-k', ClassParams(k=2)),
                                 ('n*', ClassParams(n=2)), ('m', ClassParams(M=1.0))):
            self.assertTrue(run_oracle(Mx, class_id, params, QUICK).holds, class_id)

    def test_nilpotent_fails_operator_form(self):
        """Test T^2 = 0, T != 0 violates (1,1)-quasi-* and 1-* paranormality."""
        Mx = orthogonal_pair().operator().to_matrix()
        self.assertTrue(oracle_nk_quasi_star(Mx, 1, 1, QUICK).fails)
        self.assertTrue(run_oracle(Mx, 'n*', ClassParams(n=1), QUICK).fails)

    def test_zero_operator(self):
        """Test the zero operator holds without sampling."""
        T = WctOperator(MeasureSpace.uniform(2), Partition.trivial(2), [0, 0], [1, 1])
        verdict = run_oracle(T.to_matrix(), 'q*p', ClassParams(), QUICK)
        self.assertTrue(verdict.holds)
        self.assertTrue(verdict.details['zero_operator'])

    def test_deterministic_per_seed(self):
        """Test equal seeds and worker counts give equal witnesses."""
        Mx = scenario_a().operator().to_matrix()
        cfg = OracleConfig(samples=200, seed=5, workers=2, ascent_steps=5)
        first = run_oracle(Mx, 'q*p', ClassParams(), cfg)
        second = run_oracle(Mx, 'q*p', ClassParams(), cfg)
        np.testing.assert_array_equal(first.witness_vector, second.witness_vector)
        self.assertEqual(first.details['workers'], 2)

    def test_config_validation(self):
        """Test invalid oracle settings are rejected and None overrides are ignored."""
        with self.assertRaises(PreconditionError):
            OracleConfig(samples=0)
        with self.assertRaises(PreconditionError):
            OracleConfig(workers=0)
        cfg = OracleConfig.from_settings(samples=None, seed=9)
        self.assertEqual(cfg.seed, 9)
        self.assertGreaterEqual(cfg.samples, 1)

    @settings(max_examples=40, deadline=None)
    @given(index=st.integers(0, CONFIG.count - 1), which=st.integers(0, len(EXACT) - 1))
    def test_criterion_holds_means_no_counterexample(self, index, which):
        """Test exact criteria that hold are never refuted by the oracle."""
        class_id, params = EXACT[which]
        T = generate(CONFIG, index).operator()
        assume(evaluate_class(T, class_id, params).holds)
        verdict = run_oracle(T.to_matrix(), class_id, params, QUICK, T.partition)
        self.assertIsNot(verdict.status, Status.FAILS)


class TestBlockWitness(unittest.TestCase):
    def test_scenario_a(self):
        """Test a block witness exists at the failing atom of Scenario A."""
        T = scenario_a().operator()
        x = block_witness(T, 'x1', 'q*p', ClassParams())
        self.assertIsNotNone(x)
        self.assertTrue(verify_witness(T.to_matrix(), x, 'q*p', ClassParams()))

    def test_requires_failing_atom(self):
        """Test asking for a witness at a passing atom raises."""
        T = scenario_b().operator()
        with self.assertRaises(PreconditionError):
            block_witness(T, 'x1', 'q*p', ClassParams())

    @settings(max_examples=60, deadline=None)
    @given(index=st.integers(0, CONFIG.count - 1), which=st.integers(0, len(EXACT) - 1))
    def test_failing_criterion_has_witness(self, index, which):
        """Test a clear criterion failure always yields a verified witness on its block."""
        class_id, params = EXACT[which]
        T = generate(CONFIG, index).operator()
        verdict = evaluate_class(T, class_id, params)
        assume(verdict.fails and verdict.margin < -1e-3)
        atom = T.space.index(verdict.witness_atom)
        assume(T.boundedness[atom] > 0.1 * T.norm())
        x = block_witness(T, verdict.witness_atom, class_id, params)
        self.assertIsNotNone(x)
        self.assertTrue(verify_witness(T.to_matrix(), x, class_id, params))
        block = T.partition.block_of(atom)
        outside = np.setdiff1d(np.arange(T.space.size), block)
        np.testing.assert_array_equal(x[outside], 0)


class TestMatrixClassChecks(unittest.TestCase):
    def test_a_class(self):
        """Test Scenario A is not A-class while the projection is."""
        self.assertTrue(check_a_class(scenario_a().operator().to_matrix()).fails)
        verdict = check_a_class(scenario_b().operator().to_matrix())
        self.assertTrue(verdict.holds)
        self.assertEqual(verdict.source, 'matrix')

    def test_quasi_star_a_class(self):
        """Test the projection is quasi-*-A-class."""
        verdict = check_quasi_star_a_class(scenario_b().operator().to_matrix())
        self.assertTrue(verdict.holds)
        self.assertEqual(verdict.class_id, 'q*a-class')


if __name__ == '__main__':
    unittest.main()
