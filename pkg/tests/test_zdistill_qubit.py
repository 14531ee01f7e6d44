#!/usr/bin/env python3
"""
Unit tests for the three-qubit model: Hamiltonians, closed-form parity
blocks, the optimality solver and distillation at solved points.
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from zdistill.engine import DensityMatrix
from zdistill.errors import InvariantViolationError, PreconditionError
from zdistill.qubit import (
    Branch,
    QubitParams,
    assemble_parity_operator,
    closed_form_blocks,
    compile_qubit_cycle,
    m_block_eigenvalues,
    n_block_remaining_eigenvalue,
    parity_operator,
    qubit_angles,
    solve_optimal_condition,
    target_state,
    verify_distillation,
)


class TestParams(unittest.TestCase):
    """Test parameter validation and angles."""

    def test_angles(self):
        angles = qubit_angles(QubitParams(1.0, 1.0, 1.0, 1.0, 1.0))
        self.assertAlmostEqual(angles.phi_A, math.sqrt(2.0))
        self.assertAlmostEqual(angles.cos2theta_A, 1.0 / math.sqrt(2.0))
        self.assertAlmostEqual(angles.sin2theta_A ** 2 + angles.cos2theta_A ** 2, 1.0, delta=1e-12)

    def test_dimensionless(self):
        p = QubitParams.from_dimensionless(2.8, 1.4, 0.3)
        self.assertEqual(p.omega, 1.0)
        self.assertAlmostEqual(p.g_A * p.t_A, 2.8)
        self.assertTrue(p.symmetric)
        with self.assertRaises(InvariantViolationError):
            QubitParams.from_dimensionless(2.8, 0.0, 0.3)

    def test_negative_values_rejected(self):
        with self.assertRaises(InvariantViolationError):
            QubitParams(1.0, -0.5, 1.0, 1.0, 1.0)
        with self.assertRaises(InvariantViolationError):
            QubitParams(1.0, 1.0, 1.0, float("nan"), 1.0)


class TestCycleOperator(unittest.TestCase):
    """Test the compiled cycle against its closed form."""

    def test_uncoupled_cycle_is_diagonal(self):
        V = compile_qubit_cycle(QubitParams(1.0, 0.0, 0.0, 1.0, 1.0, 0.3, 0.4)).matrix
        np.testing.assert_allclose(V - np.diag(np.diag(V)), np.zeros((4, 4)), atol=1e-12)
        np.testing.assert_allclose(np.abs(np.diag(V)), np.ones(4), atol=1e-12)

    def test_closed_form_matches_compiled(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            values = rng.uniform(0.1, 2.0, size=7)
            p = QubitParams(*values)
            compiled = compile_qubit_cycle(p).matrix
            assembled = assemble_parity_operator(closed_form_blocks(p))
            np.testing.assert_allclose(assembled, compiled, atol=1e-10)

    def test_parity_is_conserved(self):
        P = parity_operator()
        V = compile_qubit_cycle(QubitParams(1.0, 0.7, 1.2, 0.9, 1.3, 0.2, 0.5)).matrix
        np.testing.assert_allclose(V @ P, P @ V, atol=1e-12)

    def test_contraction(self):
        V = compile_qubit_cycle(QubitParams(1.0, 0.7, 1.2, 0.9, 1.3, 0.2, 0.5)).matrix
        self.assertLessEqual(np.linalg.norm(V, 2), 1.0 + 1e-12)

    def test_even_block_eigenvalues(self):
        p = QubitParams(1.0, 0.7, 1.2, 0.9, 1.3, 0.2, 0.5)
        V = compile_qubit_cycle(p).matrix
        even = V[np.ix_((0, 3), (0, 3))]
        np.testing.assert_allclose(np.sort_complex(m_block_eigenvalues(p)),
                                   np.sort_complex(np.linalg.eigvals(even)), atol=1e-10)


class TestTargetState(unittest.TestCase):

    def test_normalized_odd_state(self):
        psi = target_state(0.7)
        self.assertAlmostEqual(abs(psi.overlap), 1.0)
        self.assertAlmostEqual(np.linalg.norm(psi.state), 1.0)
        self.assertEqual(psi.state[0], 0.0)
        self.assertEqual(psi.state[3], 0.0)


class TestSolver(unittest.TestCase):
    """Test solve_optimal_condition."""

    def test_degenerate_x_rejected(self):
        with self.assertRaises(PreconditionError):
            solve_optimal_condition(math.pi / 2)
        with self.assertRaises(PreconditionError):
            solve_optimal_condition(math.pi)

    def test_no_root_below_threshold(self):
        self.assertEqual(solve_optimal_condition(math.pi / 3), [])

    def test_both_branches(self):
        points = solve_optimal_condition(2.8)
        self.assertGreaterEqual(len(points), 2)
        self.assertEqual([p.branch for p in points[:2]], [Branch.OPT1, Branch.SHIFTED])
        phis = [math.hypot(p.x, p.y) for p in points]
        self.assertTrue(any(math.pi < phi < 1.5 * math.pi for phi in phis))
        for point in points:
            self.assertGreater(point.y, 0.0)
            self.assertLessEqual(point.y, 10.0 + 1e-12)
            self.assertTrue(0.0 <= point.z < 2 * math.pi)
            self.assertAlmostEqual(abs(point.lambda0), 1.0, delta=1e-12)

    def test_modulus_condition_holds(self):
        for point in solve_optimal_condition(2.6):
            phi = math.hypot(point.x, point.y)
            residual = math.sin(phi) ** 2 * point.x ** 2 / phi ** 2 - math.sin(point.x) ** 2
            self.assertLess(abs(residual), 1e-12)

    def test_target_is_eigenvector(self):
        for point in solve_optimal_condition(3.0):
            V = compile_qubit_cycle(point.params).matrix
            psi = target_state(point.chi).state
            np.testing.assert_allclose(V @ psi, point.lambda0 * psi, atol=1e-9)

    def test_remaining_odd_eigenvalue(self):
        point = [p for p in solve_optimal_condition(2.8) if p.branch == Branch.OPT1][0]
        p = point.params
        expected = closed_form_blocks(p).phase_odd * n_block_remaining_eigenvalue(p)
        eigenvalues = np.linalg.eigvals(compile_qubit_cycle(p).matrix)
        self.assertLess(np.min(np.abs(eigenvalues - expected)), 1e-8)
        self.assertAlmostEqual(abs(expected), abs(math.cos(2 * 2.8)), delta=1e-12)

    def test_record(self):
        record = solve_optimal_condition(2.8)[0].to_record()
        self.assertEqual(set(record), {"x", "y", "z", "chi", "lambda0_re", "lambda0_im", "branch"})


class TestDistillation(unittest.TestCase):
    """Test verify_distillation at solved points."""

    def test_maximally_mixed_start(self):
        point = solve_optimal_condition(2.8)[0]
        report = verify_distillation(point)
        self.assertTrue(report.passed, report.checks)
        self.assertGreater(report.gap, 1e-3)
        self.assertAlmostEqual(report.final_yield, 0.25, delta=1e-4)
        self.assertIsNotNone(report.convergence_steps)

    def test_pure_target_start(self):
        point = solve_optimal_condition(2.8)[0]
        rho0 = DensityMatrix.from_pure(target_state(point.chi).state)
        report = verify_distillation(point, rho0=rho0, n_max=50)
        self.assertTrue(report.passed, report.checks)
        self.assertAlmostEqual(report.final_yield, 1.0, delta=1e-9)
        self.assertEqual(report.convergence_steps, 0)


if __name__ == '__main__':
    unittest.main()
