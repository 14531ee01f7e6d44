#!/usr/bin/env python3
"""
Unit tests for zdistill.linalg: Hermitian exponentials, biorthogonal
eigendecomposition, powers applied to states and tridiagonal minors.
"""

import math
import sys
import unittest
from pathlib import Path

import numpy as np
import scipy.linalg

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from zdistill.errors import InvariantViolationError, NonDiagonalizableError
from zdistill.linalg import (
    HermitianOperator,
    as_complex_matrix,
    hermitian_matexp,
    power_apply,
    spectral_decompose,
    spectral_order,
    spectral_power,
    spectral_yield,
    tridiagonal_determinants,
)


def random_hermitian(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


def random_contraction(rng, dim):
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return A / (1.05 * np.linalg.norm(A, 2))


def random_density(rng, dim):
    B = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = B @ B.conj().T
    return rho / np.trace(rho).real


class TestMatrixCarriers(unittest.TestCase):
    """Test input coercion and the Hermitian invariant."""

    def test_rejects_non_square(self):
        with self.assertRaises(InvariantViolationError):
            as_complex_matrix(np.zeros((2, 3)))

    def test_rejects_nan(self):
        with self.assertRaises(InvariantViolationError):
            as_complex_matrix([[1.0, float("nan")], [0.0, 1.0]])

    def test_rejects_non_hermitian(self):
        with self.assertRaises(InvariantViolationError):
            HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_sum_and_negation_stay_hermitian(self):
        H = HermitianOperator(np.diag([1.0, 2.0]))
        K = HermitianOperator(np.array([[0.0, 1j], [-1j, 0.0]]))
        np.testing.assert_allclose((H + K).matrix, H.matrix + K.matrix)
        np.testing.assert_allclose((-H).matrix, -H.matrix)


class TestHermitianMatexp(unittest.TestCase):
    """Test e^{-iHt} via diagonalization."""

    def test_zero_generator_is_identity(self):
        for dim in (1, 3, 5):
            np.testing.assert_allclose(hermitian_matexp(np.zeros((dim, dim)), 1.7), np.eye(dim), atol=1e-15)

    def test_diagonal_phases(self):
        U = hermitian_matexp(np.diag([0.0, 2.0]), math.pi / 2)
        np.testing.assert_allclose(U, np.diag([1.0, -1.0]), atol=1e-12)

    def test_random_unitarity_and_inverse(self):
        rng = np.random.default_rng(7)
        H = random_hermitian(rng, 8)
        U = hermitian_matexp(H, 0.3)
        self.assertLess(np.max(np.abs(U.conj().T @ U - np.eye(8))), 1e-10)
        self.assertLess(np.max(np.abs(U @ hermitian_matexp(H, -0.3) - np.eye(8))), 1e-10)

    def test_matches_scipy_expm(self):
        rng = np.random.default_rng(8)
        H = random_hermitian(rng, 8)
        np.testing.assert_allclose(hermitian_matexp(H, 0.3), scipy.linalg.expm(-0.3j * H), atol=1e-10)

    def test_group_property(self):
        rng = np.random.default_rng(9)
        H = random_hermitian(rng, 6)
        product = hermitian_matexp(H, 0.4) @ hermitian_matexp(H, 1.1)
        np.testing.assert_allclose(product, hermitian_matexp(H, 1.5), atol=1e-10)

    def test_rejects_infinite_time(self):
        with self.assertRaises(InvariantViolationError):
            hermitian_matexp(np.eye(2), float("inf"))


class TestSpectralDecompose(unittest.TestCase):
    """Test the biorthogonal eigendecomposition."""

    def test_diagonal(self):
        spectral = spectral_decompose(np.diag([0.5, 0.2j]))
        np.testing.assert_allclose(spectral.eigenvalues, [0.5, 0.2j])
        np.testing.assert_allclose(spectral.right, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(spectral.left, np.eye(2), atol=1e-15)
        self.assertAlmostEqual(spectral.dominant_gap, 0.4)

    def test_jordan_block_is_rejected(self):
        with self.assertRaises(NonDiagonalizableError):
            spectral_decompose(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_tie_breaking_order(self):
        order = spectral_order(np.array([1j, -1.0, 1.0]))
        self.assertEqual(list(order), [2, 0, 1])

    def test_one_dimensional_gap(self):
        self.assertEqual(spectral_decompose(np.array([[0.3]])).dominant_gap, 0.0)

    def test_random_invariants(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            V = random_contraction(rng, 6)
            spectral = spectral_decompose(V)
            magnitudes = np.abs(spectral.eigenvalues)
            self.assertTrue(np.all(np.diff(magnitudes) <= 1e-9))
            np.testing.assert_allclose(spectral.left @ spectral.right, np.eye(6), atol=1e-9)
            np.testing.assert_allclose(spectral.right @ spectral.left, np.eye(6), atol=1e-9)
            np.testing.assert_allclose(np.linalg.norm(spectral.right, axis=0), np.ones(6), atol=1e-12)
            np.testing.assert_allclose(spectral.reconstruct(), V, atol=1e-9)

    def test_spectral_power(self):
        rng = np.random.default_rng(12)
        V = random_contraction(rng, 5)
        spectral = spectral_decompose(V)
        np.testing.assert_allclose(spectral_power(spectral, 7), np.linalg.matrix_power(V, 7), atol=1e-10)


class TestPowerApply(unittest.TestCase):
    """Test V^N rho V^+N and its trace."""

    def test_zero_power(self):
        rng = np.random.default_rng(13)
        rho = random_density(rng, 4)
        matrix, trace = power_apply(random_contraction(rng, 4), rho, 0)
        np.testing.assert_allclose(matrix, rho)
        self.assertAlmostEqual(trace, 1.0, places=12)

    def test_unitary_preserves_trace(self):
        rng = np.random.default_rng(14)
        U = hermitian_matexp(random_hermitian(rng, 4), 0.8)
        _, trace = power_apply(U, random_density(rng, 4), 5)
        self.assertAlmostEqual(trace, 1.0, places=10)

    def test_matches_spectral_sum(self):
        rng = np.random.default_rng(15)
        V = random_contraction(rng, 6)
        rho = random_density(rng, 6)
        _, trace = power_apply(V, rho, 12)
        self.assertAlmostEqual(trace, spectral_yield(spectral_decompose(V), rho, 12), delta=1e-8)

    def test_dimension_mismatch(self):
        with self.assertRaises(InvariantViolationError):
            power_apply(np.eye(3), np.eye(2) / 2, 1)

    def test_negative_power(self):
        with self.assertRaises(InvariantViolationError):
            power_apply(np.eye(2), np.eye(2) / 2, -1)


class TestTridiagonalDeterminants(unittest.TestCase):
    """Test the three-term recurrence."""

    def test_small_case(self):
        np.testing.assert_allclose(tridiagonal_determinants([2.0, 2.0, 2.0], [1.0, 1.0]), [2.0, 3.0, 4.0])

    def test_matches_dense_determinant(self):
        rng = np.random.default_rng(16)
        a = rng.normal(size=7)
        b = rng.normal(size=6)
        dense = np.diag(a) + np.diag(b, 1) + np.diag(b, -1)
        minors = tridiagonal_determinants(a, b)
        for i in range(1, 8):
            self.assertAlmostEqual(minors[i - 1], np.linalg.det(dense[:i, :i]), delta=1e-10)

    def test_shape_check(self):
        with self.assertRaises(InvariantViolationError):
            tridiagonal_determinants([1.0, 2.0], [1.0, 1.0])


if __name__ == '__main__':
    unittest.main()
