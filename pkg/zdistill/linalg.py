#!/usr/bin/env python3
"""
zdistill.linalg - dense complex linear algebra for conditional dynamics

Hermitian propagators, non-Hermitian eigendecomposition with a biorthogonal
left/right basis, and matrix powers applied to density matrices.

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass
from typing import Tuple, Union
import logging

import numpy as np
import scipy.linalg

from .errors import InvariantViolationError, NonDiagonalizableError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, list, tuple]


# ============================================================================
# Tolerances
# ============================================================================

HERMITIAN_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-9
BIORTHOGONAL_TOL = 1e-9
ORDER_DECIMALS = 9


# ============================================================================
# Matrix carriers
# ============================================================================

def as_complex_matrix(values: ArrayLike, name: str = "matrix") -> np.ndarray:
    """
    Coerce input into a square, finite, complex 2-D array.

    Args:
        values: Anything numpy can turn into a 2-D array
        name: Label used in error messages

    Returns:
        A fresh complex128 array

    Raises:
        InvariantViolationError: If the array is not square or not finite
    """
    matrix = np.array(values, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] == 0:
        raise InvariantViolationError(f"{name} must be a non-empty square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise InvariantViolationError(f"{name} has non-finite entries")
    return matrix


def _frozen(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian generator (energy units, hbar = 1)."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = as_complex_matrix(self.matrix, "Hermitian operator")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        deviation = float(np.max(np.abs(matrix - matrix.conj().T)))
        if deviation > HERMITIAN_TOL * scale:
            raise InvariantViolationError(f"operator is not Hermitian (max |A - A^+| = {deviation:.3e})")
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + other.matrix)

    def __neg__(self) -> "HermitianOperator":
        return HermitianOperator(-self.matrix)

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def hermitian_matexp(H: Union[HermitianOperator, ArrayLike], t: float) -> np.ndarray:
    """
    Propagator e^{-iHt} from the eigendecomposition of H.

    Args:
        H: Hermitian generator (validated if given as a raw array)
        t: Evolution time

    Returns:
        Unitary matrix U = V diag(e^{-i e_j t}) V^+

    Raises:
        InvariantViolationError: If H is not Hermitian or t is not finite

    Examples:
        >>> hermitian_matexp(np.zeros((2, 2)), 1.7)
        array([[1.+0.j, 0.+0.j],
               [0.+0.j, 1.+0.j]])
    """
    if not isinstance(H, HermitianOperator):
        H = HermitianOperator(H)
    if not np.isfinite(t):
        raise InvariantViolationError(f"evolution time must be finite, got {t}")
    energies, vectors = scipy.linalg.eigh(H.matrix)
    phases = np.exp(-1j * energies * t)
    return (vectors * phases) @ vectors.conj().T


# ============================================================================
# Non-Hermitian spectral decomposition
# ============================================================================

@dataclass(frozen=True)
class SpectralData:
    """
    Eigenvalues with biorthogonal right and left eigenvectors.

    ``right[:, n]`` is the unit-norm u_n, ``left[n, :]`` is the covector v_n,
    so that ``left @ right`` is the identity.
    """
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def dominant_gap(self) -> float:
        """|lambda_1| / |lambda_0|, zero for one-dimensional or nilpotent operators."""
        if self.dim < 2:
            return 0.0
        top = abs(self.eigenvalues[0])
        if top == 0.0:
            return 0.0
        return float(abs(self.eigenvalues[1]) / top)

    def right_vector(self, n: int) -> np.ndarray:
        return self.right[:, n]

    def left_vector(self, n: int) -> np.ndarray:
        return self.left[n, :]

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left

    def __repr__(self):
        lead = self.eigenvalues[0] if self.dim else 0
        return f"SpectralData(dim={self.dim}, lambda0={lead:.6g}, gap={self.dominant_gap:.6g})"


def spectral_order(eigenvalues: np.ndarray) -> np.ndarray:
    """
    Index order by descending |lambda|, then descending real and imaginary part.

    Magnitudes are rounded so that numerically equal moduli tie.
    """
    magnitudes = np.round(np.abs(eigenvalues), ORDER_DECIMALS)
    reals = np.round(eigenvalues.real, ORDER_DECIMALS + 3)
    imags = np.round(eigenvalues.imag, ORDER_DECIMALS + 3)
    # lexsort keys are given minor-first
    return np.lexsort((-imags, -reals, -magnitudes))


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate every column so that its largest component is real positive."""
    columns = vectors / np.linalg.norm(vectors, axis=0)
    pivots = np.argmax(np.abs(columns), axis=0)
    pivot_values = columns[pivots, np.arange(columns.shape[1])]
    return columns * (np.abs(pivot_values) / pivot_values)


def spectral_decompose(V: ArrayLike) -> SpectralData:
    """
    Biorthogonal eigendecomposition of a general square matrix.

    Args:
        V: Square complex matrix

    Returns:
        SpectralData ordered by descending |lambda| with ``left @ right = 1``

    Raises:
        NonDiagonalizableError: If the eigenvectors do not span the space
            (reconstruction or biorthogonality residual above 1e-9)

    Examples:
        >>> spectral_decompose(np.diag([0.5, 0.2j])).eigenvalues
        array([0.5+0.j , 0. +0.2j])
    """
    matrix = as_complex_matrix(V, "effective operator")
    dim = matrix.shape[0]
    eigenvalues, vectors = scipy.linalg.eig(matrix)
    order = spectral_order(eigenvalues)
    eigenvalues = eigenvalues[order]
    right = _fix_phases(vectors[:, order])

    try:
        left = scipy.linalg.inv(right)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NonDiagonalizableError(f"eigenvector matrix is singular: {exc}") from exc

    if not np.all(np.isfinite(left)):
        raise NonDiagonalizableError("eigenvector matrix is singular")

    scale = max(1.0, float(np.max(np.abs(matrix))))
    reconstruction = float(np.max(np.abs((right * eigenvalues) @ left - matrix)))
    biorthogonality = float(np.max(np.abs(left @ right - np.eye(dim))))
    if reconstruction > RECONSTRUCTION_TOL * scale or biorthogonality > BIORTHOGONAL_TOL:
        raise NonDiagonalizableError(
            f"operator is not diagonalizable (reconstruction {reconstruction:.3e}, "
            f"biorthogonality {biorthogonality:.3e})"
        )

    logger.debug("decomposed %dx%d operator, |lambda0|=%.12f", dim, dim, abs(eigenvalues[0]))
    return SpectralData(_frozen(eigenvalues), _frozen(right), _frozen(left))


def spectral_power(spectral: SpectralData, n: int) -> np.ndarray:
    """V^N assembled from the eigen-expansion sum_n lambda_n^N |u_n><v_n|."""
    return (spectral.right * spectral.eigenvalues ** n) @ spectral.left


def spectral_yield(spectral: SpectralData, rho: ArrayLike, n: int) -> float:
    """
    Trace of V^N rho V^+N evaluated as a double sum over eigenpairs.

    Tr = sum_{n,m} lambda_n^N conj(lambda_m)^N <v_n|rho|v_m> <u_m|u_n>
    """
    rho = np.asarray(rho, dtype=complex)
    powers = spectral.eigenvalues ** n
    projected = spectral.left @ rho @ spectral.left.conj().T
    gram = spectral.right.conj().T @ spectral.right
    total = np.sum(np.outer(powers, powers.conj()) * projected * gram.T)
    return float(total.real)


# ============================================================================
# Powers applied to states
# ============================================================================

def power_apply(V: ArrayLike, rho: ArrayLike, n: int) -> Tuple[np.ndarray, float]:
    """
    Apply N conditional cycles without normalization.

    Args:
        V: Effective operator
        rho: Density matrix (raw array or anything with a ``matrix`` attribute)
        n: Number of cycles, n >= 0

    Returns:
        (V^N rho V^+N, its trace)

    Raises:
        InvariantViolationError: On dimension mismatch or negative n
    """
    V = as_complex_matrix(V, "effective operator")
    rho = as_complex_matrix(getattr(rho, "matrix", rho), "density matrix")
    if V.shape != rho.shape:
        raise InvariantViolationError(f"dimension mismatch: operator {V.shape} vs state {rho.shape}")
    if n < 0:
        raise InvariantViolationError(f"power must be non-negative, got {n}")
    power = np.linalg.matrix_power(V, n)
    result = power @ rho @ power.conj().T
    return result, float(np.trace(result).real)


# ============================================================================
# Tridiagonal determinants
# ============================================================================

def tridiagonal_determinants(diagonal: ArrayLike, off_diagonal: ArrayLike) -> np.ndarray:
    """
    Leading principal minors of a symmetric tridiagonal matrix.

    Uses the three-term recurrence D_i = a_i D_{i-1} - b_{i-1}^2 D_{i-2}.

    Args:
        diagonal: a_1..a_n
        off_diagonal: b_1..b_{n-1}, b_i couples rows i and i+1

    Returns:
        Array [D_1, ..., D_n]
    """
    a = np.asarray(diagonal, dtype=float)
    b = np.asarray(off_diagonal, dtype=float)
    if b.shape[0] != max(a.shape[0] - 1, 0):
        raise InvariantViolationError("off-diagonal must have one entry fewer than the diagonal")
    minors = np.empty_like(a)
    previous, current = 1.0, 0.0
    for i, value in enumerate(a):
        if i == 0:
            current = value
        else:
            previous, current = current, value * current - b[i - 1] ** 2 * previous
        minors[i] = current
    return minors
