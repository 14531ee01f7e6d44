#!/usr/bin/env python3
"""
zdistill.engine - repeated conditional cycles on a density matrix

Iterates an effective operator on an initial state with per-step
renormalization, records yield / fidelity / purity, and characterizes the
large-N limit from the spectral decomposition.

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO, Tuple, Union
import csv
import io
import logging
import math

import numpy as np
import scipy.linalg

from .errors import InvariantViolationError, NonUniqueDominantError, PreconditionError, YieldUnderflowError
from .linalg import SpectralData, as_complex_matrix, spectral_decompose
from .protocol import CompiledCycle

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10
YIELD_FLOOR = 1e-300
OPTIMAL_TOL = 1e-9
UNIQUE_GAP = 1e-9
POPULATION_TOL = 1e-6
TRACE_HEADER = ("N", "yield", "fidelity", "purity")


# ============================================================================
# States
# ============================================================================

def normalize_pure(vector: Sequence[complex]) -> np.ndarray:
    """Unit-norm copy of a state vector."""
    psi = np.asarray(vector, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0.0 or not np.isfinite(norm):
        raise InvariantViolationError("pure state must have finite non-zero norm")
    return psi / norm


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite state."""
    matrix: np.ndarray

    def __post_init__(self):
        rho = as_complex_matrix(self.matrix, "density matrix")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise InvariantViolationError("density matrix is not Hermitian")
        trace = np.trace(rho).real
        if abs(trace - 1.0) > STATE_TOL:
            raise InvariantViolationError(f"density matrix trace is {trace!r}, expected 1")
        smallest = scipy.linalg.eigvalsh(rho)[0]
        if smallest < -STATE_TOL:
            raise InvariantViolationError(f"density matrix has negative eigenvalue {smallest:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_pure(cls, vector: Sequence[complex]) -> "DensityMatrix":
        psi = normalize_pure(vector)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def from_diagonal(cls, weights: Sequence[float]) -> "DensityMatrix":
        """Diagonal state from non-negative weights (normalized here)."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or w.sum() <= 0:
            raise InvariantViolationError("diagonal weights must be non-negative with positive sum")
        return cls(np.diag(w / w.sum()).astype(complex))

    @classmethod
    def from_unnormalized(cls, matrix: np.ndarray) -> "DensityMatrix":
        """Hermitize and rescale an unnormalized positive operator."""
        rho = 0.5 * (matrix + matrix.conj().T)
        return cls(rho / np.trace(rho).real)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    def fidelity(self, target: Sequence[complex]) -> float:
        psi = normalize_pure(target)
        return float(np.real(psi.conj() @ self.matrix @ psi))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, purity={self.purity:.6f})"


# ============================================================================
# Iteration
# ============================================================================

@dataclass
class IterationTrace:
    """Rows of (N, yield, fidelity, purity)."""
    rows: List[Tuple[int, float, float, float]] = field(default_factory=list)

    @property
    def final(self) -> Tuple[int, float, float, float]:
        return self.rows[-1]

    def write_csv(self, handle: TextIO) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for n, yield_, fidelity, purity in self.rows:
            writer.writerow([n, format(yield_, ".17g"), format(fidelity, ".17g"), format(purity, ".17g")])

    def to_csv(self) -> str:
        buffer = io.StringIO()
        self.write_csv(buffer)
        return buffer.getvalue()

    def __repr__(self):
        if not self.rows:
            return "IterationTrace(empty)"
        n, yield_, fidelity, _ = self.final
        return f"IterationTrace(N={n}, yield={yield_:.6g}, fidelity={fidelity:.10f})"


OperatorLike = Union[CompiledCycle, np.ndarray]


def _operator(V: OperatorLike) -> np.ndarray:
    return as_complex_matrix(getattr(V, "matrix", V), "effective operator")


def _check_dims(V: np.ndarray, rho: DensityMatrix) -> None:
    if V.shape != rho.matrix.shape:
        raise InvariantViolationError(f"dimension mismatch: operator {V.shape} vs state {rho.matrix.shape}")


def _step(V: np.ndarray, rho: np.ndarray) -> Tuple[np.ndarray, float]:
    """One conditional cycle: returns the renormalized state and its weight."""
    evolved = V @ rho @ V.conj().T
    weight = float(np.trace(evolved).real)
    if weight > 0:
        evolved = evolved / weight
    return 0.5 * (evolved + evolved.conj().T), weight


def iterate(V: OperatorLike, rho0: DensityMatrix, n_max: int, target: Sequence[complex]) -> IterationTrace:
    """
    Run n_max conditional cycles, recording yield and fidelity after each.

    Args:
        V: Effective operator (or CompiledCycle)
        rho0: Initial state
        n_max: Number of cycles (0 gives only the initial row)
        target: Pure state for the fidelity column

    Returns:
        IterationTrace with rows N = 0..n_max

    Raises:
        YieldUnderflowError: If the cumulative yield falls below 1e-300
    """
    V = _operator(V)
    _check_dims(V, rho0)
    psi = normalize_pure(target)
    if psi.shape[0] != V.shape[0]:
        raise InvariantViolationError("target dimension does not match operator")

    def row(n: int, yield_: float, rho: np.ndarray) -> Tuple[int, float, float, float]:
        fidelity = float(np.real(psi.conj() @ rho @ psi))
        purity = float(np.real(np.vdot(rho, rho)))
        return n, yield_, fidelity, purity

    rho = rho0.matrix
    cumulative = 1.0
    trace = IterationTrace([row(0, cumulative, rho)])
    for n in range(1, n_max + 1):
        rho, weight = _step(V, rho)
        cumulative *= weight
        if not cumulative >= YIELD_FLOOR:
            raise YieldUnderflowError(f"yield underflow at N={n} (last valid N={n - 1})", last_valid_n=n - 1)
        trace.rows.append(row(n, cumulative, rho))
    return trace


def propagate(V: OperatorLike, rho0: DensityMatrix, n: int) -> Tuple[DensityMatrix, float]:
    """
    Apply n conditional cycles and return the normalized state and its yield.

    Raises:
        YieldUnderflowError: As in iterate
    """
    V = _operator(V)
    _check_dims(V, rho0)
    rho = rho0.matrix
    cumulative = 1.0
    for step in range(1, n + 1):
        rho, weight = _step(V, rho)
        cumulative *= weight
        if not cumulative >= YIELD_FLOOR:
            raise YieldUnderflowError(f"yield underflow at N={step} (last valid N={step - 1})", last_valid_n=step - 1)
    return DensityMatrix(rho), cumulative


# ============================================================================
# Asymptotics
# ============================================================================

@dataclass(frozen=True)
class DominantPair:
    """A magnitude-maximal eigenpair and the weight rho0 puts on it."""
    eigenvalue: complex
    right: np.ndarray
    left: np.ndarray
    population: float


@dataclass(frozen=True)
class AsymptoticReport:
    """
    Large-N behaviour of a conditional cycle on a given initial state.

    ``target``/``left0`` are u_0 and v_0 of the leading eigenvalue; the yield
    behaves like ``yield_prefactor * |lambda0|^(2N)``. When the dominant
    eigenvalue is not unique, ``dominant`` lists every magnitude-maximal pair.
    """
    lambda0: complex
    target: np.ndarray
    left0: np.ndarray
    yield_prefactor: float
    optimal: bool
    unique: bool
    dominant_gap: float
    dominant: Tuple[DominantPair, ...]
    spectral: SpectralData

    @property
    def lambda0_abs(self) -> float:
        return float(abs(self.lambda0))

    @property
    def effective_target(self) -> Optional[np.ndarray]:
        """
        The state actually distilled from rho0.

        u_0 when unique; otherwise the single populated dominant eigenvector,
        or None if several dominant eigenvectors are populated.
        """
        if self.unique:
            return self.target
        total = sum(pair.population for pair in self.dominant)
        populated = [pair for pair in self.dominant if pair.population > POPULATION_TOL * max(total, 1e-300)]
        if len(populated) == 1:
            return populated[0].right
        return None

    def yield_limit(self, n: int) -> float:
        return self.yield_prefactor * self.lambda0_abs ** (2 * n)

    def to_dict(self) -> dict:
        effective = self.effective_target
        return {
            "lambda0_re": float(self.lambda0.real),
            "lambda0_im": float(self.lambda0.imag),
            "lambda0_abs": self.lambda0_abs,
            "yield_prefactor": self.yield_prefactor,
            "optimal": self.optimal,
            "unique": self.unique,
            "dominant_gap": self.dominant_gap,
            "target_re": [float(x) for x in self.target.real],
            "target_im": [float(x) for x in self.target.imag],
            "dominant": [
                {"eigenvalue_re": float(p.eigenvalue.real), "eigenvalue_im": float(p.eigenvalue.imag),
                 "population": p.population}
                for p in self.dominant
            ],
            "effective_target_re": None if effective is None else [float(x) for x in effective.real],
            "effective_target_im": None if effective is None else [float(x) for x in effective.imag],
        }

    def __repr__(self):
        return (f"AsymptoticReport(lambda0={self.lambda0:.6g}, optimal={self.optimal}, "
                f"unique={self.unique}, prefactor={self.yield_prefactor:.6g})")


def _population(spectral: SpectralData, rho: np.ndarray, n: int) -> float:
    v = spectral.left_vector(n)
    return float(np.real(v @ rho @ v.conj()))


def asymptotics(V: OperatorLike, rho0: DensityMatrix) -> AsymptoticReport:
    """
    Characterize the distilled state and the yield asymptote.

    Raises:
        NonDiagonalizableError: Propagated from spectral_decompose
    """
    matrix = _operator(V)
    _check_dims(matrix, rho0)
    spectral = spectral_decompose(matrix)
    lam0 = complex(spectral.eigenvalues[0])
    top = abs(lam0)
    gap = spectral.dominant_gap
    unique = spectral.dim == 1 or gap < 1.0 - UNIQUE_GAP

    dominant_indices = [n for n in range(spectral.dim)
                        if top > 0 and abs(spectral.eigenvalues[n]) >= top * (1.0 - UNIQUE_GAP)]
    if not dominant_indices:
        dominant_indices = [0]
    dominant = tuple(
        DominantPair(complex(spectral.eigenvalues[n]), spectral.right_vector(n),
                     spectral.left_vector(n), _population(spectral, rho0.matrix, n))
        for n in dominant_indices
    )
    if not unique:
        logger.warning("dominant eigenvalue is %d-fold degenerate in magnitude", len(dominant))

    return AsymptoticReport(
        lambda0=lam0,
        target=spectral.right_vector(0),
        left0=spectral.left_vector(0),
        yield_prefactor=_population(spectral, rho0.matrix, 0),
        optimal=abs(top - 1.0) <= OPTIMAL_TOL,
        unique=unique,
        dominant_gap=gap,
        dominant=dominant,
        spectral=spectral,
    )


def convergence_steps(V: OperatorLike, rho0: DensityMatrix, epsilon: float, n_limit: int = 100000) -> int:
    """
    Smallest N with 1 - F(N) <= epsilon, F measured against u_0.

    Scales like log(epsilon) / log|lambda_1/lambda_0|^2.

    Raises:
        NonUniqueDominantError: If the dominant eigenvalue is not unique
        PreconditionError: If n_limit steps do not reach epsilon
        YieldUnderflowError: If the yield vanishes before convergence
    """
    report = asymptotics(V, rho0)
    if not report.unique:
        raise NonUniqueDominantError("convergence is undefined without a unique dominant eigenvalue")
    matrix = _operator(V)
    psi = report.target
    rho = rho0.matrix
    cumulative = 1.0
    for n in range(0, n_limit + 1):
        if 1.0 - float(np.real(psi.conj() @ rho @ psi)) <= epsilon:
            return n
        rho, weight = _step(matrix, rho)
        cumulative *= weight
        if not cumulative >= YIELD_FLOOR:
            raise YieldUnderflowError(f"yield underflow at N={n + 1}", last_valid_n=n)
    raise PreconditionError(f"no convergence to {epsilon} within n_limit={n_limit} steps")


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check."""
    name: str
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def estimate_steps(report: AsymptoticReport, epsilon: float) -> Optional[int]:
    """Gap-based estimate ceil(log eps / log gap^2); None when the gap is 0 or 1."""
    gap = report.dominant_gap
    if gap <= 0.0 or gap >= 1.0:
        return None
    return int(math.ceil(math.log(epsilon) / (2.0 * math.log(gap))))
