#!/usr/bin/env python3
"""
zdistill.qubit - three-qubit mediator model

Qubits A and B never interact directly; a mediator X couples to A, then to B,
and is projected back onto |up>. The cycle conserves the parity
sigma3(A) sigma3(B), so the effective operator splits into an even block on
{|up up>, |down down>} and an odd block on {|up down>, |down up>}.

Basis conventions: up = (1, 0), sigma3 = diag(1, -1), full space X (x) A (x) B,
two-qubit index 2a + b (0 = up up, 1 = up down, 2 = down up, 3 = down down).

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import cmath
import logging
import math

import numpy as np
from scipy.optimize import bisect

from .engine import (CheckResult, DensityMatrix, asymptotics, convergence_steps,
                     estimate_steps, iterate)
from .errors import InvariantViolationError, PreconditionError
from .linalg import HermitianOperator, spectral_decompose
from .protocol import (CompiledCycle, ModelBinding, basis_states, builtin_program_text,
                       compile_cycle, parse_program)

logger = logging.getLogger(__name__)

EVEN_INDICES = (0, 3)
ODD_INDICES = (1, 2)

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

# Root search
PHI_STEP = 0.01
DEFAULT_Y_MAX = 10.0
DUPLICATE_TOL = 1e-8
DEGENERACY_TOL = 1e-9
PRECONDITION_MARGIN = 1e-6
ROOT_XTOL = 1e-15


# ============================================================================
# Parameters
# ============================================================================

@dataclass(frozen=True)
class QubitParams:
    """Energy gap, couplings and durations of the three-qubit cycle."""
    omega: float
    g_A: float
    g_B: float
    t_A: float
    t_B: float
    tau_A: float = 0.0
    tau_B: float = 0.0

    def __post_init__(self):
        for name in ("omega", "g_A", "g_B", "t_A", "t_B", "tau_A", "tau_B"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvariantViolationError(f"{name} must be finite, got {value}")
            if value < 0:
                raise InvariantViolationError(f"{name} must be non-negative, got {value}")

    @classmethod
    def from_dimensionless(cls, x: float, y: float, z: float) -> "QubitParams":
        """Symmetric parameters with omega = 1, t = y, g = x / y, tau = z."""
        if y <= 0:
            raise InvariantViolationError(f"omega t must be positive, got {y}")
        g = x / y
        return cls(omega=1.0, g_A=g, g_B=g, t_A=y, t_B=y, tau_A=z, tau_B=z)

    @property
    def symmetric(self) -> bool:
        return self.g_A == self.g_B and self.t_A == self.t_B and self.tau_A == self.tau_B

    def __repr__(self):
        return (f"QubitParams(omega={self.omega:g}, g=({self.g_A:g}, {self.g_B:g}), "
                f"t=({self.t_A:g}, {self.t_B:g}), tau=({self.tau_A:g}, {self.tau_B:g}))")


@dataclass(frozen=True)
class QubitAngles:
    """phi = t sqrt(omega^2 + g^2) and the mixing angle 2 theta for each side."""
    phi_A: float
    phi_B: float
    sin2theta_A: float
    cos2theta_A: float
    sin2theta_B: float
    cos2theta_B: float


def _side_angles(omega: float, g: float, t: float) -> Tuple[float, float, float]:
    norm = math.hypot(omega, g)
    if norm == 0.0:
        return 0.0, 0.0, 1.0
    return t * norm, g / norm, omega / norm


def qubit_angles(p: QubitParams) -> QubitAngles:
    """
    Rotation angles of the X-A and X-B interaction steps.

    Examples:
        >>> a = qubit_angles(QubitParams(1.0, 1.0, 1.0, 1.0, 1.0))
        >>> round(a.phi_A, 6), round(a.cos2theta_A, 6)
        (1.414214, 0.707107)
    """
    phi_A, sin_A, cos_A = _side_angles(p.omega, p.g_A, p.t_A)
    phi_B, sin_B, cos_B = _side_angles(p.omega, p.g_B, p.t_B)
    return QubitAngles(phi_A, phi_B, sin_A, cos_A, sin_B, cos_B)


# ============================================================================
# Hamiltonians
# ============================================================================

def _on_site(op: np.ndarray, site: int) -> np.ndarray:
    factors = [IDENTITY2, IDENTITY2, IDENTITY2]
    factors[site] = op
    return np.kron(np.kron(factors[0], factors[1]), factors[2])


def build_hamiltonians(p: QubitParams) -> ModelBinding:
    """
    Model binding with H0 = sum_s (omega/2)(1 + sigma3_s), H'_XA = g_A sigma1 sigma1
    and H'_XB = g_B sigma1 sigma1 on the 8-dimensional space X (x) A (x) B.
    """
    level = 0.5 * p.omega * (IDENTITY2 + SIGMA3)
    h0 = sum(_on_site(level, site) for site in range(3))
    x_flip = _on_site(SIGMA1, 0)
    h_xa = p.g_A * x_flip @ _on_site(SIGMA1, 1)
    h_xb = p.g_B * x_flip @ _on_site(SIGMA1, 2)
    return ModelBinding(
        name="qubit",
        rest_dim=4,
        mediator_states=basis_states(),
        free_hamiltonian=HermitianOperator(h0),
        interactions={"A": HermitianOperator(h_xa), "B": HermitianOperator(h_xb)},
        subsystem_dims={"A": 2, "B": 2},
    )


def compile_qubit_cycle(p: QubitParams) -> CompiledCycle:
    """Effective operator of the A-then-B cycle on the two target qubits."""
    text = builtin_program_text("wp", t_A=p.t_A, tau_A=p.tau_A, t_B=p.t_B, tau_B=p.tau_B)
    return compile_cycle(parse_program(text), build_hamiltonians(p))


def parity_operator() -> np.ndarray:
    """sigma3(A) sigma3(B) on the two-qubit space."""
    return np.kron(SIGMA3, SIGMA3)


# ============================================================================
# Closed-form parity blocks
# ============================================================================

@dataclass(frozen=True)
class ParityBlocks:
    """
    Closed-form even (M) and odd (N) blocks of the cycle operator.

    Elements follow the row convention V|e_i> = phase * sum_j M_ij |e_j>,
    so the operator block in the usual column convention is phase * M^T.
    """
    M: np.ndarray
    N: np.ndarray
    phase_even: complex
    phase_odd: complex

    @property
    def even_block(self) -> np.ndarray:
        return self.phase_even * self.M.T

    @property
    def odd_block(self) -> np.ndarray:
        return self.phase_odd * self.N.T

    def __repr__(self):
        return f"ParityBlocks(phase_even={self.phase_even:.6g}, phase_odd={self.phase_odd:.6g})"


def closed_form_blocks(p: QubitParams) -> ParityBlocks:
    """
    Transcribe the M and N element formulas.

    Args:
        p: Cycle parameters

    Returns:
        ParityBlocks
    """
    a = qubit_angles(p)
    w = p.omega
    c_A = math.cos(a.phi_A) - 1j * math.sin(a.phi_A) * a.cos2theta_A
    c_B = math.cos(a.phi_B) - 1j * math.sin(a.phi_B) * a.cos2theta_B
    s_A = math.sin(a.phi_A) * a.sin2theta_A
    s_B = math.sin(a.phi_B) * a.sin2theta_B
    C_A, S_A = math.cos(p.g_A * p.t_A), math.sin(p.g_A * p.t_A)
    C_B, S_B = math.cos(p.g_B * p.t_B), math.sin(p.g_B * p.t_B)

    def phase(duration: float) -> complex:
        return cmath.exp(-1j * w * duration)

    M = np.array([
        [phase(p.t_A + 2 * p.tau_A + p.t_B + 2 * p.tau_B) * c_A * c_B, -phase(p.t_A) * s_A * S_B],
        [-phase(p.t_B + 2 * p.tau_B) * S_A * s_B, C_A * C_B],
    ], dtype=complex)
    N = np.array([
        [phase(2 * p.tau_A + p.t_B) * c_A * C_B, -s_A * s_B],
        [-phase(p.t_A + 2 * p.tau_A + p.t_B) * S_A * S_B, phase(p.t_A + 2 * p.tau_A) * C_A * c_B],
    ], dtype=complex)
    return ParityBlocks(
        M=M,
        N=N,
        phase_even=phase(p.t_A + p.tau_A + p.t_B + p.tau_B),
        phase_odd=phase(p.t_A + p.t_B + 2 * p.tau_B),
    )


def assemble_parity_operator(blocks: ParityBlocks) -> np.ndarray:
    """4x4 cycle operator rebuilt from its two parity blocks."""
    V = np.zeros((4, 4), dtype=complex)
    V[np.ix_(EVEN_INDICES, EVEN_INDICES)] = blocks.even_block
    V[np.ix_(ODD_INDICES, ODD_INDICES)] = blocks.odd_block
    return V


def m_block_eigenvalues(p: QubitParams) -> np.ndarray:
    """Eigenvalues of the even block of V (phase included)."""
    return np.linalg.eigvals(closed_form_blocks(p).even_block)


def n_block_remaining_eigenvalue(p: QubitParams) -> complex:
    """
    Second eigenvalue of N at a symmetric optimal point.

    e^{-i omega (t + tau)} (sin^2(g t) - cos^2(g t))
    """
    chi = p.omega * (p.t_A + p.tau_A)
    gt = p.g_A * p.t_A
    return cmath.exp(-1j * chi) * (math.sin(gt) ** 2 - math.cos(gt) ** 2)


# ============================================================================
# Target state
# ============================================================================

@dataclass(frozen=True)
class TargetState:
    """(|up down> + e^{i chi}|down up>)/sqrt2 and its left partner."""
    chi: float
    state: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)

    @property
    def overlap(self) -> complex:
        return complex(self.left @ self.state)


def target_state(chi: float) -> TargetState:
    """Entangled odd-parity target with relative phase chi."""
    state = np.zeros(4, dtype=complex)
    state[1] = 1.0
    state[2] = cmath.exp(1j * chi)
    state /= math.sqrt(2.0)
    left = state.conj()
    return TargetState(chi, state, left)


# ============================================================================
# Optimality condition solver
# ============================================================================

class Branch:
    """Solution families of the optimality condition."""
    OPT1 = "opt1"
    SHIFTED = "shifted"


@dataclass(frozen=True)
class OptimalPoint:
    """A symmetric parameter point where |Psi> is a unit-magnitude eigenvector."""
    x: float
    y: float
    z: float
    chi: float
    lambda0: complex
    branch: str

    @property
    def params(self) -> QubitParams:
        return QubitParams.from_dimensionless(self.x, self.y, self.z)

    def to_record(self) -> Dict[str, object]:
        return {
            "x": self.x,
            "y": self.y,
            "z": self.z,
            "chi": self.chi,
            "lambda0_re": self.lambda0.real,
            "lambda0_im": self.lambda0.imag,
            "branch": self.branch,
        }

    def __repr__(self):
        return f"OptimalPoint(x={self.x:.6g}, y={self.y:.10g}, z={self.z:.10g}, branch={self.branch})"


def _modulus_residual(phi: float, x: float) -> float:
    return math.sin(phi) ** 2 * x * x / (phi * phi) - math.sin(x) ** 2


def _bracket_roots(x: float, phi_max: float) -> List[float]:
    """Scan phi on a 0.01 grid above x and bisect every sign change."""
    grid = np.arange(x + PHI_STEP, phi_max, PHI_STEP)
    grid = np.append(grid, phi_max)
    values = np.sin(grid) ** 2 * x * x / grid ** 2 - math.sin(x) ** 2
    roots: List[float] = []
    for i in range(len(grid) - 1):
        left, right = values[i], values[i + 1]
        if left == 0.0:
            roots.append(float(grid[i]))
        elif left * right < 0.0:
            roots.append(bisect(_modulus_residual, grid[i], grid[i + 1], args=(x,), xtol=ROOT_XTOL, maxiter=200))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))

    merged: List[float] = []
    for root in sorted(roots):
        if not merged or root - merged[-1] > DUPLICATE_TOL:
            merged.append(root)
    return merged


def solve_optimal_condition(x: float, y_max: float = DEFAULT_Y_MAX) -> List[OptimalPoint]:
    """
    Find symmetric parameter points satisfying the optimality condition.

    The complex condition cos(phi) - i sin(phi) cos(2 theta) = -e^{i z} cos(x)
    is solved for its modulus first, as a root problem in phi = sqrt(x^2 + y^2);
    the phase then fixes z in [0, 2 pi).

    Args:
        x: g t, with |cos x sin x| > 1e-6
        y_max: Upper end of the omega t bracket

    Returns:
        Points of both branches, ordered by y; empty if the bracket holds no root

    Raises:
        PreconditionError: If cos(x) sin(x) vanishes

    Examples:
        >>> [p.branch for p in solve_optimal_condition(2.8)][:2]
        ['opt1', 'shifted']
    """
    if not math.isfinite(x) or abs(math.cos(x) * math.sin(x)) <= PRECONDITION_MARGIN:
        raise PreconditionError(f"cos(x) sin(x) must not vanish (x = {x})")

    phi_max = math.hypot(x, y_max)
    points: List[OptimalPoint] = []
    for phi in _bracket_roots(x, phi_max):
        y = math.sqrt(max(phi * phi - x * x, 0.0))
        if y <= DEGENERACY_TOL:
            continue
        rotated = -(math.cos(phi) - 1j * math.sin(phi) * y / phi) / math.cos(x)
        z = cmath.phase(rotated) % (2 * math.pi)
        if abs(abs(math.cos(y + z)) - 1.0) <= DEGENERACY_TOL:
            logger.warning("rejecting x=%g y=%.10g: M-block degeneracy", x, y)
            continue

        chi = y + z
        points.append(OptimalPoint(x, y, z, chi, -cmath.exp(-3j * chi), Branch.OPT1))
        z_shift = (z + math.pi) % (2 * math.pi)
        points.append(OptimalPoint(x, y, z_shift, y + z_shift + math.pi,
                                   cmath.exp(-3j * (y + z_shift)), Branch.SHIFTED))

    logger.info("x=%g: %d optimal points", x, len(points))
    return points


# ============================================================================
# Verification at an optimal point
# ============================================================================

@dataclass(frozen=True)
class DistillationReport:
    """Diagnostics of distillation at one optimal point."""
    point: OptimalPoint
    checks: Tuple[CheckResult, ...]
    gap: float
    final_fidelity: float
    final_yield: float
    expected_yield: float
    convergence_steps: Optional[int]
    estimated_steps: Optional[int]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def __repr__(self):
        status = "passed" if self.passed else f"failed {self.failures}"
        return f"DistillationReport({self.point!r}, {status})"


def verify_distillation(point: OptimalPoint, rho0: Optional[DensityMatrix] = None,
                        n_max: int = 600, min_gap: float = 1e-3,
                        fidelity_tol: float = 1e-6, epsilon: float = 1e-8) -> DistillationReport:
    """
    Check that an optimal point really distills |Psi>.

    Checks: |Psi> is an eigenvector with the predicted unit eigenvalue; every
    other eigenvalue is at least ``min_gap`` inside the unit circle; direct
    iteration reaches fidelity 1 - ``fidelity_tol``; the yield approaches
    <Psi|rho0|Psi>.

    Args:
        point: Output of solve_optimal_condition
        rho0: Initial two-qubit state (maximally mixed by default)
        n_max: Iterations for the fidelity and yield checks

    Returns:
        DistillationReport; failures are reported, never raised
    """
    rho0 = rho0 or DensityMatrix.maximally_mixed(4)
    cycle = compile_qubit_cycle(point.params)
    V = cycle.matrix
    psi = target_state(point.chi)
    checks: List[CheckResult] = []

    residual = float(np.linalg.norm(V @ psi.state - point.lambda0 * psi.state))
    modulus = abs(abs(point.lambda0) - 1.0)
    checks.append(CheckResult("eigenvector", residual <= 1e-9 and modulus <= 1e-9,
                              f"residual {residual:.3e}, ||lambda0|-1| {modulus:.3e}"))

    spectral = spectral_decompose(V)
    closest = int(np.argmin(np.abs(spectral.eigenvalues - point.lambda0)))
    others = np.delete(np.abs(spectral.eigenvalues), closest)
    gap = float(1.0 - np.max(others))
    checks.append(CheckResult("spectral_gap", gap > min_gap, f"delta {gap:.6f}"))

    expected = float(np.real(psi.state.conj() @ rho0.matrix @ psi.state))
    trace = iterate(V, rho0, n_max, psi.state)
    _, final_yield, final_fidelity, _ = trace.final
    checks.append(CheckResult("fidelity", final_fidelity > 1.0 - fidelity_tol,
                              f"1-F {1.0 - final_fidelity:.3e} at N={n_max}"))

    report = asymptotics(V, rho0)
    prefactor_error = abs(report.yield_prefactor - expected)
    yield_error = abs(final_yield - expected)
    checks.append(CheckResult("yield", prefactor_error <= 1e-6 and yield_error <= 1e-4,
                              f"prefactor error {prefactor_error:.3e}, yield error {yield_error:.3e}"))

    steps = estimated = None
    if report.unique:
        steps = convergence_steps(V, rho0, epsilon)
        estimated = estimate_steps(report, epsilon)

    result = DistillationReport(point, tuple(checks), gap, final_fidelity, final_yield,
                                expected, steps, estimated)
    if not result.passed:
        logger.warning("distillation check failed at %r: %s", point, result.failures)
    return result
