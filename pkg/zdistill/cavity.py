#!/usr/bin/env python3
"""
zdistill.cavity - two cavities coupled through one two-level atom

A two-level atom X passes through cavity A, then cavity B, is projected onto
|up>, passes back through B and A, and is projected onto |down>. With
Jaynes-Cummings couplings the total excitation number n + m is conserved, so
the effective operator V_c on the two modes is block diagonal in sectors
k = n + m and every sector block is a phase times a real symmetric
tridiagonal matrix.

Basis conventions: up = (1, 0); the full tensor space is X (x) a (x) b with
per-mode cutoff L = k_max; retained two-mode states are ordered by sector,
|k,0>, |k-1,1>, ..., |0,k> inside sector k.

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import cmath
import logging
import math

import numpy as np
import scipy.linalg

from .engine import DensityMatrix, propagate
from .errors import ConditionNotMetError, InternalConsistencyError, InvariantViolationError, PreconditionError
from .linalg import HermitianOperator
from .protocol import (CompiledCycle, ModelBinding, basis_states, builtin_program_text,
                       compile_cycle, parse_program)

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 12
CONDITION_TOL = 1e-9
UNIT_TOL = 1e-9
SPLIT_TOL = 1e-12
GENERICITY_MARGIN = 0.02
GENERIC_GBTB = (0.3, 0.7, 1.1)

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
UP_PROJECTOR = np.array([[1, 0], [0, 0]], dtype=complex)


# ============================================================================
# Parameters and basis
# ============================================================================

@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity couplings, durations and the retained excitation range."""
    omega: float
    g_A: float
    g_B: float
    t_A: float
    t_B: float
    tau_A: float = 0.0
    tau_B: float = 0.0
    k_max: int = DEFAULT_K_MAX
    t_prep: Optional[float] = None

    def __post_init__(self):
        for name in ("omega", "g_A", "g_B", "t_A", "t_B", "tau_A", "tau_B"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvariantViolationError(f"{name} must be finite and non-negative, got {value}")
        if self.t_prep is not None and (not math.isfinite(self.t_prep) or self.t_prep < 0):
            raise InvariantViolationError(f"t_prep must be finite and non-negative, got {self.t_prep}")
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise InvariantViolationError(f"k_max must be an integer >= 1, got {self.k_max}")

    @classmethod
    def from_products(cls, gAtA: float, gBtB: float, k_max: int = DEFAULT_K_MAX,
                      omega: float = 1.0) -> "CavityParams":
        """Unit interaction times with couplings equal to the given products."""
        return cls(omega=omega, g_A=gAtA, g_B=gBtB, t_A=1.0, t_B=1.0, k_max=k_max)

    @property
    def T(self) -> float:
        """Total one-way duration t_A + tau_A + t_B + tau_B."""
        return self.t_A + self.tau_A + self.t_B + self.tau_B

    @property
    def preparation_time(self) -> float:
        return self.t_B if self.t_prep is None else self.t_prep

    @property
    def resonance_sign(self) -> Optional[int]:
        """+1 or -1 when sin(g_A t_A) = +-1 within tolerance, else None."""
        s = math.sin(self.g_A * self.t_A)
        if abs(s - 1.0) <= CONDITION_TOL:
            return 1
        if abs(s + 1.0) <= CONDITION_TOL:
            return -1
        return None

    def __repr__(self):
        return (f"CavityParams(omega={self.omega:g}, gAtA={self.g_A * self.t_A:g}, "
                f"gBtB={self.g_B * self.t_B:g}, T={self.T:g}, k_max={self.k_max})")


@dataclass(frozen=True)
class FockLabel:
    """Photon numbers (n, m) of modes a and b."""
    n: int
    m: int

    @property
    def k(self) -> int:
        return self.n + self.m

    def __repr__(self):
        return f"|{self.n},{self.m}>"


class CavityAngles:
    """phi_A(n) = g_A t_A sqrt(n) and phi_B(m) = g_B t_B sqrt(m)."""

    def __init__(self, p: CavityParams, t_A: Optional[float] = None, t_B: Optional[float] = None):
        self.gA = p.g_A * (p.t_A if t_A is None else t_A)
        self.gB = p.g_B * (p.t_B if t_B is None else t_B)

    def phi_A(self, n: int) -> float:
        return self.gA * math.sqrt(n)

    def phi_B(self, m: int) -> float:
        return self.gB * math.sqrt(m)

    def sA(self, n: int) -> float:
        return math.sin(self.phi_A(n))

    def cA(self, n: int) -> float:
        return math.cos(self.phi_A(n))

    def sB(self, m: int) -> float:
        return math.sin(self.phi_B(m))

    def cB(self, m: int) -> float:
        return math.cos(self.phi_B(m))


class FockSpace:
    """Two-mode states with n + m <= k_max, ordered by sector."""

    def __init__(self, k_max: int):
        self.k_max = k_max
        self.labels: List[FockLabel] = [FockLabel(k - i, i) for k in range(k_max + 1) for i in range(k + 1)]
        self._index: Dict[Tuple[int, int], int] = {(l.n, l.m): pos for pos, l in enumerate(self.labels)}

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, n: int, m: int) -> int:
        return self._index[(n, m)]

    def sector_indices(self, k: int) -> np.ndarray:
        """Positions of |k,0>, ..., |0,k>."""
        start = k * (k + 1) // 2
        return np.arange(start, start + k + 1)

    def tensor_indices(self, cutoff: int) -> np.ndarray:
        """Rest-space tensor index n (cutoff+1) + m of every retained label."""
        return np.array([l.n * (cutoff + 1) + l.m for l in self.labels])

    def vector(self, amplitudes: Dict[Tuple[int, int], complex]) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        for (n, m), value in amplitudes.items():
            psi[self.index(n, m)] = value
        return psi

    def __repr__(self):
        return f"FockSpace(k_max={self.k_max}, dim={self.dim})"


# ============================================================================
# Hamiltonians and propagators
# ============================================================================

def _annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), 1).astype(complex)


def build_cavity_binding(p: CavityParams) -> ModelBinding:
    """
    Model binding with H0 = omega (sigma+ sigma- + a^+ a + b^+ b) and
    H'_XA = g_A (sigma+ a + sigma- a^+), H'_XB likewise, per-mode cutoff k_max.
    """
    L = p.k_max
    a = _annihilation(L)
    number = a.conj().T @ a
    mode_id = np.eye(L + 1, dtype=complex)
    atom_id = np.eye(2, dtype=complex)
    h0 = p.omega * (np.kron(UP_PROJECTOR, np.kron(mode_id, mode_id))
                    + np.kron(atom_id, np.kron(number, mode_id))
                    + np.kron(atom_id, np.kron(mode_id, number)))
    h_xa = p.g_A * (np.kron(SIGMA_PLUS, np.kron(a, mode_id)) + np.kron(SIGMA_MINUS, np.kron(a.conj().T, mode_id)))
    h_xb = p.g_B * (np.kron(SIGMA_PLUS, np.kron(mode_id, a)) + np.kron(SIGMA_MINUS, np.kron(mode_id, a.conj().T)))
    return ModelBinding(
        name="cavity",
        rest_dim=(L + 1) ** 2,
        mediator_states=basis_states(),
        free_hamiltonian=HermitianOperator(h0),
        interactions={"A": HermitianOperator(h_xa), "B": HermitianOperator(h_xb)},
        retained=FockSpace(p.k_max).tensor_indices(L),
        subsystem_dims={"A": L + 1, "B": L + 1},
    )


def compile_cavity_cycle(p: CavityParams, name: str = "wp2") -> CompiledCycle:
    """Compile a builtin cavity protocol ("wp2", "wp2-up" or "prep-b")."""
    t_B = p.preparation_time if name == "prep-b" else p.t_B
    text = builtin_program_text(name, t_A=p.t_A, tau_A=p.tau_A, t_B=t_B, tau_B=p.tau_B)
    return compile_cycle(parse_program(text), build_cavity_binding(p))


def jc_propagator(side: str, p: CavityParams, cutoff: Optional[int] = None,
                  duration: Optional[float] = None) -> np.ndarray:
    """
    Closed-form Jaynes-Cummings propagator on the full truncated tensor space.

    Inside every doublet {|up,n>, |down,n+1>} of the interacting mode it is
    e^{-i(n+1) omega t} [[cos phi, -i sin phi], [-i sin phi, cos phi]] with
    phi = g t sqrt(n+1); the spectator mode contributes e^{-i omega m t}.
    |down,0> only picks up the spectator phase and |up,L> (no partner below
    the cutoff) evolves with e^{-i(L+1) omega t}.

    Args:
        side: "A" or "B"
        p: Parameters (coupling and default duration of that side)
        cutoff: Per-mode cutoff L (defaults to k_max)
        duration: Interaction time (defaults to t_A or t_B)

    Returns:
        Unitary of dimension 2 (L+1)^2
    """
    if side not in ("A", "B"):
        raise PreconditionError(f"side must be 'A' or 'B', got {side!r}")
    L = p.k_max if cutoff is None else cutoff
    if L < 1:
        raise PreconditionError(f"cutoff must be >= 1, got {L}")
    g, t = (p.g_A, p.t_A) if side == "A" else (p.g_B, p.t_B)
    if duration is not None:
        t = duration
    w = p.omega
    size = L + 1

    def index(atom: int, own: int, spectator: int) -> int:
        n, m = (own, spectator) if side == "A" else (spectator, own)
        return atom * size * size + n * size + m

    U = np.zeros((2 * size * size, 2 * size * size), dtype=complex)
    for spectator in range(size):
        outer = cmath.exp(-1j * w * spectator * t)
        ground = index(1, 0, spectator)
        U[ground, ground] = outer
        top = index(0, L, spectator)
        U[top, top] = outer * cmath.exp(-1j * (L + 1) * w * t)
        for n in range(L):
            up, down = index(0, n, spectator), index(1, n + 1, spectator)
            phi = g * t * math.sqrt(n + 1)
            phase = outer * cmath.exp(-1j * (n + 1) * w * t)
            U[up, up] = U[down, down] = phase * math.cos(phi)
            U[up, down] = U[down, up] = -1j * phase * math.sin(phi)
    return U


# ============================================================================
# Closed form of V_c and its sectors
# ============================================================================

def c_coefficient(j: int, k: int, angles: CavityAngles) -> float:
    """Diagonal element for |j, k-j>: sA_j^2 cB_{k-j+1}^2 + cA_j^2 sB_{k-j}^2."""
    return (angles.sA(j) ** 2 * angles.cB(k - j + 1) ** 2
            + angles.cA(j) ** 2 * angles.sB(k - j) ** 2)


def d_coefficient(j: int, k: int, angles: CavityAngles) -> float:
    """Coupling of |j, k-j> and |j-1, k-j+1>: sA_j cA_{j-1} sB_{k-j+1} cB_{k-j+1}."""
    return angles.sA(j) * angles.cA(j - 1) * angles.sB(k - j + 1) * angles.cB(k - j + 1)


def sector_phase(k: int, p: CavityParams) -> complex:
    return -cmath.exp(-2j * k * p.omega * p.T)


@dataclass(frozen=True)
class SectorMatrix:
    """Real symmetric tridiagonal block of V_c in excitation sector k."""
    k: int
    entries: np.ndarray = field(repr=False)
    c: Tuple[float, ...] = field(repr=False)
    d: Tuple[float, ...] = field(repr=False)
    phase: complex = 1.0

    @property
    def block(self) -> np.ndarray:
        """The sector block of V_c itself (phase included)."""
        return self.phase * self.entries

    def __repr__(self):
        return f"SectorMatrix(k={self.k}, phase={self.phase:.6g})"


def sector_matrix(k: int, p: CavityParams) -> SectorMatrix:
    """
    Closed-form sector block on |k,0>, ..., |0,k>.

    Raises:
        PreconditionError: Unless 1 <= k <= k_max
    """
    if not 1 <= k <= p.k_max:
        raise PreconditionError(f"sector k={k} outside 1..{p.k_max}")
    angles = CavityAngles(p)
    c = tuple(c_coefficient(j, k, angles) for j in range(k, -1, -1))
    d = tuple(d_coefficient(j, k, angles) for j in range(k, 0, -1))
    entries = np.diag(np.array(c)) + np.diag(np.array(d), 1) + np.diag(np.array(d), -1)
    return SectorMatrix(k, entries, c, d, sector_phase(k, p))


def build_Vc_closed(p: CavityParams) -> np.ndarray:
    """
    V_c on the retained two-mode space, assembled sector by sector.

    Sector 0 (the vacuum) is annihilated.
    """
    space = FockSpace(p.k_max)
    V = np.zeros((space.dim, space.dim), dtype=complex)
    for k in range(1, p.k_max + 1):
        idx = space.sector_indices(k)
        V[np.ix_(idx, idx)] = sector_matrix(k, p).block
    return V


# ============================================================================
# Resonant case: doublet and targets
# ============================================================================

def _require_resonance(p: CavityParams) -> int:
    sign = p.resonance_sign
    if sign is None:
        raise ConditionNotMetError(
            f"resonance condition sin(g_A t_A) = +-1 not met (sin = {math.sin(p.g_A * p.t_A):.12f})")
    return sign


@dataclass(frozen=True)
class DoubletReport:
    """Eigen-analysis of the one-excitation sector."""
    sign: int
    eigenvalue: complex
    eigenvector: np.ndarray
    zero_vector: np.ndarray
    solver_eigenvalues: np.ndarray
    trace_eigenvalue: complex
    solver_overlap: float
    product_state: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "sign": self.sign,
            "eigenvalue_re": self.eigenvalue.real,
            "eigenvalue_im": self.eigenvalue.imag,
            "eigenvector": [float(x) for x in self.eigenvector],
            "zero_vector": [float(x) for x in self.zero_vector],
            "solver_magnitudes": [float(abs(x)) for x in self.solver_eigenvalues],
            "trace_eigenvalue_re": self.trace_eigenvalue.real,
            "trace_eigenvalue_im": self.trace_eigenvalue.imag,
            "solver_overlap": self.solver_overlap,
            "product_state": self.product_state,
        }


def doublet_analysis(p: CavityParams) -> DoubletReport:
    """
    Unit and zero eigenpairs of the k = 1 block under sin(g_A t_A) = +-1.

    The unit eigenvector is cos phi_B(1)|1,0> +- sin phi_B(1)|0,1>.

    Raises:
        ConditionNotMetError: If sin(g_A t_A) is not +-1
    """
    sign = _require_resonance(p)
    sector = sector_matrix(1, p)
    angles = CavityAngles(p)
    cB, sB = angles.cB(1), angles.sB(1)
    vector = np.array([cB, sign * sB])
    zero = np.array([-sign * sB, cB])

    values, vectors = scipy.linalg.eigh(sector.entries)
    solver_overlap = float(abs(vectors[:, -1] @ vector))
    trace = sector.phase * float(np.trace(sector.entries))
    product = min(abs(cB), abs(sB)) <= CONDITION_TOL
    if product:
        logger.warning("gBtB=%g gives a product state: purification without entanglement", p.g_B * p.t_B)

    return DoubletReport(sign, complex(sector.phase * values[-1]), vector, zero, sector.phase * values[::-1],
                         trace, solver_overlap, product)


def target_states(p: CavityParams, k: int) -> np.ndarray:
    """
    The unit-eigenvalue state cos phi_B(k)|1,k-1> +- sin phi_B(k)|0,k> of sector k.

    Args:
        p: Parameters satisfying sin(g_A t_A) = +-1
        k: Sector, 1 <= k <= k_max

    Returns:
        Vector on the retained two-mode space

    Raises:
        ConditionNotMetError: If the resonance condition fails
        PreconditionError: If k is out of range (k = 0 is annihilated)
        InternalConsistencyError: If the closed form is not an eigenvector
    """
    if not 1 <= k <= p.k_max:
        raise PreconditionError(f"no target in sector k={k} (valid 1..{p.k_max})")
    sign = _require_resonance(p)
    angles = CavityAngles(p)
    space = FockSpace(p.k_max)
    psi = space.vector({(1, k - 1): angles.cB(k), (0, k): sign * angles.sB(k)})

    V = build_Vc_closed(p)
    eigenvalue = sector_phase(k, p)
    residual = float(np.linalg.norm(V @ psi - eigenvalue * psi))
    if residual > UNIT_TOL:
        raise InternalConsistencyError(f"sector {k} target fails eigen-equation (residual {residual:.3e})")
    return psi


def subsector_margin(k: int, p: CavityParams) -> float:
    """1 - max |eigenvalue| on {|k,0>, ..., |2,k-2>}; 1.0 when that set is empty."""
    if k < 2:
        return 1.0
    entries = sector_matrix(k, p).entries[: k - 1, : k - 1]
    return float(1.0 - np.max(np.abs(scipy.linalg.eigvalsh(entries))))


def sector_report(k: int, p: CavityParams) -> Dict[str, object]:
    """JSON-ready summary of one sector: magnitudes, unit eigenvectors, splitting."""
    sector = sector_matrix(k, p)
    values, vectors = scipy.linalg.eigh(sector.entries)
    order = np.argsort(-np.abs(values), kind="stable")
    unit = []
    for i in order:
        if abs(abs(values[i]) - 1.0) <= UNIT_TOL:
            v = vectors[:, i]
            v = v * np.sign(v[np.argmax(np.abs(v))])
            unit.append([float(x) for x in v])
    return {
        "k": k,
        "eigenvalue_magnitudes": [float(abs(values[i])) for i in order],
        "unit_eigenvectors": unit,
        "split": bool(k >= 2 and abs(sector.d[k - 2]) <= SPLIT_TOL),
    }


def genericity_warnings(p: CavityParams) -> List[str]:
    """Levels m <= k_max where sin or cos of phi_B(m) nearly vanishes."""
    angles = CavityAngles(p)
    problems = []
    for m in range(1, p.k_max + 1):
        s, c = angles.sB(m), angles.cB(m)
        if abs(s) < GENERICITY_MARGIN or abs(c) < GENERICITY_MARGIN:
            problems.append(f"phi_B({m}) = {angles.phi_B(m):.6f} is near a zero of sin/cos")
    for message in problems:
        logger.warning(message)
    return problems


def up_initial_vacuum_eigenvalue(p: CavityParams) -> complex:
    """
    Eigenvalue of the vacuum under the cycle started and ended in |up>.

    The vacuum is an eigenstate of that variant with non-zero eigenvalue,
    which is why the working cycle starts from |down>.

    Raises:
        InternalConsistencyError: If the vacuum is not an eigenvector
    """
    V = compile_cavity_cycle(p, "wp2-up").matrix
    column = V[:, 0]
    leak = float(np.linalg.norm(column[1:]))
    if leak > UNIT_TOL:
        raise InternalConsistencyError(f"vacuum leaks out of sector 0 ({leak:.3e})")
    return complex(column[0])


# ============================================================================
# Vacuum preparation of cavity B
# ============================================================================

@dataclass(frozen=True)
class PreparationResult:
    """State after the B-only preparation cycles."""
    state: DensityMatrix
    yield_: float
    residual: float
    reps: int

    def __repr__(self):
        return f"PreparationResult(reps={self.reps}, yield={self.yield_:.6g}, residual={self.residual:.3e})"


def occupied_b_weight(rho: DensityMatrix, k_max: int) -> float:
    """Population of states with m > 0."""
    space = FockSpace(k_max)
    diag = np.real(np.diag(rho.matrix))
    return float(sum(diag[i] for i, label in enumerate(space.labels) if label.m > 0))


def prepare_initial_state(rho_ab: DensityMatrix, p: CavityParams, reps: int) -> PreparationResult:
    """
    Drive cavity B to its vacuum with repeated down-to-down passes through B.

    Each pass multiplies the |n,m> amplitude by cos phi_B(m) (up to phases),
    so only m = 0 survives.

    Args:
        rho_ab: Initial two-mode state on the retained space
        p: Parameters (t_prep, default t_B, sets the pass duration)
        reps: Number of passes, >= 0

    Raises:
        PreconditionError: If reps is negative
        YieldUnderflowError: If every component is annihilated
    """
    if reps < 0:
        raise PreconditionError(f"reps must be >= 0, got {reps}")
    genericity_warnings(p)
    cycle = compile_cavity_cycle(p, "prep-b")
    state, yield_ = propagate(cycle, rho_ab, reps)
    residual = occupied_b_weight(state, p.k_max)
    logger.info("vacuum preparation: %d reps, yield %.6g, residual %.3e", reps, yield_, residual)
    return PreparationResult(state, yield_, residual, reps)
