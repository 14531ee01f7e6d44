#!/usr/bin/env python3
"""
zdistill.appendix - determinant identities of the cavity sub-sectors

For a sector k the sub-sector {|k,0>, ..., |2,k-2>} of V_c is the real
symmetric tridiagonal matrix A with diagonal c_k..c_2 and couplings d_k..d_3.
A unit eigenvalue +1 (-1) exists exactly when det(A - 1) (det(A + 1))
vanishes. With

    alpha_i = sA_i^2 sB_{k-i+1}^2,    beta_i = cA_i^2 cB_{k-i}^2

one has c_i - 1 = -(alpha_i + beta_i) and d_i^2 = alpha_i beta_{i-1}, and
the leading minors I_i of A - 1 obey I_i = (-1)^{i+1} P_i with

    P_1 = 1,    P_i = beta_i P_{i-1} + prod_{l=2..i} alpha_l  >= 0.

The minors J_i of A + 1 are strictly positive.

Author: Development Team
Version: 0.1.0
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple
import csv
import logging
import math

import numpy as np
import scipy.linalg

from .cavity import CavityAngles, CavityParams, c_coefficient, d_coefficient
from .errors import InternalConsistencyError, PreconditionError
from .linalg import tridiagonal_determinants

logger = logging.getLogger(__name__)

MAX_K = 16
SIGN_TOL = 1e-12
VANISH_TOL = 1e-10
EIGEN_UNIT_TOL = 1e-8
DEFAULT_SAMPLES = 1000
DEFAULT_SEED = 42
SCAN_HEADER = ("k", "gAtA", "gBtB", "Pk", "Jk", "max_abs_eig")


def _check_k(k: int, i: Optional[int] = None) -> None:
    if not 2 <= k <= MAX_K:
        raise PreconditionError(f"k must lie in 2..{MAX_K}, got {k}")
    if i is not None and not 2 <= i <= k:
        raise PreconditionError(f"i must lie in 2..{k}, got {i}")


# ============================================================================
# Matrices
# ============================================================================

def subsector_coefficients(i: int, k: int, p: CavityParams) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal c_i..c_2 and couplings d_i..d_3 of the trailing block of sector k."""
    angles = CavityAngles(p)
    diag = np.array([c_coefficient(j, k, angles) for j in range(i, 1, -1)])
    off = np.array([d_coefficient(j, k, angles) for j in range(i, 2, -1)])
    return diag, off


def subsector_matrix(k: int, p: CavityParams) -> np.ndarray:
    """The (k-1) x (k-1) matrix on {|k,0>, ..., |2,k-2>}."""
    _check_k(k)
    diag, off = subsector_coefficients(k, k, p)
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def _alpha_beta(k: int, p: CavityParams) -> Tuple[np.ndarray, np.ndarray]:
    """alpha_i, beta_i for i = 0..k (entries 0 and 1 unused)."""
    a = CavityAngles(p)
    alpha = np.array([a.sA(i) ** 2 * a.sB(k - i + 1) ** 2 for i in range(k + 1)])
    beta = np.array([a.cA(i) ** 2 * a.cB(k - i) ** 2 for i in range(k + 1)])
    return alpha, beta


# ============================================================================
# Determinants
# ============================================================================

def _determinant(diag: np.ndarray, off: np.ndarray, method: str) -> float:
    if method == "recurrence":
        return float(tridiagonal_determinants(diag, off)[-1])
    if method == "lu":
        return float(scipy.linalg.det(np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)))
    raise PreconditionError(f"unknown determinant method {method!r}")


def bruteforce_I(i: int, k: int, p: CavityParams, method: str = "recurrence") -> float:
    """
    det of the (i-1) x (i-1) block with diagonal c_i-1..c_2-1 and couplings d_i..d_3.

    Args:
        i: Block size plus one, 2 <= i <= k
        k: Sector
        p: Parameters
        method: "recurrence" (three-term) or "lu" (scipy.linalg.det)
    """
    _check_k(k, i)
    diag, off = subsector_coefficients(i, k, p)
    return _determinant(diag - 1.0, off, method)


def bruteforce_J(i: int, k: int, p: CavityParams, method: str = "recurrence") -> float:
    """det of the block with diagonal c_i+1..c_2+1 and couplings d_i..d_3."""
    _check_k(k, i)
    diag, off = subsector_coefficients(i, k, p)
    return _determinant(diag + 1.0, off, method)


@dataclass(frozen=True)
class DeterminantSeries:
    """I_i, P_i and J_i for i = 2..k of one sector."""
    k: int
    I: Tuple[float, ...]
    P: Tuple[float, ...]
    J: Tuple[float, ...]
    I_recursive: Tuple[float, ...]

    def value(self, name: str, i: int) -> float:
        return getattr(self, name)[i - 2]

    @property
    def Pk(self) -> float:
        return self.P[-1]

    @property
    def Jk(self) -> float:
        return self.J[-1]

    @property
    def p_nonnegative(self) -> bool:
        return all(value >= -SIGN_TOL for value in self.P)

    @property
    def j_positive(self) -> bool:
        return all(value > 0 for value in self.J)

    def __repr__(self):
        return f"DeterminantSeries(k={self.k}, Pk={self.Pk:.6g}, Jk={self.Jk:.6g})"


def recursion_P(k: int, p: CavityParams) -> DeterminantSeries:
    """
    Evaluate P_i, I_i and J_i by their recursions.

    I is derived from P through the sign law; ``I_recursive`` comes from the
    signed recursion I_i = -beta_i I_{i-1} + (-1)^{i-1} prod alpha and serves
    as an independent cross-check.
    """
    _check_k(k)
    alpha, beta = _alpha_beta(k, p)
    diag, off = subsector_coefficients(k, k, p)
    # diag/off run from index k downwards; flip to ascending i = 2..k
    c = {j: diag[k - j] for j in range(2, k + 1)}
    d = {j: off[k - j] for j in range(3, k + 1)}

    P, I_rec, J = [], [], []
    p_prev, i_prev, alpha_product = 1.0, 1.0, 1.0
    j_prev2, j_prev = 1.0, 1.0
    for i in range(2, k + 1):
        alpha_product *= alpha[i]
        p_prev = beta[i] * p_prev + alpha_product
        i_prev = -beta[i] * i_prev + (-1) ** (i - 1) * alpha_product
        if i == 2:
            j_value = c[2] + 1.0
        else:
            j_value = (c[i] + 1.0) * j_prev - d[i] ** 2 * j_prev2
        j_prev2, j_prev = j_prev, j_value
        P.append(float(p_prev))
        I_rec.append(float(i_prev))
        J.append(float(j_value))

    I = tuple((-1) ** (i + 1) * P[i - 2] for i in range(2, k + 1))
    return DeterminantSeries(k, I, tuple(P), tuple(J), tuple(I_rec))


def recursion_I(k: int, p: CavityParams) -> Tuple[float, ...]:
    """I_2..I_k from the signed recursion alone."""
    return recursion_P(k, p).I_recursive


def explicit_Pk_terms(k: int, p: CavityParams) -> List[float]:
    """
    The non-negative terms of the closed form of P_k.

    prod beta, then (prod_{2..n} alpha)(prod_{n+1..k} beta) for n = 2..k-1,
    then prod alpha.
    """
    _check_k(k)
    alpha, beta = _alpha_beta(k, p)
    terms = [float(np.prod(beta[2:k + 1]))]
    for n in range(2, k):
        terms.append(float(np.prod(alpha[2:n + 1]) * np.prod(beta[n + 1:k + 1])))
    terms.append(float(np.prod(alpha[2:k + 1])))
    return terms


def explicit_Pk(k: int, p: CavityParams) -> float:
    """P_k from its explicit sum."""
    return math.fsum(explicit_Pk_terms(k, p))


# ============================================================================
# Scans
# ============================================================================

@dataclass(frozen=True)
class ScanRow:
    """One (sample, k) evaluation."""
    k: int
    gAtA: float
    gBtB: float
    Pk: float
    Jk: float
    max_abs_eig: float
    plus_one: bool = False
    minus_one: bool = False

    def csv_fields(self) -> List[str]:
        return [str(self.k)] + [format(v, ".17g") for v in
                                (self.gAtA, self.gBtB, self.Pk, self.Jk, self.max_abs_eig)]


def write_scan_csv(rows: Iterable[ScanRow], handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())


def _scan_row(k: int, p: CavityParams) -> Tuple[ScanRow, np.ndarray]:
    series = recursion_P(k, p)
    eigenvalues = scipy.linalg.eigvalsh(subsector_matrix(k, p))
    plus_one = bool(np.any(np.abs(eigenvalues - 1.0) <= EIGEN_UNIT_TOL))
    minus_one = bool(np.any(np.abs(eigenvalues + 1.0) <= EIGEN_UNIT_TOL))
    row = ScanRow(k, p.g_A * p.t_A, p.g_B * p.t_B, series.Pk, series.Jk,
                  float(np.max(np.abs(eigenvalues))), plus_one, minus_one)
    return row, eigenvalues


def unit_eigenvalue_scan(k_range: Iterable[int], p: CavityParams) -> List[ScanRow]:
    """
    Direct eigenvalues of each sub-sector, cross-checked against P_k and J_k.

    det(A - 1) = prod(lambda - 1) must equal (-1)^{k+1} P_k and
    det(A + 1) = prod(lambda + 1) must equal J_k, so +1 is an eigenvalue
    exactly when P_k = 0 and -1 exactly when J_k = 0.

    Raises:
        InternalConsistencyError: If a determinant and the eigenvalue product
            differ by more than 1e-8
    """
    rows = []
    for k in k_range:
        row, eigenvalues = _scan_row(k, p)
        minus_product = float(np.prod(eigenvalues - 1.0))
        plus_product = float(np.prod(eigenvalues + 1.0))
        if abs(minus_product - (-1) ** (k + 1) * row.Pk) > EIGEN_UNIT_TOL:
            raise InternalConsistencyError(
                f"k={k}: P_k={row.Pk:.3e} but eigenvalues give det(A-1)={minus_product:.3e}")
        if abs(plus_product - row.Jk) > EIGEN_UNIT_TOL:
            raise InternalConsistencyError(
                f"k={k}: J_k={row.Jk:.3e} but eigenvalues give det(A+1)={plus_product:.3e}")
        if row.plus_one:
            logger.info("k=%d: sub-sector carries a +1 eigenvalue (P_k=%.3e)", k, row.Pk)
        if row.minus_one:
            logger.warning("k=%d: sub-sector carries a -1 eigenvalue (J_k=%.3e)", k, row.Jk)
        rows.append(row)
    return rows


def vanishing_scan(p: CavityParams, k_range: Iterable[int] = range(2, MAX_K + 1)) -> List[int]:
    """Sectors k whose P_k vanishes (a +1 eigenvalue in the sub-sector)."""
    return [k for k in k_range if abs(recursion_P(k, p).Pk) <= VANISH_TOL]


@dataclass
class PositivityReport:
    """Result of the J-positivity sampling scan."""
    seed: int
    samples: int
    k_range: Tuple[int, ...]
    rows: List[ScanRow]
    violations: List[Tuple[int, int, float, float, float]]
    min_J: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "k_range": list(self.k_range),
            "violations": [
                {"k": k, "i": i, "gAtA": a, "gBtB": b, "J": j} for k, i, a, b, j in self.violations
            ],
            "min_J": self.min_J,
        }

    def __repr__(self):
        return f"PositivityReport(samples={self.samples}, violations={len(self.violations)}, min_J={self.min_J:.6g})"


def positivity_scan(k_range: Sequence[int] = tuple(range(2, 10)), samples: int = DEFAULT_SAMPLES,
                    seed: int = DEFAULT_SEED) -> PositivityReport:
    """
    Sample (g_A t_A, g_B t_B) uniformly in (0, pi)^2 and check J_i > 0.

    Args:
        k_range: Sectors to evaluate
        samples: Number of parameter points
        seed: Seed for numpy's default_rng

    Returns:
        PositivityReport; a violation would contradict J_i > 0 and fails the report
    """
    rng = np.random.default_rng(seed)
    points = rng.uniform(0.0, math.pi, size=(samples, 2))
    k_range = tuple(k_range)
    rows: List[ScanRow] = []
    violations = []
    min_J = math.inf
    for gAtA, gBtB in points:
        p = CavityParams.from_products(float(gAtA), float(gBtB), k_max=max(k_range))
        for k in k_range:
            series = recursion_P(k, p)
            for i, value in enumerate(series.J, start=2):
                min_J = min(min_J, value)
                if value <= 0:
                    violations.append((k, i, float(gAtA), float(gBtB), value))
            rows.append(_scan_row(k, p)[0])
    if violations:
        logger.error("J positivity violated at %d points", len(violations))
    return PositivityReport(seed, samples, k_range, rows, violations, float(min_J))
