"""
BellNoise - Two-Qubit States
Density matrices, Born-rule probabilities, partial transpose and PPT separability
"""
import logging
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

import config
from correlation import Angle, JointDistribution
from errors import DomainError

logger = logging.getLogger(__name__)

Visibility = float

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# (side A, side B) outcome signs in (uu, ud, du, dd) order
OUTCOME_SIGNS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Immutable 4x4 Hermitian, unit-trace, positive semidefinite matrix"""
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError(f"two-qubit density matrix must be 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("density matrix has non-finite entries")
        asymmetry = float(np.max(np.abs(m - m.conj().T)))
        if asymmetry > config.HERMITIAN_TOL:
            raise DomainError(f"density matrix is not Hermitian (deviation {asymmetry:.3g})")
        trace = np.trace(m)
        if abs(trace - 1.0) > config.TRACE_TOL:
            raise DomainError(f"density matrix trace is {trace.real:.15g}, not 1")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -config.PSD_TOL:
            raise DomainError(f"density matrix is not positive semidefinite (min eigenvalue {min_eig:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, 'entries', m)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


def as_density_matrix(rho) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)


def check_visibility(V: float) -> Visibility:
    V = float(V)
    if not 0.0 <= V <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {V}")
    return V


def singlet_state() -> DensityMatrix:
    """|psi-> = (|up,down> - |down,up>)/sqrt(2)"""
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return DensityMatrix(np.outer(psi, psi.conj()))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4, dtype=complex) / 4)


def werner_state(V: Visibility) -> DensityMatrix:
    """Singlet mixed with white noise: V*singlet + (1-V)*I/4"""
    V = check_visibility(V)
    return DensityMatrix(V * singlet_state().entries + (1 - V) * np.eye(4) / 4)


def product_state(rho_a, rho_b) -> DensityMatrix:
    return DensityMatrix(np.kron(np.asarray(rho_a, dtype=complex), np.asarray(rho_b, dtype=complex)))


def purity(rho: DensityMatrix) -> float:
    m = as_density_matrix(rho).entries
    return float(np.trace(m @ m).real)


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> DensityMatrix:
    """Random state from a complex Ginibre matrix of the given rank"""
    if not 1 <= rank <= 4:
        raise DomainError(f"rank must lie in [1, 4], got {rank}")
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(m / np.trace(m).real)


def projector(theta: Angle, sign: int) -> np.ndarray:
    """Projector for outcome sign (+1 up, -1 down) of an analyzer in the x-z plane"""
    direction = np.sin(theta) * SIGMA_X + np.cos(theta) * SIGMA_Z
    return (IDENTITY_2 + sign * direction) / 2


def born_probabilities(rho, a: Angle, b: Angle) -> JointDistribution:
    """Joint outcome probabilities tr(rho (P(a) x P(b)))"""
    m = as_density_matrix(rho).entries
    cells = [
        np.trace(m @ np.kron(projector(a, sa), projector(b, sb))).real
        for sa, sb in OUTCOME_SIGNS
    ]
    return JointDistribution.from_cells(cells)


def correlation_tensor(rho) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local x-z Bloch components of each side and the x-z correlation tensor"""
    m = as_density_matrix(rho).entries
    paulis = (SIGMA_X, SIGMA_Z)
    local_a = np.array([np.trace(m @ np.kron(p, IDENTITY_2)).real for p in paulis])
    local_b = np.array([np.trace(m @ np.kron(IDENTITY_2, p)).real for p in paulis])
    tensor = np.array([[np.trace(m @ np.kron(p, q)).real for q in paulis] for p in paulis])
    return local_a, local_b, tensor


def born_cells(rho, a, b) -> np.ndarray:
    """Vectorized Born probabilities over broadcast angle arrays, shape (..., 4)"""
    local_a, local_b, tensor = correlation_tensor(rho)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = (np.sin(a), np.cos(a))
    nb = (np.sin(b), np.cos(b))
    mean_a = na[0] * local_a[0] + na[1] * local_a[1]
    mean_b = nb[0] * local_b[0] + nb[1] * local_b[1]
    product = sum(na[i] * tensor[i, j] * nb[j] for i in range(2) for j in range(2))
    return np.stack(
        [(1 + sa * mean_a + sb * mean_b + sa * sb * product) / 4 for sa, sb in OUTCOME_SIGNS],
        axis=-1,
    )


def partial_transpose(rho) -> np.ndarray:
    """Transpose the second qubit: ((i,j),(k,l)) -> ((i,l),(k,j))"""
    m = np.asarray(getattr(rho, 'entries', rho), dtype=complex)
    if m.shape != (4, 4):
        raise DomainError(f"partial transpose needs a 4x4 matrix, got shape {m.shape}")
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def is_separable_2x2(rho, tol: float = config.PPT_TOL) -> bool:
    """PPT test, conclusive for two qubits"""
    min_eig = float(np.linalg.eigvalsh(partial_transpose(as_density_matrix(rho)))[0])
    return min_eig >= -tol


def separability_threshold(family: Callable[[float], DensityMatrix], tol: float) -> Visibility:
    """Bisect for the largest parameter in [0, 1] where family stays separable"""
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    if is_separable_2x2(family(1.0)):
        return 1.0
    if not is_separable_2x2(family(0.0)):
        return 0.0

    lo, hi = 0.0, 1.0
    steps = 0
    while hi - lo > tol and steps < config.BISECTION_MAX_STEPS:
        mid = 0.5 * (lo + hi)
        if is_separable_2x2(family(mid)):
            lo = mid
        else:
            hi = mid
        steps += 1
    logger.debug("separability threshold in [%.12f, %.12f] after %d steps", lo, hi, steps)
    return 0.5 * (lo + hi)


def werner_separability_threshold(tol: float = 1e-6) -> Visibility:
    return separability_threshold(werner_state, tol)


def to_json(rho) -> List[List[List[float]]]:
    """4 rows x 4 entries x [re, im]"""
    m = as_density_matrix(rho).entries
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def from_json(data) -> DensityMatrix:
    try:
        m = np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)
    except (TypeError, ValueError) as e:
        raise DomainError(f"density matrix must be 4 rows of 4 [re, im] pairs: {e}")
    return DensityMatrix(m)
