"""
BellNoise - Correlation Models
Classical and quantum pair-experiment probabilities, correlation functions and CHSH
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Optional, Tuple

import numpy as np
from scipy import optimize

import config
from errors import DomainError

if TYPE_CHECKING:
    from distortion import DistortionParams
    from quantum_state import DensityMatrix

logger = logging.getLogger(__name__)

Angle = float

TWO_PI = 2.0 * math.pi

# Sign of each term, in Settings4.pairs() order
CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


class SpinConvention(Enum):
    HALF = 'half'
    PHOTON = 'photon'

    @property
    def factor(self) -> int:
        """Angle factor g: photon expressions use doubled angles"""
        return 1 if self is SpinConvention.HALF else 2


class ModelKind(Enum):
    CLASSICAL_LINEAR = 'classical_linear'
    QUANTUM = 'quantum'
    STATE = 'state_model'
    DISTORTED = 'distorted'


@dataclass(frozen=True)
class JointDistribution:
    """Outcome probabilities of one pair experiment, cells in (uu, ud, du, dd) order"""
    p_uu: float
    p_ud: float
    p_du: float
    p_dd: float

    def __post_init__(self):
        cells = self.cells
        if not all(math.isfinite(c) for c in cells):
            raise DomainError(f"joint distribution has non-finite cells: {cells}")
        if min(cells) < -config.NEGATIVITY_TOL:
            raise DomainError(f"joint distribution has a negative cell: {cells}")
        total = math.fsum(cells)
        if abs(total - 1.0) > config.NORMALIZATION_TOL:
            raise DomainError(f"joint distribution sums to {total!r}, not 1")

    @classmethod
    def from_cells(cls, cells) -> 'JointDistribution':
        p_uu, p_ud, p_du, p_dd = (float(c) for c in cells)
        return cls(p_uu, p_ud, p_du, p_dd)

    @property
    def cells(self) -> Tuple[float, float, float, float]:
        return (self.p_uu, self.p_ud, self.p_du, self.p_dd)

    def as_array(self) -> np.ndarray:
        return np.array(self.cells)


@dataclass(frozen=True)
class Settings4:
    """Two analyzer angles per side"""
    a: Angle
    a_prime: Angle
    b: Angle
    b_prime: Angle

    @classmethod
    def from_degrees(cls, a: float, a_prime: float, b: float, b_prime: float) -> 'Settings4':
        return cls(math.radians(a), math.radians(a_prime), math.radians(b), math.radians(b_prime))

    def pairs(self) -> Tuple[Tuple[Angle, Angle], ...]:
        """Setting pairs in CHSH order: (a,b), (a,b'), (a',b), (a',b')"""
        return (
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.a_prime, self.b, self.b_prime], dtype=float)

    def to_dict(self) -> dict:
        return {'a': self.a, 'a_prime': self.a_prime, 'b': self.b, 'b_prime': self.b_prime}


@dataclass(frozen=True)
class CorrelationModel:
    """Tagged choice of probability-generating rule"""
    kind: ModelKind
    spin: Optional[SpinConvention] = None
    state: Optional['DensityMatrix'] = None
    inner: Optional['CorrelationModel'] = None
    params: Optional['DistortionParams'] = None

    def __post_init__(self):
        if self.kind is ModelKind.QUANTUM and self.spin is None:
            raise DomainError("quantum model needs a spin convention")
        if self.kind is ModelKind.STATE and self.state is None:
            raise DomainError("state model needs a density matrix")
        if self.kind is ModelKind.DISTORTED:
            if self.inner is None or self.params is None:
                raise DomainError("distorted model needs an inner model and parameters")
            if self.inner.kind is ModelKind.DISTORTED:
                raise DomainError("only one distortion layer is allowed; compose the parameters instead")
            if self.params.K != 4:
                raise DomainError(f"pair experiments have 4 outcomes, distortion has K={self.params.K}")

    @classmethod
    def classical(cls) -> 'CorrelationModel':
        return cls(ModelKind.CLASSICAL_LINEAR)

    @classmethod
    def quantum(cls, spin: SpinConvention = SpinConvention.HALF) -> 'CorrelationModel':
        return cls(ModelKind.QUANTUM, spin=spin)

    @classmethod
    def state_model(cls, rho: 'DensityMatrix') -> 'CorrelationModel':
        return cls(ModelKind.STATE, state=rho)

    @classmethod
    def distorted(cls, inner: 'CorrelationModel', params: 'DistortionParams') -> 'CorrelationModel':
        return cls(ModelKind.DISTORTED, inner=inner, params=params)

    @property
    def label(self) -> str:
        if self.kind is ModelKind.CLASSICAL_LINEAR:
            return 'classical'
        if self.kind is ModelKind.QUANTUM:
            return f'quantum-{self.spin.value}'
        if self.kind is ModelKind.STATE:
            return 'state'
        return f'distorted({self.inner.label}, s={self.params.s:g})'


class ChshOptimum(NamedTuple):
    settings: Settings4
    value: float


def wrap_difference(a, b):
    """Angle between two analyzer directions, wrapped to [0, pi]"""
    d = np.mod(np.abs(np.subtract(a, b, dtype=float)), TWO_PI)
    return np.pi - np.abs(d - np.pi)


def classical_joint(a: Angle, b: Angle) -> JointDistribution:
    """Bell's linear hidden-variable model"""
    same = float(wrap_difference(a, b)) / TWO_PI
    return JointDistribution(same, 0.5 - same, 0.5 - same, same)


def quantum_joint(a: Angle, b: Angle, spin: SpinConvention = SpinConvention.HALF) -> JointDistribution:
    """Singlet-type quantum probabilities; photons use the doubled angle"""
    delta = float(wrap_difference(a, b))
    same = 0.5 * math.sin(spin.factor * delta / 2.0) ** 2
    return JointDistribution(same, 0.5 - same, 0.5 - same, same)


def correlation(d) -> float:
    """E = P(up,up) + P(down,down) - P(down,up) - P(up,down)"""
    p_uu, p_ud, p_du, p_dd = d.cells
    return p_uu + p_dd - p_du - p_ud


def model_joint(m: CorrelationModel, a: Angle, b: Angle):
    """Joint distribution of any model; distorted models yield a SignedDistribution"""
    if m.kind is ModelKind.CLASSICAL_LINEAR:
        return classical_joint(a, b)
    if m.kind is ModelKind.QUANTUM:
        return quantum_joint(a, b, m.spin)
    if m.kind is ModelKind.STATE:
        from quantum_state import born_probabilities
        return born_probabilities(m.state, a, b)
    from distortion import affine_distort
    return affine_distort(model_joint(m.inner, a, b), m.params)


def model_correlation(m: CorrelationModel, a: Angle, b: Angle) -> float:
    return correlation(model_joint(m, a, b))


def joint_cells(m: CorrelationModel, a, b) -> np.ndarray:
    """Vectorized cell probabilities over broadcast angle arrays, shape (..., 4)"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if m.kind is ModelKind.STATE:
        from quantum_state import born_cells
        return born_cells(m.state, a, b)
    if m.kind is ModelKind.DISTORTED:
        return m.params.s * joint_cells(m.inner, a, b) - m.params.b_coef

    delta = wrap_difference(a, b)
    if m.kind is ModelKind.CLASSICAL_LINEAR:
        same = delta / TWO_PI
    else:
        same = 0.5 * np.sin(m.spin.factor * delta / 2.0) ** 2
    different = 0.5 - same
    return np.stack([same, different, different, same], axis=-1)


def cells_correlation(cells: np.ndarray) -> np.ndarray:
    return cells[..., 0] + cells[..., 3] - cells[..., 1] - cells[..., 2]


def chsh(m: CorrelationModel, s: Settings4) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b')"""
    return math.fsum(
        sign * model_correlation(m, x, y) for sign, (x, y) in zip(CHSH_SIGNS, s.pairs())
    )


def _grid_maximum(e: np.ndarray, grid: np.ndarray) -> ChshOptimum:
    # S splits into (E(a,b) - E(a,b')) + (E(a',b) + E(a',b')), so for fixed
    # (b, b') the a and a' maximizations are independent.
    best_value, best_index = -math.inf, None
    for j in range(len(grid)):
        diff = e[:, [j]] - e
        total = e[:, [j]] + e
        for direction, reduce in ((1.0, np.max), (-1.0, np.min)):
            candidates = direction * (reduce(diff, axis=0) + reduce(total, axis=0))
            k = int(np.argmax(candidates))
            if candidates[k] > best_value:
                if direction > 0:
                    i, i_prime = int(np.argmax(diff[:, k])), int(np.argmax(total[:, k]))
                else:
                    i, i_prime = int(np.argmin(diff[:, k])), int(np.argmin(total[:, k]))
                best_value, best_index = float(candidates[k]), (i, i_prime, j, k)

    i, i_prime, j, k = best_index
    return ChshOptimum(Settings4(grid[i], grid[i_prime], grid[j], grid[k]), best_value)


def maximize_chsh(m: CorrelationModel, grid_step_deg: float = config.CHSH_GRID_STEP_DEG) -> ChshOptimum:
    """Settings maximizing |S|: exhaustive angle grid, then Nelder-Mead refinement"""
    if not 0 < grid_step_deg <= config.CHSH_GRID_STEP_DEG:
        raise DomainError(f"grid step must lie in (0, {config.CHSH_GRID_STEP_DEG}] degrees, got {grid_step_deg}")

    n = int(math.ceil(360.0 / grid_step_deg))
    grid = np.linspace(0.0, TWO_PI, n, endpoint=False)
    e = cells_correlation(joint_cells(m, grid[:, None], grid[None, :]))
    coarse = _grid_maximum(e, grid)

    sign = math.copysign(1.0, chsh(m, coarse.settings))

    def objective(x: np.ndarray) -> float:
        return -sign * chsh(m, Settings4(*x))

    x0 = coarse.settings.as_array()
    simplex = np.vstack([x0, x0 + math.radians(grid_step_deg) * np.eye(4)])
    result = optimize.minimize(
        objective,
        x0,
        method='Nelder-Mead',
        options={
            'initial_simplex': simplex,
            'xatol': config.CHSH_REFINE_XATOL,
            'fatol': config.CHSH_REFINE_FATOL,
            'maxiter': config.CHSH_REFINE_MAXITER,
        },
    )
    logger.debug("CHSH %s: grid %.10f, refined %.10f after %d iterations",
                 m.label, coarse.value, -result.fun, result.nit)

    if -result.fun > coarse.value:
        return ChshOptimum(Settings4(*(float(v) for v in result.x)), float(-result.fun))
    return coarse


def classical_match_delta(delta_q: Angle, spin: SpinConvention = SpinConvention.HALF) -> Angle:
    """Classical angle difference reproducing the quantum joint distribution at delta_q"""
    delta_q = float(wrap_difference(delta_q, 0.0))
    return math.pi * math.sin(spin.factor * delta_q / 2.0) ** 2


def classical_angles_for_correlation(target: float) -> Angle:
    """Classical angle difference giving correlation target in [-1, 1]"""
    if not -1.0 <= target <= 1.0:
        raise DomainError(f"correlation target must lie in [-1, 1], got {target}")
    return math.pi * (target + 1.0) / 2.0


def standard_settings(spin: SpinConvention = SpinConvention.HALF) -> Settings4:
    """Settings where the quantum model reaches +2*sqrt(2) under CHSH_SIGNS"""
    g = spin.factor
    return Settings4(0.0, -math.pi / 2 / g, 3 * math.pi / 4 / g, math.pi / 4 / g)


def matched_classical_settings(m: CorrelationModel, s: Settings4) -> Settings4:
    """
    Classical angles reproducing m's correlation at (a,b), (a,b') and (a',b).
    The fourth pair is then fixed by geometry, so the match cannot hold jointly.
    """
    targets = [min(1.0, max(-1.0, model_correlation(m, x, y))) for x, y in s.pairs()]
    d_ab, d_abp, d_apb, _ = (classical_angles_for_correlation(t) for t in targets)

    classical = CorrelationModel.classical()
    b, b_prime = d_ab, d_abp
    a_prime = min(
        (b - d_apb, b + d_apb),
        key=lambda x: abs(model_correlation(classical, x, b_prime) - targets[3]),
    )
    return Settings4(0.0, a_prime, b, b_prime)
