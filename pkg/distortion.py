"""
BellNoise - Probability Distortion
Affine distortion p' = s*p - b, its state-level counterpart, critical
visibilities, affine fitting and lateral inhibition
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple, Union

import numpy as np

import config
from correlation import CorrelationModel, JointDistribution, SpinConvention, maximize_chsh
from errors import ConvergenceError, DomainError, UnidentifiableError
from quantum_state import DensityMatrix, Visibility, as_density_matrix, check_visibility

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistortionParams:
    """Offset b over K outcomes; the scale s = 1 + K*b keeps the total at 1"""
    b_coef: float
    K: int = 4

    def __post_init__(self):
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 2:
            raise DomainError(f"K must be an integer >= 2, got {self.K!r}")
        if not math.isfinite(self.b_coef):
            raise DomainError(f"offset must be finite, got {self.b_coef!r}")
        object.__setattr__(self, 'K', int(self.K))
        object.__setattr__(self, 'b_coef', float(self.b_coef))

    @property
    def s(self) -> float:
        return 1.0 + self.K * self.b_coef

    @classmethod
    def from_visibility(cls, V: Visibility, K: int = 4) -> 'DistortionParams':
        """White-noise admixture: s = V"""
        V = check_visibility(V)
        return cls((V - 1.0) / K, K)

    def then(self, other: 'DistortionParams') -> 'DistortionParams':
        return compose(self, other)


@dataclass(frozen=True)
class ComplementForm:
    """p' = a*p - b*(1 - p)"""
    a_coef: float
    b_coef: float

    def apply(self, p: float) -> float:
        return self.a_coef * p - self.b_coef * (1.0 - p)


@dataclass(frozen=True)
class SignedDistribution:
    """Normalized outcome weights that may be negative"""
    entries: Tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(e) for e in self.entries)
        if len(entries) < 2:
            raise DomainError(f"distribution needs at least 2 outcomes, got {len(entries)}")
        total = math.fsum(entries)
        if abs(total - 1.0) > config.NORMALIZATION_TOL:
            raise DomainError(f"distribution sums to {total!r}, not 1")
        object.__setattr__(self, 'entries', entries)

    @property
    def K(self) -> int:
        return len(self.entries)

    @property
    def negative(self) -> bool:
        return any(e < 0 for e in self.entries)

    @property
    def cells(self) -> Tuple[float, float, float, float]:
        if self.K != 4:
            raise DomainError(f"pair-experiment cells need 4 outcomes, got {self.K}")
        return self.entries

    def to_joint(self) -> JointDistribution:
        return JointDistribution.from_cells(self.cells)


class AffineFit(NamedTuple):
    params: DistortionParams
    residual: float


@dataclass(frozen=True, eq=False)
class InhibitionNetwork:
    """Units with inputs x suppressing each other through weights W"""
    x: np.ndarray
    W: np.ndarray
    rectified: bool = False

    def __post_init__(self):
        try:
            x = np.array(self.x, dtype=float)
            W = np.array(self.W, dtype=float)
        except (TypeError, ValueError) as e:
            raise DomainError(f"inputs and weights must be numeric arrays: {e}") from e
        if x.ndim != 1 or W.shape != (x.size, x.size):
            raise DomainError(f"weights must be {x.size}x{x.size}, got shape {W.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(W))):
            raise DomainError("inputs and weights must be finite")
        if np.any(x < 0) or np.any(W < 0):
            raise DomainError("inputs and weights must be nonnegative")
        if np.any(np.diag(W) != 0):
            raise DomainError("units do not inhibit themselves: diagonal of W must be zero")
        if not self.rectified:
            radius = float(np.max(np.abs(np.linalg.eigvals(W)))) if x.size else 0.0
            if radius >= 1.0:
                raise DomainError(f"spectral radius of W must be below 1, got {radius:.6g}")
        x.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'W', W)

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def uniform(cls, x, weight: float, rectified: bool = False) -> 'InhibitionNetwork':
        """All-to-all inhibition of equal strength"""
        n = len(x)
        return cls(x, weight * (np.ones((n, n)) - np.eye(n)), rectified)


def _probabilities(p) -> Tuple[float, ...]:
    if isinstance(p, JointDistribution):
        return p.cells
    if isinstance(p, SignedDistribution):
        return p.entries
    return SignedDistribution(tuple(p)).entries


def affine_distort(p: Union[JointDistribution, SignedDistribution, Sequence[float]],
                   d: DistortionParams) -> SignedDistribution:
    """p'_k = s*p_k - b; negative results are kept and flagged"""
    values = _probabilities(p)
    if len(values) != d.K:
        raise DomainError(f"distortion expects {d.K} outcomes, got {len(values)}")
    out = SignedDistribution(tuple(d.s * v - d.b_coef for v in values))
    if out.negative:
        logger.warning("distortion s=%g, b=%g produced negative probabilities %s",
                       d.s, d.b_coef, out.entries)
    return out


def clamp_renormalize(d: SignedDistribution) -> SignedDistribution:
    clamped = [max(0.0, e) for e in d.entries]
    total = math.fsum(clamped)
    if total <= 0:
        raise DomainError("no positive weight left after clamping")
    return SignedDistribution(tuple(c / total for c in clamped))


def compose(first: DistortionParams, second: DistortionParams) -> DistortionParams:
    """Single distortion equal to applying first, then second"""
    if first.K != second.K:
        raise DomainError(f"cannot compose distortions over K={first.K} and K={second.K}")
    return DistortionParams(second.s * first.b_coef + second.b_coef, first.K)


def to_complement_form(d: DistortionParams) -> ComplementForm:
    return ComplementForm(d.s - d.b_coef, d.b_coef)


def misclassification_params(error_rate: float, K: int = 2) -> DistortionParams:
    """Each outcome recorded as any particular other one with probability error_rate/(K-1)"""
    if isinstance(K, bool) or int(K) != K or K < 2:
        raise DomainError(f"K must be an integer >= 2, got {K!r}")
    if not 0.0 <= error_rate <= 1.0:
        raise DomainError(f"error rate must lie in [0, 1], got {error_rate}")
    return DistortionParams(-error_rate / (K - 1), K)


def distort_state(rho: DensityMatrix, V: Visibility) -> DensityMatrix:
    """V*rho + (1-V)*I/4"""
    V = check_visibility(V)
    m = as_density_matrix(rho).entries
    return DensityMatrix(V * m + (1.0 - V) * np.eye(4) / 4)


def correlation_scaling(V: Union[Visibility, DistortionParams]) -> float:
    """Factor applied to every correlation (and so to CHSH) by a distortion"""
    if isinstance(V, DistortionParams):
        return V.s
    return float(V)


def critical_visibility_chsh(tol: float = 1e-4, spin: SpinConvention = SpinConvention.HALF) -> Visibility:
    """Largest visibility at which the best CHSH value stays within the classical bound"""
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    inner = CorrelationModel.quantum(spin)

    def undetectable(V: float) -> bool:
        model = CorrelationModel.distorted(inner, DistortionParams.from_visibility(V))
        return maximize_chsh(model).value <= config.CLASSICAL_CHSH_BOUND + config.CHSH_BOUND_TOL

    if undetectable(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    steps = 0
    while hi - lo > tol and steps < config.BISECTION_MAX_STEPS:
        mid = 0.5 * (lo + hi)
        if undetectable(mid):
            lo = mid
        else:
            hi = mid
        steps += 1
        logger.debug("critical visibility bracket [%.10f, %.10f]", lo, hi)
    return 0.5 * (lo + hi)


def fit_affine(pairs: Sequence[Tuple[float, float]], K: int = 2) -> AffineFit:
    """Least-squares p_out ~ s*p_in - b with s = 1 + K*b"""
    data = np.asarray(pairs, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError("pairs must be a sequence of (p_in, p_out)")
    if len(data) < 2:
        raise DomainError(f"need at least 2 pairs, got {len(data)}")
    p_in, p_out = data[:, 0], data[:, 1]
    if np.ptp(p_in) == 0:
        raise UnidentifiableError("all p_in are equal; the offset is unidentifiable")

    # p_out - p_in = b*(K*p_in - 1): one free parameter
    x = K * p_in - 1.0
    y = p_out - p_in
    params = DistortionParams(float(x @ y / (x @ x)), K)
    residual = float(np.max(np.abs(params.s * p_in - params.b_coef - p_out)))
    return AffineFit(params, residual)


def inhibition_steady_state(net: InhibitionNetwork) -> np.ndarray:
    """Fixed point of y = x - W*y, optionally rectified at zero"""
    if not net.rectified:
        return np.linalg.solve(np.eye(net.n) + net.W, net.x)

    y = net.x.copy()
    damping = 1.0
    previous = math.inf
    for iteration in range(1, config.INHIBITION_MAX_ITER + 1):
        target = np.maximum(0.0, net.x - net.W @ y)
        step = float(np.max(np.abs(target - y))) if net.n else 0.0
        if step < config.INHIBITION_TOL:
            logger.debug("rectified inhibition converged after %d iterations", iteration)
            return target
        if step >= previous and damping == 1.0:
            logger.warning("rectified inhibition oscillates; damping by %g", config.INHIBITION_DAMPING)
            damping = config.INHIBITION_DAMPING
        y = y + damping * (target - y)
        previous = step
    raise ConvergenceError(f"rectified inhibition did not converge in {config.INHIBITION_MAX_ITER} iterations")


def uniform_inhibition_params(weight: float, K: int) -> DistortionParams:
    """Affine law produced by all-to-all inhibition of strength weight over K outcomes"""
    if not 0.0 <= weight or not weight * (K - 1) < 1.0:
        raise DomainError(f"weight must satisfy 0 <= w*(K-1) < 1, got w={weight}, K={K}")
    return DistortionParams(weight / (1.0 - weight), K)


def inhibition_probabilities(p: Sequence[float], weight: float) -> SignedDistribution:
    """Renormalized output of uniform inhibition driven by outcome probabilities"""
    values = np.array(_probabilities(p))
    y = inhibition_steady_state(InhibitionNetwork.uniform(values, weight))
    return SignedDistribution(tuple(y / y.sum()))
