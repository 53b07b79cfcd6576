"""
BellNoise - Trial Simulator
Seeded Monte Carlo of pair experiments, selection-biased trials and masking scenarios
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

import config
from correlation import (
    CHSH_SIGNS,
    Angle,
    CorrelationModel,
    ModelKind,
    Settings4,
    joint_cells,
    matched_classical_settings,
    model_joint,
    standard_settings,
)
from distortion import DistortionParams, compose
from errors import DomainError
from streams import Block, StreamFactory, check_seed

logger = logging.getLogger(__name__)


class Outcome(Enum):
    UP = 'up'
    DOWN = 'down'


CELL_OUTCOMES = (
    (Outcome.UP, Outcome.UP),
    (Outcome.UP, Outcome.DOWN),
    (Outcome.DOWN, Outcome.UP),
    (Outcome.DOWN, Outcome.DOWN),
)

VERDICT_VIOLATION = 'violates classical bound'
VERDICT_NONE = 'no violation'


class AngleMode(Enum):
    FIXED_FOUR = 'fixed_four'
    JITTERED = 'jittered'
    PER_PATIENT_RANDOM = 'per_patient_random'


@dataclass(frozen=True)
class PatientProfile:
    setting_a: Angle
    setting_b: Angle
    compliance_trait: float

    def __post_init__(self):
        if not 0.0 <= self.compliance_trait <= 1.0:
            raise DomainError(f"compliance trait must lie in [0, 1], got {self.compliance_trait}")


def _check_common(n_patients: int, seed: int, workers: int, block_size: int):
    if isinstance(n_patients, bool) or not isinstance(n_patients, int) or n_patients < 1:
        raise DomainError(f"n_patients must be a positive integer, got {n_patients!r}")
    check_seed(seed)
    if workers < 1:
        raise DomainError(f"workers must be at least 1, got {workers}")
    if block_size < 1:
        raise DomainError(f"block size must be positive, got {block_size}")


@dataclass(frozen=True)
class PopulationConfig:
    n_patients: int
    source_model: CorrelationModel
    settings: Settings4 = field(default_factory=standard_settings)
    angle_mode: AngleMode = AngleMode.FIXED_FOUR
    spread: float = 0.0
    seed: int = config.DEFAULT_SEED
    round_robin: bool = False
    workers: int = config.DEFAULT_WORKERS
    block_size: int = config.STREAM_BLOCK_SIZE

    def __post_init__(self):
        _check_common(self.n_patients, self.seed, self.workers, self.block_size)
        if not self.spread >= 0:
            raise DomainError(f"jitter spread must be nonnegative, got {self.spread}")


@dataclass(frozen=True)
class TraitDistribution:
    kind: str = 'uniform'
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ('uniform', 'beta'):
            raise DomainError(f"trait distribution must be 'uniform' or 'beta', got {self.kind!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"beta parameters must be positive, got ({self.alpha}, {self.beta})")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == 'uniform':
            return rng.random(n)
        return rng.beta(self.alpha, self.beta, n)


@dataclass(frozen=True)
class OutcomeRule:
    """Monotone map from compliance trait to pass probability"""
    kind: str = 'indicator'
    value: float = 0.5
    steepness: float = 10.0
    center: float = 0.5

    def __post_init__(self):
        if self.kind not in ('indicator', 'constant', 'linear', 'logistic'):
            raise DomainError(f"unknown outcome rule {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            raise DomainError(f"constant pass probability must lie in [0, 1], got {self.value}")
        if self.steepness < 0:
            raise DomainError(f"logistic steepness must be nonnegative, got {self.steepness}")

    def __call__(self, t: np.ndarray, threshold: float) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == 'indicator':
            return (t >= threshold).astype(float)
        if self.kind == 'constant':
            return np.full_like(t, self.value)
        if self.kind == 'linear':
            return t
        return 1.0 / (1.0 + np.exp(-self.steepness * (t - self.center)))


@dataclass(frozen=True)
class BreilmannConfig:
    n_patients: int
    threshold: float = 0.5
    trait: TraitDistribution = field(default_factory=TraitDistribution)
    outcome_rule: OutcomeRule = field(default_factory=OutcomeRule)
    pill_effect: float = 0.0
    misclassification: float = 0.0
    seed: int = config.DEFAULT_SEED
    workers: int = config.DEFAULT_WORKERS
    block_size: int = config.STREAM_BLOCK_SIZE

    def __post_init__(self):
        _check_common(self.n_patients, self.seed, self.workers, self.block_size)
        if not 0.0 <= self.threshold <= 1.0:
            raise DomainError(f"compliance threshold must lie in [0, 1], got {self.threshold}")
        if not 0.0 <= self.misclassification <= 1.0:
            raise DomainError(f"misclassification rate must lie in [0, 1], got {self.misclassification}")
        if not math.isfinite(self.pill_effect):
            raise DomainError(f"pill effect must be finite, got {self.pill_effect}")


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Counts are indexed [arm][outcome]: arm 0 treated (compliers), 1 control; outcome 0 pass, 1 fail"""
    counts: np.ndarray
    observed_rate_treated: Optional[float]
    observed_rate_control: Optional[float]
    apparent_effect: Optional[float]
    true_causal_effect: float
    ci_halfwidth: Optional[float]

    @property
    def degenerate(self) -> bool:
        return self.apparent_effect is None

    @classmethod
    def from_counts(cls, counts: np.ndarray, true_causal_effect: float) -> 'TrialResult':
        counts = np.asarray(counts, dtype=np.int64)
        n_treated, n_control = (int(n) for n in counts.sum(axis=1))
        rate_treated = counts[0, 0] / n_treated if n_treated else None
        rate_control = counts[1, 0] / n_control if n_control else None

        if rate_treated is None or rate_control is None:
            logger.warning("degenerate trial: %d compliers, %d refusers", n_treated, n_control)
            return cls(counts, _maybe_float(rate_treated), _maybe_float(rate_control),
                       None, float(true_causal_effect), None)

        variance = (rate_treated * (1 - rate_treated) / n_treated
                    + rate_control * (1 - rate_control) / n_control)
        return cls(
            counts,
            float(rate_treated),
            float(rate_control),
            float(rate_treated - rate_control),
            float(true_causal_effect),
            float(config.Z_95 * math.sqrt(variance)),
        )

    def to_dict(self) -> dict:
        return {
            'counts': self.counts.tolist(),
            'rates': {'treated': self.observed_rate_treated, 'control': self.observed_rate_control},
            'apparent_effect': self.apparent_effect,
            'true_causal_effect': self.true_causal_effect,
            'ci_halfwidth': self.ci_halfwidth,
            'degenerate': self.degenerate,
        }


@dataclass(frozen=True, eq=False)
class ChshEstimate:
    """Counts are indexed [setting][cell], settings in CHSH order, cells (uu, ud, du, dd)"""
    counts: np.ndarray
    e_hat: Tuple[float, float, float, float]
    s_hat: float
    stderr: float
    underpowered: Tuple[int, ...] = ()

    @property
    def per_setting_counts(self) -> np.ndarray:
        """Four 2x2 tables, [setting][outcome a][outcome b]"""
        return self.counts.reshape(4, 2, 2)

    @property
    def violates(self) -> bool:
        return abs(self.s_hat) - 2 * self.stderr > config.CLASSICAL_CHSH_BOUND

    @property
    def verdict(self) -> str:
        return VERDICT_VIOLATION if self.violates else VERDICT_NONE

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> 'ChshEstimate':
        counts = np.asarray(counts, dtype=np.int64)
        e_hat, variances = [], []
        for row in counts:
            n = int(row.sum())
            if n == 0:
                e_hat.append(0.0)
                variances.append(1.0)
                continue
            e = float(row[0] + row[3] - row[1] - row[2]) / n
            e_hat.append(e)
            variances.append((1.0 - e * e) / n)

        underpowered = tuple(k for k, row in enumerate(counts) if row.sum() < config.MIN_SETTING_SAMPLES)
        if underpowered:
            logger.warning("underpowered CHSH estimate: settings %s have fewer than %d samples",
                           underpowered, config.MIN_SETTING_SAMPLES)
        s_hat = math.fsum(sign * e for sign, e in zip(CHSH_SIGNS, e_hat))
        return cls(counts, tuple(e_hat), s_hat, math.sqrt(math.fsum(variances)), underpowered)

    def to_dict(self) -> dict:
        return {
            'counts': self.per_setting_counts.tolist(),
            'e_hat': list(self.e_hat),
            's_hat': self.s_hat,
            'stderr': self.stderr,
            'verdict': self.verdict,
            'underpowered': list(self.underpowered),
        }


class CorrelationEstimate(NamedTuple):
    e_hat: float
    stderr: float
    n: int


class MaskingRow(NamedTuple):
    scenario: str
    model: str
    settings: Settings4
    estimate: ChshEstimate

    def to_dict(self) -> dict:
        return {
            'scenario': self.scenario,
            'model': self.model,
            'settings': self.settings.to_dict(),
            'e_hat': list(self.estimate.e_hat),
            's_hat': self.estimate.s_hat,
            'stderr': self.estimate.stderr,
            'verdict': self.estimate.verdict,
        }


@dataclass(frozen=True)
class MaskingReport:
    rows: Tuple[MaskingRow, ...]

    def row(self, scenario: str) -> MaskingRow:
        for r in self.rows:
            if r.scenario == scenario:
                return r
        raise KeyError(scenario)

    def to_dict(self) -> dict:
        return {'rows': [r.to_dict() for r in self.rows]}


def _maybe_float(value) -> Optional[float]:
    return None if value is None else float(value)


def _check_cells(cells: np.ndarray):
    if np.any(cells < -config.NEGATIVITY_TOL):
        raise DomainError("model yields negative probabilities; apply clamp_renormalize before sampling")


def _draw_cells(cells: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse CDF over cells in (uu, ud, du, dd) order"""
    cdf = np.cumsum(cells, axis=-1)
    return (np.asarray(u)[..., None] >= cdf[..., :3]).sum(axis=-1)


def sample_pair(m: CorrelationModel, a: Angle, b: Angle,
                rng: np.random.Generator) -> Tuple[Outcome, Outcome]:
    cells = np.array(model_joint(m, a, b).cells)
    _check_cells(cells)
    return CELL_OUTCOMES[int(_draw_cells(cells, rng.random()))]


# ==================== PAIR EXPERIMENTS ====================

# Uniform columns per patient: setting, jitter a, jitter b, outcome, trait
_POPULATION_COLUMNS = 5


def _patient_angles(cfg: PopulationConfig, block: Block,
                    u: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if cfg.round_robin:
        setting = np.arange(block.start, block.stop) % 4
    else:
        setting = np.minimum((u[:, 0] * 4).astype(np.int64), 3)

    s = cfg.settings
    a = np.array([s.a, s.a, s.a_prime, s.a_prime])[setting]
    b = np.array([s.b, s.b_prime, s.b, s.b_prime])[setting]
    if cfg.angle_mode is AngleMode.JITTERED:
        a = a + cfg.spread * (2.0 * u[:, 1] - 1.0)
        b = b + cfg.spread * (2.0 * u[:, 2] - 1.0)
    elif cfg.angle_mode is AngleMode.PER_PATIENT_RANDOM:
        a = 2.0 * math.pi * u[:, 1]
        b = 2.0 * math.pi * u[:, 2]
    return setting, a, b


def _population_block(cfg: PopulationConfig, block: Block, rng: np.random.Generator) -> np.ndarray:
    u = rng.random((block.size, _POPULATION_COLUMNS))
    setting, a, b = _patient_angles(cfg, block, u)
    cells = joint_cells(cfg.source_model, a, b)
    _check_cells(cells)
    drawn = _draw_cells(cells, u[:, 3])
    return np.bincount(setting * 4 + drawn, minlength=16).reshape(4, 4)


def _simulate_population(cfg: PopulationConfig) -> np.ndarray:
    streams = StreamFactory(cfg.seed, cfg.block_size)
    parts = streams.map_blocks(
        cfg.n_patients, lambda block, rng: _population_block(cfg, block, rng), cfg.workers
    )
    return np.sum(parts, axis=0, dtype=np.int64)


def draw_profiles(cfg: PopulationConfig, count: Optional[int] = None) -> List[PatientProfile]:
    """Per-patient settings and traits, from the same streams the simulation uses"""
    count = cfg.n_patients if count is None else min(count, cfg.n_patients)
    streams = StreamFactory(cfg.seed, cfg.block_size)

    def profiles(block: Block, rng: np.random.Generator) -> List[PatientProfile]:
        u = rng.random((block.size, _POPULATION_COLUMNS))
        _, a, b = _patient_angles(cfg, block, u)
        return [PatientProfile(float(x), float(y), float(t)) for x, y, t in zip(a, b, u[:, 4])]

    return [p for part in streams.map_blocks(count, profiles, cfg.workers) for p in part]


def estimate_chsh(cfg: PopulationConfig) -> ChshEstimate:
    """Finite-sample CHSH with patients randomized over the four setting pairs"""
    if cfg.angle_mode is AngleMode.PER_PATIENT_RANDOM:
        raise DomainError("CHSH estimation needs fixed_four or jittered angles")
    estimate = ChshEstimate.from_counts(_simulate_population(cfg))
    logger.info("CHSH %s (%s, n=%d): s_hat=%.6f +/- %.6f",
                cfg.source_model.label, cfg.angle_mode.value, cfg.n_patients,
                estimate.s_hat, estimate.stderr)
    return estimate


def pooled_correlation(cfg: PopulationConfig) -> CorrelationEstimate:
    """One correlation estimate pooling every patient regardless of setting"""
    cells = _simulate_population(cfg).sum(axis=0)
    n = int(cells.sum())
    e = float(cells[0] + cells[3] - cells[1] - cells[2]) / n
    return CorrelationEstimate(e, math.sqrt((1.0 - e * e) / n), n)


# ==================== SELECTION BIAS ====================

def _breilmann_block(cfg: BreilmannConfig, block: Block, rng: np.random.Generator) -> np.ndarray:
    t = cfg.trait.sample(rng, block.size)
    u = rng.random((block.size, 2))
    complied = t >= cfg.threshold
    p_pass = np.clip(cfg.outcome_rule(t, cfg.threshold) + cfg.pill_effect * complied, 0.0, 1.0)
    passed = u[:, 0] < p_pass
    # Recorded outcome flipped with the misclassification rate
    recorded = passed ^ (u[:, 1] < cfg.misclassification)

    arm = np.where(complied, 0, 1)
    outcome = np.where(recorded, 0, 1)
    return np.bincount(arm * 2 + outcome, minlength=4).reshape(2, 2)


def breilmann_trial(cfg: BreilmannConfig) -> TrialResult:
    """Compliers vs refusers when compliance and outcome share the trait"""
    streams = StreamFactory(cfg.seed, cfg.block_size)
    parts = streams.map_blocks(
        cfg.n_patients, lambda block, rng: _breilmann_block(cfg, block, rng), cfg.workers
    )
    result = TrialResult.from_counts(np.sum(parts, axis=0, dtype=np.int64), cfg.pill_effect)
    logger.info("trial n=%d: apparent effect %s, true effect %g",
                cfg.n_patients, result.apparent_effect, result.true_causal_effect)
    return result


# ==================== MASKING ====================

def _with_distortion(model: CorrelationModel, params: DistortionParams) -> CorrelationModel:
    if model.kind is ModelKind.DISTORTED:
        return CorrelationModel.distorted(model.inner, compose(model.params, params))
    return CorrelationModel.distorted(model, params)


def masking_report(cfg: PopulationConfig, distortion: Optional[DistortionParams] = None) -> MaskingReport:
    """CHSH verdicts for the raw, distorted, jittered and classically matched sources"""
    base = cfg
    if cfg.angle_mode is AngleMode.PER_PATIENT_RANDOM:
        logger.warning("masking report uses the fixed settings instead of per-patient random angles")
        base = replace(cfg, angle_mode=AngleMode.FIXED_FOUR)

    spread = cfg.spread if cfg.angle_mode is AngleMode.JITTERED and cfg.spread > 0 else config.DEFAULT_JITTER_SPREAD
    scenarios = [('raw', base)]
    if distortion is not None:
        scenarios.append(('distorted', replace(base, source_model=_with_distortion(base.source_model, distortion))))
    scenarios.append(('jittered', replace(base, angle_mode=AngleMode.JITTERED, spread=spread)))
    scenarios.append(('classical_matched', replace(
        base,
        source_model=CorrelationModel.classical(),
        settings=matched_classical_settings(base.source_model, base.settings),
        angle_mode=AngleMode.FIXED_FOUR,
    )))

    rows = tuple(
        MaskingRow(name, scenario.source_model.label, scenario.settings, estimate_chsh(scenario))
        for name, scenario in scenarios
    )
    return MaskingReport(rows)
