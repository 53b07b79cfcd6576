"""
BellNoise - Configuration Settings
Centralized numerical, simulation and logging settings
"""
import logging
import math
import os

from errors import ConfigError

# Environment variables
SEED_ENV_VAR = 'BELLNOISE_SEED'
LOG_LEVEL_ENV_VAR = 'BELLNOISE_LOG_LEVEL'

# Numerical tolerances
NORMALIZATION_TOL = 1e-12
NEGATIVITY_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
PPT_TOL = 1e-10

# CHSH optimizer settings
CHSH_GRID_STEP_DEG = 2.0
CHSH_REFINE_XATOL = 1e-10
CHSH_REFINE_FATOL = 1e-8
CHSH_REFINE_MAXITER = 20000
CLASSICAL_CHSH_BOUND = 2.0
# Slack for rounding when comparing an exact CHSH value with the bound
CHSH_BOUND_TOL = 1e-9

# Bisection settings
BISECTION_MAX_STEPS = 200

# Lateral inhibition settings
INHIBITION_TOL = 1e-10
INHIBITION_MAX_ITER = 100000
INHIBITION_DAMPING = 0.5

# Simulation settings
DEFAULT_SEED = 1729
DEFAULT_WORKERS = 1
STREAM_BLOCK_SIZE = 65536
MIN_SETTING_SAMPLES = 10
Z_95 = 1.96
DEFAULT_JITTER_SPREAD = math.pi / 4

# Report settings
CSV_SIGNIFICANT_DIGITS = 9
CSV_HEADER = ('delta', 'e_classical', 'e_quantum_half', 'e_quantum_photon')

# Config file settings
CONFIG_VERSION = 1

# Logging settings
DEFAULT_LOG_LEVEL = 'WARNING'
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


def default_seed() -> int:
    """Seed from BELLNOISE_SEED, read at call time"""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == '':
        return DEFAULT_SEED
    try:
        seed = int(raw, 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError(f"{SEED_ENV_VAR} must be a 64-bit unsigned integer, got {seed}")
    return seed


def log_level() -> str:
    """Level from BELLNOISE_LOG_LEVEL, read at call time"""
    raw = os.environ.get(LOG_LEVEL_ENV_VAR, '').strip().upper()
    if not raw:
        return DEFAULT_LOG_LEVEL
    if not isinstance(logging.getLevelName(raw), int):
        raise ConfigError(f"{LOG_LEVEL_ENV_VAR} must be a logging level name, got {raw!r}")
    return raw
