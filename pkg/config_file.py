"""
BellNoise - Config Files
Strict JSON ingestion for population and trial configurations
"""
import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Union

import config
from correlation import CorrelationModel, ModelKind, Settings4, SpinConvention, standard_settings
from distortion import DistortionParams
from errors import BellNoiseError, ConfigError
from quantum_state import from_json, maximally_mixed, singlet_state, werner_state
from trial_sim import AngleMode, BreilmannConfig, OutcomeRule, PopulationConfig, TraitDistribution

POPULATION_KEYS = {
    'version', 'n_patients', 'angle_mode', 'settings', 'spread', 'model',
    'seed', 'round_robin', 'workers',
}
BREILMANN_KEYS = {
    'version', 'n_patients', 'threshold', 'trait', 'outcome_rule', 'pill_effect',
    'misclassification', 'seed', 'workers',
}
SETTINGS_KEYS = {'a', 'a_prime', 'b', 'b_prime'}
MODEL_KEYS = {
    'classical': {'kind'},
    'quantum': {'kind', 'spin'},
    'state': {'kind', 'state', 'visibility', 'matrix'},
    'distorted': {'kind', 'inner', 'visibility', 'b_coef'},
}
TRAIT_KEYS = {'kind', 'alpha', 'beta'}
OUTCOME_RULE_KEYS = {'kind', 'value', 'steepness', 'center'}

MODEL_NAMES = ('classical', 'quantum-half', 'quantum-photon', 'singlet', 'werner')


def _check_keys(data: Any, allowed: set, where: str) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {', '.join(unknown)}")
    return data


def _number(data: Dict[str, Any], key: str, default=None, where: str = 'config') -> float:
    value = data.get(key, default)
    if value is None:
        raise ConfigError(f"{where} is missing {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _integer(data: Dict[str, Any], key: str, default=None, where: str = 'config') -> int:
    value = data.get(key, default)
    if value is None:
        raise ConfigError(f"{where} is missing {key!r}")
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return value


def _read(source: Union[str, Path, Dict[str, Any]]) -> Dict[str, Any]:
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source, encoding='utf-8') as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {source}: {e}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {source} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    version = data.get('version')
    if version != config.CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}; expected {config.CONFIG_VERSION}")
    return data


def model_from_name(name: str, visibility: Optional[float] = None) -> CorrelationModel:
    """Models addressable from the command line; visibility adds white noise"""
    if name == 'classical':
        model = CorrelationModel.classical()
    elif name == 'quantum-half':
        model = CorrelationModel.quantum(SpinConvention.HALF)
    elif name == 'quantum-photon':
        model = CorrelationModel.quantum(SpinConvention.PHOTON)
    elif name == 'singlet':
        model = CorrelationModel.state_model(singlet_state())
    elif name == 'werner':
        # Werner visibility is a property of the state itself
        return CorrelationModel.state_model(werner_state(1.0 if visibility is None else visibility))
    else:
        raise ConfigError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    if visibility is None:
        return model
    return CorrelationModel.distorted(model, DistortionParams.from_visibility(visibility))


def parse_model(data: Any, where: str = 'model') -> CorrelationModel:
    if isinstance(data, str):
        return model_from_name(data)
    if not isinstance(data, dict) or data.get('kind') not in MODEL_KEYS:
        raise ConfigError(f"{where}.kind must be one of {', '.join(MODEL_KEYS)}")
    kind = data['kind']
    _check_keys(data, MODEL_KEYS[kind], where)

    if kind == 'classical':
        return CorrelationModel.classical()
    if kind == 'quantum':
        try:
            return CorrelationModel.quantum(SpinConvention(data.get('spin', 'half')))
        except ValueError:
            raise ConfigError(f"{where}.spin must be 'half' or 'photon', got {data.get('spin')!r}")
    if kind == 'state':
        if 'matrix' in data:
            return CorrelationModel.state_model(from_json(data['matrix']))
        state = data.get('state', 'singlet')
        if state == 'singlet':
            return CorrelationModel.state_model(singlet_state())
        if state == 'werner':
            return CorrelationModel.state_model(werner_state(_number(data, 'visibility', where=where)))
        if state == 'mixed':
            return CorrelationModel.state_model(maximally_mixed())
        raise ConfigError(f"{where}.state must be 'singlet', 'werner' or 'mixed', got {state!r}")

    inner = parse_model(data.get('inner'), where=f'{where}.inner')
    if ('visibility' in data) == ('b_coef' in data):
        raise ConfigError(f"{where} needs exactly one of 'visibility' or 'b_coef'")
    if 'visibility' in data:
        params = DistortionParams.from_visibility(_number(data, 'visibility', where=where))
    else:
        params = DistortionParams(_number(data, 'b_coef', where=where))
    return CorrelationModel.distorted(inner, params)


def _spin_of(model: CorrelationModel) -> SpinConvention:
    if model.kind is ModelKind.DISTORTED:
        model = model.inner
    return model.spin if model.spin is not None else SpinConvention.HALF


def _seed(data: Dict[str, Any], override: Optional[int]) -> int:
    if override is not None:
        return override
    if 'seed' in data:
        return _integer(data, 'seed')
    return config.default_seed()


def parse_settings(data: Any, degrees: bool = False) -> Settings4:
    _check_keys(data, SETTINGS_KEYS, 'settings')
    values = [_number(data, key, where='settings') for key in ('a', 'a_prime', 'b', 'b_prime')]
    if degrees:
        return Settings4.from_degrees(*values)
    return Settings4(*values)


def load_population_config(source, degrees: bool = False, seed: Optional[int] = None,
                           workers: Optional[int] = None) -> PopulationConfig:
    """Seed precedence: argument, then file, then BELLNOISE_SEED"""
    data = _check_keys(_read(source), POPULATION_KEYS, 'population config')
    try:
        model = parse_model(data.get('model', 'quantum-half'))
        if 'settings' in data:
            settings = parse_settings(data['settings'], degrees)
        else:
            settings = standard_settings(_spin_of(model))
        spread = _number(data, 'spread', 0.0)
        try:
            angle_mode = AngleMode(data.get('angle_mode', 'fixed_four'))
        except ValueError:
            raise ConfigError(f"angle_mode must be one of {', '.join(m.value for m in AngleMode)}")
        round_robin = data.get('round_robin', False)
        if not isinstance(round_robin, bool):
            raise ConfigError(f"round_robin must be true or false, got {round_robin!r}")
        return PopulationConfig(
            n_patients=_integer(data, 'n_patients'),
            source_model=model,
            settings=settings,
            angle_mode=angle_mode,
            spread=math.radians(spread) if degrees else spread,
            seed=_seed(data, seed),
            round_robin=round_robin,
            workers=workers if workers is not None else _integer(data, 'workers', config.DEFAULT_WORKERS),
        )
    except ConfigError:
        raise
    except BellNoiseError as e:
        raise ConfigError(f"invalid population config: {e}")


def load_breilmann_config(source, seed: Optional[int] = None,
                          workers: Optional[int] = None) -> BreilmannConfig:
    data = _check_keys(_read(source), BREILMANN_KEYS, 'trial config')
    try:
        trait_data = _check_keys(data.get('trait', {'kind': 'uniform'}), TRAIT_KEYS, 'trait')
        rule_data = _check_keys(data.get('outcome_rule', {'kind': 'indicator'}), OUTCOME_RULE_KEYS, 'outcome_rule')
        trait = TraitDistribution(
            kind=trait_data.get('kind', 'uniform'),
            alpha=_number(trait_data, 'alpha', 1.0, 'trait'),
            beta=_number(trait_data, 'beta', 1.0, 'trait'),
        )
        rule = OutcomeRule(
            kind=rule_data.get('kind', 'indicator'),
            value=_number(rule_data, 'value', 0.5, 'outcome_rule'),
            steepness=_number(rule_data, 'steepness', 10.0, 'outcome_rule'),
            center=_number(rule_data, 'center', 0.5, 'outcome_rule'),
        )
        return BreilmannConfig(
            n_patients=_integer(data, 'n_patients'),
            threshold=_number(data, 'threshold', 0.5),
            trait=trait,
            outcome_rule=rule,
            pill_effect=_number(data, 'pill_effect', 0.0),
            misclassification=_number(data, 'misclassification', 0.0),
            seed=_seed(data, seed),
            workers=workers if workers is not None else _integer(data, 'workers', config.DEFAULT_WORKERS),
        )
    except ConfigError:
        raise
    except BellNoiseError as e:
        raise ConfigError(f"invalid trial config: {e}")
