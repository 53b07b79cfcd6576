import json
import math

import pytest

import config
from config_file import load_breilmann_config, load_population_config, model_from_name, parse_model
from correlation import ModelKind, SpinConvention, standard_settings
from errors import ConfigError
from trial_sim import AngleMode


def write(tmp_path, data, name='cfg.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_population_defaults(tmp_path):
    cfg = load_population_config(write(tmp_path, {'version': 1, 'n_patients': 100}))
    assert cfg.n_patients == 100
    assert cfg.source_model.kind is ModelKind.QUANTUM
    assert cfg.settings == standard_settings()
    assert cfg.angle_mode is AngleMode.FIXED_FOUR
    assert cfg.seed == config.DEFAULT_SEED


def test_population_full_file(tmp_path):
    data = {
        'version': 1,
        'n_patients': 500,
        'model': {'kind': 'distorted', 'inner': {'kind': 'quantum', 'spin': 'photon'}, 'visibility': 0.6},
        'settings': {'a': 0, 'a_prime': 45, 'b': 22.5, 'b_prime': 67.5},
        'angle_mode': 'jittered',
        'spread': 10,
        'seed': 17,
        'round_robin': True,
        'workers': 2,
    }
    cfg = load_population_config(write(tmp_path, data), degrees=True)
    assert cfg.source_model.kind is ModelKind.DISTORTED
    assert cfg.source_model.params.s == pytest.approx(0.6)
    assert cfg.settings.a_prime == pytest.approx(math.pi / 4)
    assert cfg.spread == pytest.approx(math.radians(10))
    assert (cfg.seed, cfg.round_robin, cfg.workers) == (17, True, 2)


def test_photon_model_gets_photon_settings(tmp_path):
    cfg = load_population_config(write(tmp_path, {'version': 1, 'n_patients': 10, 'model': 'quantum-photon'}))
    assert cfg.settings == standard_settings(SpinConvention.PHOTON)


def test_seed_precedence(tmp_path, monkeypatch):
    path = write(tmp_path, {'version': 1, 'n_patients': 10, 'seed': 5})
    assert load_population_config(path).seed == 5
    assert load_population_config(path, seed=6).seed == 6

    monkeypatch.setenv(config.SEED_ENV_VAR, '77')
    assert load_population_config(write(tmp_path, {'version': 1, 'n_patients': 10}, 'b.json')).seed == 77
    assert load_population_config(path).seed == 5


def test_bad_seed_env(tmp_path, monkeypatch):
    monkeypatch.setenv(config.SEED_ENV_VAR, 'abc')
    with pytest.raises(ConfigError):
        load_population_config(write(tmp_path, {'version': 1, 'n_patients': 10}))


@pytest.mark.parametrize('data', [
    {'version': 2, 'n_patients': 10},
    {'n_patients': 10},
    {'version': 1},
    {'version': 1, 'n_patients': 10, 'colour': 'blue'},
    {'version': 1, 'n_patients': '10'},
    {'version': 1, 'n_patients': 10, 'angle_mode': 'spiral'},
    {'version': 1, 'n_patients': 10, 'settings': {'a': 0, 'b': 1}},
    {'version': 1, 'n_patients': 10, 'model': {'kind': 'state', 'state': 'werner', 'visibility': 2}},
    {'version': 1, 'n_patients': 0},
])
def test_population_rejects(tmp_path, data):
    with pytest.raises(ConfigError):
        load_population_config(write(tmp_path, data))


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError):
        load_population_config(str(tmp_path / 'missing.json'))
    bad = tmp_path / 'bad.json'
    bad.write_text('{not json')
    with pytest.raises(ConfigError):
        load_population_config(str(bad))


def test_breilmann_file(tmp_path):
    data = {
        'version': 1,
        'n_patients': 1000,
        'threshold': 0.4,
        'trait': {'kind': 'beta', 'alpha': 2, 'beta': 3},
        'outcome_rule': {'kind': 'logistic', 'steepness': 6, 'center': 0.45},
        'pill_effect': 0.05,
    }
    cfg = load_breilmann_config(write(tmp_path, data), workers=3)
    assert cfg.trait.kind == 'beta' and cfg.trait.beta == 3.0
    assert cfg.outcome_rule.steepness == 6.0
    assert cfg.workers == 3
    with pytest.raises(ConfigError):
        load_breilmann_config(write(tmp_path, {**data, 'trait': {'kind': 'gamma'}}, 'b.json'))
    with pytest.raises(ConfigError):
        load_breilmann_config(write(tmp_path, {**data, 'outcome_rule': {'kind': 'linear', 'slope': 2}}, 'c.json'))


def test_model_names():
    assert model_from_name('werner', 0.5).kind is ModelKind.STATE
    assert model_from_name('quantum-half', 0.5).kind is ModelKind.DISTORTED
    assert model_from_name('classical').kind is ModelKind.CLASSICAL_LINEAR
    with pytest.raises(ConfigError):
        model_from_name('bohmian')
    with pytest.raises(ConfigError):
        parse_model({'kind': 'distorted', 'inner': 'quantum-half'})


def test_log_level(monkeypatch):
    monkeypatch.delenv(config.LOG_LEVEL_ENV_VAR, raising=False)
    assert config.log_level() == config.DEFAULT_LOG_LEVEL
    monkeypatch.setenv(config.LOG_LEVEL_ENV_VAR, 'debug')
    assert config.log_level() == 'DEBUG'
    monkeypatch.setenv(config.LOG_LEVEL_ENV_VAR, 'VERBOSE')
    with pytest.raises(ConfigError):
        config.log_level()
