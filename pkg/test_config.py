"""Tests for environment-driven settings in config.py"""
import importlib

import pytest

import config


@pytest.fixture
def reload_config(monkeypatch):
    """Reload config under a patched environment, then restore it."""
    def _reload(**env):
        for key, value in env.items():
            monkeypatch.setenv(key, value)
        return importlib.reload(config)

    yield _reload
    monkeypatch.undo()
    importlib.reload(config)


def test_defaults(reload_config, monkeypatch):
    for key in ('CE_SEED', 'CE_MAX_EPOCHS', 'CE_PATIENCE', 'CE_KNN_K', 'CE_VALIDATION_FRACTION', 'CE_LOG_LEVEL'):
        monkeypatch.delenv(key, raising=False)
    cfg = reload_config()
    assert cfg.SEED == 0
    assert cfg.MAX_EPOCHS == 200
    assert cfg.PATIENCE == 10
    assert cfg.KNN_K == 5
    assert cfg.VALIDATION_FRACTION == 0.1
    assert cfg.LOG_LEVEL == 'INFO'


def test_environment_overrides(reload_config):
    cfg = reload_config(CE_SEED='42', CE_THREADS='4', CE_LOG_LEVEL='debug', CE_TEST_FRACTION='0.25')
    assert cfg.SEED == 42
    assert cfg.THREADS == 4
    assert cfg.LOG_LEVEL == 'DEBUG'
    assert cfg.TEST_FRACTION == 0.25


def test_bad_number_fails_on_import(reload_config):
    with pytest.raises(ValueError):
        reload_config(CE_MAX_EPOCHS='lots')


@pytest.mark.parametrize('name,hidden,activation,lr,batch,decay', [
    ('mnist', (1000, 500, 125), 'tanh', 0.0008, 512, 2e-5),
    ('usps', (2000, 1000, 500), 'relu', 0.001, 64, 2e-5),
    ('letter', (250, 150), 'relu', 0.01, 50, 5e-5),
    ('iris', (100,), 'relu', 0.001, 16, 2e-5),
    ('sonar', (500, 250), 'relu', 0.001, 16, 2e-5),
])
def test_presets(name, hidden, activation, lr, batch, decay):
    preset = config.PRESETS[name]
    assert preset['hidden'] == hidden
    assert preset['activation'] == activation
    assert (preset['learning_rate'], preset['batch_size'], preset['weight_decay']) == (lr, batch, decay)


def test_grids_cover_preset_rates_and_batches():
    for preset in config.PRESETS.values():
        assert preset['learning_rate'] in config.LEARNING_RATE_GRID
        assert preset['batch_size'] in config.BATCH_SIZE_GRID
