"""
Run configuration: YAML loading, flag overrides, validation and the effective-config echo
"""

import os

import pytest
import yaml

from src.config.run_config_v1 import EFFECTIVE_CONFIG_NAME, RunConfig, load_run_config, write_effective_config
from src.core.domain_v1 import TestObjective
from src.core.errors_v1 import ConfigInvalid

SHIPPED_CONFIG = os.path.join(os.path.dirname(__file__), 'reload_config.yaml')


def _write(tmp_path, data) -> str:
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump(data) if not isinstance(data, str) else data)
    return str(path)


def test_defaults():
    config = RunConfig()
    assert config.actuator == 'sim'
    assert config.objective == TestObjective(1500.0, 0.2)
    assert config.episodes_for('A4') == 45
    assert config.episodes_for('B') == 40
    assert config.max_steps == 60


def test_shipped_config_loads():
    config = load_run_config(SHIPPED_CONFIG)
    assert config.seed == 7
    assert config.transfer_episodes == 10
    assert config.sim.capacity == 80.0
    assert len(config.sim.demands_ms) == 11


def test_flags_override_file_values(tmp_path):
    path = _write(tmp_path, {'seed': 3, 'technique': 'A1', 'output_dir': 'from_file'})
    config = load_run_config(path, seed=11, output_dir=None, technique='A2')
    assert config.seed == 11
    assert config.technique == 'A2'
    assert config.output_dir == 'from_file'


def test_episode_override_applies_to_every_technique():
    config = RunConfig(episodes=5)
    assert {config.episodes_for(t) for t in ('A1', 'A4', 'C')} == {5}


def test_learning_params_per_technique():
    config = RunConfig(alpha=None)
    a1 = config.learning_params('A1')
    assert a1.epsilon.value(30) == 0.2
    assert a1.decaying_alpha
    assert config.learning_params('A4').alpha == config.dqn_alpha
    assert config.learning_params('A3', alpha=0.1, gamma=0.9).gamma == 0.9
    assert config.transfer_params('A3').epsilon.value(0) == config.transfer_epsilon


@pytest.mark.parametrize('values', [
    {'actuator': 'grpc'},
    {'technique': 'A9'},
    {'preset': 'soak'},
    {'episodes': 0},
    {'max_steps': 0},
    {'transfer_episodes': -1},
    {'gamma': 1.0},
    {'alpha': 0.0},
    {'er_threshold': 1.5},
    {'epsilon_start': 2.0},
    {'actuator': 'http', 'base_url': 'http://localhost:8080'},
    {'unknown_key': 1},
    {'sim': {'capacity': -5}},
])
def test_invalid_configs(tmp_path, values):
    with pytest.raises(ConfigInvalid):
        load_run_config(_write(tmp_path, values))


def test_unreadable_or_malformed_files(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_run_config(str(tmp_path / 'missing.yaml'))
    with pytest.raises(ConfigInvalid):
        load_run_config(_write(tmp_path, 'seed: [unclosed'))
    with pytest.raises(ConfigInvalid):
        load_run_config(_write(tmp_path, '- just\n- a list\n'))


def test_with_overrides_rejects_unknown_keys():
    assert RunConfig().with_overrides(seed=9, preset=None).seed == 9
    with pytest.raises(ConfigInvalid):
        RunConfig().with_overrides(colour='blue')


def test_effective_config_reloads_to_an_equal_config(tmp_path):
    config = load_run_config(SHIPPED_CONFIG, seed=21, alpha='decaying')
    path = write_effective_config(config, str(tmp_path))
    assert os.path.basename(path) == EFFECTIVE_CONFIG_NAME
    with open(path) as f:
        assert yaml.safe_load(f)['alpha'] == 'decaying'
    assert load_run_config(path) == config
