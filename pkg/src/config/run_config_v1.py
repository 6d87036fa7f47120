#!/usr/bin/env python3
"""
Run Configuration v1 - YAML run config with environment defaults and flag overrides
Defaults (environment) -> YAML file -> CLI flags; the resolved config is echoed to the output directory
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional

import yaml

from ..agents.q_table_v1 import EpsilonSchedule, LearningParams
from ..core.domain_v1 import TestObjective
from ..core.errors_v1 import ConfigInvalid, InvalidValue
from ..core.sut_simulator_v1 import SimConfig, calibrate_default
from .agent_config_v1 import get_dqn_config, get_http_config, get_learning_config, get_run_config, get_state_config
from .catalog_config_v1 import DEFAULT_OBJECTIVE, EPISODE_BUDGETS, TECHNIQUES, TRANSFER_DRIFT

logger = logging.getLogger(__name__)

ACTUATORS = ('sim', 'http')
PRESETS = ('efficiency', 'sensitivity')
EFFECTIVE_CONFIG_NAME = 'effective_config.yaml'


def _learning(key: str):
    return field(default_factory=lambda: get_learning_config()[key])


def _run(key: str):
    return field(default_factory=lambda: get_run_config()[key])


def _http(key: str):
    return field(default_factory=lambda: get_http_config()[key])


@dataclass(frozen=True)
class RunConfig:
    actuator: str = 'sim'
    technique: str = 'A3'
    preset: str = 'efficiency'
    episodes: Optional[int] = None              # None -> per-technique budget
    seed: int = _run('seed')
    output_dir: str = _run('output_dir')
    max_steps: int = _run('max_steps')
    initial_users_per_tx: int = _run('initial_users_per_tx')
    rt_threshold_ms: float = DEFAULT_OBJECTIVE['rt_threshold_ms']
    er_threshold: float = DEFAULT_OBJECTIVE['er_threshold']
    transfer_episodes: int = TRANSFER_DRIFT['episodes']
    transfer_rt_step_ms: float = TRANSFER_DRIFT['rt_step_ms']
    transfer_er_step: float = TRANSFER_DRIFT['er_step']
    alpha: Optional[float] = _learning('alpha')  # None -> decaying 1 / (1 + visits)
    gamma: float = _learning('gamma')
    epsilon_start: float = _learning('epsilon_start')
    epsilon_decay: float = _learning('epsilon_decay')
    epsilon_floor: float = _learning('epsilon_floor')
    transfer_epsilon: float = _learning('transfer_epsilon')
    dqn_alpha: float = field(default_factory=lambda: get_dqn_config()['alpha'])
    rt_low_ms: float = field(default_factory=lambda: get_state_config()['rt_low_ms'])
    pin_thresholds: bool = False
    workers: int = 4
    sim: SimConfig = field(default_factory=calibrate_default)
    scripts_path: Optional[str] = None
    base_url: Optional[str] = None
    step_duration_s: float = _http('step_duration_s')
    ramp_up_s: float = _http('ramp_up_s')
    timeout_ms: float = _http('timeout_ms')
    think_time_s: float = _http('think_time_s')

    def __post_init__(self):
        if self.actuator not in ACTUATORS:
            raise ConfigInvalid(f"actuator must be one of {ACTUATORS}, got {self.actuator!r}", module='cli')
        if self.technique not in TECHNIQUES:
            raise ConfigInvalid(f"unknown technique {self.technique!r}", module='cli')
        if self.preset not in PRESETS:
            raise ConfigInvalid(f"unknown preset {self.preset!r}; expected one of {PRESETS}", module='cli')
        if self.actuator == 'http' and not (self.scripts_path and self.base_url):
            raise ConfigInvalid("http actuator requires scripts_path and base_url", module='cli')
        if self.episodes is not None and self.episodes < 1:
            raise ConfigInvalid(f"episodes must be >= 1, got {self.episodes}", module='cli')
        if self.max_steps < 1 or self.initial_users_per_tx < 1 or self.workers < 1:
            raise ConfigInvalid("max_steps, initial_users_per_tx and workers must be >= 1", module='cli')
        if self.transfer_episodes < 0:
            raise ConfigInvalid(f"transfer_episodes must be >= 0, got {self.transfer_episodes}", module='cli')
        try:
            TestObjective(self.rt_threshold_ms, self.er_threshold)
            learner = self.technique if TECHNIQUES[self.technique]['kind'] in ('tabular', 'dqn') else 'A3'
            self.learning_params(learner)
        except InvalidValue as e:
            raise ConfigInvalid(str(e), module='cli')

    @property
    def objective(self) -> TestObjective:
        return TestObjective(self.rt_threshold_ms, self.er_threshold)

    def episodes_for(self, technique: str) -> int:
        return self.episodes if self.episodes is not None else EPISODE_BUDGETS[technique]

    def learning_params(self, technique: str, alpha: Any = 'config', gamma: Optional[float] = None) -> LearningParams:
        """
        LearningParams for a learning technique under this config

        Args:
            technique: A1-A4
            alpha: Override; None selects the decaying rate, 'config' keeps the configured value
            gamma: Override discount factor
        """
        if alpha == 'config':
            alpha = self.dqn_alpha if TECHNIQUES[technique]['kind'] == 'dqn' else self.alpha
        decaying = EpsilonSchedule(self.epsilon_start, self.epsilon_decay, self.epsilon_floor)
        return LearningParams(alpha=alpha, gamma=self.gamma if gamma is None else gamma,
                              epsilon=EpsilonSchedule.for_technique(technique, decaying))

    def transfer_params(self, technique: str) -> LearningParams:
        return LearningParams.transfer(self.learning_params(technique), epsilon=self.transfer_epsilon)

    def with_overrides(self, **overrides) -> 'RunConfig':
        """Apply non-None overrides (CLI flags win over file values)"""
        values = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(values) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}", module='cli')
        return replace(self, **values)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['sim'] = self.sim.to_dict()
        data['alpha'] = 'decaying' if self.alpha is None else self.alpha
        return data

    @classmethod
    def from_dict(cls, data: Mapping) -> 'RunConfig':
        data = dict(data or {})
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}", module='cli')
        try:
            if 'sim' in data and not isinstance(data['sim'], SimConfig):
                data['sim'] = SimConfig.from_dict(data['sim'] or {})
            if data.get('alpha') == 'decaying':
                data['alpha'] = None
            return cls(**data)
        except (InvalidValue, TypeError) as e:
            raise ConfigInvalid(f"invalid run config: {e}", module='cli')


def load_run_config(path: Optional[str] = None, **overrides) -> RunConfig:
    """
    Load a YAML run config and apply flag overrides

    Args:
        path: YAML file; None uses environment defaults only
        **overrides: Flag values (None means not given)

    Returns:
        Validated RunConfig

    Raises:
        ConfigInvalid: unreadable file, bad YAML, unknown keys or inconsistent values
    """
    data: Dict = {}
    if path:
        try:
            with open(path, 'r') as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigInvalid(f"cannot read config file {path}: {e}", module='cli')
        except yaml.YAMLError as e:
            raise ConfigInvalid(f"config file {path} is not valid YAML: {e}", module='cli')
        if not isinstance(data, dict):
            raise ConfigInvalid(f"config file {path} must hold a mapping", module='cli')
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    config = RunConfig.from_dict(merged)
    logger.debug(f"Resolved run config: {config.to_dict()}")
    return config


def write_effective_config(config: RunConfig, output_dir: Optional[str] = None) -> str:
    """Echo the resolved config as YAML; the file re-loads to an equal RunConfig"""
    output_dir = output_dir or config.output_dir
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, EFFECTIVE_CONFIG_NAME)
    with open(path, 'w') as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
    return path
