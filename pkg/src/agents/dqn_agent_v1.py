#!/usr/bin/env python3
"""
DQN Agent v1 - Q-learning with a function approximator, replay buffer and target network
Continuous (RT, ER) features replace the six discrete states
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config.agent_config_v1 import get_dqn_config, get_run_config, get_state_config
from ..core.domain_v1 import (
    StateThresholds,
    TestObjective,
    TransactionCatalog,
    Workload,
    apply_action,
    classify_state,
    objective_met,
    reward,
)
from ..core.errors_v1 import ArchMismatch, InvalidValue
from ..utils.rng_utils_v1 import keyed_generator
from .policy_store_v1 import PolicySnapshot
from .q_learning_agent_v1 import EpisodeStep, EpisodeTrace, measure
from .q_network_v1 import (
    TARGET_TRANSFORMS,
    QNetwork,
    ReplayBuffer,
    Transition,
    forward,
    state_features,
    sync_target,
    train_step,
)
from .q_table_v1 import LearningParams, epsilon_greedy

logger = logging.getLogger(__name__)

# Key salt separating weight initialization from episode randomness
INIT_KEY = 7919


@dataclass(frozen=True)
class DqnSettings:
    hidden_sizes: Tuple[int, ...] = (16, 16)
    buffer_capacity: int = 1000
    batch_size: int = 32
    sync_every: int = 25
    grad_clip: Optional[float] = 5.0
    feature_cap: float = 3.0
    default_alpha: float = 0.2
    updates_per_step: int = 1
    target_transform: str = 'log1p'
    output_scale: float = 0.0

    def __post_init__(self):
        if self.batch_size < 1 or self.sync_every < 1:
            raise InvalidValue("batch_size and sync_every must be >= 1")
        if self.buffer_capacity < self.batch_size:
            raise InvalidValue("buffer capacity must be at least the batch size")
        if self.updates_per_step < 1:
            raise InvalidValue(f"updates_per_step must be >= 1, got {self.updates_per_step}")
        if self.target_transform not in TARGET_TRANSFORMS:
            raise InvalidValue(f"unknown target transform {self.target_transform!r}")

    @classmethod
    def from_config(cls, **overrides) -> 'DqnSettings':
        config = get_dqn_config()
        values = {
            'hidden_sizes': tuple(config['hidden_sizes']),
            'buffer_capacity': config['buffer_capacity'],
            'batch_size': config['batch_size'],
            'sync_every': config['sync_every'],
            'grad_clip': config['grad_clip'],
            'feature_cap': config['feature_cap'],
            'default_alpha': config['alpha'],
            'updates_per_step': config['updates_per_step'],
            'target_transform': config['target_transform'],
            'output_scale': config['output_scale']
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class DqnLearner:
    """Online network plus the replay and target-network state trained alongside it"""

    net: QNetwork
    target_net: QNetwork
    buffer: ReplayBuffer
    settings: DqnSettings
    env_steps: int = 0
    losses: List[float] = field(default_factory=list)

    @classmethod
    def fresh(cls, num_actions: int, settings: DqnSettings, rng: np.random.Generator,
              net: Optional[QNetwork] = None, target_net: Optional[QNetwork] = None,
              env_steps: int = 0) -> 'DqnLearner':
        """Replay always starts empty; a resumed learner keeps its target network and step counter"""
        if net is None:
            net = QNetwork.build((2,) + settings.hidden_sizes + (num_actions,), rng,
                                 output_scale=settings.output_scale)
        target_net = target_net.copy() if target_net is not None else net.copy()
        if target_net.layer_sizes != net.layer_sizes:
            raise ArchMismatch(f"target {target_net!r} does not match {net!r}", module='agent-dqn')
        return cls(net=net, target_net=target_net, buffer=ReplayBuffer(settings.buffer_capacity),
                   settings=settings, env_steps=env_steps)


def run_episode_dqn(env, learner: DqnLearner, params: LearningParams, objective: TestObjective,
                    initial_workload: Workload, max_steps: int, episode: int = 0,
                    rng: Optional[np.random.Generator] = None,
                    thresholds: Optional[StateThresholds] = None) -> EpisodeTrace:
    """
    One DQN episode: epsilon-greedy over network outputs, replay append every step,
    updates_per_step train_steps per step once the buffer holds a batch, periodic target sync

    Args:
        env: Environment exposing measure(workload, episode, step)
        learner: Network, target network and replay buffer (updated in place)
        params: alpha is the SGD step size; epsilon schedule drives exploration
        objective: Test objective ending the episode
        initial_workload: Starting workload
        max_steps: Step budget
        episode: Episode index
        rng: Generator for exploration and replay sampling
        thresholds: Discrete state boundaries used for the trace only

    Returns:
        EpisodeTrace whose losses hold one entry per train_step
    """
    if max_steps < 1:
        raise InvalidValue(f"max_steps must be >= 1, got {max_steps}")
    rng = rng if rng is not None else keyed_generator(0, episode)
    thresholds = thresholds or StateThresholds.for_objective(objective)
    settings = learner.settings
    step_size = params.alpha if params.alpha is not None else settings.default_alpha
    eps = params.epsilon.value(episode)

    trace = EpisodeTrace(episode=episode, objective=objective)
    workload = initial_workload
    m = measure(env, workload, episode, 0, 'agent-dqn')
    features = state_features(m, objective, settings.feature_cap)

    for step in range(1, max_steps + 1):
        action = epsilon_greedy(forward(learner.net, np.array(features)), eps, rng)
        workload = apply_action(workload, action)
        m_next = measure(env, workload, episode, step, 'agent-dqn')
        next_features = state_features(m_next, objective, settings.feature_cap)
        r = reward(m_next, objective)
        terminal = objective_met(m_next, objective)

        # Store the transition, then train once a batch is available
        learner.buffer.append(Transition(features, action, r, next_features, terminal))
        learner.env_steps += 1
        if len(learner.buffer) >= settings.batch_size:
            for _ in range(settings.updates_per_step):
                batch = learner.buffer.sample(settings.batch_size, rng)
                loss = train_step(learner.net, learner.target_net, batch, step_size, params.gamma,
                                  grad_clip=settings.grad_clip, target_transform=settings.target_transform)
                trace.losses.append(loss)
                learner.losses.append(loss)
        # Periodic target sync
        if learner.env_steps % settings.sync_every == 0:
            sync_target(learner.net, learner.target_net)

        trace.steps.append(EpisodeStep(classify_state(m, thresholds), action, r,
                                       classify_state(m_next, thresholds), workload.total))
        m, features = m_next, next_features
        if terminal:
            trace.terminal = True
            break

    trace.final_workload = workload
    if not trace.terminal:
        logger.warning(f"DQN episode {episode} exhausted its {max_steps}-step budget at {workload.total} users")
    return trace


class DqnAgent:
    """DQN counterpart of QLearningAgent with the same run / snapshot surface"""

    def __init__(self, catalog: TransactionCatalog, params: LearningParams, seed: int = 0,
                 settings: Optional[DqnSettings] = None, network: Optional[QNetwork] = None,
                 rt_low: Optional[float] = None, initial_users_per_tx: Optional[int] = None,
                 max_steps: Optional[int] = None, episodes_run: int = 0,
                 target_network: Optional[QNetwork] = None, env_steps: int = 0):
        run_config = get_run_config()
        self.catalog = catalog
        self.params = params
        self.seed = seed
        self.settings = settings or DqnSettings.from_config()
        self.learner = DqnLearner.fresh(catalog.size, self.settings, keyed_generator(seed, INIT_KEY),
                                        net=network, target_net=target_network, env_steps=env_steps)
        if self.learner.net.num_actions != catalog.size:
            raise InvalidValue(f"network has {self.learner.net.num_actions} outputs, catalog has {catalog.size}")
        self.rt_low = get_state_config()['rt_low_ms'] if rt_low is None else rt_low
        self.initial_users_per_tx = initial_users_per_tx or run_config['initial_users_per_tx']
        self.max_steps = max_steps or run_config['max_steps']
        self.episodes_run = episodes_run

    @classmethod
    def from_snapshot(cls, snapshot: PolicySnapshot, params: LearningParams, seed: int = 0,
                      **kwargs) -> 'DqnAgent':
        if snapshot.network is None:
            raise InvalidValue("snapshot does not hold a network")
        hidden = snapshot.network.layer_sizes[1:-1]
        settings = kwargs.pop('settings', None) or DqnSettings.from_config(hidden_sizes=hidden)
        return cls(snapshot.catalog, params, seed=seed, settings=settings, network=snapshot.network.copy(),
                   target_network=snapshot.target_network, env_steps=snapshot.env_steps,
                   rt_low=snapshot.thresholds.rt_low, episodes_run=snapshot.episode_count, **kwargs)

    @property
    def net(self) -> QNetwork:
        return self.learner.net

    def run_episode(self, env, objective: TestObjective) -> EpisodeTrace:
        episode = self.episodes_run
        trace = run_episode_dqn(env, self.learner, self.params, objective,
                                Workload.uniform(self.catalog.size, self.initial_users_per_tx),
                                self.max_steps, episode=episode, rng=keyed_generator(self.seed, episode),
                                thresholds=StateThresholds.for_objective(objective, self.rt_low))
        self.episodes_run += 1
        return trace

    def run_initial_learning(self, env, objective: TestObjective,
                             episodes_budget: int) -> Tuple[PolicySnapshot, List[EpisodeTrace]]:
        if episodes_budget < 1:
            raise InvalidValue(f"episodes_budget must be >= 1, got {episodes_budget}")
        logger.info(f"🧠 DQN initial learning: {episodes_budget} episodes, network {self.net!r}")
        traces = [self.run_episode(env, objective) for _ in range(episodes_budget)]
        return self.snapshot(objective), traces

    def run_transfer(self, env, objective_schedule: Sequence[TestObjective]) -> List[EpisodeTrace]:
        logger.info(f"🔁 DQN transfer over {len(objective_schedule)} objectives")
        return [self.run_episode(env, objective) for objective in objective_schedule]

    def snapshot(self, objective: TestObjective) -> PolicySnapshot:
        return PolicySnapshot(catalog=self.catalog,
                              thresholds=StateThresholds.for_objective(objective, self.rt_low),
                              objective=objective, episode_count=self.episodes_run,
                              network=self.net.copy(), target_network=self.learner.target_net.copy(),
                              env_steps=self.learner.env_steps)
