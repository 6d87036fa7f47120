#!/usr/bin/env python3
"""
Q-Learning Agent v1 - Episode loop, initial learning and transfer learning
Each step: detect state, pick an action, execute the tuned workload, reward, update
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config.agent_config_v1 import get_run_config, get_state_config
from ..core.domain_v1 import (
    PerfMeasurement,
    StateThresholds,
    SutState,
    TestObjective,
    TransactionCatalog,
    Workload,
    apply_action,
    classify_state,
    objective_met,
    reward,
)
from ..core.errors_v1 import InvalidValue, ReloadError
from ..utils.rng_utils_v1 import keyed_generator
from .policy_store_v1 import PolicySnapshot
from .q_table_v1 import LearningParams, QTable, q_update, select_action

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpisodeStep:
    state: SutState
    action: int
    reward: float
    next_state: SutState
    workload_total: int


@dataclass
class EpisodeTrace:
    """One sequence of states and actions from the initial workload to the objective"""

    episode: int
    objective: TestObjective
    steps: List[EpisodeStep] = field(default_factory=list)
    terminal: bool = False
    final_workload: Optional[Workload] = None
    losses: List[float] = field(default_factory=list)

    @property
    def final_total(self) -> int:
        return self.final_workload.total if self.final_workload is not None else 0

    @property
    def budget_exhausted(self) -> bool:
        return not self.terminal

    def __len__(self) -> int:
        return len(self.steps)


def measure(env, workload: Workload, episode: int, step: int, module: str) -> PerfMeasurement:
    """env.measure with episode / step context attached to failures"""
    try:
        return env.measure(workload, episode=episode, step=step)
    except ReloadError as e:
        raise e.with_context(module=module, episode=episode, step=step)


def run_episode(env, q: QTable, params: LearningParams, objective: TestObjective,
                initial_workload: Workload, max_steps: int, episode: int = 0,
                rng: Optional[np.random.Generator] = None,
                thresholds: Optional[StateThresholds] = None) -> EpisodeTrace:
    """
    Run one learning episode; the stopping criterion is checked after each executed workload

    Args:
        env: Environment exposing measure(workload, episode, step)
        q: Q-table, updated in place
        params: Learning rate, discount and exploration schedule
        objective: Test objective ending the episode
        initial_workload: Starting workload (total >= 1)
        max_steps: Step budget (>= 1)
        episode: Episode index (selects epsilon and keys randomness)
        rng: Action-selection generator
        thresholds: State boundaries; derived from the objective when omitted

    Returns:
        EpisodeTrace, terminal iff the last measurement met the objective
    """
    if max_steps < 1:
        raise InvalidValue(f"max_steps must be >= 1, got {max_steps}")
    if initial_workload.total < 1:
        raise InvalidValue("initial workload needs at least one user")
    rng = rng if rng is not None else keyed_generator(0, episode)
    thresholds = thresholds or StateThresholds.for_objective(objective)
    eps = params.epsilon.value(episode)

    trace = EpisodeTrace(episode=episode, objective=objective)
    workload = initial_workload
    m = measure(env, workload, episode, 0, 'agent-qlearning')
    state = classify_state(m, thresholds)

    for step in range(1, max_steps + 1):
        action = select_action(q, state, eps, rng)
        workload = apply_action(workload, action)
        m = measure(env, workload, episode, step, 'agent-qlearning')
        next_state = classify_state(m, thresholds)
        r = reward(m, objective)
        q_update(q, state, action, r, next_state, params.alpha_for(q, state, action), params.gamma)
        trace.steps.append(EpisodeStep(state, action, r, next_state, workload.total))
        if objective_met(m, objective):
            trace.terminal = True
            break
        state = next_state

    trace.final_workload = workload
    if not trace.terminal:
        logger.warning(f"Episode {episode} exhausted its {max_steps}-step budget at {workload.total} users")
    return trace


class QLearningAgent:
    """
    Tabular agent holding its Q-table across episodes
    Episode randomness is keyed by (seed, episode) so reruns are identical
    """

    def __init__(self, catalog: TransactionCatalog, params: LearningParams, seed: int = 0,
                 q: Optional[QTable] = None, rt_low: Optional[float] = None,
                 pinned_thresholds: Optional[StateThresholds] = None,
                 initial_users_per_tx: Optional[int] = None, max_steps: Optional[int] = None,
                 episodes_run: int = 0):
        run_config = get_run_config()
        self.catalog = catalog
        self.params = params
        self.seed = seed
        self.q = q if q is not None else QTable.zeros(catalog.size)
        if self.q.num_actions != catalog.size:
            raise InvalidValue(f"Q-table has {self.q.num_actions} actions, catalog has {catalog.size}")
        self.rt_low = get_state_config()['rt_low_ms'] if rt_low is None else rt_low
        self.pinned_thresholds = pinned_thresholds
        self.initial_users_per_tx = initial_users_per_tx or run_config['initial_users_per_tx']
        self.max_steps = max_steps or run_config['max_steps']
        self.episodes_run = episodes_run

    @classmethod
    def from_snapshot(cls, snapshot: PolicySnapshot, params: LearningParams, seed: int = 0,
                      **kwargs) -> 'QLearningAgent':
        if snapshot.q_table is None:
            raise InvalidValue("snapshot does not hold a Q-table")
        return cls(snapshot.catalog, params, seed=seed, q=snapshot.q_table.copy(),
                   rt_low=snapshot.thresholds.rt_low,
                   pinned_thresholds=snapshot.thresholds if snapshot.thresholds_pinned else None,
                   episodes_run=snapshot.episode_count, **kwargs)

    def thresholds_for(self, objective: TestObjective) -> StateThresholds:
        return self.pinned_thresholds or StateThresholds.for_objective(objective, self.rt_low)

    def initial_workload(self) -> Workload:
        return Workload.uniform(self.catalog.size, self.initial_users_per_tx)

    def run_episode(self, env, objective: TestObjective) -> EpisodeTrace:
        episode = self.episodes_run
        trace = run_episode(env, self.q, self.params, objective, self.initial_workload(),
                            self.max_steps, episode=episode, rng=keyed_generator(self.seed, episode),
                            thresholds=self.thresholds_for(objective))
        self.episodes_run += 1
        logger.debug(f"Episode {episode}: {len(trace)} steps, final users {trace.final_total}, "
                     f"terminal={trace.terminal}")
        return trace

    def run_initial_learning(self, env, objective: TestObjective,
                             episodes_budget: int) -> Tuple[PolicySnapshot, List[EpisodeTrace]]:
        if episodes_budget < 1:
            raise InvalidValue(f"episodes_budget must be >= 1, got {episodes_budget}")
        logger.info(f"🧠 Initial learning: {episodes_budget} episodes, "
                    f"epsilon {self.params.epsilon.describe()}, gamma {self.params.gamma}")
        traces = [self.run_episode(env, objective) for _ in range(episodes_budget)]
        return self.snapshot(objective), traces

    def run_transfer(self, env, objective_schedule: Sequence[TestObjective]) -> List[EpisodeTrace]:
        logger.info(f"🔁 Transfer learning over {len(objective_schedule)} objectives, "
                    f"epsilon {self.params.epsilon.describe()}")
        return [self.run_episode(env, objective) for objective in objective_schedule]

    def snapshot(self, objective: TestObjective) -> PolicySnapshot:
        return PolicySnapshot(catalog=self.catalog, thresholds=self.thresholds_for(objective),
                              objective=objective, episode_count=self.episodes_run,
                              q_table=self.q.copy(), thresholds_pinned=self.pinned_thresholds is not None)


def run_initial_learning(env, params: LearningParams, objective: TestObjective, episodes_budget: int,
                         seed: int = 0, **agent_kwargs) -> Tuple[PolicySnapshot, List[EpisodeTrace]]:
    """
    Learn a policy from a zero-initialized Q-table

    Args:
        env: Environment with a catalog and measure()
        params: Learning parameters with the initial exploration schedule
        objective: Test objective for every episode
        episodes_budget: Number of episodes (>= 1)
        seed: Seed keying action selection

    Returns:
        (stored policy, per-episode traces)
    """
    agent = QLearningAgent(env.catalog, params, seed=seed, **agent_kwargs)
    return agent.run_initial_learning(env, objective, episodes_budget)


def run_transfer_learning(env, snapshot: PolicySnapshot, params_transfer: LearningParams,
                          objective_schedule: Sequence[TestObjective], seed: int = 0,
                          **agent_kwargs) -> List[EpisodeTrace]:
    """
    Resume from a stored Q-table; one episode per objective, learning continues

    Raises:
        CatalogMismatch: snapshot catalog differs from the environment's
    """
    snapshot.check_catalog(env.catalog)
    agent = QLearningAgent.from_snapshot(snapshot, params_transfer, seed=seed, **agent_kwargs)
    return agent.run_transfer(env, objective_schedule)


def detect_convergence(traces: Sequence[Union[EpisodeTrace, int, float]], window: Optional[int] = None,
                       tol: Optional[float] = None) -> Optional[int]:
    """
    First episode index e whose window [e - window + 1, e] of final totals has
    (max - min) / mean <= tol

    Args:
        traces: Episode traces or the final-total series itself
        window: Window length (>= 2)
        tol: Relative range tolerance

    Returns:
        Episode index or None when the series never settles
    """
    run_config = get_run_config()
    window = run_config['convergence_window'] if window is None else window
    tol = run_config['convergence_tol'] if tol is None else tol
    if window < 2:
        raise InvalidValue(f"window must be >= 2, got {window}")
    series = np.array([t.final_total if isinstance(t, EpisodeTrace) else t for t in traces],
                      dtype=np.float64)
    for end in range(window - 1, len(series)):
        chunk = series[end - window + 1:end + 1]
        mean = chunk.mean()
        if mean > 0 and (chunk.max() - chunk.min()) / mean <= tol:
            return end
    return None


def greedy_policy(q: QTable, catalog: TransactionCatalog) -> Dict[str, Optional[str]]:
    """Greedy transaction per state label; None where the state was never updated"""
    policy = {}
    for state in SutState.all():
        if q.visit_counts[state.index].sum() == 0:
            policy[state.label] = None
        else:
            policy[state.label] = catalog.names[int(np.argmax(q.values[state.index]))]
    return policy


def transaction_impact(q: QTable, catalog: TransactionCatalog) -> List[Tuple[str, float]]:
    """
    Transactions ranked by mean learned value over visited cells

    Returns:
        [(transaction name, mean Q)] sorted from most to least valuable
    """
    visited = q.visit_counts > 0
    ranking = []
    for tx in catalog.transactions:
        column = visited[:, tx.index]
        value = float(q.values[column, tx.index].mean()) if column.any() else 0.0
        ranking.append((tx.name, value))
    return sorted(ranking, key=lambda item: (-item[1], item[0]))
