#!/usr/bin/env python3
"""
Q-Table v1 - Tabular action values, learning schedules and the Q-update
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.agent_config_v1 import get_learning_config
from ..config.catalog_config_v1 import TECHNIQUES
from ..core.domain_v1 import NUM_STATES, SutState
from ..core.errors_v1 import InvalidValue


class QTable:
    """values[s, a] = Q(s, a); visit_counts[s, a] = number of updates"""

    def __init__(self, values: np.ndarray, visit_counts: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        visit_counts = np.asarray(visit_counts, dtype=np.int64)
        if values.ndim != 2 or values.shape[0] != NUM_STATES or values.shape != visit_counts.shape:
            raise InvalidValue(f"Q-table must be {NUM_STATES} x T, got {values.shape} / {visit_counts.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidValue("Q-table entries must be finite")
        self.values = values
        self.visit_counts = visit_counts

    @classmethod
    def zeros(cls, num_actions: int) -> 'QTable':
        return cls(np.zeros((NUM_STATES, num_actions)), np.zeros((NUM_STATES, num_actions), dtype=np.int64))

    @property
    def num_actions(self) -> int:
        return self.values.shape[1]

    def copy(self) -> 'QTable':
        return QTable(self.values.copy(), self.visit_counts.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, QTable):
            return NotImplemented
        return (np.array_equal(self.values, other.values)
                and np.array_equal(self.visit_counts, other.visit_counts))

    def __repr__(self) -> str:
        return f"QTable({NUM_STATES}x{self.num_actions}, updates={int(self.visit_counts.sum())})"


@dataclass(frozen=True)
class EpsilonSchedule:
    """epsilon_e = max(floor, start * decay^e); decay = 1 means fixed"""

    start: float
    decay: float = 1.0
    floor: float = 0.0

    def __post_init__(self):
        if not 0 <= self.start <= 1 or not 0 <= self.floor <= 1:
            raise InvalidValue(f"epsilon values must be in [0, 1], got start={self.start} floor={self.floor}")
        if not 0 < self.decay <= 1:
            raise InvalidValue(f"epsilon decay must be in (0, 1], got {self.decay}")

    @classmethod
    def fixed(cls, value: float) -> 'EpsilonSchedule':
        return cls(start=value, decay=1.0, floor=0.0)

    @classmethod
    def decaying(cls, start: Optional[float] = None, decay: Optional[float] = None,
                 floor: Optional[float] = None) -> 'EpsilonSchedule':
        config = get_learning_config()
        return cls(start=config['epsilon_start'] if start is None else start,
                   decay=config['epsilon_decay'] if decay is None else decay,
                   floor=config['epsilon_floor'] if floor is None else floor)

    @classmethod
    def for_technique(cls, technique: str, decaying: Optional['EpsilonSchedule'] = None) -> 'EpsilonSchedule':
        """Fixed epsilon of A1/A2, decaying schedule of A3/A4"""
        spec = TECHNIQUES.get(technique)
        if spec is None or spec['kind'] not in ('tabular', 'dqn'):
            raise InvalidValue(f"technique {technique!r} is not a learning technique")
        if spec['epsilon'] == 'decaying':
            return decaying or cls.decaying()
        return cls.fixed(spec['epsilon'])

    @property
    def is_decaying(self) -> bool:
        return self.decay < 1.0

    def value(self, episode: int) -> float:
        if not self.is_decaying:
            return self.start
        return max(self.floor, self.start * self.decay ** episode)

    def describe(self) -> str:
        if not self.is_decaying:
            return f"fixed({self.start})"
        return f"decaying({self.start}, x{self.decay}, floor {self.floor})"


@dataclass(frozen=True)
class LearningParams:
    alpha: Optional[float]       # None -> decaying 1 / (1 + visits(s, a))
    gamma: float
    epsilon: EpsilonSchedule

    def __post_init__(self):
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise InvalidValue(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0 <= self.gamma < 1:
            raise InvalidValue(f"gamma must be in [0, 1), got {self.gamma}")

    @classmethod
    def for_technique(cls, technique: str, alpha: Optional[float] = None,
                      gamma: Optional[float] = None) -> 'LearningParams':
        """Learning params for A1-A4; alpha/gamma fall back to configured defaults"""
        config = get_learning_config()
        return cls(alpha=config['alpha'] if alpha is None else alpha,
                   gamma=config['gamma'] if gamma is None else gamma,
                   epsilon=EpsilonSchedule.for_technique(technique))

    @classmethod
    def transfer(cls, base: 'LearningParams', epsilon: Optional[float] = None) -> 'LearningParams':
        value = get_learning_config()['transfer_epsilon'] if epsilon is None else epsilon
        return cls(alpha=base.alpha, gamma=base.gamma, epsilon=EpsilonSchedule.fixed(value))

    @property
    def decaying_alpha(self) -> bool:
        return self.alpha is None

    def alpha_for(self, q: QTable, s: SutState, a: int) -> float:
        if self.alpha is None:
            return 1.0 / (1.0 + q.visit_counts[s.index, a])
        return self.alpha


def greedy_from_values(values: np.ndarray, rng: np.random.Generator) -> int:
    """Argmax with uniform random tie-breaking"""
    maximizers = np.flatnonzero(values == values.max())
    if len(maximizers) == 1:
        return int(maximizers[0])
    return int(rng.choice(maximizers))


def epsilon_greedy(values: np.ndarray, eps: float, rng: np.random.Generator) -> int:
    if not 0 <= eps <= 1:
        raise InvalidValue(f"epsilon must be in [0, 1], got {eps}")
    if rng.random() < eps:
        return int(rng.integers(len(values)))
    return greedy_from_values(values, rng)


def select_action(q: QTable, s: SutState, eps: float, rng: np.random.Generator) -> int:
    """Greedy with probability 1 - eps, uniform random with probability eps"""
    return epsilon_greedy(q.values[s.index], eps, rng)


def q_update(q: QTable, s: SutState, a: int, r: float, s_next: SutState,
             alpha: float, gamma: float) -> None:
    """Q(s,a) <- (1 - alpha) Q(s,a) + alpha [r + gamma max_a' Q(s_next, a')]"""
    target = r + gamma * q.values[s_next.index].max()
    q.values[s.index, a] = (1.0 - alpha) * q.values[s.index, a] + alpha * target
    q.visit_counts[s.index, a] += 1
