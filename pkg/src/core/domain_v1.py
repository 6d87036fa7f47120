#!/usr/bin/env python3
"""
Domain v1 - Workloads, measurements, SUT states, objectives and actions
Pure value types and functions shared by every agent and strategy
"""

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, List, Optional, Tuple

import numpy as np

from ..config.catalog_config_v1 import DEFAULT_OBJECTIVE, TRANSACTION_NAMES
from ..config.agent_config_v1 import get_state_config
from .errors_v1 import InvalidValue


@dataclass(frozen=True)
class TransactionId:
    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise InvalidValue(f"transaction index must be >= 0, got {self.index}")
        if not self.name:
            raise InvalidValue("transaction name must be nonempty")


@dataclass(frozen=True)
class TransactionCatalog:
    """Ordered list of transactions; position equals TransactionId.index"""

    transactions: Tuple[TransactionId, ...]

    def __post_init__(self):
        if len(self.transactions) < 1:
            raise InvalidValue("catalog needs at least one transaction")
        for position, tx in enumerate(self.transactions):
            if tx.index != position:
                raise InvalidValue(f"transaction {tx.name!r} has index {tx.index}, expected {position}")
        if len({tx.name for tx in self.transactions}) != len(self.transactions):
            raise InvalidValue("transaction names must be unique")

    @classmethod
    def from_names(cls, names: Iterable[str]) -> 'TransactionCatalog':
        return cls(tuple(TransactionId(i, name) for i, name in enumerate(names)))

    @classmethod
    def default(cls) -> 'TransactionCatalog':
        return cls.from_names(TRANSACTION_NAMES)

    @property
    def size(self) -> int:
        return len(self.transactions)

    @property
    def names(self) -> List[str]:
        return [tx.name for tx in self.transactions]

    def index_of(self, name: str) -> int:
        for tx in self.transactions:
            if tx.name == name:
                return tx.index
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.transactions)


@dataclass(frozen=True)
class Workload:
    """users[j] = virtual users running transaction j"""

    users: Tuple[int, ...]

    def __post_init__(self):
        users = tuple(int(u) for u in self.users)
        if any(u < 0 for u in users):
            raise InvalidValue(f"workload entries must be >= 0, got {users}")
        object.__setattr__(self, 'users', users)

    @classmethod
    def uniform(cls, size: int, users_per_tx: int) -> 'Workload':
        return cls(tuple([users_per_tx] * size))

    @property
    def total(self) -> int:
        return sum(self.users)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.users, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class PerfMeasurement:
    avg_response_time: float    # ms
    error_rate: float           # fraction

    def __post_init__(self):
        if not math.isfinite(self.avg_response_time) or self.avg_response_time < 0:
            raise InvalidValue(f"avg_response_time must be finite and >= 0, got {self.avg_response_time}")
        if not 0.0 <= self.error_rate <= 1.0:
            raise InvalidValue(f"error_rate must be in [0, 1], got {self.error_rate}")


@dataclass(frozen=True)
class TestObjective:
    """Violation thresholds; an episode ends once either is exceeded"""

    __test__ = False

    rt_threshold: float    # ms
    er_threshold: float    # fraction

    def __post_init__(self):
        if not self.rt_threshold > 0:
            raise InvalidValue(f"rt_threshold must be > 0, got {self.rt_threshold}")
        if not 0 < self.er_threshold <= 1:
            raise InvalidValue(f"er_threshold must be in (0, 1], got {self.er_threshold}")

    @classmethod
    def default(cls) -> 'TestObjective':
        return cls(DEFAULT_OBJECTIVE['rt_threshold_ms'], DEFAULT_OBJECTIVE['er_threshold'])


@dataclass(frozen=True)
class StateThresholds:
    rt_low: float          # ms, Low/Normal boundary
    rt_high: float         # ms, Normal/High boundary
    er_boundary: float     # fraction, Low/High boundary

    def __post_init__(self):
        if not 0 < self.rt_low < self.rt_high:
            raise InvalidValue(f"need 0 < rt_low < rt_high, got {self.rt_low}, {self.rt_high}")
        if not 0 < self.er_boundary < 1:
            raise InvalidValue(f"er_boundary must be in (0, 1), got {self.er_boundary}")

    @classmethod
    def for_objective(cls, objective: TestObjective, rt_low: Optional[float] = None) -> 'StateThresholds':
        """High classes coincide with objective violation"""
        if rt_low is None:
            rt_low = get_state_config()['rt_low_ms']
        rt_low = min(rt_low, objective.rt_threshold / 2.0)
        er_boundary = min(objective.er_threshold, 0.99)
        return cls(rt_low, objective.rt_threshold, er_boundary)


class RtClass(IntEnum):
    LOW = 0
    NORMAL = 1
    HIGH = 2


class ErClass(IntEnum):
    LOW = 0
    HIGH = 1


@dataclass(frozen=True)
class SutState:
    rt_class: RtClass
    er_class: ErClass

    @property
    def index(self) -> int:
        return 2 * int(self.rt_class) + int(self.er_class)

    @property
    def label(self) -> str:
        return f"RT:{self.rt_class.name.title()}/ER:{self.er_class.name.title()}"

    @classmethod
    def from_index(cls, index: int) -> 'SutState':
        if not 0 <= index < NUM_STATES:
            raise InvalidValue(f"state index must be in [0, {NUM_STATES}), got {index}")
        return cls(RtClass(index // 2), ErClass(index % 2))

    @classmethod
    def all(cls) -> List['SutState']:
        return [cls.from_index(i) for i in range(NUM_STATES)]


NUM_STATES = len(RtClass) * len(ErClass)


def classify_state(m: PerfMeasurement, th: StateThresholds) -> SutState:
    """Boundary values map to the upper class"""
    if m.avg_response_time < th.rt_low:
        rt_class = RtClass.LOW
    elif m.avg_response_time < th.rt_high:
        rt_class = RtClass.NORMAL
    else:
        rt_class = RtClass.HIGH
    er_class = ErClass.LOW if m.error_rate < th.er_boundary else ErClass.HIGH
    return SutState(rt_class, er_class)


def reward(m: PerfMeasurement, obj: TestObjective) -> float:
    """(RT/RT_threshold)^2 + (ER/ER_threshold)^2"""
    return (m.avg_response_time / obj.rt_threshold) ** 2 + (m.error_rate / obj.er_threshold) ** 2


def apply_action(w: Workload, a: int) -> Workload:
    """
    Scale transaction a by +1/3 with ceiling rounding; a zero-load transaction becomes 1

    Args:
        w: Current workload
        a: Action index (transaction to scale)

    Returns:
        New workload with exactly one coordinate increased
    """
    if not 0 <= a < len(w):
        raise InvalidValue(f"action {a} out of range for {len(w)} transactions")
    users = list(w.users)
    current = users[a]
    users[a] = 1 if current == 0 else current + math.ceil(current / 3)
    return Workload(tuple(users))


def objective_met(m: PerfMeasurement, obj: TestObjective) -> bool:
    """Strict: a threshold is violated only when exceeded"""
    return m.avg_response_time > obj.rt_threshold or m.error_rate > obj.er_threshold


def drift_schedule(start: TestObjective, rt_step: float, er_step: float,
                   count: int) -> List[TestObjective]:
    """
    Objectives drifting away from start; the i-th entry is start + i*step for i = 1..count

    Args:
        start: Objective used during initial learning
        rt_step: Response time threshold increment per episode (ms)
        er_step: Error rate threshold increment per episode
        count: Number of drifted objectives

    Returns:
        List of count objectives
    """
    return [
        TestObjective(round(start.rt_threshold + i * rt_step, 6),
                      round(min(1.0, start.er_threshold + i * er_step), 6))
        for i in range(1, count + 1)
    ]


def workload_label(w: Workload) -> str:
    return ';'.join(str(u) for u in w.users)


def check_catalog(catalog: TransactionCatalog, workload: Workload) -> None:
    if len(workload) != catalog.size:
        raise InvalidValue(f"workload has {len(workload)} entries, catalog has {catalog.size}")

