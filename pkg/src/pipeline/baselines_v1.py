#!/usr/bin/env python3
"""
Baselines v1 - Non-learning comparison strategies
Standard Baseline (uniform +33% steps) and Random Testing (one random transaction per step)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..core.domain_v1 import PerfMeasurement, TestObjective, Workload, apply_action, objective_met
from ..core.errors_v1 import InvalidValue, ReloadError
from ..utils.rng_utils_v1 import keyed_generator

logger = logging.getLogger(__name__)


@dataclass
class StrategyRun:
    """Executed (workload, measurement) steps of one baseline episode"""

    steps: List[Tuple[Workload, PerfMeasurement]] = field(default_factory=list)
    terminal: bool = False

    @property
    def final_workload(self) -> Optional[Workload]:
        return self.steps[-1][0] if self.steps else None

    @property
    def final_total(self) -> int:
        return self.steps[-1][0].total if self.steps else 0

    def __len__(self) -> int:
        return len(self.steps)


def scale_uniform(w: Workload) -> Workload:
    """Every entry times 4/3, ceiling"""
    return Workload(tuple(math.ceil(u * 4 / 3) for u in w.users))


def _run_strategy(env, objective: TestObjective, initial_per_tx: int, max_steps: int,
                  next_workload, episode: int, module: str) -> StrategyRun:
    if initial_per_tx < 1:
        raise InvalidValue(f"initial_per_tx must be >= 1, got {initial_per_tx}")
    if max_steps < 1:
        raise InvalidValue(f"max_steps must be >= 1, got {max_steps}")

    run = StrategyRun()
    workload = Workload.uniform(env.catalog.size, initial_per_tx)
    for step in range(max_steps):
        if step > 0:
            workload = next_workload(workload)
        try:
            m = env.measure(workload, episode=episode, step=step)
        except ReloadError as e:
            raise e.with_context(module=module, episode=episode, step=step)
        run.steps.append((workload, m))
        logger.debug(f"{module} step {step}: {workload.total} users, RT {m.avg_response_time:.1f} ms, "
                     f"ER {m.error_rate:.3f}")
        if objective_met(m, objective):
            run.terminal = True
            break
    return run


def run_standard_baseline(env, objective: TestObjective, initial_per_tx: int, max_steps: int,
                          episode: int = 0) -> StrategyRun:
    """
    Same users on every transaction, all scaled by +33% per step

    Args:
        env: Environment exposing catalog and measure()
        objective: Test objective ending the run
        initial_per_tx: Starting users per transaction (>= 1)
        max_steps: Maximum executed workloads
        episode: Episode index passed through to the environment

    Returns:
        StrategyRun, terminal iff the last measurement met the objective
    """
    return _run_strategy(env, objective, initial_per_tx, max_steps, scale_uniform, episode, 'baselines')


def run_random_testing(env, objective: TestObjective, initial_per_tx: int, max_steps: int,
                       seed: int, episode: int = 0) -> StrategyRun:
    """
    Each step scales one uniformly chosen transaction with the agent's +1/3 action

    The choice sequence is keyed by (seed, episode), so a run repeats step for step.
    """
    rng: np.random.Generator = keyed_generator(seed, episode)

    def pick(w: Workload) -> Workload:
        return apply_action(w, int(rng.integers(len(w))))

    return _run_strategy(env, objective, initial_per_tx, max_steps, pick, episode, 'baselines')
