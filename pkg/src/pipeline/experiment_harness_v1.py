#!/usr/bin/env python3
"""
Experiment Harness v1 - Study orchestration for the six techniques
Runs plans against an environment, summarizes the DV per episode and computes cost savings
"""

import logging
import re
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..agents.dqn_agent_v1 import DqnAgent, DqnSettings
from ..agents.policy_store_v1 import PolicySnapshot
from ..agents.q_learning_agent_v1 import QLearningAgent, detect_convergence
from ..agents.q_table_v1 import LearningParams
from ..config.catalog_config_v1 import SAVINGS_WINDOW_EPISODES, SENSITIVITY_GRID, TECHNIQUES
from ..config.run_config_v1 import RunConfig
from ..core.domain_v1 import StateThresholds, TestObjective, drift_schedule
from ..core.errors_v1 import ConfigInvalid, InvalidValue, ReloadError, ZeroReference
from ..core.http_actuator_v1 import HttpEnvironment, RunSpec, load_scripts
from ..core.sut_simulator_v1 import SimulatorEnvironment
from ..utils.logging_utils_v1 import ExperimentMetrics, get_run_logger
from .baselines_v1 import run_random_testing, run_standard_baseline

logger = logging.getLogger(__name__)

LEARNING_KINDS = ('tabular', 'dqn')
REFERENCES = ('B', 'C')


@dataclass(frozen=True)
class ExperimentPlan:
    """
    One technique run: an episode budget against a fixed objective, or a transfer
    schedule with one episode per objective
    """

    technique: str
    episodes: int
    objective: TestObjective = field(default_factory=TestObjective.default)
    schedule: Optional[Tuple[TestObjective, ...]] = None
    params: Optional[LearningParams] = None
    seed: int = 0
    actuator: str = 'sim'
    initial_users_per_tx: int = 1
    max_steps: int = 60
    snapshot: Optional[PolicySnapshot] = None
    rt_low: Optional[float] = None
    pin_thresholds: bool = False
    episode_offset: int = 0
    label: Optional[str] = None

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise InvalidValue(f"unknown technique {self.technique!r}")
        if self.schedule is not None:
            object.__setattr__(self, 'schedule', tuple(self.schedule))
            if self.episodes != len(self.schedule):
                raise InvalidValue(f"episodes ({self.episodes}) must equal the schedule length ({len(self.schedule)})")
        elif self.episodes < 1:
            raise InvalidValue(f"episodes must be >= 1, got {self.episodes}")
        if self.kind in LEARNING_KINDS and self.params is None:
            raise InvalidValue(f"technique {self.technique} needs learning params")
        if self.actuator not in ('sim', 'http'):
            raise InvalidValue(f"unknown actuator {self.actuator!r}")
        if self.snapshot is not None:
            expected = 'dqn' if self.kind == 'dqn' else 'tabular'
            if self.kind not in LEARNING_KINDS or self.snapshot.variant != expected:
                raise InvalidValue(f"technique {self.technique} cannot resume a {self.snapshot.variant} policy")

    @property
    def kind(self) -> str:
        return TECHNIQUES[self.technique]['kind']

    @property
    def phase(self) -> str:
        return 'transfer' if self.schedule is not None else 'initial'

    @property
    def name(self) -> str:
        return self.label or self.technique

    def objectives(self) -> List[TestObjective]:
        if self.schedule is not None:
            return list(self.schedule)
        return [self.objective] * self.episodes


@dataclass
class ExperimentReport:
    technique: str
    label: str
    phase: str
    seed: int
    final_users: List[int] = field(default_factory=list)
    terminal: List[bool] = field(default_factory=list)
    objectives: List[TestObjective] = field(default_factory=list)
    final_workloads: List[Tuple[int, ...]] = field(default_factory=list)
    convergence_episode: Optional[int] = None
    window_mean: Optional[float] = None
    # Extensions: spread of the window and non-terminal episodes left out of it
    window_std: Optional[float] = None
    non_terminal_excluded: int = 0
    savings: Dict[str, float] = field(default_factory=dict)
    steps_executed: int = 0
    error: Optional[str] = None
    policy: Optional[PolicySnapshot] = field(default=None, compare=False, repr=False)

    @property
    def partial(self) -> bool:
        return self.error is not None

    @property
    def episodes(self) -> int:
        return len(self.final_users)

    @property
    def slug(self) -> str:
        return f"{self.phase}_{re.sub(r'[^A-Za-z0-9.]+', '_', self.label).strip('_')}"

    def window_values(self, length: int = SAVINGS_WINDOW_EPISODES) -> List[int]:
        """Final users of the terminal episodes among the last `length`"""
        pairs = list(zip(self.final_users, self.terminal))[-length:]
        return [users for users, terminal in pairs if terminal]

    def summarize(self, length: int = SAVINGS_WINDOW_EPISODES):
        self.convergence_episode = detect_convergence(self.final_users)
        window = self.window_values(length)
        self.non_terminal_excluded = min(length, self.episodes) - len(window)
        if window:
            self.window_mean = float(np.mean(window))
            self.window_std = float(np.std(window))
        else:
            self.window_mean = self.window_std = None

    def to_dict(self) -> Dict:
        return {
            'technique': self.technique,
            'label': self.label,
            'phase': self.phase,
            'seed': self.seed,
            'final_users': list(self.final_users),
            'terminal': list(self.terminal),
            'objectives': [[o.rt_threshold, o.er_threshold] for o in self.objectives],
            'final_workloads': [list(w) for w in self.final_workloads],
            'convergence_episode': self.convergence_episode,
            'window_mean': self.window_mean,
            'window_std': self.window_std,
            'non_terminal_excluded': self.non_terminal_excluded,
            'savings': dict(self.savings),
            'steps_executed': self.steps_executed,
            'error': self.error
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ExperimentReport':
        values = dict(data)
        values['objectives'] = [TestObjective(rt, er) for rt, er in data.get('objectives', [])]
        values['final_workloads'] = [tuple(w) for w in data.get('final_workloads', [])]
        return cls(**values)


def cost_saving(agent_mean: float, reference_mean: float) -> float:
    """(reference - agent) / reference; negative when the agent needs more users"""
    if not reference_mean > 0:
        raise ZeroReference(f"reference mean must be > 0, got {reference_mean}", module='harness')
    return (reference_mean - agent_mean) / reference_mean


def make_environment(config: RunConfig):
    """Simulator or HTTP environment selected by the run config"""
    if config.actuator == 'sim':
        return SimulatorEnvironment(config.sim)
    try:
        spec = RunSpec(duration_s=config.step_duration_s, ramp_up_s=config.ramp_up_s,
                       base_url=config.base_url, timeout_ms=config.timeout_ms,
                       think_time_s=config.think_time_s)
    except InvalidValue as e:
        raise ConfigInvalid(f"invalid http run settings: {e}", module='cli')
    return HttpEnvironment(load_scripts(config.scripts_path), spec)


def _build_agent(plan: ExperimentPlan, env):
    common = {'initial_users_per_tx': plan.initial_users_per_tx, 'max_steps': plan.max_steps}
    if plan.snapshot is not None:
        plan.snapshot.check_catalog(env.catalog)
        agent_cls = DqnAgent if plan.kind == 'dqn' else QLearningAgent
        return agent_cls.from_snapshot(plan.snapshot, plan.params, seed=plan.seed, **common)
    if plan.kind == 'dqn':
        return DqnAgent(env.catalog, plan.params, seed=plan.seed, settings=DqnSettings.from_config(),
                        rt_low=plan.rt_low, **common)
    pinned = StateThresholds.for_objective(plan.objective, plan.rt_low) if plan.pin_thresholds else None
    return QLearningAgent(env.catalog, plan.params, seed=plan.seed, rt_low=plan.rt_low,
                          pinned_thresholds=pinned, **common)


def run_plan(plan: ExperimentPlan, env=None) -> ExperimentReport:
    """
    Execute a plan's episodes and summarize the DV

    Args:
        plan: Validated experiment plan
        env: Environment; a calibrated simulator when omitted for sim plans

    Returns:
        ExperimentReport; on actuator failure it carries the completed prefix and the error
    """
    # Resolve the environment and agent
    if env is None:
        if plan.actuator != 'sim':
            raise ConfigInvalid("http plans need an explicit environment", module='harness')
        env = SimulatorEnvironment()
    run_logger = get_run_logger('harness', f"{plan.name}_{plan.phase}_s{plan.seed}")
    metrics = ExperimentMetrics(f"plan_{plan.name}_{plan.phase}")
    report = ExperimentReport(technique=plan.technique, label=plan.name, phase=plan.phase, seed=plan.seed)
    agent = _build_agent(plan, env) if plan.kind in LEARNING_KINDS else None
    calls_before = getattr(env, 'calls', 0)

    run_logger.info(f"🚀 {TECHNIQUES[plan.technique]['label']} ({plan.phase}): {plan.episodes} episodes")
    try:
        # Run episodes; an actuator error keeps the completed prefix
        for index, objective in enumerate(plan.objectives()):
            episode = plan.episode_offset + index
            if agent is not None:
                trace = agent.run_episode(env, objective)
                final_total, terminal, workload, steps = (trace.final_total, trace.terminal,
                                                          trace.final_workload, len(trace))
            else:
                if plan.kind == 'baseline':
                    run = run_standard_baseline(env, objective, plan.initial_users_per_tx, plan.max_steps,
                                                episode=episode)
                else:
                    run = run_random_testing(env, objective, plan.initial_users_per_tx, plan.max_steps,
                                             seed=plan.seed, episode=episode)
                final_total, terminal, workload, steps = run.final_total, run.terminal, run.final_workload, len(run)
            # Record the DV of this episode
            report.final_users.append(final_total)
            report.terminal.append(terminal)
            report.objectives.append(objective)
            report.final_workloads.append(workload.users)
            report.steps_executed += steps
            metrics.increment('episodes')
            metrics.increment('steps', steps)
            run_logger.debug(f"episode {episode}: {final_total} users, terminal={terminal}")
    except ReloadError as e:
        report.error = str(e)
        run_logger.error(f"❌ {plan.name} stopped after {report.episodes} episodes: {e}")

    # Snapshot the policy and summarize
    if agent is not None and plan.episodes > 0:
        report.policy = agent.snapshot(plan.objectives()[max(0, report.episodes - 1)])
    report.summarize()
    metrics.set_gauge('env_calls', getattr(env, 'calls', 0) - calls_before)
    metrics.log_metrics(run_logger)
    run_logger.info(f"✅ {plan.name} ({plan.phase}): convergence {report.convergence_episode}, "
                    f"window mean {report.window_mean}")
    return report


def _isolated(env):
    """Per-plan copy of a pure environment so call counters are not shared"""
    if isinstance(env, SimulatorEnvironment):
        return SimulatorEnvironment(env.config, env.catalog)
    return env


def run_plans(plans: Sequence[ExperimentPlan], env, workers: int = 1,
              desc: str = 'plans') -> List[ExperimentReport]:
    """Run plans in order; concurrently only when the environment is pure"""
    if env.is_pure and workers > 1 and len(plans) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(plans))) as executor:
            futures = [executor.submit(run_plan, plan, _isolated(env)) for plan in plans]
            for _ in tqdm(as_completed(futures), total=len(futures), desc=desc):
                pass
            return [future.result() for future in futures]
    return [run_plan(plan, env) for plan in tqdm(plans, desc=desc)]


@dataclass
class StudyBundle:
    """Reports of one study plus its summary rows (savings or sensitivity outcomes)"""

    preset: str
    seed: int
    reports: List[ExperimentReport] = field(default_factory=list)
    summary: List[Dict] = field(default_factory=list)

    def report(self, technique: str, phase: str = 'initial', label: Optional[str] = None) -> ExperimentReport:
        for report in self.reports:
            if report.technique == technique and report.phase == phase and (label is None or report.label == label):
                return report
        raise KeyError(f"no {phase} report for {label or technique}")

    def to_dict(self) -> Dict:
        return {
            'preset': self.preset,
            'seed': self.seed,
            'reports': [r.to_dict() for r in self.reports],
            'summary': [dict(row) for row in self.summary]
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'StudyBundle':
        return cls(preset=data['preset'], seed=data['seed'],
                   reports=[ExperimentReport.from_dict(r) for r in data.get('reports', [])],
                   summary=[dict(row) for row in data.get('summary', [])])


def _savings_rows(phase: str, reports: Sequence[ExperimentReport],
                  references: Dict[str, ExperimentReport]) -> List[Dict]:
    rows = []
    for report in reports:
        for ref_name, ref in references.items():
            if report.window_mean is None or ref.window_mean is None:
                logger.warning(f"No terminal window for {report.label} or {ref_name}; saving skipped")
                continue
            saving = cost_saving(report.window_mean, ref.window_mean)
            report.savings[ref_name] = saving
            rows.append({
                'phase': phase,
                'technique': report.technique,
                'reference': ref_name,
                'agent_mean': report.window_mean,
                'reference_mean': ref.window_mean,
                'saving': saving,
                'agent_std': report.window_std,
                'non_terminal_excluded': report.non_terminal_excluded
            })
    return rows


def initial_plan(config: RunConfig, technique: str, params: Optional[LearningParams] = None,
                  label: Optional[str] = None) -> ExperimentPlan:
    if params is None and TECHNIQUES[technique]['kind'] in LEARNING_KINDS:
        params = config.learning_params(technique)
    return ExperimentPlan(technique=technique, episodes=config.episodes_for(technique),
                          objective=config.objective, params=params, seed=config.seed,
                          actuator=config.actuator, initial_users_per_tx=config.initial_users_per_tx,
                          max_steps=config.max_steps, rt_low=config.rt_low_ms,
                          pin_thresholds=config.pin_thresholds, label=label)


def transfer_schedule(config: RunConfig) -> List[TestObjective]:
    return drift_schedule(config.objective, config.transfer_rt_step_ms, config.transfer_er_step,
                          config.transfer_episodes)


def run_efficiency_study(config: RunConfig, env=None) -> StudyBundle:
    """
    Initial learning for A1-A4, B and C, then the drift schedule for A3, B and C

    Args:
        config: Resolved run config
        env: Environment; built from the config when omitted

    Returns:
        StudyBundle with initial and transfer reports and savings rows
    """
    env = env if env is not None else make_environment(config)
    bundle = StudyBundle(preset='efficiency', seed=config.seed)
    logger.info(f"📊 Efficiency study on {env.name}, seed {config.seed}")

    # Initial learning for every technique
    initial = run_plans([initial_plan(config, t) for t in TECHNIQUES], env, config.workers,
                        desc='initial learning')
    bundle.reports.extend(initial)
    by_technique = {r.technique: r for r in initial}
    references = {name: by_technique[name] for name in REFERENCES}
    learners = [r for r in initial if TECHNIQUES[r.technique]['kind'] in LEARNING_KINDS]
    bundle.summary.extend(_savings_rows('initial', learners, references))

    # Transfer phase reuses the A3 policy
    schedule = transfer_schedule(config)
    source = by_technique['A3']
    if not schedule:
        logger.info("Transfer schedule is empty; skipping transfer phase")
        return bundle
    if source.policy is None or source.partial:
        logger.warning("A3 initial learning did not complete; skipping transfer phase")
        return bundle

    transfer_plans = []
    for technique in ('A3',) + REFERENCES:
        learning = technique == 'A3'
        transfer_plans.append(ExperimentPlan(
            technique=technique, episodes=len(schedule), schedule=tuple(schedule),
            params=config.transfer_params('A3') if learning else None,
            snapshot=source.policy if learning else None, seed=config.seed, actuator=config.actuator,
            initial_users_per_tx=config.initial_users_per_tx, max_steps=config.max_steps,
            rt_low=config.rt_low_ms, episode_offset=config.episodes_for(technique)))
    transferred = run_plans(transfer_plans, env, config.workers, desc='transfer')
    bundle.reports.extend(transferred)
    t_refs = {r.technique: r for r in transferred if r.technique in REFERENCES}
    bundle.summary.extend(_savings_rows('transfer', [transferred[0]], t_refs))
    logger.info(f"✅ Efficiency study complete: {len(bundle.reports)} reports")
    return bundle


def run_sensitivity_study(config: RunConfig, env=None) -> StudyBundle:
    """
    A3 under the four (alpha, gamma) cells; the summary compares each cell's
    convergence episode with a reference A3 run at the configured alpha and gamma
    """
    env = env if env is not None else make_environment(config)
    bundle = StudyBundle(preset='sensitivity', seed=config.seed)
    logger.info(f"🔬 Sensitivity study: {len(SENSITIVITY_GRID)} cells, seed {config.seed}")

    plans = [
        initial_plan(config, 'A3', label=cell['cell'],
                     params=config.learning_params('A3', alpha=cell['alpha'], gamma=cell['gamma']))
        for cell in SENSITIVITY_GRID
    ]
    plans.append(initial_plan(config, 'A3', label='reference'))
    reports = run_plans(plans, env, config.workers, desc='sensitivity')
    reference = reports[-1]
    bundle.reports.extend(reports[:-1])

    for cell, report in zip(SENSITIVITY_GRID, reports[:-1]):
        later = (report.convergence_episode is None
                 or (reference.convergence_episode is not None
                     and report.convergence_episode > reference.convergence_episode))
        bundle.summary.append({
            'cell': cell['cell'],
            'alpha': 'decaying' if cell['alpha'] is None else cell['alpha'],
            'gamma': cell['gamma'],
            'convergence_episode': report.convergence_episode,
            'window_mean': report.window_mean,
            'reference_convergence_episode': reference.convergence_episode,
            'later_than_reference': later
        })
    return bundle
