"""
Standard Baseline and Random Testing strategies on the calibrated simulator
"""

import numpy as np
import pytest

from src.core.domain_v1 import Workload
from src.core.errors_v1 import ConnectFailure, InvalidValue
from src.pipeline.baselines_v1 import run_random_testing, run_standard_baseline, scale_uniform


def test_scale_uniform_uses_ceiling():
    assert scale_uniform(Workload((3, 3, 3))).users == (4, 4, 4)
    assert scale_uniform(Workload((1, 2, 6))).users == (2, 3, 8)


def test_baseline_steps_through_uniform_workloads(sim_env, objective):
    run = run_standard_baseline(sim_env, objective, initial_per_tx=1, max_steps=60)
    totals = [w.total for w, _ in run.steps]
    assert totals == [11, 22, 33, 44, 66, 88]
    assert run.terminal
    assert run.final_total == 88
    assert all(len(set(w.users)) == 1 for w, _ in run.steps)


def test_baseline_final_total_lies_in_reference_band(sim_env, objective):
    assert 55 <= run_standard_baseline(sim_env, objective, 1, 60).final_total <= 99


def test_baseline_stops_at_step_budget(sim_env, objective):
    run = run_standard_baseline(sim_env, objective, 1, max_steps=3)
    assert len(run) == 3
    assert not run.terminal


def test_random_testing_is_reproducible(sim_env, objective):
    first = run_random_testing(sim_env, objective, 1, 60, seed=9, episode=2)
    second = run_random_testing(sim_env, objective, 1, 60, seed=9, episode=2)
    assert [w for w, _ in first.steps] == [w for w, _ in second.steps]
    other = run_random_testing(sim_env, objective, 1, 60, seed=9, episode=3)
    assert [w for w, _ in other.steps] != [w for w, _ in first.steps]


def test_random_testing_changes_one_transaction_per_step(sim_env, objective):
    run = run_random_testing(sim_env, objective, 1, 60, seed=1)
    workloads = [w for w, _ in run.steps]
    for before, after in zip(workloads, workloads[1:]):
        changed = [j for j, (x, y) in enumerate(zip(before.users, after.users)) if x != y]
        assert len(changed) == 1
        assert after.total > before.total




def test_random_testing_terminates_and_beats_the_baseline_on_average(sim_env, objective):
    runs = [run_random_testing(sim_env, objective, 1, 200, seed=7, episode=e) for e in range(40)]
    assert all(run.terminal for run in runs)
    finals = np.array([run.final_total for run in runs])
    assert finals.mean() < 88
    # even with every user on the heaviest transaction
    assert finals.min() >= 33


@pytest.mark.parametrize('strategy', ['baseline', 'random'])
def test_invalid_arguments(sim_env, objective, strategy):
    run = run_standard_baseline if strategy == 'baseline' else (
        lambda env, obj, init, steps: run_random_testing(env, obj, init, steps, seed=0))
    with pytest.raises(InvalidValue):
        run(sim_env, objective, 0, 10)
    with pytest.raises(InvalidValue):
        run(sim_env, objective, 1, 0)


def test_environment_failures_carry_context(mocker, objective, catalog):
    env = mocker.Mock()
    env.catalog = catalog
    env.measure.side_effect = ConnectFailure("refused")
    with pytest.raises(ConnectFailure) as info:
        run_standard_baseline(env, objective, 1, 10, episode=5)
    assert (info.value.module, info.value.episode, info.value.step) == ('baselines', 5, 0)
