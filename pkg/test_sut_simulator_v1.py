"""
Simulator: calibration anchors, saturation, monotonicity and keyed noise
"""

import numpy as np
import pytest

from src.core.domain_v1 import TestObjective, TransactionCatalog, Workload, objective_met
from src.core.errors_v1 import EmptyWorkload, InvalidValue
from src.core.sut_simulator_v1 import SimConfig, SimulatorEnvironment, calibrate_default, simulate, utilization


def uniform(users_per_tx: int) -> Workload:
    return Workload.uniform(11, users_per_tx)


def test_calibrated_demands_span_sevenfold():
    cfg = calibrate_default()
    assert len(cfg.demands_ms) == 11
    assert cfg.mean_demand == pytest.approx(200.0)
    assert max(cfg.demands_ms) / min(cfg.demands_ms) == pytest.approx(7.0)


def test_light_uniform_load_is_near_base_demand():
    m = simulate(uniform(1), calibrate_default())
    assert utilization(uniform(1), calibrate_default()) == pytest.approx(2200 / 16000)
    assert m.avg_response_time == pytest.approx(200.0 * (1 + 0.1375 / 0.8625))
    assert m.error_rate == 0.0


def test_baseline_anchor_66_users_misses_and_88_meets_default_objective():
    cfg = calibrate_default()
    objective = TestObjective.default()
    at_66 = simulate(uniform(6), cfg)
    at_88 = simulate(uniform(8), cfg)
    assert at_66.avg_response_time == pytest.approx(200.0 / 0.175)
    assert at_66.error_rate == pytest.approx(0.125)
    assert not objective_met(at_66, objective)
    assert objective_met(at_88, objective)


def test_error_rate_starts_at_onset_and_caps_at_one():
    cfg = calibrate_default()
    assert simulate(uniform(5), cfg).error_rate == 0.0
    assert simulate(uniform(500), cfg).error_rate == 1.0


def test_heavy_transactions_saturate_faster_than_light_ones():
    cfg = calibrate_default()
    confirm_heavy = Workload(tuple(30 if j == 9 else 1 for j in range(11)))
    home_heavy = Workload(tuple(30 if j == 0 else 1 for j in range(11)))
    assert confirm_heavy.total == home_heavy.total
    assert simulate(confirm_heavy, cfg).avg_response_time > simulate(home_heavy, cfg).avg_response_time


def test_adding_users_never_improves_performance():
    cfg = calibrate_default()
    rng = np.random.default_rng(5)
    for _ in range(500):
        w = Workload(tuple(int(u) for u in rng.integers(0, 12, size=11)))
        if w.total == 0:
            continue
        j = int(rng.integers(11))
        bigger = Workload(tuple(u + (1 if i == j else 0) for i, u in enumerate(w.users)))
        before, after = simulate(w, cfg), simulate(bigger, cfg)
        assert after.avg_response_time >= before.avg_response_time
        assert after.error_rate >= before.error_rate


def test_overload_regime_is_continuous_at_the_knee():
    cfg = SimConfig(demands_ms=(100.0,), capacity=1000.0, error_onset=0.7, error_slope=1.0)
    below = simulate(Workload((989,)), cfg).avg_response_time
    at_knee = simulate(Workload((990,)), cfg).avg_response_time
    above = simulate(Workload((991,)), cfg).avg_response_time
    assert below < at_knee < above
    assert at_knee == pytest.approx(100.0 * (1 + 0.99 / 0.01))


def test_zero_workload_raises_empty_workload():
    with pytest.raises(EmptyWorkload):
        simulate(uniform(0), calibrate_default(), episode=3, step=2)


def test_noise_is_keyed_by_episode_and_step():
    cfg = SimConfig.from_dict({'noise_amplitude': 0.1, 'seed': 99})
    w = uniform(3)
    first = simulate(w, cfg, episode=1, step=4)
    assert simulate(w, cfg, episode=1, step=4) == first
    assert simulate(w, cfg, episode=1, step=5).avg_response_time != first.avg_response_time
    clean = simulate(w, calibrate_default())
    assert abs(first.avg_response_time / clean.avg_response_time - 1.0) <= 0.1
    assert first.error_rate == clean.error_rate


def test_sim_config_from_dict_merges_over_defaults():
    cfg = SimConfig.from_dict({'capacity': 50.0})
    assert cfg.capacity == 50.0
    assert cfg.demands_ms == calibrate_default().demands_ms
    assert SimConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize('overrides', [
    {'capacity': 0.0},
    {'error_onset': 1.0},
    {'noise_amplitude': 0.9},
    {'demands_ms': [100.0, -1.0]},
])
def test_sim_config_rejects_invalid_values(overrides):
    with pytest.raises(InvalidValue):
        SimConfig.from_dict(overrides)


def test_environment_counts_calls_and_checks_catalog(sim_env):
    sim_env.measure(uniform(1), episode=0, step=0)
    sim_env.measure(uniform(2), episode=0, step=1)
    assert sim_env.calls == 2
    assert sim_env.is_pure
    with pytest.raises(InvalidValue):
        sim_env.measure(Workload((1, 1)))
    with pytest.raises(InvalidValue):
        SimulatorEnvironment(calibrate_default(), TransactionCatalog.from_names(['a', 'b']))
