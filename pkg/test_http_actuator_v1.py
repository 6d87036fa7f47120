"""
HTTP actuator against a local stub server: accounting, error rates, scripts and dry runs
"""

import os

import numpy as np
import pytest

from src.core.domain_v1 import TransactionCatalog, TransactionId, Workload
from src.core.errors_v1 import ConfigInvalid, ConnectFailure, EmptyWorkload, MissingScript
from src.core.http_actuator_v1 import (
    HttpEnvironment,
    RunSpec,
    ScriptStep,
    TransactionScript,
    dry_run,
    execute,
    load_scripts,
    run_workload,
)

NAMES = ['ok', 'fail', 'slow', 'mixed']


@pytest.fixture
def stub_catalog():
    return TransactionCatalog.from_names(NAMES)


@pytest.fixture
def stub_scripts(stub_catalog):
    def script(name, *paths):
        tx = stub_catalog.transactions[stub_catalog.index_of(name)]
        return TransactionScript(tx, tuple(ScriptStep('GET', p) for p in paths))

    return {
        'ok': script('ok', '/ok'),
        'fail': script('fail', '/fail'),
        'slow': script('slow', '/slow'),
        'mixed': script('mixed', '/ok', '/fail')
    }


def spec_for(base_url, duration_s=0.2, timeout_ms=1000.0):
    return RunSpec(duration_s=duration_s, ramp_up_s=0.0, base_url=base_url, timeout_ms=timeout_ms)


def test_accounting_identity_over_random_scenarios(stub_server, stub_scripts, stub_catalog):
    rng = np.random.default_rng(21)
    spec = spec_for(stub_server, duration_s=0.15, timeout_ms=150.0)
    for _ in range(10):
        users = tuple(int(u) for u in rng.integers(0, 3, size=len(NAMES)))
        if sum(users) == 0:
            users = (1, 0, 0, 0)
        stats = run_workload(Workload(users), stub_scripts, spec, stub_catalog)
        assert stats.completed + stats.failed + stats.timed_out == stats.issued
        assert stats.issued >= sum(users)
        m = stats.to_measurement(spec.timeout_ms)
        assert 0.0 <= m.error_rate <= 1.0


def test_half_failing_script_yields_half_error_rate(stub_server, stub_scripts, stub_catalog):
    m = execute(Workload((0, 0, 0, 3)), stub_scripts, spec_for(stub_server), stub_catalog)
    assert m.error_rate == pytest.approx(0.5, abs=0.1)
    assert m.avg_response_time > 0


def test_healthy_script_has_no_errors(stub_server, stub_scripts, stub_catalog):
    m = execute(Workload((2, 0, 0, 0)), stub_scripts, spec_for(stub_server), stub_catalog)
    assert m.error_rate == 0.0
    assert m.avg_response_time >= 10.0


def test_slow_endpoint_times_out(stub_server, stub_scripts, stub_catalog):
    stats = run_workload(Workload((0, 0, 1, 0)), stub_scripts,
                         spec_for(stub_server, duration_s=0.1, timeout_ms=100.0), stub_catalog)
    assert stats.timed_out >= 1
    assert stats.to_measurement(100.0).error_rate == 1.0


def test_every_user_runs_at_least_one_iteration(stub_server, stub_scripts, stub_catalog):
    stats = run_workload(Workload((0, 0, 0, 4)), stub_scripts,
                         spec_for(stub_server, duration_s=0.001), stub_catalog)
    assert stats.issued >= 8


def test_missing_script_and_empty_workload(stub_server, stub_scripts, stub_catalog):
    partial = {k: v for k, v in stub_scripts.items() if k != 'fail'}
    with pytest.raises(MissingScript):
        run_workload(Workload((0, 1, 0, 0)), partial, spec_for(stub_server), stub_catalog)
    with pytest.raises(EmptyWorkload):
        run_workload(Workload((0, 0, 0, 0)), stub_scripts, spec_for(stub_server), stub_catalog)


def test_unreachable_sut_raises_connect_failure(stub_scripts, stub_catalog):
    spec = spec_for('http://127.0.0.1:9', timeout_ms=200.0)
    with pytest.raises(ConnectFailure):
        run_workload(Workload((1, 0, 0, 0)), stub_scripts, spec, stub_catalog)


def test_environment_attaches_episode_and_step(stub_scripts, stub_catalog):
    env = HttpEnvironment(stub_scripts, spec_for('http://127.0.0.1:9', timeout_ms=200.0), stub_catalog)
    with pytest.raises(ConnectFailure) as info:
        env.measure(Workload((1, 0, 0, 0)), episode=4, step=7)
    assert info.value.episode == 4 and info.value.step == 7
    assert 'module=http-actuator episode=4 step=7' in str(info.value)
    assert not env.is_pure


def test_dry_run_reports_failing_step_positions(stub_server, stub_scripts):
    report = dry_run({'mixed': stub_scripts['mixed'], 'ok': stub_scripts['ok']}, spec_for(stub_server))
    assert not report['all_ok']
    assert report['failed_steps'] == [{'transaction': 'mixed', 'step': 1}]
    assert [s['status'] for s in report['steps']] == [200, 500, 200]


def test_step_templates_substitute_user_and_iteration():
    step = ScriptStep('POST', '/cart/${transaction}?u=${user}', body='it=${iteration}')
    assert step.render({'user': '3', 'iteration': '5', 'transaction': 'Add'}) == ('/cart/Add?u=3', 'it=5')
    assert step.is_success(204, '')
    assert not step.is_success(302, '')
    assert not ScriptStep('GET', '/', expect_body='Cart').is_success(200, 'Home')


def test_load_scripts_parses_yaml(tmp_path):
    path = tmp_path / 'scripts.yaml'
    path.write_text(
        "transactions:\n"
        "  - name: Home\n"
        "    steps:\n"
        "      - {method: get, path: /}\n"
        "  - name: Login\n"
        "    steps:\n"
        "      - {method: GET, path: /my-account/}\n"
        "      - {method: POST, path: /my-account/, body: 'u=${user}', expect_status: 2}\n"
    )
    scripts = load_scripts(str(path))
    assert set(scripts) == {'Home', 'Login'}
    assert scripts['Home'].steps[0].method == 'GET'
    assert scripts['Login'].transaction == TransactionId(4, 'Login')
    assert scripts['Login'].steps[1].body == 'u=${user}'


def test_load_scripts_rejects_unknown_transaction(tmp_path):
    path = tmp_path / 'scripts.yaml'
    path.write_text("transactions:\n  - name: Teleport\n    steps:\n      - {path: /}\n")
    with pytest.raises(ConfigInvalid):
        load_scripts(str(path))


def test_shipped_scripts_cover_the_catalog():
    scripts = load_scripts(os.path.join(os.path.dirname(__file__), 'shop_scripts.yaml'))
    assert set(scripts) == set(TransactionCatalog.default().names)
