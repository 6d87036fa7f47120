"""
Command-line surface: learn, transfer, experiment and dry-run through click's test runner
"""

import csv
import json
import os

import pytest
import yaml
from click.testing import CliRunner

from src.agents.policy_store_v1 import PolicySnapshot, load_policy, save_policy
from src.agents.q_table_v1 import QTable
from src.cli_v1 import POLICY_FILE, TRANSFERRED_POLICY_FILE, cli
from src.config.run_config_v1 import EFFECTIVE_CONFIG_NAME
from src.core.domain_v1 import StateThresholds, TestObjective, TransactionCatalog
from src.pipeline.report_writer_v1 import BUNDLE_FILE, POLICY_SUMMARY_FILE, SUMMARY_FILE


@pytest.fixture(autouse=True)
def quiet_logging(mocker):
    mocker.patch('src.cli_v1.setup_logging')


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(yaml.safe_dump({'episodes': 6, 'transfer_episodes': 10, 'seed': 5}))
    return str(path)


def _invoke(*args):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def _read_rows(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


def test_learn_writes_policy_and_episode_csv(tmp_path, small_config):
    out = str(tmp_path / 'out')
    result = _invoke('--config', small_config, '--out', out, 'learn', '--technique', 'A3')
    assert result.exit_code == 0
    for name in (POLICY_FILE, POLICY_SUMMARY_FILE, EFFECTIVE_CONFIG_NAME, 'initial_A3.csv', 'initial_A3.svg'):
        assert os.path.exists(os.path.join(out, name))
    rows = _read_rows(os.path.join(out, 'initial_A3.csv'))
    assert len(rows) == 6
    assert list(rows[0]) == ['episode', 'technique', 'final_users', 'terminal', 'objective_rt',
                             'objective_er', 'final_workload']
    assert load_policy(os.path.join(out, POLICY_FILE)).episode_count == 6


def test_learn_is_byte_identical_across_runs(tmp_path, small_config):
    outputs = []
    for run in ('first', 'second'):
        out = str(tmp_path / run)
        assert _invoke('--config', small_config, '--out', out, '--seed', '13', 'learn').exit_code == 0
        outputs.append(out)
    for name in ('initial_A3.csv', 'initial_A3.svg', POLICY_FILE):
        with open(os.path.join(outputs[0], name), 'rb') as a, open(os.path.join(outputs[1], name), 'rb') as b:
            assert a.read() == b.read()


def test_learn_dqn_skips_the_tabular_summary(tmp_path, small_config):
    out = str(tmp_path / 'dqn')
    assert _invoke('--config', small_config, '--out', out, 'learn', '--technique', 'A4').exit_code == 0
    assert load_policy(os.path.join(out, POLICY_FILE)).variant == 'dqn'
    assert not os.path.exists(os.path.join(out, POLICY_SUMMARY_FILE))


def test_transfer_runs_the_drift_schedule(tmp_path, small_config):
    out = str(tmp_path / 'out')
    assert _invoke('--config', small_config, '--out', out, 'learn').exit_code == 0
    policy = os.path.join(out, POLICY_FILE)
    result = _invoke('--config', small_config, '--out', out, 'transfer', '--policy', policy)
    assert result.exit_code == 0
    rows = _read_rows(os.path.join(out, 'transfer_A3.csv'))
    assert len(rows) == 10
    assert float(rows[0]['objective_rt']) == 1600.0
    assert load_policy(os.path.join(out, TRANSFERRED_POLICY_FILE)).episode_count == 16


def test_transfer_with_empty_schedule_keeps_the_policy(tmp_path):
    config = tmp_path / 'run.yaml'
    config.write_text(yaml.safe_dump({'episodes': 3, 'transfer_episodes': 0}))
    out = str(tmp_path / 'out')
    assert _invoke('--config', str(config), '--out', out, 'learn').exit_code == 0
    result = _invoke('--config', str(config), '--out', out, 'transfer', '--policy', os.path.join(out, POLICY_FILE))
    assert result.exit_code == 0
    assert _read_rows(os.path.join(out, 'transfer_A3.csv')) == []
    assert load_policy(os.path.join(out, TRANSFERRED_POLICY_FILE)).episode_count == 3


def test_transfer_rejects_a_foreign_catalog(tmp_path):
    catalog = TransactionCatalog.from_names(['browse', 'buy'])
    objective = TestObjective.default()
    path = str(tmp_path / 'foreign.json')
    save_policy(PolicySnapshot(catalog, StateThresholds.for_objective(objective), objective, 1,
                               q_table=QTable.zeros(2)), path)
    result = _invoke('--out', str(tmp_path / 'out'), 'transfer', '--policy', path)
    assert result.exit_code == 1
    assert 'error:' in result.output


def test_transfer_with_missing_policy_file(tmp_path):
    result = _invoke('--out', str(tmp_path), 'transfer', '--policy', str(tmp_path / 'none.json'))
    assert result.exit_code == 1
    assert 'cannot read policy' in result.output


def test_invalid_configuration_exits_with_two(tmp_path):
    result = _invoke('--actuator', 'http', '--out', str(tmp_path), 'learn')
    assert result.exit_code == 2
    assert 'scripts_path' in result.output
    bad = tmp_path / 'bad.yaml'
    bad.write_text('gamma: 1.5\n')
    assert _invoke('--config', str(bad), 'learn').exit_code == 2


def test_experiment_efficiency_writes_every_artifact(tmp_path):
    config = tmp_path / 'run.yaml'
    config.write_text(yaml.safe_dump({'episodes': 3, 'transfer_episodes': 2, 'workers': 2}))
    out = str(tmp_path / 'study')
    result = _invoke('--config', str(config), '--out', out, 'experiment', '--preset', 'efficiency')
    assert result.exit_code == 0
    for name in (SUMMARY_FILE, BUNDLE_FILE, 'initial_A1.csv', 'initial_C.csv', 'transfer_A3.csv', 'transfer_B.svg'):
        assert os.path.exists(os.path.join(out, name))
    with open(os.path.join(out, BUNDLE_FILE)) as f:
        assert json.load(f)['preset'] == 'efficiency'


def test_experiment_sensitivity_uses_the_study(tmp_path, mocker):
    from src.pipeline.experiment_harness_v1 import StudyBundle
    study = mocker.patch('src.cli_v1.run_sensitivity_study',
                         return_value=StudyBundle(preset='sensitivity', seed=7))
    out = str(tmp_path / 'sens')
    result = _invoke('--out', out, 'experiment', '--preset', 'sensitivity')
    assert result.exit_code == 0
    study.assert_called_once()
    assert study.call_args[0][0].preset == 'sensitivity'
    assert os.path.exists(os.path.join(out, SUMMARY_FILE))


def test_dry_run_requires_http(tmp_path):
    assert _invoke('--out', str(tmp_path), 'dry-run').exit_code == 2


def test_dry_run_reports_failing_transaction(tmp_path, stub_server):
    scripts = tmp_path / 'scripts.yaml'
    scripts.write_text(yaml.safe_dump({'transactions': [
        {'name': 'Home', 'steps': [{'method': 'GET', 'path': '/ok'}]},
        {'name': 'Log out', 'steps': [{'method': 'GET', 'path': '/ok'}, {'method': 'GET', 'path': '/fail'}]}
    ]}))
    config = tmp_path / 'run.yaml'
    config.write_text(yaml.safe_dump({'actuator': 'http', 'scripts_path': str(scripts), 'base_url': stub_server,
                                      'step_duration_s': 1.0, 'ramp_up_s': 0.0, 'timeout_ms': 2000.0}))
    result = _invoke('--config', str(config), 'dry-run')
    assert result.exit_code == 1
    assert "'Log out' failed at step 1" in result.output
    assert '"all_ok": false' in result.output


def test_unknown_preset_in_config_file(tmp_path):
    config = tmp_path / 'run.yaml'
    config.write_text('preset: soak\n')
    result = _invoke('--config', str(config), '--out', str(tmp_path), 'experiment')
    assert result.exit_code == 2
    assert 'unknown preset' in result.output
