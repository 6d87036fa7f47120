"""
Policy persistence: tabular and DQN snapshots, versioning and catalog checks
"""

import json

import numpy as np
import pytest

from src.agents.dqn_agent_v1 import DqnAgent, DqnSettings
from src.agents.policy_store_v1 import (
    FORMAT_VERSION,
    PolicySnapshot,
    load_policy,
    save_policy,
    snapshot_from_dict,
    snapshot_to_dict,
)
from src.agents.q_learning_agent_v1 import run_initial_learning
from src.agents.q_network_v1 import QNetwork
from src.agents.q_table_v1 import EpsilonSchedule, LearningParams, QTable
from src.core.domain_v1 import StateThresholds, TestObjective, TransactionCatalog
from src.core.errors_v1 import CatalogMismatch, InvalidValue, IoFailure, VersionMismatch


@pytest.fixture
def params():
    return LearningParams(alpha=0.5, gamma=0.5, epsilon=EpsilonSchedule(0.9, 0.9, 0.05))


def tabular_snapshot(catalog, q=None):
    objective = TestObjective.default()
    return PolicySnapshot(catalog=catalog, thresholds=StateThresholds.for_objective(objective, 500.0),
                          objective=objective, episode_count=0, q_table=q or QTable.zeros(catalog.size))


def test_tabular_round_trip_after_forty_episodes(tmp_path, sim_env, objective, params):
    snapshot, _ = run_initial_learning(sim_env, params, objective, 40, seed=11)
    path = tmp_path / 'policy.json'
    save_policy(snapshot, str(path))
    loaded = load_policy(str(path))
    assert loaded.q_table == snapshot.q_table
    assert loaded.thresholds == snapshot.thresholds
    assert loaded.objective == snapshot.objective
    assert loaded.catalog == snapshot.catalog
    assert loaded.episode_count == 40
    assert loaded.variant == 'tabular'


def test_dqn_round_trip(tmp_path, sim_env, objective):
    params = LearningParams(alpha=0.01, gamma=0.5, epsilon=EpsilonSchedule(0.9, 0.9, 0.05))
    agent = DqnAgent(sim_env.catalog, params, seed=1, settings=DqnSettings(batch_size=8))
    snapshot, _ = agent.run_initial_learning(sim_env, objective, 4)
    path = tmp_path / 'nested' / 'dqn.json'
    save_policy(snapshot, str(path))
    loaded = load_policy(str(path))
    assert loaded.variant == 'dqn'
    assert loaded.network == snapshot.network
    assert loaded.network.layer_sizes == (2, 16, 16, 11)
    assert loaded.target_network == snapshot.target_network
    assert loaded.env_steps == snapshot.env_steps > 0


def test_dqn_file_without_training_state_still_loads(catalog):
    objective = TestObjective.default()
    snapshot = PolicySnapshot(catalog, StateThresholds.for_objective(objective, 500.0), objective, 2,
                              network=QNetwork.zeros((2, 4, 11)))
    data = snapshot_to_dict(snapshot)
    assert 'target_network' not in data
    del data['env_steps']
    loaded = snapshot_from_dict(data)
    assert loaded.target_network is None
    assert loaded.env_steps == 0


def test_target_network_must_match_the_online_network(catalog):
    objective = TestObjective.default()
    thresholds = StateThresholds.for_objective(objective, 500.0)
    with pytest.raises(InvalidValue):
        PolicySnapshot(catalog, thresholds, objective, 0, network=QNetwork.zeros((2, 4, 11)),
                       target_network=QNetwork.zeros((2, 5, 11)))
    with pytest.raises(InvalidValue):
        PolicySnapshot(catalog, thresholds, objective, 0, q_table=QTable.zeros(11),
                       target_network=QNetwork.zeros((2, 4, 11)))


def test_snapshot_dict_is_json_ready(catalog):
    data = snapshot_to_dict(tabular_snapshot(catalog))
    assert data['format_version'] == FORMAT_VERSION
    assert data['variant'] == 'tabular'
    assert len(data['q_values']) == 6 and len(data['q_values'][0]) == 11
    assert snapshot_from_dict(json.loads(json.dumps(data))).q_table == QTable.zeros(11)


def test_unsupported_version_is_rejected(catalog):
    data = snapshot_to_dict(tabular_snapshot(catalog))
    data['format_version'] = FORMAT_VERSION + 1
    with pytest.raises(VersionMismatch):
        snapshot_from_dict(data)


def test_missing_or_corrupt_file_raises_io_failure(tmp_path):
    with pytest.raises(IoFailure):
        load_policy(str(tmp_path / 'absent.json'))
    bad = tmp_path / 'bad.json'
    bad.write_text('{not json')
    with pytest.raises(IoFailure):
        load_policy(str(bad))


def test_catalog_check(catalog):
    snapshot = tabular_snapshot(catalog)
    snapshot.check_catalog(TransactionCatalog.default())
    renamed = TransactionCatalog.from_names(['Start'] + catalog.names[1:])
    with pytest.raises(CatalogMismatch):
        snapshot.check_catalog(renamed)


def test_snapshot_holds_exactly_one_policy(catalog):
    objective = TestObjective.default()
    thresholds = StateThresholds.for_objective(objective, 500.0)
    with pytest.raises(InvalidValue):
        PolicySnapshot(catalog, thresholds, objective, 0)
    with pytest.raises(InvalidValue):
        PolicySnapshot(catalog, thresholds, objective, 0, q_table=QTable.zeros(11),
                       network=QNetwork.zeros((2, 4, 11)))
    with pytest.raises(InvalidValue):
        PolicySnapshot(catalog, thresholds, objective, 0, q_table=QTable.zeros(5))


def test_pinned_thresholds_survive_round_trip(catalog):
    snapshot = PolicySnapshot(catalog, StateThresholds(400.0, 1500.0, 0.2), TestObjective.default(), 3,
                              q_table=QTable(np.ones((6, 11)), np.ones((6, 11), dtype=np.int64)),
                              thresholds_pinned=True)
    loaded = snapshot_from_dict(snapshot_to_dict(snapshot))
    assert loaded.thresholds_pinned
    assert loaded.thresholds == StateThresholds(400.0, 1500.0, 0.2)
