#!/usr/bin/env python3
"""
Policy Store v1 - Versioned persistence of learned policies
Tabular Q-tables and DQN weights share one variant-tagged JSON container
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..core.domain_v1 import StateThresholds, TestObjective, TransactionCatalog
from ..core.errors_v1 import CatalogMismatch, InvalidValue, IoFailure, VersionMismatch
from .q_network_v1 import QNetwork
from .q_table_v1 import QTable

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
VARIANTS = ('tabular', 'dqn')


@dataclass(frozen=True)
class PolicySnapshot:
    catalog: TransactionCatalog
    thresholds: StateThresholds
    objective: TestObjective
    episode_count: int
    q_table: Optional[QTable] = None
    network: Optional[QNetwork] = None
    target_network: Optional[QNetwork] = None
    env_steps: int = 0
    thresholds_pinned: bool = False
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if (self.q_table is None) == (self.network is None):
            raise InvalidValue("snapshot holds exactly one of q_table or network")
        actions = self.q_table.num_actions if self.q_table is not None else self.network.num_actions
        if actions != self.catalog.size:
            raise InvalidValue(f"policy has {actions} actions, catalog has {self.catalog.size}")
        if self.target_network is not None:
            if self.network is None or self.target_network.layer_sizes != self.network.layer_sizes:
                raise InvalidValue("target network needs a DQN policy with the same layer sizes")

    @property
    def variant(self) -> str:
        return 'tabular' if self.q_table is not None else 'dqn'

    def check_catalog(self, catalog: TransactionCatalog):
        if catalog.names != self.catalog.names:
            raise CatalogMismatch(f"policy learned for {self.catalog.names}, environment has {catalog.names}",
                                  module='agent-qlearning')


def _network_to_dict(net: QNetwork) -> Dict:
    return {
        'layer_sizes': list(net.layer_sizes),
        'weights': [w.tolist() for w in net.weights],
        'biases': [b.tolist() for b in net.biases]
    }


def _network_from_dict(data: Dict) -> QNetwork:
    net = QNetwork.from_arrays([np.array(w, dtype=np.float64) for w in data['weights']],
                               [np.array(b, dtype=np.float64) for b in data['biases']])
    if list(net.layer_sizes) != list(data['layer_sizes']):
        raise InvalidValue(f"stored layer sizes {data['layer_sizes']} do not match the weights {net!r}")
    return net


def snapshot_to_dict(snapshot: PolicySnapshot) -> Dict:
    """
    Row-major matrices, catalog names, thresholds, objective and episode count;
    DQN snapshots add the target network and the environment step counter
    """
    data = {
        'format_version': snapshot.format_version,
        'variant': snapshot.variant,
        'catalog': snapshot.catalog.names,
        'thresholds': {
            'rt_low': snapshot.thresholds.rt_low,
            'rt_high': snapshot.thresholds.rt_high,
            'er_boundary': snapshot.thresholds.er_boundary,
            'pinned': snapshot.thresholds_pinned
        },
        'objective': {
            'rt_threshold': snapshot.objective.rt_threshold,
            'er_threshold': snapshot.objective.er_threshold
        },
        'episode_count': snapshot.episode_count
    }
    if snapshot.q_table is not None:
        data['q_values'] = snapshot.q_table.values.tolist()
        data['visit_counts'] = snapshot.q_table.visit_counts.tolist()
    else:
        data['network'] = _network_to_dict(snapshot.network)
        if snapshot.target_network is not None:
            data['target_network'] = _network_to_dict(snapshot.target_network)
        data['env_steps'] = snapshot.env_steps
    return data


def snapshot_from_dict(data: Dict) -> PolicySnapshot:
    version = data.get('format_version')
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"snapshot format version {version!r} is not supported "
                              f"(expected {FORMAT_VERSION})", module='agent-qlearning')
    variant = data.get('variant')
    if variant not in VARIANTS:
        raise InvalidValue(f"unknown snapshot variant {variant!r}")

    thresholds = data['thresholds']
    q_table, network, target_network = None, None, None
    if variant == 'tabular':
        q_table = QTable(np.array(data['q_values'], dtype=np.float64),
                         np.array(data['visit_counts'], dtype=np.int64))
    else:
        network = _network_from_dict(data['network'])
        if 'target_network' in data:
            target_network = _network_from_dict(data['target_network'])

    return PolicySnapshot(
        catalog=TransactionCatalog.from_names(data['catalog']),
        thresholds=StateThresholds(thresholds['rt_low'], thresholds['rt_high'], thresholds['er_boundary']),
        objective=TestObjective(data['objective']['rt_threshold'], data['objective']['er_threshold']),
        episode_count=int(data['episode_count']),
        q_table=q_table,
        network=network,
        target_network=target_network,
        env_steps=int(data.get('env_steps', 0)),
        thresholds_pinned=bool(thresholds.get('pinned', False)),
        format_version=version
    )


def save_policy(snapshot: PolicySnapshot, path: str) -> None:
    """
    Write a snapshot as JSON

    Args:
        snapshot: Policy to persist
        path: Destination file (parent directories are created)
    """
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(snapshot_to_dict(snapshot), f, indent=2)
    except OSError as e:
        raise IoFailure(f"cannot write policy to {path}: {e}", module='agent-qlearning')
    logger.info(f"💾 Stored {snapshot.variant} policy ({snapshot.episode_count} episodes) at {path}")


def load_policy(path: str) -> PolicySnapshot:
    """
    Read a snapshot written by save_policy

    Raises:
        IoFailure: file missing, unreadable or not JSON
        VersionMismatch: unsupported format version
    """
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise IoFailure(f"cannot read policy from {path}: {e}", module='agent-qlearning')
    try:
        return snapshot_from_dict(data)
    except KeyError as e:
        raise IoFailure(f"policy file {path} is missing key {e}", module='agent-qlearning')
