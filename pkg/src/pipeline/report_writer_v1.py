#!/usr/bin/env python3
"""
Report Writer v1 - CSV, SVG and JSON artifacts for experiments
Per-episode CSV per report, summary CSV, episode-vs-users chart, bundle round trip
"""

import json
import logging
import os
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from ..agents.policy_store_v1 import PolicySnapshot  # noqa: E402
from ..agents.q_learning_agent_v1 import greedy_policy, transaction_impact  # noqa: E402
from ..config.catalog_config_v1 import EPISODE_CSV_COLUMNS  # noqa: E402
from ..core.errors_v1 import IoFailure  # noqa: E402
from .experiment_harness_v1 import ExperimentReport, StudyBundle  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'
BUNDLE_FILE = 'bundle.json'
SUMMARY_FILE = 'summary.csv'
POLICY_SUMMARY_FILE = 'policy_summary.csv'

# Stable SVG ids so reruns produce identical files
plt.rcParams['svg.hashsalt'] = 'reload'


def report_frame(report: ExperimentReport) -> pd.DataFrame:
    rows = [
        {
            'episode': index,
            'technique': report.technique,
            'final_users': users,
            'terminal': terminal,
            'objective_rt': objective.rt_threshold,
            'objective_er': objective.er_threshold,
            'final_workload': ';'.join(str(u) for u in workload)
        }
        for index, (users, terminal, objective, workload) in enumerate(
            zip(report.final_users, report.terminal, report.objectives, report.final_workloads))
    ]
    return pd.DataFrame(rows, columns=EPISODE_CSV_COLUMNS)


def _to_csv(frame: pd.DataFrame, path: str) -> str:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}", module='harness')
    return path


def write_episode_csv(report: ExperimentReport, path: str) -> str:
    """One row per episode: episode, technique, final_users, terminal, objective_rt, objective_er, final_workload"""
    return _to_csv(report_frame(report), path)


def write_summary_csv(rows: Sequence[Dict], path: str) -> str:
    return _to_csv(pd.DataFrame(list(rows)), path)


def write_chart_svg(reports: Sequence[ExperimentReport], path: str, title: Optional[str] = None) -> str:
    """
    Episode vs final users, one line per report; non-terminal episodes drawn as crosses

    Args:
        reports: Reports to overlay
        path: Output .svg path
        title: Chart title

    Returns:
        Path written
    """
    fig, ax = plt.subplots(figsize=(8, 4.5))
    try:
        for report in reports:
            episodes = list(range(report.episodes))
            ax.plot(episodes, report.final_users, marker='o', markersize=3, linewidth=1.2, label=report.label)
            misses = [e for e in episodes if not report.terminal[e]]
            if misses:
                ax.scatter(misses, [report.final_users[e] for e in misses], marker='x', color='black')
        ax.set_xlabel('Episode')
        ax.set_ylabel('Final virtual users')
        ax.set_title(title or ', '.join(r.label for r in reports))
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        fig.savefig(path, format='svg', metadata={'Date': None})
    except OSError as e:
        raise IoFailure(f"cannot write chart {path}: {e}", module='harness')
    finally:
        plt.close(fig)
    return path


def write_policy_summary(snapshot: PolicySnapshot, path: str) -> Optional[str]:
    """Greedy transaction per state and transaction ranking of a tabular policy"""
    if snapshot.q_table is None:
        logger.info("DQN policy has no tabular summary; skipping policy_summary.csv")
        return None
    policy = greedy_policy(snapshot.q_table, snapshot.catalog)
    rows: List[Dict] = [{'kind': 'greedy', 'key': state, 'transaction': tx, 'value': None}
                        for state, tx in policy.items()]
    rows.extend({'kind': 'impact', 'key': str(rank), 'transaction': name, 'value': value}
                for rank, (name, value) in enumerate(transaction_impact(snapshot.q_table, snapshot.catalog), 1))
    return _to_csv(pd.DataFrame(rows, columns=['kind', 'key', 'transaction', 'value']), path)


def save_bundle(bundle: StudyBundle, path: str) -> str:
    try:
        with open(path, 'w') as f:
            json.dump(bundle.to_dict(), f, indent=2, sort_keys=True)
    except OSError as e:
        raise IoFailure(f"cannot write bundle {path}: {e}", module='harness')
    return path


def load_bundle(path: str) -> StudyBundle:
    try:
        with open(path, 'r') as f:
            return StudyBundle.from_dict(json.load(f))
    except OSError as e:
        raise IoFailure(f"cannot read bundle {path}: {e}", module='harness')


def write_bundle(bundle: StudyBundle, output_dir: str, charts: bool = True) -> List[str]:
    """
    Emit every artifact of a study

    Returns:
        Paths written: per-report CSV (and SVG), summary CSV, bundle JSON
    """
    os.makedirs(output_dir, exist_ok=True)
    written = []
    for report in bundle.reports:
        written.append(write_episode_csv(report, os.path.join(output_dir, f"{report.slug}.csv")))
        if charts and report.episodes:
            written.append(write_chart_svg([report], os.path.join(output_dir, f"{report.slug}.svg")))
    written.append(write_summary_csv(bundle.summary, os.path.join(output_dir, SUMMARY_FILE)))
    written.append(save_bundle(bundle, os.path.join(output_dir, BUNDLE_FILE)))
    logger.info(f"💾 Wrote {len(written)} artifacts to {output_dir}")
    return written
