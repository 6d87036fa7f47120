#!/usr/bin/env python3
"""
Agent Configuration v1 - Learning, state detection and run defaults
Environment driven defaults for the load testing agent
"""

import os
from typing import Dict

from dotenv import load_dotenv

# Load environment variables when this module is imported
load_dotenv()

LOG_LEVELS = {'error': 'ERROR', 'info': 'INFO', 'debug': 'DEBUG'}


def get_learning_config() -> Dict:
    """
    Get Q-learning defaults from environment variables

    Returns:
        Dictionary with learning rate, discount and exploration schedule
    """
    return {
        'alpha': float(os.getenv('RELOAD_ALPHA', '0.5')),
        'gamma': float(os.getenv('RELOAD_GAMMA', '0.5')),
        'epsilon_start': float(os.getenv('RELOAD_EPSILON_START', '0.9')),
        'epsilon_decay': float(os.getenv('RELOAD_EPSILON_DECAY', '0.9')),
        'epsilon_floor': float(os.getenv('RELOAD_EPSILON_FLOOR', '0.05')),
        'transfer_epsilon': float(os.getenv('RELOAD_TRANSFER_EPSILON', '0.05'))
    }


def get_dqn_config() -> Dict:
    """
    Get DQN defaults

    Returns:
        Dictionary with network shape, replay and optimizer settings
    """
    return {
        'hidden_sizes': [16, 16],
        'buffer_capacity': int(os.getenv('RELOAD_DQN_BUFFER', '1000')),
        'batch_size': int(os.getenv('RELOAD_DQN_BATCH', '32')),
        'sync_every': int(os.getenv('RELOAD_DQN_SYNC', '25')),
        'alpha': float(os.getenv('RELOAD_DQN_ALPHA', '0.2')),
        'updates_per_step': int(os.getenv('RELOAD_DQN_UPDATES', '1')),
        'target_transform': os.getenv('RELOAD_DQN_TARGET', 'log1p'),  # 'identity' or 'log1p'
        'output_scale': 0.0,     # last-layer init multiplier; 0 starts every Q-value at 0
        'grad_clip': 5.0,        # global gradient norm cap
        'feature_cap': 3.0       # normalized RT / ER features are clipped to [0, cap]
    }


def get_state_config() -> Dict:
    """
    Get state detection boundaries

    Returns:
        Dictionary with the Low/Normal response time boundary in ms
    """
    return {
        'rt_low_ms': float(os.getenv('RELOAD_RT_LOW_MS', '500'))
    }


def get_run_config() -> Dict:
    """
    Get run level defaults (episodes, step cap, seed, output)

    Returns:
        Dictionary with harness run parameters
    """
    return {
        'episodes': int(os.getenv('RELOAD_EPISODES', '40')),
        'max_steps': int(os.getenv('RELOAD_MAX_STEPS', '60')),
        'initial_users_per_tx': 1,
        'seed': int(os.getenv('RELOAD_SEED', '7')),
        'output_dir': os.getenv('RELOAD_OUTPUT_DIR', 'results'),
        'convergence_window': 5,
        'convergence_tol': 0.15
    }


def get_http_config() -> Dict:
    """
    Get HTTP actuator defaults

    Returns:
        Dictionary with per-step duration, ramp-up, timeout and think time
    """
    return {
        'step_duration_s': float(os.getenv('RELOAD_STEP_DURATION_S', '30')),
        'ramp_up_s': float(os.getenv('RELOAD_RAMP_UP_S', '0')),
        'timeout_ms': float(os.getenv('RELOAD_TIMEOUT_MS', '5000')),
        'think_time_s': float(os.getenv('RELOAD_THINK_TIME_S', '0'))
    }


def get_log_level() -> str:
    """Map RELOAD_LOG (error|info|debug) to a logging level name"""
    value = os.getenv('RELOAD_LOG', 'info').strip().lower()
    return LOG_LEVELS.get(value, 'INFO')
