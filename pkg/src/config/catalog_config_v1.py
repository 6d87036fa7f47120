#!/usr/bin/env python3
"""
Catalog Configuration v1 - Shipped transactions, simulator calibration and study layout
Constants for the e-commerce transaction catalog and the experimental design
"""

from typing import Dict, List

# Transactions of the e-commerce SUT; each includes its functional prerequisites
TRANSACTION_NAMES = [
    'Home',
    'Sign up page',
    'Sign up',
    'Login page',
    'Login',
    'Search page',
    'Select product',
    'Add to cart',       # login -> search page -> select product -> add
    'Payment',           # add to cart chain + payment form
    'Confirm',           # full checkout chain
    'Log out'
]

# Calibrated base service demand per transaction (ms), same order as TRANSACTION_NAMES
DEFAULT_DEMANDS_MS = [60.0, 70.0, 150.0, 70.0, 140.0, 180.0, 220.0, 300.0, 380.0, 420.0, 210.0]

DEFAULT_SIM_PARAMETERS = {
    'capacity': 80.0,            # equal allocation saturates RT threshold near 70 users
    'error_onset': 0.70,
    'error_slope': 1.0,
    'overload_slope': 4.0,
    'overload_rt_scale_ms': 1500.0,
    'noise_amplitude': 0.0,
    'seed': 2024
}

DEFAULT_OBJECTIVE = {
    'rt_threshold_ms': 1500.0,
    'er_threshold': 0.20
}

# Objective drift used after initial learning
TRANSFER_DRIFT = {
    'episodes': 10,
    'rt_step_ms': 100.0,
    'er_step': 0.01
}

# Independent variable levels of the study
TECHNIQUES: Dict[str, Dict] = {
    'A1': {'kind': 'tabular', 'epsilon': 0.2, 'label': 'Q-learning, epsilon=0.2'},
    'A2': {'kind': 'tabular', 'epsilon': 0.5, 'label': 'Q-learning, epsilon=0.5'},
    'A3': {'kind': 'tabular', 'epsilon': 'decaying', 'label': 'Q-learning, decaying epsilon'},
    'A4': {'kind': 'dqn', 'epsilon': 'decaying', 'label': 'DQN, decaying epsilon'},
    'B': {'kind': 'baseline', 'label': 'Standard Baseline'},
    'C': {'kind': 'random', 'label': 'Random Testing'}
}

EPISODE_BUDGETS = {'A1': 40, 'A2': 40, 'A3': 40, 'A4': 45, 'B': 40, 'C': 40}

# (alpha, gamma) cells of the sensitivity grid; None alpha means decaying
SENSITIVITY_GRID: List[Dict] = [
    {'cell': 'alpha=0.1,gamma=0.5', 'alpha': 0.1, 'gamma': 0.5},
    {'cell': 'alpha=decaying,gamma=0.5', 'alpha': None, 'gamma': 0.5},
    {'cell': 'alpha=0.5,gamma=0.1', 'alpha': 0.5, 'gamma': 0.1},
    {'cell': 'alpha=0.5,gamma=0.9', 'alpha': 0.5, 'gamma': 0.9}
]

SAVINGS_WINDOW_EPISODES = 10

EPISODE_CSV_COLUMNS = [
    'episode',
    'technique',
    'final_users',
    'terminal',
    'objective_rt',
    'objective_er',
    'final_workload'     # semicolon-joined per-transaction users
]
