#!/usr/bin/env python3
"""
Logging Utilities v1 - Logging setup and run metrics for RELOAD
Verbosity from RELOAD_LOG, per-run child loggers, lightweight counters
"""

import logging
import os
import sys
import time
from datetime import datetime
from typing import Dict, Optional

from ..config.agent_config_v1 import LOG_LEVELS, get_log_level


def setup_logging(log_level: Optional[str] = None, log_file: Optional[str] = None,
                  include_timestamp: bool = True, include_module: bool = True) -> logging.Logger:
    """
    Configure the root logger

    Args:
        log_level: Logging level name; RELOAD_LOG decides when omitted
        log_file: Optional log file path (directory created on demand)
        include_timestamp: Include timestamps in log messages
        include_module: Include logger names in log messages

    Returns:
        Configured root logger
    """
    logger = logging.getLogger()
    level = log_level.upper() if log_level else get_log_level()
    logger.setLevel(getattr(logging, level, logging.INFO))
    logger.handlers.clear()

    format_parts = []
    if include_timestamp:
        format_parts.append('%(asctime)s')
    if include_module:
        format_parts.append('%(name)s')
    format_parts.extend(['%(levelname)s', '%(message)s'])
    formatter = logging.Formatter(' - '.join(format_parts))

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    requested = os.getenv('RELOAD_LOG')
    if log_level is None and requested and requested.strip().lower() not in LOG_LEVELS:
        logger.warning(f"Unknown RELOAD_LOG value {requested!r}, using info")

    return logger


def get_run_logger(component_name: str, run_id: str) -> logging.Logger:
    """Child logger named reload.<component>.<run_id>"""
    return logging.getLogger(f"reload.{component_name}.{run_id}")


class ExperimentMetrics:
    """Counters and gauges collected over one plan or study"""

    def __init__(self, component_name: str):
        self.component_name = component_name
        self.metrics: Dict[str, float] = {}
        self._started = time.perf_counter()
        self.start_time = datetime.now()

    def increment(self, metric_name: str, value: int = 1):
        self.metrics[metric_name] = self.metrics.get(metric_name, 0) + value

    def set_gauge(self, metric_name: str, value: float):
        self.metrics[metric_name] = value

    def get(self, metric_name: str, default: float = 0) -> float:
        return self.metrics.get(metric_name, default)

    def get_metrics(self) -> Dict:
        return {
            'component': self.component_name,
            'wall_time_seconds': time.perf_counter() - self._started,
            'metrics': dict(self.metrics),
            'started': self.start_time.isoformat()
        }

    def log_metrics(self, logger: logging.Logger):
        data = self.get_metrics()
        logger.info(f"📈 {data['component']} metrics after {data['wall_time_seconds']:.2f}s: {data['metrics']}")
