#!/usr/bin/env python3
"""
Acceptance Suite Runner - Study-level checks on the calibrated simulator
Returns 0 when every check passes, 1 otherwise, 3 if the suite itself crashes
"""

import json
import sys

from src.config.run_config_v1 import load_run_config
from src.testing.acceptance_suite_v1 import AcceptanceSuite
from src.utils.logging_utils_v1 import setup_logging


def main(config_path: str = None) -> int:
    logger = setup_logging()
    config = load_run_config(config_path, actuator='sim')
    results = AcceptanceSuite(config).run_full_suite()
    for name, outcome in results['checks'].items():
        logger.debug(f"{name}: {json.dumps(outcome, default=str)}")
    return 0 if results['checks_failed'] == 0 else 1


if __name__ == '__main__':
    try:
        sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else None))
    except Exception as e:
        print(f"💥 Acceptance suite crashed: {e}")
        sys.exit(3)
