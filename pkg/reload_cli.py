#!/usr/bin/env python3
"""
RELOAD CLI - Command-line entry point
Usage: python reload_cli.py [--config FILE] [--actuator sim|http] [--seed N] [--out DIR] COMMAND
"""

from src.cli_v1 import main

if __name__ == "__main__":
    main()
