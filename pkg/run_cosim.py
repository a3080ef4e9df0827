#!/usr/bin/env python3
"""
Co-simulation Runner
====================

Command-line entry point; see `python run_cosim.py --help`.
"""

import sys

from cosim.cli import main

if __name__ == "__main__":
    sys.exit(main())
