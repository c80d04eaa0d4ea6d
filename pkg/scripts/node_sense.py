#!/usr/bin/env python
"""node-sense command-line entry point.

Usage: python scripts/node_sense.py <command> [options]; see --help.
"""
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.node_sense.cli import main

if __name__ == "__main__":
    sys.exit(main())
