#!/usr/bin/env python3
"""2D benchmark driver: runs the experiment described by an INI config
(default scripts/experiment_2d.ini) and prints the summary table.

Usage: python scripts/run_2d_benchmark.py [config.ini]
Equivalent to:  cglo run scripts/experiment_2d.ini
"""

import sys
from pathlib import Path

from cglo import cli


def main() -> int:
    default = Path(__file__).with_name("experiment_2d.ini")
    config = sys.argv[1] if len(sys.argv) > 1 else str(default)
    return cli.main(["run", config])


if __name__ == "__main__":
    raise SystemExit(main())
