#!/usr/bin/env python3
"""Interface-error refinement table for the exact traveling-wave solution."""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from meltsafe.cli import main

if __name__ == "__main__":
    sys.exit(main(["oracle", "traveling-wave", "--v", "0.5", "--s0", "0.3",
                   "--n", "25", "--refine", "3"] + sys.argv[1:]))
