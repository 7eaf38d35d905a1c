#!/usr/bin/env python3
"""Run every bundled scenario and drop CSV + JSON outputs under results/.

The ceiling stress case is expected to finish with recorded violations (it
demonstrates where the ceiling-aware filter stops protecting); everything
else should come back clean.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from meltsafe.cli import main

REPO = pathlib.Path(__file__).resolve().parents[1]

SCENARIOS = ["nonovershooting", "qp_sine", "upper_nonov", "upper_qp",
             "order2", "two_phase_nondim"]

if __name__ == "__main__":
    out = REPO / "results"
    args = ["simulate", "--out", str(out), "--jobs", "2"]
    for name in SCENARIOS:
        args += ["--config", str(REPO / "configs" / f"{name}.cfg")]
    code = main(args)
    print(f"outputs in {out} (exit {code}; 2 is expected: the stress case violates)")
    sys.exit(0 if code in (0, 2) else code)
