#!/usr/bin/env python3
"""Full barrier pipeline for the mobility-edge model.

Derives the barrier layout at the modulation peaks, then feeds the
matching gap operator and the slowly modulated operator through the
barriers experiment: criterion terms, per-barrier resolvent bounds,
exceptional-set budgets, b_k coefficients and the l2 head-dominance
check of the Weyl solution.
"""

import json
import math
import sys
from pathlib import Path

from jacobidecay.cli import run_config

MODEL = {"type": "PowerModulated", "alpha": 0.5, "gamma": 0.2, "T": 1.0, "c1": 2.0, "c2": 1.0}
EPS_PHASE = math.acos(0.75) / (2 * math.pi) * 0.999


def main():
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "results"
    layout_dir = out_root / "barrier_layout"
    status = run_config(
        {
            "experiment": "mobility",
            "model": MODEL,
            "parameters": {
                "task": "layout",
                "window": [-0.5, 0.5],
                "x0": 0.5,
                "eps_phase": EPS_PHASE,
                "k_max": 12,
            },
        },
        layout_dir,
    )
    if status:
        return status
    manifest = json.loads((layout_dir / "manifest.json").read_text())
    composite = manifest["constants"]["composite_model"]

    eta0 = 0.375 / 8.0  # dist([-0.5, 0.5], +-0.875) / 8
    config = {
        "experiment": "barriers",
        "model": composite,
        "parameters": {
            "base_model": MODEL,
            "eband": [-0.5, 0.5],
            "gap": [-0.875, 0.875],
            "E": 0.3,
            "eta_grid": [eta0 * (j + 1) / 8.0 for j in range(8)],
            "N": 100000,
            "K": 5,
            "gamma": 0.1,
            "k_max": 9,
            "scanN": 16384,
        },
    }
    status = run_config(config, out_root / "barrier_pipeline")
    print(f"barrier pipeline: exit {status} -> {out_root / 'barrier_pipeline'}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
