#!/usr/bin/env python3
"""Run every experiment config in scripts/configs into results/<name>/."""

import json
import sys
from pathlib import Path

from jacobidecay.cli import run_config

HERE = Path(__file__).parent


def main():
    out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else HERE.parent / "results"
    worst = 0
    for cfg_path in sorted((HERE / "configs").glob("*.json")):
        config = json.loads(cfg_path.read_text())
        out_dir = out_root / cfg_path.stem
        status = run_config(config, out_dir)
        print(f"{cfg_path.stem}: exit {status} -> {out_dir}")
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
