"""Run a lambda sweep and write CSV (default: the N = 5 configuration)."""

import argparse
import sys
from pathlib import Path

from steepwell.experiments import emit, parse_config, run_sweep

HERE = Path(__file__).resolve().parent

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--config", default=HERE / "default_sweep.cfg")
ap.add_argument("--out", default=None)
args = ap.parse_args()

cfg = parse_config(args.config)
records = run_sweep(cfg)
text = emit(records, cfg.format, args.out)
if args.out is None:
    sys.stdout.write(text)
