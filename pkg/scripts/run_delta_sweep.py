"""Disparity-budget sweep at n = 12800: writes trials.csv, summary.csv and run.json.

    python3 scripts/run_delta_sweep.py [--jobs N] [--out DIR]
"""
import argparse
import time

from _common import config_path, print_summary

from fairbayes.experiment import load_config, run_synth_experiment, write_results

ap = argparse.ArgumentParser()
ap.add_argument("--jobs", type=int)
ap.add_argument("--out")
args = ap.parse_args()

cfg = load_config(config_path("delta_sweep.ini"), jobs=args.jobs, out=args.out)
t0 = time.perf_counter()
res = run_synth_experiment(cfg)
out = write_results(res, cfg)
print_summary(res.summary, ("delta", "n", "reps", "failed", "ddp_mean", "absddp_mean", "d_E_mean", "d_E_sd", "d_E_quad"))
print(f"{time.perf_counter() - t0:.0f}s, results in {out}")
