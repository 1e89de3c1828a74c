"""Closed-form oracle quantities over the delta grid of configs/oracle.ini."""
import argparse

from _common import config_path, print_summary

from fairbayes.experiment import load_config, oracle_report, write_oracle

ap = argparse.ArgumentParser()
ap.add_argument("--out")
args = ap.parse_args()

cfg = load_config(config_path("oracle.ini"), out=args.out)
rows = oracle_report(cfg.params, cfg.deltas)
print_summary(rows, ("delta", "t_star", "q_star", "D_minus_0", "risk", "ddp"))
print("wrote", write_oracle(rows, cfg.out))
