"""Command-line entry point: ``fairbayes <subcommand> --config FILE ...``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from .core import Dataset, HyperParams
from .experiment import (load_config, oracle_report, run_csv_experiment, run_synth_experiment,
                         write_oracle, write_results)
from .fairclf import FittedFairBayes, fit_with_validation
from .ingest import load_csv, load_features, split, standardize
from .lpreg import KERNELS
from .synth import RNG_NAME, export_csv, sample

log = logging.getLogger("fairbayes")


def _config(args):
    return load_config(args.config, seed=args.seed, jobs=args.jobs, out=args.out)


def cmd_synth_exp(args) -> int:
    cfg = _config(args)
    res = run_synth_experiment(cfg)
    out = write_results(res, cfg)
    failed = sum(not t.ok for t in res.trials)
    print(f"{len(res.trials) - failed}/{len(res.trials)} trials completed; results in {out}")
    return 0 if res.all_ok else 1


def cmd_csv_exp(args) -> int:
    cfg = _config(args)
    res = run_csv_experiment(cfg)
    out = write_results(res, cfg)
    failed = sum(not t.ok for t in res.trials)
    print(f"{len(res.trials) - failed}/{len(res.trials)} trials completed; results in {out}")
    return 0 if res.all_ok else 1


def cmd_oracle(args) -> int:
    cfg = _config(args)
    rows = oracle_report(cfg.params, cfg.deltas)
    path = write_oracle(rows, cfg.out)
    for r in rows:
        print(" ".join(f"{k}={v:.6g}" for k, v in r.items()))
    print(f"wrote {path}")
    return 0


def _fit_data(cfg):
    """Train/validation splits plus model metadata for ``fit``."""
    seed = cfg.seed
    if cfg.mode == "synth":
        rng = np.random.default_rng(seed)
        train = sample(cfg.params, cfg.ns[0], rng)
        val = sample(cfg.params, cfg.val_size, rng)
        meta = {"features": ["x1", "x2"], "protected": "a", "privileged": "1",
                "standardize": None, "rng": RNG_NAME, "seed": seed}
        return train, val, meta
    spec = cfg.ingest
    loaded = load_csv(spec)
    train, val, _ = split(loaded.dataset, (spec.train_frac, spec.val_frac), seed)
    (train, val), stats = standardize(train, val)
    meta = {"features": list(loaded.feature_names), "protected": spec.protected,
            "privileged": spec.privileged, "standardize": stats, "rng": RNG_NAME, "seed": seed}
    return train, val, meta


def cmd_fit(args) -> int:
    cfg = _config(args)
    train, val, meta = _fit_data(cfg)
    hp = HyperParams.from_schedules(train, cfg.deltas[0], cfg.beta, cfg.offset_const,
                                    cfg.delta_n_const, cfg.r_n_const, cfg.grid)
    model = fit_with_validation(train, val, hp, KERNELS[cfg.kernel])
    model.metadata.update(meta)
    os.makedirs(cfg.out, exist_ok=True)
    path = args.model or os.path.join(cfg.out, "model.json")
    model.save(path)
    est = model.estimate
    print(f"t_hat={est.t_hat:.6g} T_hat={est.T_hat} tau_hat={est.tau_hat} "
          f"multipliers={model.multipliers} swapped={model.swapped}")
    print(f"wrote {path}")
    return 0


def cmd_predict(args) -> int:
    if not args.model or not args.input:
        raise SystemExit("predict needs --model and --input")
    model = FittedFairBayes.load(args.model)
    meta = model.metadata
    X, A, kept = load_features(args.input, meta["features"], meta["protected"], str(meta["privileged"]))
    if meta.get("standardize"):
        mean, sd = np.array(meta["standardize"], dtype=float).T
        flat = sd == 0
        X = (X - np.where(flat, 0.0, mean)) / np.where(flat, 1.0, sd)
    prob = model.prob(X, A) if len(A) else np.empty(0)
    u = np.random.default_rng(args.seed or 0).random(len(A))
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "predictions.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "a", "prob", "label"])
        for i, a, p, uu in zip(kept, A.tolist(), prob.tolist(), u.tolist()):
            w.writerow([i, a, repr(p), int(uu < p)])
    print(f"{len(kept)} rows scored; wrote {path}")
    return 0


def cmd_export_synth(args) -> int:
    cfg = _config(args)
    ds: Dataset = sample(cfg.params, cfg.ns[0], cfg.seed)
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, "synth.csv")
    export_csv(ds, path)
    print(f"wrote {ds.n} rows ({RNG_NAME}, seed {cfg.seed}) to {path}")
    return 0


COMMANDS = {
    "synth-exp": cmd_synth_exp,
    "csv-exp": cmd_csv_exp,
    "oracle": cmd_oracle,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "export-synth": cmd_export_synth,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fairbayes", description="Fair plug-in classification with disparity control.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "predict")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int)
        s.add_argument("--out")
        if name in ("fit", "predict"):
            s.add_argument("--model")
        if name == "predict":
            s.add_argument("--input")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
