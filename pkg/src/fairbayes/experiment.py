"""Config-driven Monte Carlo harness for the synthetic and CSV experiments."""
from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import HyperParams, log_grid
from .fairclf import fit_with_validation
from .lpreg import KERNELS
from .ingest import IngestSpec, load_csv, split, standardize
from .metrics import (CSV_COLUMNS, MetricReport, empirical_d_E, empirical_d_R, empirical_ddp,
                      empirical_risk, exact_d_E)
from .synth import RNG_NAME, GridIntegrator, SyntheticParams, sample, synthetic_oracle

log = logging.getLogger(__name__)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "synth"
    deltas: tuple[float, ...] = (0.0,)
    ns: tuple[int, ...] = (1600,)
    reps: int = 100
    seed: int = 0
    jobs: int = 1
    out: str = "results"
    # synthetic model
    s1: float = 0.2
    s2: float = 0.8
    true_beta: float = 1.0
    val_size: int = 1000
    test_size: int = 1000
    quad_check: bool = True
    # estimator
    beta: float = 1.0
    offset_const: float = 0.25
    delta_n_const: float = 0.1
    r_n_const: float = 0.1
    grid: tuple[float, ...] = field(default_factory=log_grid)
    kernel: str = "gaussian-unit"
    # csv mode
    ingest: IngestSpec | None = None

    def __post_init__(self):
        if self.mode not in ("synth", "csv"):
            raise ValueError("mode: must be 'synth' or 'csv'")
        if self.reps < 1:
            raise ValueError("reps: must be at least 1")
        if not self.deltas or any(d < 0 for d in self.deltas):
            raise ValueError("deltas: must be a nonempty list of nonnegative values")
        if self.mode == "synth" and (not self.ns or any(n < 4 for n in self.ns)):
            raise ValueError("ns: every sample size must be at least 4")
        if self.jobs < 1:
            raise ValueError("jobs: must be at least 1")
        if self.seed < 0:
            raise ValueError("seed: must be nonnegative")
        if self.mode == "csv" and self.ingest is None:
            raise ValueError("data: section required in csv mode")
        if not self.grid or any(c <= 0 for c in self.grid):
            raise ValueError("grid: multipliers must be positive")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel: must be one of {sorted(KERNELS)}")
        if self.mode == "synth":
            SyntheticParams(self.s1, self.s2, self.true_beta)

    @property
    def params(self) -> SyntheticParams:
        return SyntheticParams(self.s1, self.s2, self.true_beta)


_SECTIONS = {
    "experiment": {"mode": str, "deltas": _floats, "ns": _ints, "reps": int, "seed": int,
                   "jobs": int, "out": str},
    "synthetic": {"s1": float, "s2": float, "beta": float, "val_size": int, "test_size": int,
                  "quad_check": "bool"},
    "estimator": {"beta": float, "offset_const": float, "delta_n_const": float, "r_n_const": float,
                  "grid_lo": float, "grid_hi": float, "grid_steps": int, "grid": _floats,
                  "kernel": str},
    "data": {"path": str, "test_path": str, "label": str, "positive": str, "protected": str,
             "privileged": str, "features": str, "top_k": int, "train_frac": float,
             "val_frac": float},
}


def load_config(path: str, **overrides) -> ExperimentConfig:
    """Read an INI file; unknown keys and bad values raise naming the field."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    vals: dict[str, dict] = {}
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ValueError(f"unknown section [{sec}]")
        vals[sec] = {}
        for key, raw in cp[sec].items():
            conv = _SECTIONS[sec].get(key)
            if conv is None:
                raise ValueError(f"unknown field {sec}.{key}")
            try:
                vals[sec][key] = cp[sec].getboolean(key) if conv == "bool" else conv(raw)
            except ValueError as err:
                raise ValueError(f"invalid value for {sec}.{key}: {raw!r}") from err
    ex, sy, es, da = (vals.get(s, {}) for s in ("experiment", "synthetic", "estimator", "data"))
    kw = dict(ex)
    for k in ("s1", "s2", "val_size", "test_size", "quad_check"):
        if k in sy:
            kw[k] = sy[k]
    if "beta" in sy:
        kw["true_beta"] = sy["beta"]
    for k in ("beta", "offset_const", "delta_n_const", "r_n_const", "kernel"):
        if k in es:
            kw[k] = es[k]
    if "grid" in es:
        kw["grid"] = es["grid"]
    elif {"grid_lo", "grid_hi", "grid_steps"} & es.keys():
        kw["grid"] = log_grid(es.get("grid_lo", 0.5), es.get("grid_hi", 5.0), es.get("grid_steps", 10))
    if da:
        feats = tuple(f.strip() for f in da.pop("features", "").split(",") if f.strip())
        base = os.path.dirname(os.path.abspath(path))
        for k in ("path", "test_path"):
            if k in da and not os.path.isabs(da[k]):
                da[k] = os.path.join(base, da[k])
        missing = [k for k in ("path", "label", "positive", "protected", "privileged") if k not in da]
        if missing:
            raise ValueError(f"missing field data.{missing[0]}")
        kw["ingest"] = IngestSpec(features=feats, **da)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


def trial_seed(base: int, di: int, ni: int, rep: int, n_deltas: int, n_ns: int, reps: int) -> int:
    """Mixed-radix code of (base, delta index, n index, rep); injective for fixed sizes."""
    return ((base * n_deltas + di) * n_ns + ni) * reps + rep


TRIAL_COLUMNS = CSV_COLUMNS + ("rep", "offset_const", "c0", "c1", "swapped", "d_E_quad", "error")


@dataclass
class TrialResult:
    report: MetricReport
    rep: int
    offset_const: float
    c0: float | None = None
    c1: float | None = None
    swapped: bool | None = None
    d_E_quad: float | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error

    def row(self) -> list:
        extra = [self.rep, self.offset_const, self.c0, self.c1,
                 "" if self.swapped is None else int(self.swapped), self.d_E_quad, self.error]
        return self.report.row() + ["" if v is None else v for v in extra]


def _hyper(cfg: ExperimentConfig, train, delta) -> HyperParams:
    return HyperParams.from_schedules(train, delta, cfg.beta, cfg.offset_const, cfg.delta_n_const,
                                      cfg.r_n_const, cfg.grid)


def synth_trial(cfg: ExperimentConfig, delta: float, n: int, seed: int, rep: int,
                calibrate: bool = False) -> TrialResult:
    t0 = time.perf_counter()
    try:
        rng = np.random.default_rng(seed)
        train = sample(cfg.params, n, rng)
        val = sample(cfg.params, cfg.val_size, rng)
        test = sample(cfg.params, cfg.test_size, rng)
        hp = _hyper(cfg, train, delta)
        model = fit_with_validation(train, val, hp, KERNELS[cfg.kernel], extra_queries=test)
        oracle = synthetic_oracle(cfg.params, delta).classifier()
        ddp = empirical_ddp(model, test)
        risk = empirical_risk(model, test)
        d_E = empirical_d_E(model, oracle, test)
        d_R = empirical_d_R(model, oracle, test)
        quad = exact_d_E(model, oracle, GridIntegrator(100, 2)) if calibrate else None
        ms = (time.perf_counter() - t0) * 1e3
        report = MetricReport("fairbayes-ddp+", delta, n, seed, 1 - risk, ddp, d_E, d_R, ms)
        return TrialResult(report, rep, cfg.offset_const, *model.multipliers, model.swapped, quad)
    except Exception as err:  # recorded per row, the run continues
        ms = (time.perf_counter() - t0) * 1e3
        return TrialResult(MetricReport("fairbayes-ddp+", delta, n, seed, math.nan, math.nan,
                                        runtime_ms=ms), rep, cfg.offset_const,
                           error=f"{type(err).__name__}: {err}")


def _load_csv_data(spec: IngestSpec):
    main = load_csv(spec)
    test = load_csv(spec, spec.test_path).dataset if spec.test_path else None
    return main.dataset, test


def csv_trial(cfg: ExperimentConfig, delta: float, seed: int, rep: int, data=None) -> TrialResult:
    t0 = time.perf_counter()
    try:
        full, fixed_test = data if data is not None else _load_csv_data(cfg.ingest)
        spec = cfg.ingest
        if fixed_test is not None:
            train, val, _ = split(full, (spec.train_frac, 1 - spec.train_frac), seed)
            test = fixed_test
        else:
            train, val, test = split(full, (spec.train_frac, spec.val_frac), seed)
        if test.n == 0:
            raise ValueError("empty test split")
        (train, val, test), _ = standardize(train, val, test)
        hp = _hyper(cfg, train, delta)
        model = fit_with_validation(train, val, hp, KERNELS[cfg.kernel], extra_queries=test)
        ms = (time.perf_counter() - t0) * 1e3
        report = MetricReport("fairbayes-ddp+", delta, train.n, seed, 1 - empirical_risk(model, test),
                              empirical_ddp(model, test), runtime_ms=ms)
        return TrialResult(report, rep, cfg.offset_const, *model.multipliers, model.swapped)
    except Exception as err:
        ms = (time.perf_counter() - t0) * 1e3
        return TrialResult(MetricReport("fairbayes-ddp+", delta, 0, seed, math.nan, math.nan,
                                        runtime_ms=ms), rep, cfg.offset_const,
                           error=f"{type(err).__name__}: {err}")


def _run_task(task):
    kind, cfg, args = task
    if kind == "synth":
        return synth_trial(cfg, *args)
    return csv_trial(cfg, *args)


def _execute(tasks, jobs: int) -> list[TrialResult]:
    if jobs <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_task, tasks, chunksize=1))


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if len(x) > 1 else math.nan


SUMMARY_COLUMNS = ("delta", "n", "reps", "failed", "acc_mean", "acc_sd", "ddp_mean", "ddp_sd",
                   "absddp_mean", "absddp_sd", "d_E_mean", "d_E_sd", "d_R_mean", "d_R_sd", "d_E_quad")


def summarize(results: Sequence[TrialResult]) -> list[dict]:
    cells: dict[tuple, list[TrialResult]] = {}
    for r in results:
        cells.setdefault((r.report.delta, r.report.n), []).append(r)
    rows = []
    for (delta, n), rs in cells.items():
        ok = [r for r in rs if r.ok]
        row = {"delta": delta, "n": n, "reps": len(ok), "failed": len(rs) - len(ok)}
        for key in ("acc", "ddp", "d_E", "d_R"):
            vals = np.array([getattr(r.report, key) for r in ok if getattr(r.report, key) is not None], float)
            row[f"{key}_mean"] = float(vals.mean()) if len(vals) else math.nan
            row[f"{key}_sd"] = _sd(vals)
        absd = np.abs(np.array([r.report.ddp for r in ok], float))
        row["absddp_mean"] = float(absd.mean()) if len(absd) else math.nan
        row["absddp_sd"] = _sd(absd)
        quad = [r.d_E_quad for r in ok if r.d_E_quad is not None]
        row["d_E_quad"] = quad[0] if quad else math.nan
        rows.append(row)
    return rows


@dataclass
class ExperimentResult:
    trials: list[TrialResult]
    summary: list[dict]

    @property
    def all_ok(self) -> bool:
        return all(t.ok for t in self.trials)


def run_synth_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.mode != "synth":
        raise ValueError("mode: synth experiment needs mode = synth")
    tasks = []
    for di, delta in enumerate(cfg.deltas):
        for ni, n in enumerate(cfg.ns):
            for rep in range(cfg.reps):
                seed = trial_seed(cfg.seed, di, ni, rep, len(cfg.deltas), len(cfg.ns), cfg.reps)
                tasks.append(("synth", cfg, (delta, n, seed, rep, cfg.quad_check and rep == 0)))
    trials = _execute(tasks, cfg.jobs)
    return ExperimentResult(trials, summarize(trials))


def run_csv_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    if cfg.mode != "csv":
        raise ValueError("mode: csv experiment needs mode = csv")
    data = _load_csv_data(cfg.ingest)
    tasks = []
    for di, delta in enumerate(cfg.deltas):
        for rep in range(cfg.reps):
            seed = trial_seed(cfg.seed, di, 0, rep, len(cfg.deltas), 1, cfg.reps)
            tasks.append(("csv", cfg, (delta, seed, rep, data)))
    trials = _execute(tasks, cfg.jobs)
    for t in trials:
        log.info("delta %.3g rep %d split seed %d", t.report.delta, t.rep, t.report.seed)
    return ExperimentResult(trials, summarize(trials))


def _fmt(v):
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return v


def write_results(result: ExperimentResult, cfg: ExperimentConfig, out: str | None = None) -> str:
    out = out or cfg.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "trials.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRIAL_COLUMNS)
        for t in result.trials:
            w.writerow([_fmt(v) for v in t.row()])
    with open(os.path.join(out, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for row in result.summary:
            w.writerow([_fmt(row[k]) for k in SUMMARY_COLUMNS])
    meta = {"rng": RNG_NAME, "base_seed": cfg.seed, "config": _config_dict(cfg)}
    with open(os.path.join(out, "run.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return out


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["data"] = d.pop("ingest")
    d.pop("jobs")
    d.pop("out")
    return d


ORACLE_COLUMNS = ("delta", "t_star", "q_star", "D_minus_0", "risk", "ddp")


def oracle_report(params: SyntheticParams, deltas: Sequence[float]) -> list[dict]:
    """Closed-form oracle quantities per delta; no sampling."""
    rows = []
    for d in deltas:
        o = synthetic_oracle(params, d)
        rows.append({"delta": float(d), "t_star": o.t_star, "q_star": o.q_star,
                     "D_minus_0": o.D_minus_0, "risk": o.bayes_risk, "ddp": o.ddp})
    return rows


def write_oracle(rows: list[dict], out: str) -> str:
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "oracle.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(ORACLE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[k]) for k in ORACLE_COLUMNS])
    return path
