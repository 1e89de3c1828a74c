"""Fitted and population fair Bayes-optimal group-wise thresholding rules."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Dataset, FairClassifier, HyperParams, split_by_group
from .disparity import (ThresholdEstimate, empirical_disparity_curve, estimate_thresholds,
                        randomization)
from .lpreg import GAUSSIAN, KERNELS, KernelSpec, LocalPolyEstimator, default_bandwidth, eta_hat_grid, select_bandwidth

log = logging.getLogger(__name__)

FORMAT_VERSION = "fairbayes-ddp-model/1"

EtaFn = Callable[[np.ndarray, int], np.ndarray]


def delta_tilde(D_minus_0: float, delta: float) -> float:
    return delta if D_minus_0 > delta else 0.0


def optimal_randomization(pi1_plus: float, pi1_eq: float, pi0_plus: float, pi0_eq: float,
                          delta_tilde: float) -> tuple[float, float]:
    """Population boundary probabilities ``(tau0, tau1)``; ``x / 0`` reads as 0."""
    return randomization(pi1_plus, pi1_eq, pi0_plus, pi0_eq, delta_tilde)


class ThresholdRule(FairClassifier):
    """``I(eta_a(x) > T_a) + tau_a I(eta_a(x) = T_a)`` for a known ``eta``."""

    def __init__(self, eta: EtaFn, thresholds: Sequence[float], tau: Sequence[float] = (0.0, 0.0)):
        if not all(0.0 <= v <= 1.0 for v in tau):
            raise ValueError("randomization probabilities must lie in [0, 1]")
        self.eta = eta
        self.thresholds = (float(thresholds[0]), float(thresholds[1]))
        self.tau = (float(tau[0]), float(tau[1]))

    def prob_group(self, X, a):
        e = np.asarray(self.eta(X, a), dtype=float)
        T = self.thresholds[a]
        return (e > T) + self.tau[a] * (e == T)

    def eta_levels(self, a):
        return (self.thresholds[a],)


class OracleFairBayes(ThresholdRule):
    kind = "oracle"

    def __init__(self, eta: EtaFn, p: Sequence[float], t_star: float,
                 tau_star: Sequence[float] = (0.0, 0.0), delta_tilde: float = 0.0):
        p0, p1 = float(p[0]), float(p[1])
        bound = min(p0, p1)
        if not -bound <= t_star <= bound:
            raise ValueError("t_star outside [-min(p), min(p)]")
        self.p = (p0, p1)
        self.t_star = float(t_star)
        self.delta_tilde = float(delta_tilde)
        super().__init__(eta, (0.5 - t_star / (2 * p0), 0.5 + t_star / (2 * p1)), tau_star)

    @property
    def tau_star(self) -> tuple[float, float]:
        return self.tau


def oracle_classifier(eta: EtaFn, p: Sequence[float], t_star: float,
                      tau_star: Sequence[float] = (0.0, 0.0), delta_tilde: float = 0.0) -> OracleFairBayes:
    return OracleFairBayes(eta, p, t_star, tau_star, delta_tilde)


def accept(eta: np.ndarray, T: float, l: float, tau: float) -> np.ndarray:
    """Acceptance probability of the offset rule at estimated probabilities ``eta``."""
    upper = eta > T + l
    band = ~upper & (eta >= T - l)
    return upper + tau * band


@dataclass(eq=False)
class FittedFairBayes(FairClassifier):
    """The fitted classifier. ``estimate`` is expressed in the internal group
    labels, which differ from the caller's when ``swapped`` is set."""

    estimators: tuple[LocalPolyEstimator, LocalPolyEstimator]
    estimate: ThresholdEstimate
    offsets: tuple[float, float]
    delta: float
    swapped: bool = False
    multipliers: tuple[float, float] | None = None
    metadata: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    kind = "fitted"

    def _internal(self, a: int) -> int:
        return 1 - a if self.swapped else a

    def threshold(self, a: int) -> float:
        return self.estimate.T_hat[self._internal(a)]

    def tau(self, a: int) -> float:
        return self.estimate.tau_hat[self._internal(a)]

    def eta_hat(self, X, a: int) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        key = (a, X.shape, X.tobytes())
        hit = self._cache.get(key)
        if hit is None:
            hit = self.estimators[a].predict(X)
            if len(self._cache) >= 8:
                self._cache.pop(next(iter(self._cache)))
            self._cache[key] = hit
        return hit

    def remember(self, X, a: int, values: np.ndarray) -> None:
        X = np.asarray(X, dtype=float)
        self._cache[(a, X.shape, X.tobytes())] = np.asarray(values, dtype=float)

    def prob_group(self, X, a):
        return accept(self.eta_hat(X, a), self.threshold(a), self.offsets[a], self.tau(a))

    def to_dict(self) -> dict:
        est = self.estimate
        groups = []
        for a, e in enumerate(self.estimators):
            if KERNELS.get(e.kernel.name) is not e.kernel:
                raise ValueError(f"kernel {e.kernel.name!r} cannot be serialized")
            groups.append({
                "a": a, "bandwidth": e.bandwidth, "degree": e.degree, "kernel": e.kernel.name,
                "eig_floor": e.eig_floor, "offset": self.offsets[a],
                "X": e.X.tolist(), "y": e.y.tolist(),
            })
        return {
            "format": FORMAT_VERSION,
            "delta": self.delta,
            "swapped": self.swapped,
            "multipliers": list(self.multipliers) if self.multipliers else None,
            "estimate": {
                "t_min": est.t_min, "t_mid": est.t_mid, "t_max": est.t_max, "t_hat": est.t_hat,
                "T_hat": list(est.T_hat), "pi_plus": list(est.pi_plus), "pi_eq": list(est.pi_eq),
                "delta_hat": est.delta_hat, "tau_hat": list(est.tau_hat),
            },
            "groups": groups,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FittedFairBayes":
        if data.get("format") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format {data.get('format')!r}")
        e = data["estimate"]
        estimate = ThresholdEstimate(
            e["t_min"], e["t_mid"], e["t_max"], e["t_hat"], tuple(e["T_hat"]),
            tuple(e["pi_plus"]), tuple(e["pi_eq"]), e["delta_hat"], tuple(e["tau_hat"]))
        groups = sorted(data["groups"], key=lambda g: g["a"])
        ests = tuple(
            LocalPolyEstimator(np.array(g["X"], dtype=float), np.array(g["y"], dtype=float),
                               g["bandwidth"], g["degree"], KERNELS[g["kernel"]], g["eig_floor"])
            for g in groups)
        mult = data.get("multipliers")
        return cls(ests, estimate, tuple(g["offset"] for g in groups), data["delta"],
                   data["swapped"], tuple(mult) if mult else None, data.get("metadata", {}))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "FittedFairBayes":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def select_thresholds(eta_train: Sequence[np.ndarray], hp: HyperParams) -> tuple[ThresholdEstimate, bool]:
    """Threshold estimation on in-sample estimates ``eta_train[a]``.

    Group 1 is assumed privileged; when the estimated disparities say
    otherwise the groups are swapped internally.
    """
    e0, e1 = eta_train
    l0, l1 = hp.offsets
    d_minus = empirical_disparity_curve(e1, e0, l1, -l0)(0.0)
    d_plus = empirical_disparity_curve(e1, e0, -l1, l0)(0.0)
    if d_plus < -d_minus:
        log.info("group 0 looks privileged (D+ %.4f < -D- %.4f); swapping groups", d_plus, d_minus)
        est = estimate_thresholds(e0, e1, hp.delta, hp.delta_n, hp.r_n, l1=l0, l0=l1)
        return est, True
    return estimate_thresholds(e1, e0, hp.delta, hp.delta_n, hp.r_n, l1=l1, l0=l0), False


def _estimators(dataset: Dataset, hp: HyperParams, multipliers, kernel):
    views = split_by_group(dataset)
    if min(v.n_a for v in views) == 0:
        raise ValueError("empty group")
    return tuple(
        LocalPolyEstimator(v.xs, v.ys, default_bandwidth(v.n_a, hp.beta, dataset.d, multipliers[v.a]),
                           hp.degree, kernel)
        for v in views)


def fit(dataset: Dataset, hp: HyperParams, multipliers: Sequence[float] | None = None,
        kernel: KernelSpec = GAUSSIAN) -> FittedFairBayes:
    """Fit with fixed bandwidth multipliers ``(c0, c1)``.

    Without ``multipliers`` the grid must hold a single value.
    """
    if multipliers is None:
        if len(hp.bandwidth_grid) != 1:
            raise ValueError("several bandwidth multipliers; pass multipliers or use fit_with_validation")
        multipliers = (hp.bandwidth_grid[0],) * 2
    ests = _estimators(dataset, hp, multipliers, kernel)
    eta_train = [e.predict(e.X) for e in ests]
    estimate, swapped = select_thresholds(eta_train, hp)
    model = FittedFairBayes(ests, estimate, hp.offsets, hp.delta, swapped, tuple(multipliers))
    for a, e in enumerate(ests):
        model.remember(e.X, a, eta_train[a])
    return model


def validation_error(prob: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(prob * (1 - y) + (1 - prob) * y))


def fit_with_validation(train: Dataset, val: Dataset, hp: HyperParams,
                        kernel: KernelSpec = GAUSSIAN,
                        extra_queries: Dataset | None = None) -> FittedFairBayes:
    """Fit with the bandwidth pair minimizing validation misclassification.

    Estimates for every grid bandwidth are computed once per group; rows of
    ``extra_queries`` are evaluated in the same pass and cached on the model.
    """
    views = split_by_group(train)
    if min(v.n_a for v in views) == 0:
        raise ValueError("empty group")
    val_views = split_by_group(val)
    extra_views = split_by_group(extra_queries) if extra_queries is not None and extra_queries.n else None
    grid = sorted(hp.bandwidth_grid)
    tables = []
    for v in views:
        parts = [v.xs, val_views[v.a].xs]
        if extra_views is not None:
            parts.append(extra_views[v.a].xs)
        queries = np.concatenate(parts)
        hs = [default_bandwidth(v.n_a, hp.beta, train.d, c) for c in grid]
        table = eta_hat_grid(v.xs, v.ys, queries, hs, hp.degree, kernel)
        cuts = np.cumsum([len(p) for p in parts])[:-1]
        tables.append([np.split(row, cuts) for row in table])

    index = {c: i for i, c in enumerate(grid)}
    yv = [val_views[a].ys for a in (0, 1)]

    def score(c0, c1):
        i = (index[c0], index[c1])
        estimate, swapped = select_thresholds([tables[a][i[a]][0] for a in (0, 1)], hp)
        errs = 0.0
        for a in (0, 1):
            b = 1 - a if swapped else a
            p = accept(tables[a][i[a]][1], estimate.T_hat[b], hp.offsets[a], estimate.tau_hat[b])
            errs += float(np.sum(p * (1 - yv[a]) + (1 - p) * yv[a]))
        return errs / val.n

    c0, c1 = select_bandwidth(grid, score)
    chosen = (index[c0], index[c1])
    ests = _estimators(train, hp, (c0, c1), kernel)
    eta_train = [tables[a][chosen[a]][0] for a in (0, 1)]
    estimate, swapped = select_thresholds(eta_train, hp)
    model = FittedFairBayes(ests, estimate, hp.offsets, hp.delta, swapped, (c0, c1))
    for a in (0, 1):
        model.remember(views[a].xs, a, eta_train[a])
        model.remember(val_views[a].xs, a, tables[a][chosen[a]][1])
        if extra_views is not None:
            model.remember(extra_views[a].xs, a, tables[a][chosen[a]][2])
    return model
