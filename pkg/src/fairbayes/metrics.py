"""Disparity, risk and excess-risk measures, on test samples or by exact integration.

Test-set metrics average acceptance probabilities instead of sampled labels.
Exact metrics take an integrator exposing ``expectation(g, a, levels)`` for
``E[g(X) | A = a]``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import Dataset, FairClassifier
from .fairclf import OracleFairBayes

log = logging.getLogger(__name__)

CSV_COLUMNS = ("method", "delta", "n", "seed", "acc", "ddp", "d_E", "d_R", "runtime_ms")


@dataclass(frozen=True)
class MetricReport:
    method: str
    delta: float
    n: int
    seed: int
    acc: float
    ddp: float
    d_E: float | None = None
    d_R: float | None = None
    runtime_ms: float | None = None

    def row(self) -> list:
        d = asdict(self)
        return ["" if d[k] is None else d[k] for k in CSV_COLUMNS]


def _group_masks(test: Dataset):
    m1 = test.A == 1
    m0 = ~m1
    if not (m1.any() and m0.any()):
        raise ValueError("empty group")
    return m0, m1


def empirical_ddp(f: FairClassifier, test: Dataset) -> float:
    """Mean acceptance in group 1 minus mean acceptance in group 0."""
    m0, m1 = _group_masks(test)
    p = f.prob(test.X, test.A)
    return float(p[m1].mean() - p[m0].mean())


def empirical_risk(f: FairClassifier, test: Dataset) -> float:
    """Expected misclassification rate under the rule's randomization."""
    if test.n == 0:
        raise ValueError("empty dataset")
    p = f.prob(test.X, test.A)
    return float(np.mean(p * (1 - test.Y) + (1 - p) * test.Y))


def sampled_risk(f: FairClassifier, test: Dataset, rng) -> float:
    """Misclassification of hard labels drawn from ``f`` (smoke-test variant)."""
    yhat = rng.random(test.n) < f.prob(test.X, test.A)
    return float(np.mean(yhat != test.Y.astype(bool)))


def _thresholds_at(oracle: OracleFairBayes, A: np.ndarray) -> np.ndarray:
    return np.where(A == 1, oracle.thresholds[1], oracle.thresholds[0])


def _eta_at(oracle: OracleFairBayes, X, A) -> np.ndarray:
    out = np.empty(len(A))
    for a in (0, 1):
        m = A == a
        if m.any():
            out[m] = oracle.eta(X[m], a)
    return out


def empirical_d_E(f: FairClassifier, oracle: OracleFairBayes, test: Dataset) -> float:
    """Test-sample estimate of ``2 E[(f - f*)(T*_A - eta_A(X))]``."""
    diff = f.prob(test.X, test.A) - oracle.prob(test.X, test.A)
    return float(2 * np.mean(diff * (_thresholds_at(oracle, test.A) - _eta_at(oracle, test.X, test.A))))


def empirical_d_R(f: FairClassifier, oracle: OracleFairBayes, test: Dataset) -> float:
    """Test-sample estimate of ``E[(f - f*)(1 - 2 eta_A(X))]``."""
    diff = f.prob(test.X, test.A) - oracle.prob(test.X, test.A)
    return float(np.mean(diff * (1 - 2 * _eta_at(oracle, test.X, test.A))))


def _levels(*rules: FairClassifier, a: int):
    out = []
    for r in rules:
        lv = r.eta_levels(a)
        if lv is None:
            return None
        out.extend(lv)
    return tuple(out)


def exact_acceptance(f: FairClassifier, a: int, integrator) -> float:
    return integrator.expectation(lambda X: f.prob_group(X, a), a, f.eta_levels(a))


def exact_ddp(f: FairClassifier, integrator) -> float:
    return exact_acceptance(f, 1, integrator) - exact_acceptance(f, 0, integrator)


def exact_risk(f: FairClassifier, oracle: OracleFairBayes, integrator) -> float:
    """``sum_a p_a E[f (1 - eta_a) + (1 - f) eta_a | A = a]``."""
    total = 0.0
    for a in (0, 1):
        def g(X, a=a):
            fx, e = f.prob_group(X, a), oracle.eta(X, a)
            return fx * (1 - e) + (1 - fx) * e
        total += oracle.p[a] * integrator.expectation(g, a, f.eta_levels(a))
    return total


def exact_d_E(f: FairClassifier, oracle: OracleFairBayes, integrator) -> float:
    """``2 sum_a p_a E[(f - f*)(T*_a - eta_a) | A = a]``; nonnegative up to tolerance."""
    total = 0.0
    for a in (0, 1):
        T = oracle.thresholds[a]

        def g(X, a=a, T=T):
            return (f.prob_group(X, a) - oracle.prob_group(X, a)) * (T - oracle.eta(X, a))
        total += 2 * oracle.p[a] * integrator.expectation(g, a, _levels(f, oracle, a=a))
    return total


def exact_d_R(f: FairClassifier, oracle: OracleFairBayes, integrator) -> float:
    """``R(f) - R(f*)`` as ``sum_a p_a E[(f - f*)(1 - 2 eta_a) | A = a]``."""
    total = 0.0
    for a in (0, 1):
        def g(X, a=a):
            return (f.prob_group(X, a) - oracle.prob_group(X, a)) * (1 - 2 * oracle.eta(X, a))
        total += oracle.p[a] * integrator.expectation(g, a, _levels(f, oracle, a=a))
    return total


REGIMES = ("fairness-impacted", "fair-boundary", "automatically-fair")


def classify_regime(D_minus_0: float, D_plus_0: float, delta: float) -> str:
    """Regime of the population problem at level ``delta`` (group 1 privileged)."""
    if D_minus_0 > D_plus_0:
        raise ValueError("need D_minus_0 <= D_plus_0")
    if delta < D_minus_0:
        return "fairness-impacted"
    if delta < D_plus_0:
        return "fair-boundary"
    return "automatically-fair"


def estimated_disparity_at_zero(eta_hat_1: Sequence[float], eta_hat_0: Sequence[float]) -> float:
    """Plug-in surrogate for fitted models; it is an estimate, not the regime."""
    from .disparity import empirical_disparity_curve
    log.warning("regime for fitted models uses the estimated disparity D(0); treat as an estimate")
    return empirical_disparity_curve(eta_hat_1, eta_hat_0)(0.0)
