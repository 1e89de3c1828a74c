"""Synthetic two-group model with a closed-form fair Bayes oracle.

A ~ Bernoulli(1/2), X | A ~ Uniform([-1, 1]^2) and

    eta_a(x1, x2) = (1 + (2a - 1) s1) / 2 + s2 sign(x1) [|x1| (1 - |x2|)]^beta / 2.

With U = |x1| and V = 1 - |x2| independent uniforms, P(UV < q) = q (1 - ln q),
which gives every level-set probability below in closed form. Both groups
have p_a = 1/2, so the population thresholds are T_a(t) = 1/2 + (2a - 1) t.

eta_a is beta-Holder on the cube by construction; this is documented here,
not checked at runtime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Dataset
from .fairclf import OracleFairBayes, delta_tilde, optimal_randomization
from .quadrature import IntegrationError, adaptive_gl, panel_nodes

RNG_NAME = "PCG64"


@dataclass(frozen=True)
class SyntheticParams:
    s1: float = 0.2
    s2: float = 0.8
    beta: float = 1.0

    def __post_init__(self):
        if not (0 < self.s1 < self.s2):
            raise ValueError("need s2 > s1 > 0")
        if self.s1 + self.s2 > 1:
            raise ValueError("need s1 + s2 <= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def eta(params: SyntheticParams, x1, x2, a):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(np.abs(x1) > 1) or np.any(np.abs(x2) > 1) or not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
        raise ValueError("point outside the cube [-1, 1]^2")
    a = np.asarray(a)
    if np.any((a != 0) & (a != 1)):
        raise ValueError("invalid protected attribute")
    base = (1 + (2 * a - 1) * params.s1) / 2
    out = base + params.s2 * np.sign(x1) * (np.abs(x1) * (1 - np.abs(x2))) ** params.beta / 2
    return float(out) if out.ndim == 0 else out


def eta_fn(params: SyntheticParams) -> Callable[[np.ndarray, int], np.ndarray]:
    """``(X, a) -> eta_a(X)`` for arrays of shape (m, 2)."""
    def fn(X, a):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.asarray(eta(params, X[:, 0], X[:, 1], a), dtype=float)
    return fn


def sample(params: SyntheticParams, n: int, seed=None) -> Dataset:
    """Draw ``n`` labeled samples.

    ``seed`` is an int (fed to ``numpy.random.default_rng``, i.e. PCG64) or
    an existing ``Generator``. Draw order: n uniforms for A (A = u < 1/2),
    then 2n uniforms on [-1, 1) for X row by row, then n uniforms for Y
    (Y = u < eta).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    A = (rng.random(n) < 0.5).astype(np.int64)
    X = rng.uniform(-1.0, 1.0, size=(n, 2))
    Y = (rng.random(n) < eta(params, X[:, 0], X[:, 1], A)).astype(np.int64)
    return Dataset(X, A, Y)


def _g(q):
    """``q (1 - ln q)`` with the limit 0 at q = 0."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(q > 0, q * (1 - np.log(np.where(q > 0, q, 1.0))), 0.0)
    return out


def _scalar(out):
    return float(out) if np.ndim(out) == 0 else out


def prob_eta1_above(params: SyntheticParams, t):
    """``P(eta_1(X) > 1/2 + t | A = 1)``."""
    x = (params.s1 - 2 * np.asarray(t, dtype=float)) / params.s2
    inv = 1.0 / params.beta
    mid_hi = 0.5 + _g(np.clip(x, 0, 1) ** inv) / 2
    mid_lo = 0.5 - _g(np.clip(-x, 0, 1) ** inv) / 2
    out = np.where(x >= 1, 1.0, np.where(x >= 0, mid_hi, np.where(x > -1, mid_lo, 0.0)))
    return _scalar(out)


def prob_eta0_at_least(params: SyntheticParams, t):
    """``P(eta_0(X) >= 1/2 - t | A = 0)``; eta_0 = eta_1 - s1 and ties are null."""
    return prob_eta1_above(params, params.s1 - np.asarray(t, dtype=float))


def d_minus(params: SyntheticParams, t):
    """Population disparity ``D_-(t)``; equals ``q (1 - ln q)`` with
    ``q = ((s1 - 2t) / s2)^(1/beta)`` for t in [(s1 - s2)/2, s1/2]."""
    return _scalar(np.asarray(prob_eta1_above(params, t)) - np.asarray(prob_eta0_at_least(params, t)))


def D_minus_0(params: SyntheticParams) -> float:
    return float(_g((params.s1 / params.s2) ** (1.0 / params.beta)))


def solve_t_star(params: SyntheticParams, delta: float) -> tuple[float, float]:
    """Fair threshold shift ``t*`` and ``q* = ((s1 - 2 t*) / s2)^(1/beta)``."""
    if not delta >= 0:
        raise ValueError("delta must be nonnegative")
    s1, s2, inv = params.s1, params.s2, 1.0 / params.beta
    d0 = D_minus_0(params)
    if delta == 0:
        return s1 / 2, 0.0
    if delta >= d0:
        return 0.0, (s1 / s2) ** inv

    def resid(t):
        return float(_g(max((s1 - 2 * t) / s2, 0.0) ** inv)) - delta

    lo, hi = 0.0, s1 / 2
    r_lo, r_hi = resid(lo), resid(hi)
    assert r_lo > 0 > r_hi, "bisection bracket has no sign change"
    t = 0.5 * (lo + hi)
    for _ in range(200):
        t = 0.5 * (lo + hi)
        r = resid(t)
        if abs(r) <= 1e-12 or t in (lo, hi):
            break
        if r > 0:
            lo = t
        else:
            hi = t
    assert abs(resid(t)) <= 1e-12, "bisection residual above 1e-12"
    return t, max((s1 - 2 * t) / s2, 0.0) ** inv


def bayes_risk(params: SyntheticParams, q_star: float) -> float:
    """Misclassification risk of the fair Bayes rule indexed by ``q*``."""
    if not 0 <= q_star <= 1:
        raise ValueError("q_star must lie in [0, 1]")
    s1, s2, b = params.s1, params.s2, params.beta
    qb = q_star ** (b + 1)
    qlog = qb * math.log(q_star) if q_star > 0 else 0.0
    return 0.5 - s1 / 2 * float(_g(q_star)) - s2 / (2 * (b + 1)) * ((1 - qb) / (b + 1) + qlog)


@dataclass(frozen=True)
class SyntheticOracle:
    params: SyntheticParams
    delta: float
    t_star: float
    q_star: float
    D_minus_0: float
    bayes_risk: float

    @property
    def ddp(self) -> float:
        """Disparity of the fair Bayes rule: ``min(delta, D_-(0))``."""
        return min(self.delta, max(self.D_minus_0, 0.0))

    @property
    def thresholds(self) -> tuple[float, float]:
        return 0.5 - self.t_star, 0.5 + self.t_star

    def classifier(self) -> OracleFairBayes:
        T0, T1 = self.thresholds
        # eta has no atoms, so the boundary masses vanish and tau* = (0, 0)
        d_t = delta_tilde(self.D_minus_0, self.delta)
        tau = optimal_randomization(prob_eta1_above(self.params, self.t_star), 0.0,
                                    prob_eta0_at_least(self.params, self.t_star), 0.0, d_t)
        return OracleFairBayes(eta_fn(self.params), (0.5, 0.5), self.t_star, tau, d_t)


def synthetic_oracle(params: SyntheticParams, delta: float) -> SyntheticOracle:
    t, q = solve_t_star(params, delta)
    return SyntheticOracle(params, float(delta), t, q, D_minus_0(params), bayes_risk(params, q))


class SyntheticIntegrator:
    """``E[g(X) | A = a]`` over the uniform cube, to absolute tolerance ``tol``.

    ``g`` may jump only where ``eta_a`` crosses one of the given levels. The
    x1 axis is split at 0 and at the points where each level curve crosses
    the current x2 line, so every inner panel is smooth; x2 is integrated
    adaptively with breaks where the level curves leave the cube. The inner
    rule is refined until two successive refinements agree.
    """

    def __init__(self, params: SyntheticParams, tol: float = 1e-9, order: int = 20,
                 inner_split: int = 2, max_inner_split: int = 64):
        self.params = params
        self.tol = tol
        self.order = order
        self.inner_split = inner_split
        self.max_inner_split = max_inner_split

    def _radii(self, a: int, levels: Sequence[float]) -> list[tuple[float, float]]:
        """``(sign, r)`` with eta_a = c on sign * |x1| (1 - |x2|) = r, for reachable levels."""
        p = self.params
        out = []
        for c in levels:
            v = (2 * c - 1 - (2 * a - 1) * p.s1) / p.s2
            if v != 0 and abs(v) < 1:
                out.append((math.copysign(1.0, v), abs(v) ** (1.0 / p.beta)))
        return out

    def _inner(self, g, x2, radii, split):
        m = len(x2)
        cols = [np.full(m, -1.0), np.zeros(m), np.ones(m)]
        w = 1.0 - np.abs(x2)
        for s, r in radii:
            with np.errstate(divide="ignore"):
                cols.append(np.clip(s * r / w, -1.0, 1.0))
        edges = np.sort(np.stack(cols, axis=1), axis=1)
        frac = np.arange(split) / split
        lo, hi = edges[:, :-1], edges[:, 1:]
        fine = lo[..., None] + (hi - lo)[..., None] * frac
        fine = np.concatenate([fine.reshape(m, -1), np.ones((m, 1))], axis=1)
        x1, wt = panel_nodes(fine, self.order)
        pts = np.column_stack([x1.ravel(), np.repeat(x2, x1.shape[1])])
        vals = np.asarray(g(pts), dtype=float).reshape(x1.shape)
        return np.sum(vals * wt, axis=1) / 4.0

    def expectation(self, g: Callable[[np.ndarray], np.ndarray], a: int,
                    levels: Sequence[float] | None = ()) -> float:
        if levels is None:
            raise ValueError("discontinuity levels unknown; use GridIntegrator")
        radii = self._radii(a, levels)
        outer = {-1.0, 0.0, 1.0}
        for _, r in radii:
            outer.update((1 - r, r - 1))
        breaks = sorted(outer)
        split = self.inner_split
        prev = adaptive_gl(lambda x2: self._inner(g, x2, radii, split), breaks, self.tol, self.order)
        while True:
            split *= 2
            cur = adaptive_gl(lambda x2: self._inner(g, x2, radii, split), breaks, self.tol, self.order)
            if abs(cur - prev) <= self.tol:
                return cur
            if split >= self.max_inner_split:
                raise IntegrationError("inner rule did not settle", cur)
            prev = cur


def quadrature_expectation(params: SyntheticParams, g, a: int, levels: Sequence[float] = (),
                           tol: float = 1e-9) -> float:
    return SyntheticIntegrator(params, tol).expectation(g, a, levels)


class GridIntegrator:
    """Fixed tensor Gauss-Legendre rule on the cube for integrands with
    unknown jump locations (e.g. fitted classifiers). No error guarantee."""

    def __init__(self, panels: int = 200, order: int = 3):
        edges = np.linspace(-1.0, 1.0, panels + 1)
        x, w = panel_nodes(edges, order)
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        self.points = np.column_stack([X1.ravel(), X2.ravel()])
        self.weights = np.outer(w, w).ravel() / 4.0

    def expectation(self, g, a: int, levels=None) -> float:
        return float(np.dot(np.asarray(g(self.points), dtype=float), self.weights))


def export_csv(dataset: Dataset, path) -> None:
    """Write in the ingest CSV schema (columns x1, x2, a, y)."""
    from .ingest import write_csv
    write_csv(dataset, path, feature_names=[f"x{j + 1}" for j in range(dataset.d)])
