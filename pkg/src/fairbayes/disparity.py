"""Empirical disparity curves and the group threshold estimators.

For estimated probabilities ``e1`` (group 1) and ``e0`` (group 0) the curve

    D(t; l1, l0) = mean(e1 > 1/2 + n t / (2 n1) + l1)
                 - mean(e0 > 1/2 - n t / (2 n0) + l0)

is a non-increasing step function of ``t``. Group 1 loses a member at
``b1 = 2 n1 (e1 - 1/2 - l1) / n`` (closed on the right); group 0 gains one
just after ``b0 = 2 n0 (1/2 + l0 - e0) / n``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DisparityCurve:
    eta1_sorted: np.ndarray
    eta0_sorted: np.ndarray
    n: int
    l1: float = 0.0
    l0: float = 0.0

    @property
    def n1(self) -> int:
        return len(self.eta1_sorted)

    @property
    def n0(self) -> int:
        return len(self.eta0_sorted)

    @property
    def drop_points(self) -> np.ndarray:
        """Sorted ``b1``: the group-1 term loses ``1/n1`` at each of these ``t``."""
        return 2.0 * self.n1 * (self.eta1_sorted - 0.5 - self.l1) / self.n

    @property
    def rise_points(self) -> np.ndarray:
        """Sorted ``b0``: the group-0 term gains ``1/n0`` just after each of these ``t``."""
        return np.sort(2.0 * self.n0 * (0.5 + self.l0 - self.eta0_sorted) / self.n)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self.drop_points, self.rise_points]))

    def thresholds(self, t):
        t = np.asarray(t, dtype=float)
        thr1 = 0.5 + self.n * t / (2 * self.n1) + self.l1
        thr0 = 0.5 - self.n * t / (2 * self.n0) + self.l0
        return thr1, thr0

    def __call__(self, t):
        """Exact curve value; agrees with direct indicator averaging."""
        thr1, thr0 = self.thresholds(t)
        c1 = self.n1 - np.searchsorted(self.eta1_sorted, thr1, side="right")
        c0 = self.n0 - np.searchsorted(self.eta0_sorted, thr0, side="right")
        out = c1 / self.n1 - c0 / self.n0
        return float(out) if np.ndim(out) == 0 else out

    def right_limit(self, t):
        """``lim_{s -> t+} D(s)`` computed from the breakpoints."""
        t = np.asarray(t, dtype=float)
        c1 = self.n1 - np.searchsorted(self.drop_points, t, side="right")
        c0 = np.searchsorted(self.rise_points, t, side="right")
        return c1 / self.n1 - c0 / self.n0

    def pieces(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and the constant value on each open piece between them.

        ``values[0]`` holds left of the first breakpoint, ``values[i]`` right of
        breakpoint ``i - 1``.
        """
        bp = self.breakpoints
        left = self.right_limit(bp[0] - 1.0) if len(bp) else self.right_limit(0.0)
        return bp, np.concatenate([[left], self.right_limit(bp)])

    def infimum_below(self, level: float) -> float:
        """``inf {t >= 0 : D(t) < level}``.

        The set is an up-interval whose left end is 0 or a breakpoint, so the
        infimum is the first candidate whose right limit is already below
        ``level``. An empty set returns the largest breakpoint.
        """
        bp = self.breakpoints
        cand = np.concatenate([[0.0], bp[bp > 0]])
        below = np.flatnonzero(self.right_limit(cand) < level)
        if len(below):
            return float(cand[below[0]])
        log.info("no t >= 0 brings the disparity below %.4g; using largest breakpoint", level)
        return float(cand[-1])


def empirical_disparity_curve(eta1_vals, eta0_vals, l1: float = 0.0, l0: float = 0.0,
                              n: int | None = None) -> DisparityCurve:
    e1 = np.sort(np.asarray(eta1_vals, dtype=float))
    e0 = np.sort(np.asarray(eta0_vals, dtype=float))
    if len(e1) == 0 or len(e0) == 0:
        raise ValueError("empty group")
    if n is None:
        n = len(e1) + len(e0)
    return DisparityCurve(e1, e0, int(n), float(l1), float(l0))


def estimate_t_hat(curve: DisparityCurve, delta: float, delta_n: float,
                   r_n: float) -> tuple[float, float, float, float]:
    """Three-candidate threshold adjustment; returns ``(t_min, t_mid, t_max, t_hat)``."""
    if not (delta_n > 0 and r_n > 0):
        raise ValueError("delta_n and r_n must be positive")
    t_mid = curve.infimum_below(delta)
    t_min = curve.infimum_below(delta + delta_n)
    t_max = curve.infimum_below(delta - delta_n)
    if t_mid - t_min <= r_n:
        t_hat = t_min
    elif t_max - t_mid <= r_n:
        t_hat = t_max
    else:
        t_hat = t_mid
    return t_min, t_mid, t_max, t_hat


def rho(x: float) -> float:
    """Clamp to [0, 1]; infinities map to the nearer end."""
    if math.isnan(x):
        raise ValueError("undefined ratio")
    return min(max(x, 0.0), 1.0)


def safe_ratio(num: float, den: float) -> float:
    """``num / den`` with ``x / 0 = 0``."""
    return 0.0 if den == 0 else num / den


def estimate_boundary_masses(eta_vals, T: float, l: float) -> tuple[float, float]:
    """Fractions strictly above ``T + l`` and inside ``(T - l, T + l]``."""
    e = np.asarray(eta_vals, dtype=float)
    if len(e) == 0:
        raise ValueError("empty group")
    if l < 0:
        raise ValueError("offset must be nonnegative")
    above = e > T + l
    band = (e > T - l) & ~above
    return float(above.mean()), float(band.mean())


def estimate_delta_hat(curve_minus: DisparityCurve, delta: float) -> float:
    """``delta`` if the offset curve at 0 exceeds it, else 0."""
    return delta if curve_minus(0.0) > delta else 0.0


def randomization(pi1_plus: float, pi1_eq: float, pi0_plus: float, pi0_eq: float,
                  delta_adj: float) -> tuple[float, float]:
    """Boundary acceptance probabilities, indexed by group: ``(tau0, tau1)``."""
    # when a boundary has no mass any tau there is optimal; x / 0 = 0 picks 0
    tau1 = rho(safe_ratio(pi0_plus - pi1_plus + delta_adj, pi1_eq))
    tau0 = rho(safe_ratio(pi1_plus - pi0_plus - delta_adj, pi0_eq))
    return tau0, tau1


def estimate_tau_hat(pi1_plus, pi1_eq, pi0_plus, pi0_eq, delta_hat) -> tuple[float, float]:
    return randomization(pi1_plus, pi1_eq, pi0_plus, pi0_eq, delta_hat)


@dataclass(frozen=True)
class ThresholdEstimate:
    """Output of threshold estimation. Per-group tuples are indexed by group id."""

    t_min: float
    t_mid: float
    t_max: float
    t_hat: float
    T_hat: tuple[float, float]
    pi_plus: tuple[float, float]
    pi_eq: tuple[float, float]
    delta_hat: float
    tau_hat: tuple[float, float]


def group_thresholds(t: float, n: int, n0: int, n1: int) -> tuple[float, float]:
    """``1/2 + (2a - 1) n t / (2 n_a)`` for ``a = 0, 1``."""
    return 0.5 - n * t / (2 * n0), 0.5 + n * t / (2 * n1)


def estimate_thresholds(eta1_vals, eta0_vals, delta: float, delta_n: float, r_n: float,
                        l1: float = 0.0, l0: float = 0.0) -> ThresholdEstimate:
    """Estimate thresholds and randomization from in-sample estimates of both groups."""
    e1 = np.asarray(eta1_vals, dtype=float)
    e0 = np.asarray(eta0_vals, dtype=float)
    base = empirical_disparity_curve(e1, e0)
    t_min, t_mid, t_max, t_hat = estimate_t_hat(base, delta, delta_n, r_n)
    n0, n1 = len(e0), len(e1)
    T0, T1 = group_thresholds(t_hat, base.n, n0, n1)
    p1, q1 = estimate_boundary_masses(e1, T1, l1)
    p0, q0 = estimate_boundary_masses(e0, T0, l0)
    minus = DisparityCurve(base.eta1_sorted, base.eta0_sorted, base.n, l1, -l0)
    d_hat = estimate_delta_hat(minus, delta)
    tau = estimate_tau_hat(p1, q1, p0, q0, d_hat)
    return ThresholdEstimate(t_min, t_mid, t_max, t_hat, (T0, T1), (p0, p1), (q0, q1), d_hat, tau)
