"""Local polynomial estimation of the group regression functions.

The estimator at a query point ``x`` fits a degree-``k`` polynomial in the
scaled offsets ``u = (X_j - x) / h`` by kernel-weighted least squares and
reports its intercept. The normalized design matrix

    B(x) = (n h^d)^-1 * sum_j U(u_j) U(u_j)^T K(u_j)

doubles as a guard: if its smallest eigenvalue is at or below the floor
(``1 / log n`` by default) the estimate is set to 0. Otherwise the fitted
value is projected onto [0, 1].
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# rows of query x train entries handled per block
_BLOCK = 1 << 21


@dataclass(frozen=True)
class KernelSpec:
    """Nonnegative kernel on R^d.

    ``evaluator`` maps offsets of shape (..., d) to weights of shape (...).
    ``radial`` optionally maps squared norms (and d) to weights, which lets
    several bandwidths share one distance computation.
    """

    name: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    radial: Callable[[np.ndarray, int], np.ndarray] | None = None


def _gaussian_radial(r2: np.ndarray, d: int) -> np.ndarray:
    return np.exp(-0.5 * r2) * (2.0 * math.pi) ** (-0.5 * d)


def _gaussian(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return _gaussian_radial(np.einsum("...i,...i->...", u, u), u.shape[-1])


def _unit_radial(r2: np.ndarray, d: int) -> np.ndarray:
    return np.exp(-0.5 * r2)


def _unit(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return _unit_radial(np.einsum("...i,...i->...", u, u), u.shape[-1])


GAUSSIAN = KernelSpec("gaussian", _gaussian, _gaussian_radial)
# same estimate, but the design-matrix guard sees a kernel with peak 1 instead of mass 1
GAUSSIAN_UNIT = KernelSpec("gaussian-unit", _unit, _unit_radial)
KERNELS = {k.name: k for k in (GAUSSIAN, GAUSSIAN_UNIT)}

# radial Gaussians with a closed-form constant get an in-place fast path
_GAUSS_CONST = {_gaussian_radial: lambda d: (2.0 * math.pi) ** (-0.5 * d), _unit_radial: lambda d: 1.0}


def multi_index_basis(d: int, k: int) -> list[tuple[int, ...]]:
    """Multi-indices ``s`` with ``|s| <= k`` in graded lexicographic order."""
    if d < 1 or k < 0:
        raise ValueError("need d >= 1 and k >= 0")
    basis = []
    for total in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(d), total):
            s = [0] * d
            for i in combo:
                s[i] += 1
            basis.append(tuple(s))
    return basis


def default_bandwidth(n_a: int, beta: float, d: int, c: float = 1.0) -> float:
    """Bandwidth ``c * n_a^(-1 / (2 beta + d))``."""
    if n_a < 1 or c <= 0:
        raise ValueError("need n_a >= 1 and c > 0")
    return c * n_a ** (-1.0 / (2.0 * beta + d))


def default_eig_floor(n_a: int) -> float:
    # log(1) = 0 leaves the floor undefined; a single point then only faces the singularity check
    return 1.0 / math.log(n_a) if n_a >= 2 else 0.0


def _sq_dist(Xq: np.ndarray, X: np.ndarray) -> np.ndarray:
    D = np.zeros((len(Xq), len(X)))
    for j in range(X.shape[1]):
        diff = Xq[:, j, None] - X[None, :, j]
        D += diff * diff
    return D


def _check_queries(Xq, d: int) -> np.ndarray:
    Xq = np.asarray(Xq, dtype=float)
    if Xq.ndim == 1:
        Xq = Xq.reshape(1, -1) if d > 1 or Xq.size == 1 else Xq.reshape(-1, 1)
    if Xq.ndim != 2 or Xq.shape[1] != d:
        raise ValueError(f"query points must have dimension {d}")
    if not np.all(np.isfinite(Xq)):
        raise ValueError("non-finite input")
    return Xq


def _nw_from_weights(W: np.ndarray, Y1: np.ndarray, scale: float, floor: float) -> np.ndarray:
    # Y1 holds columns (1, y): one product gives both kernel sums
    s = W @ Y1
    s0, s1 = s[:, 0], s[:, 1]
    ok = s0 * scale > floor
    out = np.zeros(len(W))
    out[ok] = s1[ok] / s0[ok]
    return np.clip(out, 0.0, 1.0)


def _degree0_grid(X, y, Xq, bandwidths, kernel, floor):
    n, d = X.shape
    out = np.empty((len(bandwidths), len(Xq)))
    rows = max(1, _BLOCK // max(n, 1))
    Y1 = np.column_stack([np.ones(n), y])
    const = _GAUSS_CONST.get(kernel.radial)
    for start in range(0, len(Xq), rows):
        block = Xq[start:start + rows]
        if kernel.radial is not None:
            D = _sq_dist(block, X)
            W = np.empty_like(D)
        for i, h in enumerate(bandwidths):
            scale = 1.0 / (n * h ** d)
            if const is not None:
                # in-place exp; the constant factor moves into the guard scale
                np.multiply(D, -0.5 / (h * h), out=W)
                np.exp(W, out=W)
                scale *= const(d)
            elif kernel.radial is not None:
                W = kernel.radial(D * (1.0 / (h * h)), d)
            else:
                W = kernel.evaluator((X[None, :, :] - block[:, None, :]) / h)
            out[i, start:start + rows] = _nw_from_weights(W, Y1, scale, floor)
    return out


def _powers(u: np.ndarray, basis) -> np.ndarray:
    cols = []
    for s in basis:
        col = np.ones(u.shape[:-1])
        for j, e in enumerate(s):
            if e:
                col = col * u[..., j] ** e
        cols.append(col)
    return np.stack(cols, axis=-1)


def _local_poly(X, y, Xq, h, degree, kernel, floor):
    n, d = X.shape
    basis = multi_index_basis(d, degree)
    p = len(basis)
    scale = 1.0 / (n * h ** d)
    out = np.zeros(len(Xq))
    rows = max(1, _BLOCK // max(n * p, 1))
    for start in range(0, len(Xq), rows):
        block = Xq[start:start + rows]
        u = (X[None, :, :] - block[:, None, :]) / h
        W = kernel.evaluator(u)
        P = _powers(u, basis)
        PW = P * W[..., None]
        B = np.einsum("mnp,mnq->mpq", PW, P) * scale
        b = np.einsum("mnp,n->mp", PW, y) * scale
        lam, V = np.linalg.eigh(B)
        # numerically singular designs count as non-unique minimizers
        tiny = np.finfo(float).eps * p * np.abs(lam[:, -1])
        ok = (lam[:, 0] > floor) & (lam[:, 0] > tiny)
        if ok.any():
            # intercept of B^{-1} b through the eigendecomposition
            coef = np.einsum("mpk,mp->mk", V[ok], b[ok]) / lam[ok]
            raw = np.einsum("mk,mk->m", V[ok][:, 0, :], coef)
            out[start:start + rows][ok] = raw
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class LocalPolyEstimator:
    """Fitted local polynomial regression for one group."""

    X: np.ndarray
    y: np.ndarray
    bandwidth: float
    degree: int = 0
    kernel: KernelSpec = GAUSSIAN
    eig_floor: float | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float)
        if len(X) == 0:
            raise ValueError("empty group")
        if len(X) != len(y):
            raise ValueError("X and y lengths differ")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite input")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.eig_floor is None:
            object.__setattr__(self, "eig_floor", default_eig_floor(len(X)))

    @property
    def n_a(self) -> int:
        return len(self.y)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def predict(self, Xq) -> np.ndarray:
        Xq = _check_queries(Xq, self.d)
        if self.degree == 0:
            return _degree0_grid(self.X, self.y, Xq, [self.bandwidth], self.kernel, self.eig_floor)[0]
        return _local_poly(self.X, self.y, Xq, self.bandwidth, self.degree, self.kernel, self.eig_floor)

    def design_min_eigenvalue(self, x) -> float:
        """Smallest eigenvalue of the normalized design matrix at ``x``."""
        x = _check_queries(x, self.d)[0]
        basis = multi_index_basis(self.d, self.degree)
        u = (self.X - x) / self.bandwidth
        P = _powers(u, basis)
        W = self.kernel.evaluator(u)
        B = (P * W[:, None]).T @ P / (self.n_a * self.bandwidth ** self.d)
        return float(np.linalg.eigvalsh(B)[0])

    def __call__(self, x) -> float:
        return float(self.predict(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def evaluate_eta_hat(est: LocalPolyEstimator, x) -> float:
    return est(x)


def eta_hat_grid(X, y, Xq, bandwidths: Sequence[float], degree: int = 0,
                 kernel: KernelSpec = GAUSSIAN, eig_floor: float | None = None) -> np.ndarray:
    """Estimates at ``Xq`` for each bandwidth, shape ``(len(bandwidths), len(Xq))``.

    Matches ``LocalPolyEstimator(X, y, h, ...).predict(Xq)`` bit for bit; for
    degree 0 the pairwise distances are computed once for all bandwidths.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if len(X) == 0:
        raise ValueError("empty group")
    y = np.asarray(y, dtype=float)
    Xq = _check_queries(Xq, X.shape[1])
    floor = default_eig_floor(len(X)) if eig_floor is None else eig_floor
    if degree == 0:
        return _degree0_grid(X, y, Xq, list(bandwidths), kernel, floor)
    return np.stack([
        LocalPolyEstimator(X, y, h, degree, kernel, floor).predict(Xq) for h in bandwidths
    ])


def select_bandwidth(grid: Sequence[float],
                     fit_and_score: Callable[[float, float], float]) -> tuple[float, float]:
    """Pick the multiplier pair ``(c0, c1)`` with the smallest validation error.

    ``fit_and_score(c0, c1)`` returns the validation error of the classifier
    fitted with those multipliers. Pairs are visited in ascending order and
    only a strict improvement replaces the incumbent, so ties resolve toward
    the smaller multipliers.
    """
    grid = sorted(float(c) for c in grid)
    if not grid:
        raise ValueError("empty bandwidth grid")
    if len(grid) == 1:
        return grid[0], grid[0]
    best, best_err = None, math.inf
    for c0 in grid:
        for c1 in grid:
            err = fit_and_score(c0, c1)
            if err < best_err:
                best, best_err = (c0, c1), err
    return best
