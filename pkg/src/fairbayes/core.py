"""Shared domain types: datasets, group views, hyperparameters, classifiers.

Conventions used throughout the package: the protected attribute ``a`` is
binary, group 1 is the privileged group, and any per-group tuple is indexed
by the group id (``values[0]`` belongs to group 0, ``values[1]`` to group 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np


class LabeledSample(NamedTuple):
    x: np.ndarray
    a: int
    y: int


def _check_binary(values: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"invalid {what}")
    return arr.astype(np.int64)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled samples stored column-wise: features ``X`` (n, d), ``A`` and ``Y`` (n,)."""

    X: np.ndarray
    A: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 1)
        if X.ndim != 2:
            raise ValueError("features must be a 2-d array")
        A = _check_binary(self.A, "protected attribute")
        Y = _check_binary(self.Y, "label")
        if not (len(X) == len(A) == len(Y)):
            raise ValueError("X, A and Y lengths differ")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite input")
        for arr in (X, A, Y):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample], d: int | None = None) -> "Dataset":
        if not samples:
            if d is None:
                raise ValueError("cannot infer dimension of an empty sample list")
            return cls(np.empty((0, d)), np.empty(0, int), np.empty(0, int))
        X = np.array([np.asarray(s.x, dtype=float).ravel() for s in samples])
        return cls(X, [s.a for s in samples], [s.y for s in samples])

    @property
    def n(self) -> int:
        return len(self.Y)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[LabeledSample]:
        for x, a, y in zip(self.X, self.A, self.Y):
            yield LabeledSample(x, int(a), int(y))

    def subset(self, index) -> "Dataset":
        return Dataset(self.X[index], self.A[index], self.Y[index])

    def group_counts(self) -> tuple[int, int]:
        n1 = int(self.A.sum())
        return self.n - n1, n1


@dataclass(frozen=True, eq=False)
class GroupView:
    a: int
    xs: np.ndarray
    ys: np.ndarray
    n_total: int

    @property
    def n_a(self) -> int:
        return len(self.ys)

    @property
    def p_hat(self) -> float:
        return self.n_a / self.n_total


def split_by_group(dataset: Dataset) -> tuple[GroupView, GroupView]:
    """Partition a dataset into ``(group 0 view, group 1 view)``, keeping row order."""
    if dataset.n == 0:
        raise ValueError("empty dataset")
    if not np.all((dataset.A == 0) | (dataset.A == 1)):
        raise ValueError("invalid protected attribute")
    views = []
    for a in (0, 1):
        mask = dataset.A == a
        views.append(GroupView(a, dataset.X[mask], dataset.Y[mask], dataset.n))
    return views[0], views[1]


def delta_n_schedule(n: int, const: float = 0.1) -> float:
    """Jump-detection width ``const / log log n``; log log n is floored at 0.1."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return const / max(math.log(math.log(n)), 0.1)


def r_n_schedule(n: int, const: float = 0.1) -> float:
    if n < 2:
        raise ValueError("n must be at least 2")
    return const / math.log(n)


def offset_schedule(n_a: int, beta: float, d: int, const: float) -> float:
    """Offset ``const * n_a^(-beta / (2 beta + d))``."""
    if n_a < 1:
        raise ValueError("empty group")
    return const * n_a ** (-beta / (2 * beta + d))


def log_grid(lo: float = 0.5, hi: float = 5.0, steps: int = 10) -> tuple[float, ...]:
    if steps == 1:
        return (float(lo),)
    return tuple(float(v) for v in np.geomspace(lo, hi, steps))


@dataclass(frozen=True)
class HyperParams:
    delta: float
    beta: float = 1.0
    bandwidth_grid: tuple[float, ...] = field(default_factory=log_grid)
    delta_n: float = 0.1
    r_n: float = 0.1
    offsets: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.delta >= 0:
            raise ValueError("delta must be nonnegative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not (self.delta_n > 0 and self.r_n > 0):
            raise ValueError("delta_n and r_n must be positive")
        if len(self.offsets) != 2 or min(self.offsets) < 0:
            raise ValueError("offsets must be a nonnegative pair")
        if any(c <= 0 for c in self.bandwidth_grid):
            raise ValueError("bandwidth multipliers must be positive")
        object.__setattr__(self, "bandwidth_grid", tuple(float(c) for c in self.bandwidth_grid))
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))

    @property
    def degree(self) -> int:
        # largest integer strictly below beta
        return math.ceil(self.beta) - 1

    @classmethod
    def from_schedules(cls, dataset: Dataset, delta: float, beta: float = 1.0,
                       offset_const: float = 0.25, delta_n_const: float = 0.1,
                       r_n_const: float = 0.1,
                       bandwidth_grid: Sequence[float] | None = None) -> "HyperParams":
        """Hyperparameters with the default vanishing schedules for this sample."""
        n0, n1 = dataset.group_counts()
        if min(n0, n1) == 0:
            raise ValueError("empty group")
        d = dataset.d
        return cls(
            delta=delta,
            beta=beta,
            bandwidth_grid=tuple(bandwidth_grid) if bandwidth_grid is not None else log_grid(),
            delta_n=delta_n_schedule(dataset.n, delta_n_const),
            r_n=r_n_schedule(dataset.n, r_n_const),
            offsets=(offset_schedule(n0, beta, d, offset_const),
                     offset_schedule(n1, beta, d, offset_const)),
        )


class FairClassifier:
    """Randomized decision rule ``(x, a) -> P(Yhat = 1)``.

    Subclasses implement :meth:`prob_group`. ``kind`` is one of ``fitted``,
    ``oracle`` or ``constant`` (``function`` for ad-hoc rules).
    """

    kind = "function"

    def prob_group(self, X: np.ndarray, a: int) -> np.ndarray:
        raise NotImplementedError

    def eta_levels(self, a: int) -> tuple[float, ...] | None:
        """Levels of the true regression function where the rule may jump.

        ``()`` means the rule is smooth in x; ``None`` means unknown.
        """
        return None

    def prob(self, X, A) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        A = np.broadcast_to(np.asarray(A), (len(X),))
        out = np.empty(len(X))
        for a in (0, 1):
            mask = A == a
            if mask.any():
                out[mask] = self.prob_group(X[mask], a)
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("invalid protected attribute")
        return np.clip(out, 0.0, 1.0)

    def __call__(self, x, a: int) -> float:
        return float(self.prob(np.atleast_2d(x), [a])[0])


class ConstantClassifier(FairClassifier):
    kind = "constant"

    def __init__(self, value: float | tuple[float, float]):
        values = (value, value) if np.isscalar(value) else tuple(value)
        if not all(0.0 <= v <= 1.0 for v in values):
            raise ValueError("acceptance probability must lie in [0, 1]")
        self.values = (float(values[0]), float(values[1]))

    def prob_group(self, X, a):
        return np.full(len(X), self.values[a])

    def eta_levels(self, a):
        return ()


class FunctionClassifier(FairClassifier):
    """Wrap a vectorized callable ``fn(X, a) -> probabilities``."""

    def __init__(self, fn: Callable[[np.ndarray, int], np.ndarray],
                 levels: tuple[tuple[float, ...], tuple[float, ...]] | None = None,
                 kind: str = "function"):
        self.fn = fn
        self.levels = levels
        self.kind = kind

    def prob_group(self, X, a):
        return np.clip(np.asarray(self.fn(X, a), dtype=float), 0.0, 1.0)

    def eta_levels(self, a):
        return None if self.levels is None else tuple(self.levels[a])


def predict_label(f: FairClassifier, x, a: int, u: float) -> int:
    """Draw a hard label from ``f`` using the uniform draw ``u`` in [0, 1)."""
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return int(u < f(x, a))


def predict_labels(f: FairClassifier, X, A, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u >= 1)):
        raise ValueError("u must lie in [0, 1)")
    return (u < f.prob(X, A)).astype(np.int64)
