"""CSV ingestion, standardization and seeded splitting for tabular data."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Dataset

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IngestSpec:
    path: str
    label: str
    positive: str
    protected: str
    privileged: str
    features: tuple[str, ...] = ()
    train_frac: float = 0.7
    val_frac: float = 0.3
    test_path: str | None = None
    seed: int = 0
    top_k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.features and not self.top_k:
            raise ValueError("features: list is empty and top_k is unset")
        if not (0 < self.train_frac < 1):
            raise ValueError("train_frac must lie in (0, 1)")
        if not (0 < self.val_frac < 1) or self.train_frac + self.val_frac > 1 + 1e-12:
            raise ValueError("val_frac must lie in (0, 1) with train_frac + val_frac <= 1")


@dataclass
class LoadResult:
    dataset: Dataset
    dropped: int
    feature_names: tuple[str, ...]
    protected_values: tuple[str, ...] = field(default_factory=tuple)


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: missing header") from None
        return header, list(reader)


def _parse(rows, header, spec: IngestSpec, features: Sequence[str]):
    for col in (spec.label, spec.protected, *features):
        if col not in header:
            raise ValueError(f"missing column {col!r}")
    li, pi = header.index(spec.label), header.index(spec.protected)
    fi = [header.index(c) for c in features]
    X, A, Y, seen = [], [], [], set()
    dropped = 0
    for row in rows:
        try:
            lab, prot = row[li].strip(), row[pi].strip()
            if not lab or not prot or lab == "?" or prot == "?":
                raise ValueError
            x = [float(row[j]) for j in fi]
            if not all(math.isfinite(v) for v in x):
                raise ValueError
        except (ValueError, IndexError):
            dropped += 1
            continue
        seen.add(prot)
        X.append(x)
        A.append(int(prot == spec.privileged))
        # some releases end test labels with a period (">50K.")
        Y.append(int(lab.rstrip(".") == spec.positive.rstrip(".")))
    if len(seen) > 2:
        raise ValueError(f"protected column {spec.protected!r} has {len(seen)} values; only binary groups are supported")
    if not Y:
        raise ValueError("no usable rows")
    return Dataset(np.array(X, dtype=float).reshape(len(Y), len(fi)), A, Y), dropped, tuple(sorted(seen))


def load_csv(spec: IngestSpec, path: str | None = None) -> LoadResult:
    """Parse ``path`` (default ``spec.path``), dropping rows with missing or
    unparseable declared fields. Explicit features win over ``top_k``."""
    header, rows = _read_rows(path or spec.path)
    features = spec.features
    if not features:
        cand = [c for c in header if c not in (spec.label, spec.protected)]
        numeric = [c for c in cand if _mostly_numeric(rows, header.index(c))]
        full, _, _ = _parse(rows, header, spec, numeric)
        features = select_features(full, numeric, spec.top_k)
    ds, dropped, seen = _parse(rows, header, spec, features)
    if dropped:
        log.info("dropped %d malformed rows from %s", dropped, path or spec.path)
    return LoadResult(ds, dropped, tuple(features), seen)


def load_features(path, features: Sequence[str], protected: str, privileged: str):
    """Unlabeled rows for prediction: returns ``(X, A, kept_row_indices)``."""
    header, rows = _read_rows(path)
    for col in (protected, *features):
        if col not in header:
            raise ValueError(f"missing column {col!r}")
    pi = header.index(protected)
    fi = [header.index(c) for c in features]
    X, A, kept = [], [], []
    for i, row in enumerate(rows):
        try:
            x = [float(row[j]) for j in fi]
            prot = row[pi].strip()
        except (ValueError, IndexError):
            continue
        if not prot or not all(math.isfinite(v) for v in x):
            continue
        X.append(x)
        A.append(int(prot == privileged))
        kept.append(i)
    return np.array(X, dtype=float).reshape(len(A), len(fi)), np.array(A, dtype=np.int64), kept


def _mostly_numeric(rows, j) -> bool:
    ok = 0
    for row in rows[:200]:
        try:
            float(row[j])
            ok += 1
        except (ValueError, IndexError):
            pass
    return ok > 0.9 * min(len(rows), 200)


def select_features(dataset: Dataset, names: Sequence[str], k: int) -> tuple[str, ...]:
    """Top-``k`` columns by absolute point-biserial correlation with the label."""
    y = dataset.Y.astype(float)
    scores = []
    for j in range(dataset.d):
        col = dataset.X[:, j]
        sd = col.std() * y.std()
        scores.append(0.0 if sd == 0 else abs(np.mean((col - col.mean()) * (y - y.mean())) / sd))
    order = sorted(range(dataset.d), key=lambda j: (-scores[j], j))
    return tuple(names[j] for j in order[:k])


def standardize(train: Dataset, *others: Dataset):
    """z-score every split with train statistics; returns ``(datasets, stats)``.

    Features with zero train variance pass through unscaled.
    """
    if train.n == 0:
        raise ValueError("empty training set")
    mean = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    flat = sd == 0
    if flat.any():
        log.warning("features %s are constant on train; left unscaled", np.flatnonzero(flat).tolist())
    mu = np.where(flat, 0.0, mean)
    sc = np.where(flat, 1.0, sd)
    out = tuple(Dataset((d.X - mu) / sc, d.A, d.Y) for d in (train, *others))
    return out, list(zip(mean.tolist(), sd.tolist()))


def split(dataset: Dataset, fractions: Sequence[float], seed) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle, then contiguous slices of ``floor(f n)`` rows; the rest is test."""
    f_train, f_val = fractions[0], fractions[1]
    if not (0 < f_train < 1 and 0 <= f_val < 1 and f_train + f_val <= 1 + 1e-12):
        raise ValueError("invalid split fractions")
    n = dataset.n
    perm = np.random.default_rng(seed).permutation(n)
    # the epsilon keeps e.g. 0.7 * 10 from flooring to 6
    n_train = int(math.floor(f_train * n + 1e-9))
    n_val = min(int(math.floor(f_val * n + 1e-9)), n - n_train)
    return (dataset.subset(perm[:n_train]),
            dataset.subset(perm[n_train:n_train + n_val]),
            dataset.subset(perm[n_train + n_val:]))


def write_csv(dataset: Dataset, path, feature_names: Sequence[str] | None = None,
              label: str = "y", protected: str = "a") -> None:
    """Write with shortest round-trip float formatting, so reloading is exact."""
    names = list(feature_names or [f"x{j + 1}" for j in range(dataset.d)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*names, protected, label])
        for x, a, y in zip(dataset.X.tolist(), dataset.A.tolist(), dataset.Y.tolist()):
            w.writerow([*(repr(v) for v in x), a, y])
