"""Bundled synthetic datasets, CSV ingestion, and the split protocol.

Bundled generators are deterministic: the rows of a named dataset never
change, so benchmark differences come only from the split seeds. Splits use
seeds derived from the master seed by ``split_seed`` so that every method
sees exactly the same partitions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TRAIN_FRACTION = 2 / 3


@dataclass(frozen=True)
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    k: int
    label_names: tuple
    dropped_rows: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("need at least two classes")


def _contextual_noise(name, n, k, orders, base, seed):
    """Discrete contexts with one-hot features; per context the label mass is
    ``base`` spread over the labels in that context's order."""
    rng = np.random.default_rng(seed)
    n_ctx = len(orders)
    X = np.zeros((n, n_ctx))
    y = np.zeros(n, dtype=int)
    for i in range(n):
        c = i % n_ctx
        X[i, c] = 1.0
        probs = np.zeros(k)
        probs[list(orders[c])] = base
        y[i] = rng.choice(k, p=probs)
    return Dataset(name, X, y, k, tuple(str(v) for v in range(k)))


def make_synth3(n=450, seed=97) -> Dataset:
    """Three classes, six contexts; in four of them the favorite label sits
    alone under the root while the two near-ties share a subtree, which is
    exactly where an unfiltered tree overcommits."""
    orders = [
        (0, 1, 2),  # near-ties on 0 and 1, favorite 2: bad for a {0,1}|{2} tree
        (1, 0, 2),
        (0, 1, 2),
        (1, 2, 0),  # favorite is label 0: benign
        (2, 0, 1),  # favorite is label 1: benign
        (1, 0, 2),
    ]
    base = np.array([0.3, 0.3, 0.4])
    return _contextual_noise("synth3", n, 3, orders, base, seed)


def make_synth4(n=480, seed=131) -> Dataset:
    """Four classes, eight contexts, near-tied pairs pulling mass away from
    the favorite's half of a balanced tree."""
    base = np.array([0.26, 0.26, 0.44, 0.04])
    orders = [
        (0, 1, 2, 3),  # ties on {0,1}, favorite 2: bad for a {0,1}|{2,3} tree
        (1, 0, 3, 2),
        (0, 1, 3, 2),
        (2, 3, 0, 1),  # ties on {2,3}, favorite 0: bad in the mirror sense
        (3, 2, 1, 0),
        (0, 1, 2, 3),
        (1, 2, 0, 3),  # benign: favorite shares its subtree with a tie
        (2, 3, 1, 0),
    ]
    return _contextual_noise("synth4", n, 4, orders, base, seed)


def make_blobs5(n=450, seed=211) -> Dataset:
    """Five Gaussian blobs on a circle with enough overlap to matter."""
    rng = np.random.default_rng(seed)
    k = 5
    angles = 2 * np.pi * np.arange(k) / k
    means = 2.0 * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    y = rng.integers(0, k, size=n)
    X = means[y] + rng.normal(0, 1.1, size=(n, 2))
    return Dataset("blobs5", X, y, k, tuple(str(v) for v in range(k)))


BUILTIN_DATASETS = {
    "synth3": make_synth3,
    "synth4": make_synth4,
    "blobs5": make_blobs5,
}


def load_csv(path, label_column="label") -> Dataset:
    """Read a headed CSV with numeric features and one label column.

    Rows with missing or non-numeric feature cells are dropped (counted on
    the dataset). Label strings map to 0..k-1 in sorted order; the mapping
    rides along as label_names.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if label_column not in header:
            raise ValueError(f"no column named {label_column!r} in {path}")
        label_idx = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        rows = []
        labels = []
        dropped = 0
        for row in reader:
            if len(row) != len(header):
                dropped += 1
                continue
            try:
                feats = [float(row[i]) for i in feat_idx]
            except ValueError:
                dropped += 1
                continue
            if not all(np.isfinite(feats)) or row[label_idx] == "":
                dropped += 1
                continue
            rows.append(feats)
            labels.append(row[label_idx])
    if not rows:
        raise ValueError(f"no usable rows in {path}")
    names = sorted(set(labels))
    mapping = {name: i for i, name in enumerate(names)}
    X = np.array(rows, dtype=float)
    y = np.array([mapping[v] for v in labels], dtype=int)
    if len(names) < 2:
        raise ValueError("need at least two distinct labels")
    import os

    return Dataset(os.path.basename(path), X, y, len(names), tuple(names), dropped)


def load_dataset(spec: str, label_column="label") -> Dataset:
    if spec in BUILTIN_DATASETS:
        return BUILTIN_DATASETS[spec]()
    return load_csv(spec, label_column)


def split_seed(master_seed: int, index: int) -> int:
    """Seed for split ``index``: master * 1000 + index."""
    return master_seed * 1000 + index


def split_indices(n: int, seed: int, train_fraction: float = TRAIN_FRACTION):
    """Deterministic permutation split; same seed, same partition."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    cut = int(round(train_fraction * n))
    return order[:cut], order[cut:]
