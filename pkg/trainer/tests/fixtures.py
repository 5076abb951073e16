"""Synthetic datasets and CSV helpers shared by the test modules"""

import csv
from pathlib import Path

import numpy as np

from trainer.data import Dataset

BLOB_CENTERS = {
    2: [(-3.0, -3.0), (3.0, 3.0)],
    3: [(-4.0, 0.0), (4.0, 0.0), (0.0, 5.0)],
}


def make_blobs(n_per_class: int = 50, n_classes: int = 2, seed: int = 0, spread: float = 0.5,
               name: str = 'blobs') -> Dataset:
    """Well separated 2-D Gaussian blobs, rows in seeded random order"""
    rng = np.random.default_rng(seed)
    centers = np.asarray(BLOB_CENTERS[n_classes])
    features = np.concatenate([rng.normal(center, spread, size=(n_per_class, 2)) for center in centers])
    labels = np.repeat(np.arange(n_classes), n_per_class)
    order = rng.permutation(len(labels))
    return Dataset(
        name=name,
        features=features[order],
        labels=labels[order],
        class_names=tuple(str(k) for k in range(n_classes)),
    )


def make_indexed(n: int, n_classes: int = 2) -> Dataset:
    """Feature 0 is the row index, so split parts can be traced back to rows"""
    features = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
    return Dataset(
        name='indexed',
        features=features,
        labels=np.arange(n) % n_classes,
        class_names=tuple(str(k) for k in range(n_classes)),
    )


def write_rows(path, rows) -> Path:
    path = Path(path)
    with path.open('w', newline='', encoding='utf-8') as handle:
        csv.writer(handle).writerows(rows)
    return path


def write_blobs_csv(path, **kwargs) -> Path:
    """make_blobs written as a headerless CSV with the label last"""
    dataset = make_blobs(**kwargs)
    rows = [[f"{x:.6f}" for x in row] + [dataset.class_names[label]]
            for row, label in zip(dataset.features, dataset.labels)]
    return write_rows(path, rows)


# {1..9} plus one far outlier in the first feature
OUTLIER_ROWS = [[str(v), str(v % 3), 'a' if v % 2 else 'b'] for v in range(1, 10)] + [['100', '1', 'a']]
