"""
Dataset ingestion, splitting, mini-batching and IQR outlier filtering

Datasets are CSV files with one example per row. The label column is the last
column unless told otherwise; labels are mapped to class indices in order of
first appearance. No normalization is applied.
"""

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DatasetError, DatasetParseError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Example:
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class MiniBatch:
    """An indexed group of labeled examples, the unit of gradient computation"""
    id: int
    features: np.ndarray
    labels: np.ndarray

    def __len__(self):
        return len(self.labels)

    @property
    def examples(self) -> List[Example]:
        return [Example(self.features[i], int(self.labels[i])) for i in range(len(self))]


@dataclass(frozen=True)
class Dataset:
    """
    An immutable labeled dataset

    ``header`` and ``label_column`` remember the source schema so a filtered
    dataset can be written back in the same layout.
    """
    name: str
    features: np.ndarray
    labels: np.ndarray
    class_names: Tuple[str, ...]
    header: Optional[Tuple[str, ...]] = None
    label_column: int = -1

    def __post_init__(self):
        self.features.setflags(write=False)
        self.labels.setflags(write=False)
        if len(self.labels) and self.labels.max() >= len(self.class_names):
            raise DatasetError(f"Dataset {self.name} has a label outside its {len(self.class_names)} classes")

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def examples(self) -> List[Example]:
        return [Example(self.features[i], int(self.labels[i])) for i in range(len(self))]

    def subset(self, indices, name: Optional[str] = None) -> 'Dataset':
        indices = np.asarray(indices, dtype=int)
        return replace(
            self,
            name=name or self.name,
            features=self.features[indices].copy(),
            labels=self.labels[indices].copy(),
        )


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    validation_fraction: float = 0.2
    seed: int = 0
    stratify: bool = False

    def __post_init__(self):
        for label, value in (('test_fraction', self.test_fraction),
                             ('validation_fraction', self.validation_fraction)):
            if not 0.0 < value < 1.0:
                raise DatasetError(f"{label} must lie in (0, 1), got {value}")


class Splits(NamedTuple):
    train: Dataset
    validation: Dataset
    test: Dataset


class DatasetCSVParser:
    """Parser for labeled numeric CSV files"""

    def __init__(self, path, has_header: bool = False, label_column: int = -1,
                 class_names: Optional[Sequence[str]] = None, strict: bool = False,
                 name: Optional[str] = None):
        self.path = Path(path)
        self.has_header = has_header
        self.label_column = label_column
        self.strict = strict
        self.name = name or self.path.stem
        self.class_names = list(class_names) if class_names else []
        if strict and not self.class_names:
            raise DatasetError("Strict label mode needs the list of known class names")

    def parse(self) -> Dataset:
        """Parse the complete file"""
        if not self.path.exists():
            raise DatasetError(f"Dataset file not found: {self.path}")

        with self.path.open(newline='', encoding='utf-8') as handle:
            rows = [row for row in csv.reader(handle) if row and any(cell.strip() for cell in row)]

        header = None
        if self.has_header:
            if not rows:
                raise DatasetParseError("Missing header row", row=1)
            header = tuple(cell.strip() for cell in rows[0])
            rows = rows[1:]
        if not rows:
            raise DatasetError(f"Dataset file {self.path} has no data rows")

        width = len(rows[0])
        if width < 2:
            raise DatasetParseError("Need at least one feature column and a label column", row=1)
        if not -width <= self.label_column < width:
            raise DatasetParseError(
                f"Label column {self.label_column} out of range for {width} columns"
            )
        label_index = self.label_column % width
        first_row = 2 if self.has_header else 1

        features = np.empty((len(rows), width - 1), dtype=float)
        labels = np.empty(len(rows), dtype=int)
        lookup = {name: i for i, name in enumerate(self.class_names)}

        for offset, row in enumerate(rows):
            row_number = first_row + offset
            if len(row) != width:
                raise DatasetParseError(f"Expected {width} columns, found {len(row)}", row=row_number)

            label = row[label_index].strip()
            if label not in lookup:
                if self.strict:
                    raise DatasetParseError(f"Unknown label '{label}'", row=row_number, column=label_index + 1)
                lookup[label] = len(self.class_names)
                self.class_names.append(label)
            labels[offset] = lookup[label]

            cells = row[:label_index] + row[label_index + 1:]
            for col, cell in enumerate(cells):
                try:
                    features[offset, col] = float(cell)
                except ValueError:
                    source_column = col + 1 if col < label_index else col + 2
                    raise DatasetParseError(
                        f"Non-numeric feature value '{cell.strip()}'",
                        row=row_number,
                        column=source_column,
                    ) from None

        logger.info(f"[Data] Loaded {self.name}: N={len(labels)} F={width - 1} K={len(self.class_names)}")
        return Dataset(
            name=self.name,
            features=features,
            labels=labels,
            class_names=tuple(self.class_names),
            header=header,
            label_column=label_index,
        )


def load_csv(path, has_header: bool = False, label_column: int = -1,
             class_names: Optional[Sequence[str]] = None, strict: bool = False,
             name: Optional[str] = None) -> Dataset:
    """
    Load a labeled CSV dataset

    Args:
        path: CSV file path (UTF-8, comma separated)
        has_header: first row holds column names
        label_column: index of the label column, negative counts from the end
        class_names: known labels in class-index order
        strict: reject labels missing from class_names

    Returns:
        Dataset with row order preserved
    """
    parser = DatasetCSVParser(path, has_header, label_column, class_names, strict, name)
    return parser.parse()


def _format_value(value: float) -> str:
    return np.format_float_positional(value, trim='-')


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset back in its source schema"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        if dataset.header:
            writer.writerow(dataset.header)
        for row, label in zip(dataset.features, dataset.labels):
            cells = [_format_value(v) for v in row]
            cells.insert(dataset.label_column % (dataset.n_features + 1), dataset.class_names[label])
            writer.writerow(cells)


def _partition(indices: np.ndarray, spec: SplitSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_test = math.floor(len(indices) * spec.test_fraction)
    pool = indices[:len(indices) - n_test]
    test = indices[len(indices) - n_test:]
    n_validation = math.floor(len(pool) * spec.validation_fraction)
    return pool[:len(pool) - n_validation], pool[len(pool) - n_validation:], test


def split(dataset: Dataset, spec: SplitSpec) -> Splits:
    """
    Seeded shuffle, then test = last floor(N*test_fraction) examples and
    validation = last floor(|pool|*validation_fraction) of the remaining pool.

    With ``spec.stratify`` the same rule is applied per class and the parts
    are shuffled again after concatenation.
    """
    if len(dataset) < 5:
        raise DatasetError(f"Dataset {dataset.name} has {len(dataset)} examples, need at least 5 to split")

    rng = np.random.default_rng(spec.seed)
    if spec.stratify:
        parts = ([], [], [])
        for label in range(dataset.n_classes):
            members = rng.permutation(np.flatnonzero(dataset.labels == label))
            for bucket, chunk in zip(parts, _partition(members, spec)):
                bucket.append(chunk)
        train, validation, test = (rng.permutation(np.concatenate(bucket)).astype(int) for bucket in parts)
    else:
        train, validation, test = _partition(rng.permutation(len(dataset)), spec)

    if min(len(train), len(validation), len(test)) == 0:
        raise DatasetError(
            f"Dataset {dataset.name} is too small for the requested split "
            f"(train={len(train)}, validation={len(validation)}, test={len(test)})"
        )

    logger.debug(f"[Data] Split {dataset.name}: train={len(train)} validation={len(validation)} test={len(test)}")
    return Splits(
        train=dataset.subset(train, f"{dataset.name}:train"),
        validation=dataset.subset(validation, f"{dataset.name}:validation"),
        test=dataset.subset(test, f"{dataset.name}:test"),
    )


def batches_per_epoch(n_examples: int, batch_size: int) -> int:
    return math.ceil(n_examples / batch_size)


def make_batches(train: Dataset, batch_size: int, seed: int, epoch: int) -> List[MiniBatch]:
    """
    Shuffle the training set for this (seed, epoch) and cut it into
    ceil(|train| / m) batches; the last one may be short.

    Batch ids are epoch * batches_per_epoch + position, so they increase
    monotonically across epochs.
    """
    if batch_size < 1:
        raise DatasetError(f"Batch size must be at least 1, got {batch_size}")
    order = np.random.default_rng([seed, epoch]).permutation(len(train))
    per_epoch = batches_per_epoch(len(train), batch_size)
    batches = []
    for position in range(per_epoch):
        chunk = order[position * batch_size:(position + 1) * batch_size]
        batches.append(MiniBatch(
            id=epoch * per_epoch + position,
            features=train.features[chunk],
            labels=train.labels[chunk],
        ))
    return batches


def iqr_fences(values: np.ndarray, factor: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-column [Q1 - factor*IQR, Q3 + factor*IQR] with linear-interpolation quantiles"""
    q1, q3 = np.quantile(values, [0.25, 0.75], axis=0)
    spread = q3 - q1
    return q1 - factor * spread, q3 + factor * spread


def iqr_filter(dataset: Dataset, factor: float = 3.0) -> Dataset:
    """
    Drop every example with a feature strictly outside its column's IQR fences

    Quantiles come from the full input in a single pass; the input is untouched.
    """
    if len(dataset) < 4:
        raise DatasetError(f"IQR filtering needs at least 4 examples, {dataset.name} has {len(dataset)}")
    lower, upper = iqr_fences(dataset.features, factor)
    keep = np.all((dataset.features >= lower) & (dataset.features <= upper), axis=1)
    removed = int(len(dataset) - keep.sum())
    logger.info(f"[Data] IQR filter (factor {factor}) removed {removed} of {len(dataset)} rows from {dataset.name}")
    if removed == 0:
        return dataset
    return dataset.subset(np.flatnonzero(keep))
