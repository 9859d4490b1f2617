"""Dataset loading, normalization, splitting and centroid targets."""
import csv
import logging
import struct
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ContractViolation, CsvParseError, DataError, IdxParseError
from numerics import Matrix, SeededRng, as_matrix

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

# Relative std below which a feature is treated as constant.
CONSTANT_FEATURE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Samples with integer class labels 0..M-1.

    Attributes:
        x: Sample matrix, one row per sample
        labels: Class index per row
        class_names: Original label value for each class index
    """
    x: Matrix
    labels: np.ndarray
    class_names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = as_matrix(self.x, 'dataset features')
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != x.shape[0]:
            raise ContractViolation(
                f"{labels.shape[0]} labels for {x.shape[0]} samples")
        if labels.size and labels.min() < 0:
            raise ContractViolation("labels must be non-negative class indices")
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'labels', labels)
        if not self.class_names:
            count = int(labels.max()) + 1 if labels.size else 0
            object.__setattr__(self, 'class_names', tuple(str(j) for j in range(count)))

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def class_index_sets(self) -> List[np.ndarray]:
        """Row indices I_j of each class j, ascending."""
        return [np.flatnonzero(self.labels == j) for j in range(self.n_classes)]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True)
class CentroidSet:
    """Per-class mean vectors.

    Attributes:
        centroids: M x d matrix, row j is the mean of class j
        class_counts: Number of samples behind each centroid
    """
    centroids: Matrix
    class_counts: np.ndarray


@dataclass(frozen=True)
class Split:
    """Disjoint train/test (and optional validation) row indices."""
    train_indices: np.ndarray
    test_indices: np.ndarray
    validation_indices: Optional[np.ndarray] = None


def subset(ds: Dataset, indices: Sequence[int]) -> Dataset:
    """Rows `indices` of `ds`, keeping the class encoding."""
    indices = np.asarray(indices, dtype=np.int64)
    return Dataset(ds.x[indices], ds.labels[indices], ds.class_names)


def _read_exact(handle, size: int, path: str, what: str) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise IdxParseError(f"{path}: truncated {what} (expected {size} bytes, got {len(data)})")
    return data


def _read_idx(path: str, expected_magic: int, kind: str) -> np.ndarray:
    # Layout: u32 magic, u32 size per dimension, then unsigned bytes.
    with open(path, 'rb') as f:
        magic, = struct.unpack('>I', _read_exact(f, 4, path, 'header'))
        if magic != expected_magic:
            raise IdxParseError(
                f"{path}: bad magic number 0x{magic:08X} for {kind} file "
                f"(expected 0x{expected_magic:08X})")
        n_dims = magic & 0xFF
        dims = struct.unpack(f'>{n_dims}I', _read_exact(f, 4 * n_dims, path, 'dimension sizes'))
        payload_size = int(np.prod(dims, dtype=np.int64))
        payload = _read_exact(f, payload_size, path, 'payload')
        if f.read(1):
            raise IdxParseError(f"{path}: trailing bytes after {payload_size}-byte payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx(image_path: str, label_path: str) -> Dataset:
    """Load an IDX image/label file pair (MNIST format).

    Args:
        image_path: Path to the image file (magic 0x00000803)
        label_path: Path to the label file (magic 0x00000801)

    Returns:
        Dataset with pixels scaled to [0, 1] and images flattened row-major
    """
    images = _read_idx(image_path, IDX_IMAGE_MAGIC, 'image')
    labels = _read_idx(label_path, IDX_LABEL_MAGIC, 'label')
    if images.shape[0] != labels.shape[0]:
        raise IdxParseError(
            f"count mismatch: {images.shape[0]} images in {image_path} "
            f"but {labels.shape[0]} labels in {label_path}")

    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    n_classes = int(labels.max()) + 1 if labels.size else 0
    logger.info("Loaded %d images of %d features from %s", x.shape[0], x.shape[1], image_path)
    return Dataset(x, labels.astype(np.int64), tuple(str(j) for j in range(n_classes)))


def save_idx(images: np.ndarray, labels: np.ndarray, image_path: str, label_path: str):
    """Write uint8 images (count x rows x cols) and labels as an IDX file pair."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8).reshape(-1)
    with open(image_path, 'wb') as f:
        f.write(struct.pack('>I', IDX_IMAGE_MAGIC))
        f.write(struct.pack(f'>{images.ndim}I', *images.shape))
        f.write(images.tobytes())
    with open(label_path, 'wb') as f:
        f.write(struct.pack('>II', IDX_LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def load_csv(path: str, label_column: Union[int, str] = -1, delimiter: str = ',',
             header: bool = False) -> Dataset:
    """Load a numeric table with one categorical label column.

    Args:
        path: CSV file path
        label_column: Column index (negative counts from the end) or header name
        delimiter: Field separator
        header: Whether the first row holds column names

    Returns:
        Dataset with labels encoded 0..M-1 in order of first appearance
    """
    with open(path, newline='') as f:
        rows = [row for row in csv.reader(f, delimiter=delimiter) if row and any(c.strip() for c in row)]
    if header:
        if not rows:
            raise CsvParseError(f"{path}: missing header row")
        names, rows = [c.strip() for c in rows[0]], rows[1:]
    else:
        names = None
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0])
    if isinstance(label_column, str) and not label_column.lstrip('-').isdigit():
        if names is None or label_column not in names:
            raise CsvParseError(f"{path}: label column '{label_column}' not found in header")
        label_index = names.index(label_column)
    else:
        label_index = int(label_column)
        if not -width <= label_index < width:
            raise CsvParseError(f"{path}: label column {label_index} out of range for {width} columns")
        label_index %= width

    first_row = 2 if header else 1
    features, raw_labels = [], []
    for offset, row in enumerate(rows):
        line = first_row + offset
        if len(row) != width:
            raise CsvParseError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        raw_labels.append(row[label_index].strip())
        try:
            features.append([float(c) for i, c in enumerate(row) if i != label_index])
        except ValueError:
            raise CsvParseError(f"{path}: non-numeric feature cell in row {line}") from None

    encoding: Dict[str, int] = {}
    for value in raw_labels:
        encoding.setdefault(value, len(encoding))
    labels = np.array([encoding[value] for value in raw_labels], dtype=np.int64)
    logger.info("Loaded %d rows, %d features, %d classes from %s",
                len(features), width - 1, len(encoding), path)
    return Dataset(np.array(features, dtype=np.float64), labels, tuple(encoding))


def standardize(ds: Dataset, stats_from: Sequence[int]) -> Tuple[Dataset, np.ndarray, np.ndarray]:
    """Z-score every feature using statistics of the rows `stats_from`.

    Zero-variance features map to 0.

    Returns:
        Tuple of (standardized dataset, per-feature mean, per-feature std)
    """
    reference = ds.x[np.asarray(stats_from, dtype=np.int64)]
    if reference.shape[0] == 0:
        raise ContractViolation("standardize needs at least one reference row")
    mean = reference.mean(axis=0)
    std = reference.std(axis=0)
    return apply_standardization(ds, mean, std), mean, std


def _constant_features(mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    # A constant column can still show std ~ 1e-17 when its value is not exactly representable.
    return std <= CONSTANT_FEATURE_TOLERANCE * np.maximum(np.abs(mean), 1.0)


def apply_standardization(ds: Dataset, mean: np.ndarray, std: np.ndarray) -> Dataset:
    """Apply previously computed standardize statistics to another dataset."""
    constant = _constant_features(mean, std)
    x = (ds.x - mean) / np.where(constant, 1.0, std)
    x[:, constant] = 0.0
    return Dataset(x, ds.labels, ds.class_names)


def _check_splittable(ds: Dataset, minimum: int, what: str):
    counts = ds.class_counts()
    if ds.n_classes < 2:
        raise DataError(f"{what} needs at least 2 classes, got {ds.n_classes}")
    for j, count in enumerate(counts):
        if count < minimum:
            raise DataError(
                f"class '{ds.class_names[j]}' has {count} samples; {what} needs at least {minimum}")


def _stratified_partition(ds: Dataset, indices: np.ndarray, fraction: float,
                          rng: SeededRng) -> Tuple[np.ndarray, np.ndarray]:
    """Split `indices` per class; the held-out share is round(fraction * size), at least 1."""
    kept, held = [], []
    labels = ds.labels[indices]
    for j in range(ds.n_classes):
        members = indices[labels == j]
        if members.size == 0:
            continue
        members = members[rng.permutation(members.size)]
        n_held = int(round(fraction * members.size))
        n_held = min(max(n_held, 1), members.size - 1)
        held.append(members[:n_held])
        kept.append(members[n_held:])
    return np.sort(np.concatenate(kept)), np.sort(np.concatenate(held))


def stratified_split(ds: Dataset, test_fraction: float, rng: SeededRng) -> Split:
    """Random train/test split preserving per-class proportions.

    Args:
        ds: Dataset to split
        test_fraction: Share of each class assigned to the test set
        rng: Seeded stream controlling the shuffle

    Returns:
        Split with sorted, disjoint, exhaustive index arrays
    """
    if not 0 < test_fraction < 1:
        raise ContractViolation(f"test_fraction must lie in (0, 1), got {test_fraction}")
    _check_splittable(ds, 2, 'stratified_split')
    train, test = _stratified_partition(ds, np.arange(ds.n_samples), test_fraction, rng)
    return Split(train, test)


def validation_split(ds: Dataset, train_indices: Sequence[int], fraction: float,
                     rng: SeededRng) -> Split:
    """Hold out a stratified `fraction` of the training rows for validation.

    Returns:
        Split whose train_indices exclude the validation rows and whose
        test_indices are empty
    """
    train_indices = np.asarray(train_indices, dtype=np.int64)
    _check_splittable(subset(ds, train_indices), 2, 'validation_split')
    train, validation = _stratified_partition(ds, train_indices, fraction, rng)
    return Split(train, np.empty(0, dtype=np.int64), validation)


def stratified_kfold(ds: Dataset, folds: int, rng: SeededRng) -> List[Split]:
    """Stratified k-fold partition: every row lands in exactly one test fold."""
    if folds < 2:
        raise ContractViolation(f"stratified_kfold needs folds >= 2, got {folds}")
    _check_splittable(ds, folds, 'stratified_kfold')
    assignment = np.empty(ds.n_samples, dtype=np.int64)
    offset = 0
    for members in ds.class_index_sets:
        members = members[rng.permutation(members.size)]
        # Continue the round-robin across classes so fold sizes stay balanced.
        assignment[members] = (np.arange(members.size) + offset) % folds
        offset += members.size
    everything = np.arange(ds.n_samples)
    return [Split(everything[assignment != k], everything[assignment == k]) for k in range(folds)]


def filter_classes(ds: Dataset, keep: Sequence[str]) -> Dataset:
    """Keep only the named classes, re-encoding them 0..len(keep)-1 in the given order."""
    lookup = {name: j for j, name in enumerate(ds.class_names)}
    missing = [name for name in keep if name not in lookup]
    if missing:
        raise DataError(f"classes not present in data: {', '.join(missing)}")
    remap = np.full(ds.n_classes, -1, dtype=np.int64)
    for new, name in enumerate(keep):
        remap[lookup[name]] = new
    new_labels = remap[ds.labels]
    rows = np.flatnonzero(new_labels >= 0)
    return Dataset(ds.x[rows], new_labels[rows], tuple(keep))


def align_classes(ds: Dataset, class_names: Sequence[str]) -> Dataset:
    """Re-encode labels by name so class j means class_names[j].

    Raises:
        DataError: If a row carries a class not in class_names
    """
    lookup = {name: j for j, name in enumerate(class_names)}
    present = [ds.class_names[j] for j in np.unique(ds.labels)]
    unknown = [name for name in present if name not in lookup]
    if unknown:
        raise DataError(f"classes not in the training data: {', '.join(unknown)}")
    remap = np.array([lookup.get(name, -1) for name in ds.class_names], dtype=np.int64)
    return Dataset(ds.x, remap[ds.labels], tuple(class_names))


def subsample_per_class(ds: Dataset, per_class: int, rng: SeededRng) -> Dataset:
    """Draw up to `per_class` rows of every class, keeping the original row order."""
    chosen = []
    for members in ds.class_index_sets:
        take = min(per_class, members.size)
        chosen.append(members[rng.permutation(members.size)[:take]])
    return subset(ds, np.sort(np.concatenate(chosen)))


def compute_centroids(ds: Dataset) -> CentroidSet:
    """Mean vector c_j of the rows of each class j."""
    counts = ds.class_counts()
    if np.any(counts == 0):
        empty = [ds.class_names[j] for j in np.flatnonzero(counts == 0)]
        raise DataError(f"empty classes: {', '.join(empty)}")
    rows = []
    for members in ds.class_index_sets:
        block = ds.x[members]
        mean = block.mean(axis=0)
        # Second pass removes the rounding of the first; identical rows give their value exactly.
        rows.append(mean + (block - mean).mean(axis=0))
    return CentroidSet(np.vstack(rows), counts)


def build_targets(ds: Dataset, cs: Optional[CentroidSet]) -> Matrix:
    """Training targets: row i is the centroid of class labels[i].

    Passing `cs=None` yields the autoencoder targets, a copy of the inputs.
    """
    if cs is None:
        return ds.x.copy()
    if cs.centroids.shape[1] != ds.n_features:
        raise ContractViolation(
            f"centroid dimension {cs.centroids.shape[1]} != feature dimension {ds.n_features}")
    if ds.n_samples and ds.labels.max() >= cs.centroids.shape[0]:
        raise ContractViolation("label outside the centroid set")
    return cs.centroids[ds.labels].copy()
