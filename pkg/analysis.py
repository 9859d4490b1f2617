"""PCA variance curves, k-NN prediction error, Voronoi sites and the CE-transform experiment."""
import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

import training
from dataset import CentroidSet, Dataset, compute_centroids
from errors import ContractViolation, NumericError
from network import ModelParams, NetworkSpec, forward, init_params
from numerics import Matrix, SeededRng, as_matrix, sym_eig

logger = logging.getLogger(__name__)

# Cap on query x reference x dimension elements per distance block.
_DISTANCE_BLOCK = 1 << 24


@dataclass(frozen=True)
class PcaModel:
    """Feature means, orthonormal principal directions (columns) and descending eigenvalues."""
    mean: np.ndarray
    components: Matrix
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class Embedding:
    """Embedded points with their class labels."""
    points: Matrix
    labels: np.ndarray

    def __post_init__(self):
        points = as_matrix(self.points, 'embedding')
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != points.shape[0]:
            raise ContractViolation(f"{labels.shape[0]} labels for {points.shape[0]} embedded points")
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'labels', labels)


@dataclass
class EvalReport:
    """k-NN prediction error over a set of queries.

    Attributes:
        error_percent: Overall misclassification rate in percent
        per_class_error: Error percent within each true class (NaN if absent)
        k: Neighbours used
        n_queries: Number of evaluated points
    """
    error_percent: float
    per_class_error: List[float] = field(default_factory=list)
    k: int = 5
    n_queries: int = 0


def pca_fit(x: Matrix) -> PcaModel:
    """Eigendecompose the sample covariance (divisor N - 1) of the rows of x."""
    x = as_matrix(x, 'pca input')
    if x.shape[0] < 2:
        raise ContractViolation(f"pca_fit needs at least 2 rows, got {x.shape[0]}")
    mean = x.mean(axis=0)
    centered = x - mean
    covariance = centered.T @ centered / (x.shape[0] - 1)
    eigenvalues, components = sym_eig(covariance)
    return PcaModel(mean, components, np.maximum(eigenvalues, 0.0))


def pca_project(model: PcaModel, x: Matrix, dims: int = 2) -> Matrix:
    """Coordinates of the rows of x on the top `dims` principal directions."""
    return (as_matrix(x, 'pca input') - model.mean) @ model.components[:, :dims]


def variance_curve(model: PcaModel, up_to: Optional[int] = None) -> List[float]:
    """Cumulative fraction of total variance captured by the top d components, d = 1..up_to."""
    n = model.eigenvalues.shape[0]
    up_to = n if up_to is None else up_to
    if not 1 <= up_to <= n:
        raise ContractViolation(f"up_to must lie in [1, {n}], got {up_to}")
    total = model.eigenvalues.sum()
    if not total > 0:
        raise NumericError("data has zero total variance")
    curve = np.cumsum(model.eigenvalues) / total
    return np.minimum(curve[:up_to], 1.0).tolist()


def _squared_distances(queries: Matrix, reference: Matrix) -> Matrix:
    # Difference form rather than |q|^2 - 2qr + |r|^2 so equal distances compare equal.
    diff = queries[:, None, :] - reference[None, :, :]
    return np.einsum('qrd,qrd->qr', diff, diff)


def knn_predict(train: Embedding, query_points: Matrix, k: int = 5) -> np.ndarray:
    """Majority vote among the k nearest training points (Euclidean).

    Distance ties go to the lower training index. Vote ties go to the class
    of the nearest neighbour among the tied classes.

    Args:
        train: Reference embedding
        query_points: Points to classify
        k: Neighbours per vote

    Returns:
        Predicted class index per query row
    """
    if train.points.shape[0] == 0:
        raise ContractViolation("knn_predict needs a non-empty training set")
    if not 1 <= k <= train.points.shape[0]:
        raise ContractViolation(f"k must lie in [1, {train.points.shape[0]}], got {k}")
    queries = as_matrix(query_points, 'query points')
    if queries.shape[1] != train.points.shape[1]:
        raise ContractViolation(
            f"query dimension {queries.shape[1]} != embedding dimension {train.points.shape[1]}")

    n_classes = int(train.labels.max()) + 1
    predictions = np.empty(queries.shape[0], dtype=np.int64)
    block = max(1, _DISTANCE_BLOCK // max(1, train.points.size))
    for start in range(0, queries.shape[0], block):
        distances = _squared_distances(queries[start:start + block], train.points)
        nearest = np.argsort(distances, axis=1, kind='stable')[:, :k]
        for row, neighbours in enumerate(nearest):
            votes = train.labels[neighbours]
            counts = np.bincount(votes, minlength=n_classes)
            tied = counts == counts.max()
            # neighbours are ordered nearest first
            predictions[start + row] = votes[np.argmax(tied[votes])]
    return predictions


def prediction_error(true_labels: Sequence[int], predicted_labels: Sequence[int]) -> float:
    """Percentage of positions where the prediction differs from the truth."""
    true_labels = np.asarray(true_labels)
    predicted_labels = np.asarray(predicted_labels)
    if true_labels.shape != predicted_labels.shape:
        raise ContractViolation(
            f"{true_labels.shape[0]} true labels but {predicted_labels.shape[0]} predictions")
    if true_labels.size == 0:
        raise ContractViolation("prediction_error needs at least one label")
    return 100.0 * np.count_nonzero(true_labels != predicted_labels) / true_labels.size


def evaluate(train: Embedding, test: Embedding, k: int = 5) -> EvalReport:
    """k-NN error of `test` against `train` with a per-class breakdown."""
    predicted = knn_predict(train, test.points, k)
    n_classes = int(max(train.labels.max(), test.labels.max())) + 1
    per_class = []
    for j in range(n_classes):
        members = test.labels == j
        per_class.append(prediction_error(test.labels[members], predicted[members])
                         if members.any() else float('nan'))
    return EvalReport(prediction_error(test.labels, predicted), per_class, k, test.points.shape[0])


def voronoi_sites(train_embedding: Embedding) -> CentroidSet:
    """Per-class mean of the embedded training points; sites of the Voronoi regions."""
    if train_embedding.points.shape[1] != 2:
        raise ContractViolation(f"Voronoi sites need a 2-D embedding, got {train_embedding.points.shape[1]}-D")
    return compute_centroids(Dataset(train_embedding.points, train_embedding.labels))


def assign_to_sites(sites: CentroidSet, points: Matrix) -> np.ndarray:
    """Index of the nearest site for every point; ties go to the lower site index."""
    distances = _squared_distances(as_matrix(points, 'points'), sites.centroids)
    return np.argmin(distances, axis=1)


def principal_angles(a: Matrix, b: Matrix) -> np.ndarray:
    """Principal angles in degrees between the column spaces of a and b, ascending."""
    qa, _ = np.linalg.qr(as_matrix(a))
    qb, _ = np.linalg.qr(as_matrix(b))
    cosines = np.linalg.svd(qa.T @ qb, compute_uv=False)
    return np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))


@dataclass
class CeTransformResult:
    """Variance curves of raw and CE-transformed data.

    Attributes:
        raw_curve: Cumulative variance fractions of the raw training data
        transformed_curve: Same for the hidden activations of the training data
        transformed_test_curve: Same for the hidden activations of the test data
        train_projection: 2-D PCA coordinates of the transformed training data
        test_projection: Test data projected with the training PCA
    """
    raw_curve: List[float]
    transformed_curve: List[float]
    transformed_test_curve: List[float]
    train_projection: Matrix
    test_projection: Matrix
    params: Optional[ModelParams] = None


def hidden_activations(params: ModelParams, spec: NetworkSpec, x: Matrix) -> Matrix:
    """Activations of the hidden layer of a single-hidden-layer network."""
    return forward(params, spec, x, stop_at=1).activations[1]


def transform_variance(params: ModelParams, spec: NetworkSpec, train: Dataset, test: Dataset,
                       up_to: Optional[int] = None) -> CeTransformResult:
    """Compare variance curves of raw data and hidden activations."""
    hidden_train = hidden_activations(params, spec, train.x)
    hidden_test = hidden_activations(params, spec, test.x)
    if not np.any(hidden_train):
        raise NumericError("CE-transformed data is all zeros; the network is untrained or degenerate")

    up_to = min(up_to or train.n_features, train.n_features, spec.layer_widths[1])
    raw_model = pca_fit(train.x)
    transformed_model = pca_fit(hidden_train)
    return CeTransformResult(
        raw_curve=variance_curve(raw_model, up_to),
        transformed_curve=variance_curve(transformed_model, up_to),
        transformed_test_curve=variance_curve(pca_fit(hidden_test), up_to),
        train_projection=pca_project(transformed_model, hidden_train),
        test_projection=pca_project(transformed_model, hidden_test),
        params=params,
    )


def ce_transform_experiment(train: Dataset, test: Dataset, cfg: 'training.TrainConfig',
                            up_to: Optional[int] = None,
                            spec: Optional[NetworkSpec] = None) -> CeTransformResult:
    """Train an n -> [n] -> n tanh centroid-encoder and compare variance curves.

    The network trains for cfg.max_epochs epochs on centroid targets; its
    hidden activations are the CE-transformed data.

    Args:
        train: Training data
        test: Held-out data, passed through the trained network
        cfg: Training settings
        up_to: Length of the returned curves (all dimensions when omitted)
        spec: Network to use; must be square with one tanh hidden layer

    Returns:
        CeTransformResult with raw and transformed curves
    """
    n = train.n_features
    spec = spec or NetworkSpec.single_hidden(n, n, 'tanh')
    if spec.layer_widths != (n, n, n) or spec.activations[0] != 'tanh':
        raise ContractViolation(f"CE transform needs an {n} -> [{n}] -> {n} tanh network, got {spec.layer_widths}")

    params = init_params(spec, SeededRng(cfg.seed))
    targets = training.make_targets(train, cfg.mode)
    losses = training.run_epochs(params, spec, train.x, targets, cfg, cfg.max_epochs,
                                 SeededRng(cfg.seed).spawn(0), 'CE transform')
    logger.info("CE transform trained %d epochs, final loss %.6f", len(losses), losses[-1])
    return transform_variance(params, spec, train, test, up_to)


def write_embedding_csv(embedding: Embedding, class_names: Sequence[str], path: str):
    """Write `label,y1,y2[,y3...]`, one row per point."""
    dims = embedding.points.shape[1]
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['label'] + [f'y{i + 1}' for i in range(dims)])
        for label, point in zip(embedding.labels, embedding.points):
            writer.writerow([class_names[label]] + [repr(float(v)) for v in point])


def write_variance_csv(curve: Sequence[float], path: str):
    """Write `dimension,cumulative_fraction`, dimensions counted from 1."""
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['dimension', 'cumulative_fraction'])
        for d, fraction in enumerate(curve, start=1):
            writer.writerow([d, repr(float(fraction))])
